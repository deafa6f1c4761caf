//! End-to-end use of the library: optimisation, simulation and fitting.

use std::f64::consts::{PI, TAU};

use ioncavity::constants::{angular_to_khz, khz_to_angular};
use ioncavity::coupling::{g_tilde_at, optimise_frequency, Objective};
use ioncavity::io::{dataset_csv, read_fit_input, scan_csv, FitInput};
use ioncavity::{
    fit_scan, fit_visibility_curve, make_config, simulate_scan, simulate_visibility_dataset, solve_chain,
    CouplingModel, ScanSettings, ScanTrace,
};

fn calcium(n: usize) -> ioncavity::TrapConfig {
    make_config(40.0, &[("num_ions", n as f64)]).unwrap()
}

#[test]
fn two_ion_optimum_sits_at_commensurate_spacing() {
    let c = calcium(2);
    let t = 1.5 * c.doppler_temperature();
    let best = optimise_frequency(
        &c,
        t,
        (khz_to_angular(440.0), khz_to_angular(470.0)),
        Objective::MaxVisibility,
    )
    .unwrap();
    let spacing = best.solution.spacings()[0] / c.half_wavelength();
    assert!((spacing - 22.0).abs() < 0.05, "spacing {spacing}");
    let khz = angular_to_khz(best.frequency);
    assert!((khz - 451.8).abs() < 0.5, "{khz}");
}

#[test]
fn two_ion_optimum_over_wide_range_is_upper_edge() {
    // The Debye–Waller factor keeps rising with frequency, so over
    // 430–480 kHz the edge beats the commensurate peak near 452 kHz.
    let c = calcium(2);
    let t = 1.5 * c.doppler_temperature();
    let hi = khz_to_angular(480.0);
    let best = optimise_frequency(&c, t, (khz_to_angular(430.0), hi), Objective::MaxVisibility).unwrap();
    assert_eq!(best.frequency, hi);
}

#[test]
fn five_ion_g_tilde_optimum() {
    let c = calcium(5);
    let range = (khz_to_angular(400.0), khz_to_angular(620.0));
    let best = optimise_frequency(&c, c.doppler_temperature(), range, Objective::MaxGTilde).unwrap();
    assert!(best.value >= 0.98, "{}", best.value);

    // Brute-force oracle: coarse frequency grid × dense phase grid.
    let base = solve_chain(&c, range.0).unwrap();
    let k = c.wavenumber();
    let mut brute = 0.0f64;
    for i in 0..=440 {
        let z = base
            .at_frequency(khz_to_angular(400.0 + 0.5 * i as f64))
            .unwrap()
            .positions();
        for j in 0..2000 {
            brute = brute.max(g_tilde_at(&z, k, PI * j as f64 / 2000.0));
        }
    }
    assert!(best.value >= brute - 1e-6, "{} vs brute {brute}", best.value);
}

#[test]
fn scan_through_csv_and_back() {
    let c = calcium(1);
    let m = CouplingModel::new(&c, khz_to_angular(620.0), 1.2 * c.doppler_temperature()).unwrap();
    let trace = simulate_scan(&m, &ScanSettings::for_config(&c, 1e6, 99)).unwrap();
    let text = scan_csv(&trace);
    let FitInput::Scan { displacements, counts } = read_fit_input(text.as_bytes()).unwrap() else {
        panic!("wrong layout");
    };
    let reread = ScanTrace::new(displacements, counts, trace.bin_time, trace.mean_rate, trace.rng_seed).unwrap();
    let fit = fit_scan(&reread, c.wavelength()).unwrap();
    assert!((fit.visibility - 0.39).abs() < 0.01, "{fit:?}");
}

#[test]
fn injected_offset_is_recovered() {
    let c = calcium(3);
    let td = c.doppler_temperature();
    let grid: Vec<f64> = (0..=88).map(|i| khz_to_angular(400.0 + 2.5 * i as f64)).collect();
    let nu0 = TAU * 1.3e3;
    let data = simulate_visibility_dataset(&c, 1.56 * td, nu0, &grid, 0.02, 1234).unwrap();
    let FitInput::Curve(reread) = read_fit_input(dataset_csv(&data).as_bytes()).unwrap() else {
        panic!("wrong layout");
    };
    let fit = fit_visibility_curve(&reread, &c, td).unwrap();
    assert!((fit.nu_offset - nu0).abs() < 4.0 * fit.nu_offset_sigma(), "{fit:?}");
    assert!((fit.temperature / td - 1.56).abs() < 4.0 * fit.temperature_sigma() / td);
}

#[test]
fn recovery_holds_for_every_ion_number_at_two_percent_noise() {
    // Zero true offset. A single ion's smooth curve barely constrains ν₀, so
    // only strings with structure are held to the 1.3 kHz span.
    for n in 1..=5 {
        let c = calcium(n);
        let td = c.doppler_temperature();
        let grid: Vec<f64> = (0..=88).map(|i| khz_to_angular(400.0 + 2.5 * i as f64)).collect();
        let data = simulate_visibility_dataset(&c, 1.5 * td, 0.0, &grid, 0.02, 500 + n as u64).unwrap();
        let fit = fit_visibility_curve(&data, &c, td).unwrap();
        let bound = if n == 1 {
            4.0 * angular_to_khz(fit.nu_offset_sigma())
        } else {
            1.3
        };
        assert!(angular_to_khz(fit.nu_offset).abs() <= bound, "n = {n}: {fit:?}");
        assert!(
            (fit.temperature / td - 1.5).abs() < 4.0 * fit.temperature_sigma() / td,
            "n = {n}: {fit:?}"
        );
    }
}
