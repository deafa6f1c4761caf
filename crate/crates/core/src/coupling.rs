//! Standing-wave coupling of a thermal ion string to the cavity mode.
//!
//! The cavity field couples an ion at axial position z with strength
//! g(z) = g₀ cos(kz). A thermal ion with Gaussian spread Δz sees the
//! intensity g² averaged over its wavefunction, which multiplies the fringe
//! term by the Debye–Waller factor exp(−k²Δz²). For a string the emission
//! rates of the ions add incoherently:
//!
//! ```text
//! W(φ) = Σ_i g₀² (1 + exp(−k²Δz_i²) cos(2k z_i⁰ + φ))
//! ```
//!
//! where φ = 2k·x is the phase of a cavity displacement x. Since the fringe
//! term is a single sinusoid in φ, the visibility has the closed form
//! V = |Σ_i exp(−k²Δz_i²) e^{2ik z_i⁰}| / N.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chain::{solve_chain, thermal_spreads, ChainShape, ChainSolution, ThermalState};
use crate::config::TrapConfig;
use crate::constants::angular_to_khz;
use crate::error::{Error, Result};
use crate::search::golden_section_max;

/// Samples in the φ-scan visibility oracle.
pub const PHASE_SCAN_SAMPLES: usize = 4096;
/// Grid points for the g̃ phase search before golden-section refinement.
pub const G_TILDE_GRID: usize = 10_000;
/// Default grid density for [`optimise_frequency`].
pub const OPTIMISE_GRID: usize = 2000;

/// Coupling strength g(z) = g₀ cos(kz), rad/s.
pub fn coupling_strength(config: &TrapConfig, z: f64) -> f64 {
    config.g0() * (config.wavenumber() * z).cos()
}

/// A trap configuration, a solved chain and its thermal state, all for the
/// same number of ions and COM frequency.
#[derive(Debug, Clone)]
pub struct CouplingModel {
    config: TrapConfig,
    solution: ChainSolution,
    thermal: ThermalState,
}

impl CouplingModel {
    /// Solves the chain at `com_frequency` and thermalises it at `temperature`.
    pub fn new(config: &TrapConfig, com_frequency: f64, temperature: f64) -> Result<CouplingModel> {
        let solution = solve_chain(config, com_frequency)?;
        let thermal = thermal_spreads(&solution, temperature)?;
        Ok(CouplingModel {
            config: config.clone(),
            solution,
            thermal,
        })
    }

    pub fn from_parts(config: TrapConfig, solution: ChainSolution, thermal: ThermalState) -> Result<CouplingModel> {
        let n = config.num_ions();
        if solution.num_ions() != n || thermal.ion_spreads.len() != n || thermal.mode_spreads.len() != n {
            return Err(Error::Domain(format!(
                "inconsistent model: config has {n} ions, chain {}, thermal state {}",
                solution.num_ions(),
                thermal.ion_spreads.len()
            )));
        }
        if solution.ion_mass() != config.ion_mass() {
            return Err(Error::Domain("chain was solved for a different ion mass".into()));
        }
        Ok(CouplingModel {
            config,
            solution,
            thermal,
        })
    }

    pub fn config(&self) -> &TrapConfig {
        &self.config
    }

    pub fn solution(&self) -> &ChainSolution {
        &self.solution
    }

    pub fn thermal(&self) -> &ThermalState {
        &self.thermal
    }

    /// exp(−k²Δz_i²) for each ion.
    pub fn debye_waller(&self) -> Vec<f64> {
        debye_waller_factors(self.config.wavenumber(), &self.thermal.ion_spreads)
    }
}

pub fn debye_waller_factors(wavenumber: f64, spreads: &[f64]) -> Vec<f64> {
    spreads.iter().map(|dz| (-(wavenumber * dz).powi(2)).exp()).collect()
}

/// Emission rate W, in units of g₀², with the fringe phase φ given directly.
pub fn emission_at_phase(positions: &[f64], debye_waller: &[f64], wavenumber: f64, phase: f64) -> f64 {
    positions
        .iter()
        .zip(debye_waller)
        .map(|(z, d)| 1.0 + d * (2.0 * wavenumber * z + phase).cos())
        .sum()
}

/// Emission rate, in units of g₀², for a cavity displaced by `displacement`
/// metres relative to the string.
pub fn emission_profile(model: &CouplingModel, displacement: f64) -> f64 {
    let k = model.config.wavenumber();
    emission_at_phase(
        &model.solution.positions(),
        &model.debye_waller(),
        k,
        2.0 * k * displacement,
    )
}

/// Σ_i D_i e^{2ik z_i} as (re, im).
fn fringe_phasor(positions: &[f64], debye_waller: &[f64], wavenumber: f64) -> (f64, f64) {
    positions.iter().zip(debye_waller).fold((0.0, 0.0), |(re, im), (z, d)| {
        let (s, c) = (2.0 * wavenumber * z).sin_cos();
        (re + d * c, im + d * s)
    })
}

/// Closed-form fringe visibility of a string.
pub fn visibility_of(positions: &[f64], debye_waller: &[f64], wavenumber: f64) -> f64 {
    let (re, im) = fringe_phasor(positions, debye_waller, wavenumber);
    re.hypot(im) / positions.len() as f64
}

pub fn visibility(model: &CouplingModel) -> f64 {
    visibility_of(
        &model.solution.positions(),
        &model.debye_waller(),
        model.config.wavenumber(),
    )
}

/// Visibility from the extrema of W over a uniform φ grid, each extremum
/// refined by a parabola through its neighbours. Independent of the
/// closed form; used to cross-check it.
pub fn phase_scan_visibility(positions: &[f64], debye_waller: &[f64], wavenumber: f64, samples: usize) -> f64 {
    let h = TAU / samples as f64;
    let w: Vec<f64> = (0..samples)
        .map(|s| emission_at_phase(positions, debye_waller, wavenumber, s as f64 * h))
        .collect();
    let refine = |i: usize| {
        let (a, b, c) = (w[(i + samples - 1) % samples], w[i], w[(i + 1) % samples]);
        let denom = a - 2.0 * b + c;
        if denom == 0.0 {
            b
        } else {
            b - (a - c) * (a - c) / (8.0 * denom)
        }
    };
    let imax = (0..samples).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
    let imin = (0..samples).min_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
    let (max, min) = (refine(imax), refine(imin));
    (max - min) / (max + min)
}

pub fn phase_scan_visibility_of_model(model: &CouplingModel) -> f64 {
    phase_scan_visibility(
        &model.solution.positions(),
        &model.debye_waller(),
        model.config.wavenumber(),
        PHASE_SCAN_SAMPLES,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityPoint {
    /// COM secular frequency, rad/s.
    pub com_frequency: f64,
    pub visibility: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisibilityCurve {
    pub points: Vec<VisibilityPoint>,
}

impl VisibilityCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let v: Vec<f64> = self.points.iter().map(|p| p.visibility).collect();
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
            .collect()
    }
}

/// Evaluates visibility for one ion number at arbitrary frequencies and
/// temperatures, reusing a single dimensionless chain solution.
#[derive(Debug, Clone)]
pub struct VisibilityModel {
    config: TrapConfig,
    reference: ChainSolution,
    /// U_ij² / μ_j, row-major by ion.
    weighted_modes: Vec<f64>,
}

impl VisibilityModel {
    pub fn new(config: &TrapConfig) -> Result<VisibilityModel> {
        let shape = std::sync::Arc::new(ChainShape::solve(config.num_ions())?);
        // Any positive frequency will do; every evaluation rescales.
        let reference = ChainSolution::from_shape(config, shape, TAU * 1e6)?;
        let n = reference.num_ions();
        let u = reference.mode_matrix();
        let mu = reference.mode_eigenvalues();
        let weighted_modes = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| u[(i, j)] * u[(i, j)] / mu[j])
            .collect();
        Ok(VisibilityModel {
            config: config.clone(),
            reference,
            weighted_modes,
        })
    }

    pub fn config(&self) -> &TrapConfig {
        &self.config
    }

    pub fn solution_at(&self, com_frequency: f64) -> Result<ChainSolution> {
        self.reference.at_frequency(com_frequency)
    }

    pub fn model_at(&self, com_frequency: f64, temperature: f64) -> Result<CouplingModel> {
        let solution = self.solution_at(com_frequency)?;
        let thermal = thermal_spreads(&solution, temperature)?;
        Ok(CouplingModel {
            config: self.config.clone(),
            solution,
            thermal,
        })
    }

    /// Closed-form visibility without building intermediate structures;
    /// agrees with [`visibility`] on [`Self::model_at`].
    pub fn visibility(&self, com_frequency: f64, temperature: f64) -> Result<f64> {
        if !(com_frequency.is_finite() && com_frequency > 0.0) {
            return Err(Error::Domain(format!(
                "COM frequency must be positive, got {com_frequency}"
            )));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let n = self.reference.num_ions();
        let k = self.config.wavenumber();
        let ell = self.reference.length_scale() * (self.reference.com_frequency() / com_frequency).powf(2.0 / 3.0);
        let com_variance = crate::chain::mode_spread(self.config.ion_mass(), com_frequency, temperature).powi(2);
        let (mut re, mut im) = (0.0, 0.0);
        for (i, u) in self.reference.dimensionless_positions().iter().enumerate() {
            let row = &self.weighted_modes[i * n..(i + 1) * n];
            let variance = com_variance * row.iter().sum::<f64>();
            let d = (-k * k * variance).exp();
            let (s, c) = (2.0 * k * u * ell).sin_cos();
            re += d * c;
            im += d * s;
        }
        Ok(re.hypot(im) / n as f64)
    }

    /// g̃ at the frequency, which does not depend on temperature.
    pub fn g_tilde(&self, com_frequency: f64) -> Result<f64> {
        let positions = self.solution_at(com_frequency)?.positions();
        Ok(best_average_coupling(&positions, self.config.wavenumber()).1)
    }
}

/// Model visibility at each frequency of `freq_grid` (rad/s, ascending).
pub fn visibility_curve(config: &TrapConfig, temperature: f64, freq_grid: &[f64]) -> Result<VisibilityCurve> {
    if freq_grid.is_empty() {
        return Err(Error::Domain("frequency grid is empty".into()));
    }
    if !freq_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain("frequency grid must be strictly ascending".into()));
    }
    let model = VisibilityModel::new(config)?;
    let points = freq_grid
        .par_iter()
        .map(|&w| {
            model
                .visibility(w, temperature)
                .map(|visibility| VisibilityPoint {
                    com_frequency: w,
                    visibility,
                    uncertainty: 0.0,
                })
                .map_err(|e| Error::AtFrequency {
                    freq_khz: angular_to_khz(w),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VisibilityCurve { points })
}

/// (1/N) Σ_i |cos(k z_i + θ)| for a cavity displacement phase θ = k·x.
pub fn g_tilde_at(positions: &[f64], wavenumber: f64, theta: f64) -> f64 {
    positions
        .iter()
        .map(|z| (wavenumber * z + theta).cos().abs())
        .sum::<f64>()
        / positions.len() as f64
}

/// Maximises g̃ over θ ∈ [0, π). Returns (θ*, g̃(θ*)).
pub fn best_average_coupling(positions: &[f64], wavenumber: f64) -> (f64, f64) {
    let h = PI / G_TILDE_GRID as f64;
    let (best_i, _) = (0..G_TILDE_GRID)
        .map(|i| (i, g_tilde_at(positions, wavenumber, i as f64 * h)))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, g)| if g > acc.1 { (i, g) } else { acc },
        );
    let centre = best_i as f64 * h;
    let (theta, g) = golden_section_max(|t| g_tilde_at(positions, wavenumber, t), centre - h, centre + h, 1e-13);
    (theta.rem_euclid(PI), g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// Displacement phase θ = k·x maximising g̃, in [0, π).
    pub phase_at_optimum: f64,
    pub g_tilde: f64,
    /// |g(z_i⁰)|/g₀ at the optimum.
    pub per_ion_couplings: Vec<f64>,
    /// Displacement phase maximising the emission W instead; `None` when
    /// the fringe vanishes and W does not depend on displacement.
    pub emission_phase: Option<f64>,
    /// g̃ evaluated at `emission_phase`.
    pub g_tilde_at_emission_phase: Option<f64>,
}

/// g̃ report for explicit positions and Debye–Waller factors.
pub fn coupling_report(positions: &[f64], debye_waller: &[f64], wavenumber: f64) -> CouplingReport {
    let (theta, g_tilde) = best_average_coupling(positions, wavenumber);
    let per_ion_couplings = positions.iter().map(|z| (wavenumber * z + theta).cos().abs()).collect();
    let (re, im) = fringe_phasor(positions, debye_waller, wavenumber);
    // W is largest where 2θ + arg(S) = 0 (mod 2π).
    let emission_phase = (re.hypot(im) > 1e-12 * positions.len() as f64).then(|| (-0.5 * im.atan2(re)).rem_euclid(PI));
    CouplingReport {
        phase_at_optimum: theta,
        g_tilde,
        per_ion_couplings,
        emission_phase,
        g_tilde_at_emission_phase: emission_phase.map(|t| g_tilde_at(positions, wavenumber, t)),
    }
}

pub fn average_coupling(model: &CouplingModel) -> CouplingReport {
    coupling_report(
        &model.solution.positions(),
        &model.debye_waller(),
        model.config.wavenumber(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MaxVisibility,
    MaxGTilde,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MaxVisibility => "visibility",
            Objective::MaxGTilde => "g-tilde",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Objective> {
        match s {
            "visibility" | "max-visibility" => Ok(Objective::MaxVisibility),
            "g-tilde" | "max-g-tilde" => Ok(Objective::MaxGTilde),
            other => Err(Error::Parse(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyOptimum {
    /// Best COM frequency, rad/s.
    pub frequency: f64,
    pub objective: Objective,
    pub value: f64,
    pub solution: ChainSolution,
}

pub fn optimise_frequency(
    config: &TrapConfig,
    temperature: f64,
    freq_range: (f64, f64),
    objective: Objective,
) -> Result<FrequencyOptimum> {
    optimise_frequency_on_grid(config, temperature, freq_range, objective, OPTIMISE_GRID)
}

/// Global maximiser of `objective` over `grid_points` uniformly spaced
/// frequencies, refined by golden-section search between the neighbours
/// of the best grid point. Ties go to the lower frequency.
pub fn optimise_frequency_on_grid(
    config: &TrapConfig,
    temperature: f64,
    (lo, hi): (f64, f64),
    objective: Objective,
    grid_points: usize,
) -> Result<FrequencyOptimum> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid frequency range {lo}..{hi}")));
    }
    if grid_points < 2 {
        return Err(Error::Domain("optimisation grid needs at least two points".into()));
    }
    let model = VisibilityModel::new(config)?;
    let eval = |w: f64| -> f64 {
        let v = match objective {
            Objective::MaxVisibility => model.visibility(w, temperature),
            Objective::MaxGTilde => model.g_tilde(w),
        };
        v.unwrap_or(f64::NEG_INFINITY)
    };
    // Validate the temperature once so errors surface instead of -inf.
    if objective == Objective::MaxVisibility {
        model.visibility(lo, temperature)?;
    }

    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| if i + 1 == grid_points { hi } else { lo + i as f64 * step })
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&w| eval(w)).collect();
    let mut best = 0;
    for i in 1..grid_points {
        if values[i] > values[best] {
            best = i;
        }
    }
    let (mut frequency, mut value) = (grid[best], values[best]);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid_points - 1)];
    let (w, v) = golden_section_max(eval, a, b, 1e-9 * hi);
    if v > value {
        frequency = w;
        value = v;
    }
    Ok(FrequencyOptimum {
        frequency,
        objective,
        value,
        solution: model.solution_at(frequency)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::make_config;
    use crate::constants::khz_to_angular;

    fn cfg(n: usize) -> TrapConfig {
        make_config(40.0, &[("num_ions", n as f64)]).unwrap()
    }

    #[test]
    fn coupling_nodes_and_antinodes() {
        let c = cfg(1);
        let lambda = c.wavelength();
        assert_eq!(coupling_strength(&c, 0.0), c.g0());
        assert!(coupling_strength(&c, lambda / 4.0).abs() < 1e-9 * c.g0());
        assert!((coupling_strength(&c, lambda / 2.0) + c.g0()).abs() < 1e-9 * c.g0());
    }

    #[test]
    fn single_ion_emission_limits() {
        let c = cfg(1);
        let cold = CouplingModel::new(&c, khz_to_angular(620.0), 1e-12).unwrap();
        assert!((emission_profile(&cold, 0.0) - 2.0).abs() < 1e-6);
        let hot = CouplingModel::new(&c, khz_to_angular(100.0), 10.0).unwrap();
        for x in [0.0, 1e-7, 2.3e-7, 4e-7] {
            assert!((emission_profile(&hot, x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_integer_spacing_flattens_two_ion_fringe() {
        let k = cfg(2).wavenumber();
        let half = PI / k;
        let positions = [-10.75 * half, 10.75 * half];
        let dw = [0.4, 0.4];
        let w0 = emission_at_phase(&positions, &dw, k, 0.0);
        for phase in [0.3, 1.0, 2.5, 4.0] {
            assert!((emission_at_phase(&positions, &dw, k, phase) - w0).abs() < 1e-12);
        }
        assert!(visibility_of(&positions, &dw, k) < 1e-12);
    }

    #[test]
    fn single_ion_visibility_is_debye_waller() {
        let c = cfg(1);
        let m = CouplingModel::new(&c, khz_to_angular(620.0), 1.2 * c.doppler_temperature()).unwrap();
        let dz = m.thermal().ion_spreads[0];
        let expect = (-(c.wavenumber() * dz).powi(2)).exp();
        assert_eq!(visibility(&m), expect);
        assert!((visibility(&m) - 0.39).abs() < 0.01);
    }

    #[test]
    fn phase_scan_matches_closed_form() {
        let c = cfg(4);
        let m = CouplingModel::new(&c, khz_to_angular(471.0), 1.3 * c.doppler_temperature()).unwrap();
        let scan = phase_scan_visibility_of_model(&m);
        assert!((scan - visibility(&m)).abs() < 1e-9);
    }

    #[test]
    fn two_ion_enhancement_at_454_khz() {
        let t = 1.5 * cfg(1).doppler_temperature();
        let w = khz_to_angular(454.0);
        let one = visibility(&CouplingModel::new(&cfg(1), w, t).unwrap());
        let two = visibility(&CouplingModel::new(&cfg(2), w, t).unwrap());
        assert!((0.10..=0.13).contains(&one), "{one}");
        assert!((0.22..=0.26).contains(&two), "{two}");
    }

    #[test]
    fn fast_visibility_matches_full_model() {
        for n in 1..=6 {
            let c = cfg(n);
            let vm = VisibilityModel::new(&c).unwrap();
            for khz in [400.0, 457.3, 620.0] {
                let w = khz_to_angular(khz);
                let t = 1.4 * c.doppler_temperature();
                let full = visibility(&CouplingModel::new(&c, w, t).unwrap());
                assert!((vm.visibility(w, t).unwrap() - full).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cold_single_ion_curve_is_unity() {
        let curve = visibility_curve(&cfg(1), 1e-15, &[khz_to_angular(500.0)]).unwrap();
        assert!((curve.points[0].visibility - 1.0).abs() < 1e-9);
    }

    #[test]
    fn curve_rejects_bad_grids() {
        let c = cfg(1);
        assert!(visibility_curve(&c, 1e-3, &[]).is_err());
        assert!(visibility_curve(&c, 1e-3, &[2.0, 1.0]).is_err());
        match visibility_curve(&c, 1e-3, &[-1.0, 1.0]) {
            Err(Error::AtFrequency { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_ion_curve_peaks_at_commensurate_spacing() {
        // Two-ion spacing is 2^(1/3)·ℓ(ν); it equals 22·λ/2 where
        // ν = ν_ref·(d_ref/d)^(3/2).
        let c = cfg(2);
        let ell = crate::chain::length_scale(&c, khz_to_angular(454.0)).unwrap();
        let d454 = 2f64.cbrt() * ell;
        let nu_22 = 454.0 * (d454 / (22.0 * c.half_wavelength())).powf(1.5);
        let grid: Vec<f64> = (0..=400).map(|i| khz_to_angular(440.0 + 0.05 * i as f64)).collect();
        let curve = visibility_curve(&c, 1.5 * c.doppler_temperature(), &grid).unwrap();
        let maxima = curve.local_maxima();
        assert_eq!(maxima.len(), 1);
        let peak = angular_to_khz(curve.points[maxima[0]].com_frequency);
        assert!((peak - nu_22).abs() < 1.0, "{peak} vs {nu_22}");
    }

    #[test]
    fn g_tilde_simple_cases() {
        let k = cfg(1).wavenumber();
        let half = PI / k;
        let r = coupling_report(&[1.234e-7], &[1.0], k);
        assert!((r.g_tilde - 1.0).abs() < 1e-12);
        assert!((r.per_ion_couplings[0] - 1.0).abs() < 1e-12);
        let r = coupling_report(&[-11.0 * half + 3e-8, 11.0 * half + 3e-8], &[1.0, 1.0], k);
        assert!((r.g_tilde - 1.0).abs() < 1e-12);
        let mean: f64 = r.per_ion_couplings.iter().sum::<f64>() / 2.0;
        assert!((mean - r.g_tilde).abs() < 1e-12);
    }

    #[test]
    fn four_ion_g_tilde() {
        let k = cfg(1).wavenumber();
        let half = PI / k;
        let positions: Vec<f64> = [0.0, 16.1, 31.0, 47.1].iter().map(|d| d * half).collect();
        let r = coupling_report(&positions, &[1.0; 4], k);
        assert!((r.g_tilde - 0.988).abs() < 0.002, "{}", r.g_tilde);
    }

    #[test]
    fn optimise_single_ion_goes_to_upper_edge() {
        let c = cfg(1);
        let hi = khz_to_angular(620.0);
        let best = optimise_frequency_on_grid(
            &c,
            1.5 * c.doppler_temperature(),
            (khz_to_angular(400.0), hi),
            Objective::MaxVisibility,
            200,
        )
        .unwrap();
        assert_eq!(best.frequency, hi);
    }

    #[test]
    fn optimise_rejects_bad_range() {
        let c = cfg(1);
        assert!(optimise_frequency(&c, 1e-3, (2.0, 1.0), Objective::MaxVisibility).is_err());
        assert!(optimise_frequency(&c, 1e-3, (1.0, 1.0), Objective::MaxGTilde).is_err());
    }

    #[test]
    fn objective_parses() {
        assert_eq!("visibility".parse::<Objective>().unwrap(), Objective::MaxVisibility);
        assert_eq!("g-tilde".parse::<Objective>().unwrap(), Objective::MaxGTilde);
        assert!("bogus".parse::<Objective>().is_err());
    }
}
