//! File formats: CSV tables (comma-separated, header row, `\n` endings,
//! 9 significant digits) and TOML result records (full round-trip
//! precision).

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::chain::ChainSolution;
use crate::config::TrapConfig;
use crate::constants::{angular_to_khz, khz_to_angular};
use crate::coupling::{CouplingReport, FrequencyOptimum, VisibilityCurve, VisibilityPoint};
use crate::error::{Error, Result};
use crate::fit::{CurveFit, ScanFit};
use crate::scan::ScanTrace;

/// A number with 9 significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// `ion_index,z_m,z_half_wavelengths`, ions numbered from 1.
pub fn positions_csv(solution: &ChainSolution, config: &TrapConfig) -> String {
    let mut out = String::from("ion_index,z_m,z_half_wavelengths\n");
    for (i, z) in solution.positions().iter().enumerate() {
        csv_line(
            &mut out,
            &[(i + 1).to_string(), fmt9(*z), fmt9(z / config.half_wavelength())],
        );
    }
    out
}

/// `mode_index,eigenvalue,freq_hz,u_1,…,u_N`: one row per mode, the `u_i`
/// being that mode's participation of ion i.
pub fn modes_csv(solution: &ChainSolution) -> String {
    let n = solution.num_ions();
    let mut out = String::from("mode_index,eigenvalue,freq_hz");
    for i in 1..=n {
        let _ = write!(out, ",u_{i}");
    }
    out.push('\n');
    let freqs = solution.mode_frequencies();
    let u = solution.mode_matrix();
    for j in 0..n {
        let mut row = vec![
            (j + 1).to_string(),
            fmt9(solution.mode_eigenvalues()[j]),
            fmt9(freqs[j] / std::f64::consts::TAU),
        ];
        row.extend((0..n).map(|i| fmt9(u[(i, j)])));
        csv_line(&mut out, &row);
    }
    out
}

/// `freq_khz,visibility`.
pub fn visibility_csv(curve: &VisibilityCurve) -> String {
    let mut out = String::from("freq_khz,visibility\n");
    for p in &curve.points {
        csv_line(&mut out, &[fmt9(angular_to_khz(p.com_frequency)), fmt9(p.visibility)]);
    }
    out
}

/// `freq_khz,visibility,sigma`, the measured-data layout read by `fit`.
pub fn dataset_csv(curve: &VisibilityCurve) -> String {
    let mut out = String::from("freq_khz,visibility,sigma\n");
    for p in &curve.points {
        csv_line(
            &mut out,
            &[
                fmt9(angular_to_khz(p.com_frequency)),
                fmt9(p.visibility),
                fmt9(p.uncertainty),
            ],
        );
    }
    out
}

/// `displacement_nm,counts`.
pub fn scan_csv(trace: &ScanTrace) -> String {
    let mut out = String::from("displacement_nm,counts\n");
    for (x, c) in trace.displacements.iter().zip(&trace.counts) {
        csv_line(&mut out, &[fmt9(x * 1e9), c.to_string()]);
    }
    out
}

/// Input to the `fit` subcommand, told apart by its header.
#[derive(Debug, Clone, PartialEq)]
pub enum FitInput {
    /// Displacements (m) and counts.
    Scan {
        displacements: Vec<f64>,
        counts: Vec<u64>,
    },
    Curve(VisibilityCurve),
}

pub fn read_fit_input(reader: impl Read) -> Result<FitInput> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let parse = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
    };
    match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["displacement_nm", "counts"] => {
            let (mut displacements, mut counts) = (Vec::new(), Vec::new());
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec?;
                displacements.push(parse(&rec[0], i + 2)? * 1e-9);
                counts.push(
                    rec[1]
                        .parse::<u64>()
                        .map_err(|_| Error::Parse(format!("line {}: `{}` is not a count", i + 2, &rec[1])))?,
                );
            }
            Ok(FitInput::Scan { displacements, counts })
        }
        ["freq_khz", "visibility", "sigma"] => {
            let mut points = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec?;
                points.push(VisibilityPoint {
                    com_frequency: khz_to_angular(parse(&rec[0], i + 2)?),
                    visibility: parse(&rec[1], i + 2)?,
                    uncertainty: parse(&rec[2], i + 2)?,
                });
            }
            Ok(FitInput::Curve(VisibilityCurve { points }))
        }
        other => Err(Error::Parse(format!(
            "unrecognised header {other:?}; expected `displacement_nm,counts` or `freq_khz,visibility,sigma`"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRecord {
    pub freq_khz: f64,
    pub objective: String,
    pub value: f64,
    pub positions_half_lambda: Vec<f64>,
    pub g_tilde: f64,
    pub per_ion_couplings: Vec<f64>,
    /// g̃ with the cavity at the displacement maximising emission.
    pub g_tilde_at_emission_phase: Option<f64>,
}

impl OptimizeRecord {
    pub fn new(optimum: &FrequencyOptimum, config: &TrapConfig, report: &CouplingReport) -> OptimizeRecord {
        OptimizeRecord {
            freq_khz: angular_to_khz(optimum.frequency),
            objective: optimum.objective.to_string(),
            value: optimum.value,
            positions_half_lambda: optimum
                .solution
                .positions()
                .iter()
                .map(|z| z / config.half_wavelength())
                .collect(),
            g_tilde: report.g_tilde,
            per_ion_couplings: report.per_ion_couplings.clone(),
            g_tilde_at_emission_phase: report.g_tilde_at_emission_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTildeRecord {
    pub freq_khz: Option<f64>,
    pub g_tilde: f64,
    pub phase_at_optimum: f64,
    pub per_ion_couplings: Vec<f64>,
    pub positions_half_lambda: Vec<f64>,
    pub emission_phase: Option<f64>,
    pub g_tilde_at_emission_phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFitRecord {
    pub kind: String,
    pub amplitude: f64,
    pub visibility: f64,
    pub visibility_uncertainty: f64,
    pub phase: f64,
    pub period_nm: f64,
    pub residual_rms: f64,
    pub significant: bool,
}

impl From<&ScanFit> for ScanFitRecord {
    fn from(f: &ScanFit) -> Self {
        ScanFitRecord {
            kind: "scan".into(),
            amplitude: f.amplitude,
            visibility: f.visibility,
            visibility_uncertainty: f.visibility_uncertainty,
            phase: f.phase,
            period_nm: f.period * 1e9,
            residual_rms: f.residual_rms,
            significant: f.significant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFitRecord {
    pub kind: String,
    pub temperature_uk: f64,
    pub temperature_sigma_uk: f64,
    pub temperature_td: f64,
    pub nu_offset_khz: f64,
    pub nu_offset_sigma_khz: f64,
    /// Covariance of (temperature [K], ν₀ [Hz]).
    pub covariance: [[f64; 2]; 2],
    pub chi_squared: f64,
    pub dof: usize,
}

impl CurveFitRecord {
    pub fn new(fit: &CurveFit, config: &TrapConfig) -> CurveFitRecord {
        let hz = 1.0 / std::f64::consts::TAU;
        let c = fit.covariance;
        CurveFitRecord {
            kind: "visibility-curve".into(),
            temperature_uk: fit.temperature * 1e6,
            temperature_sigma_uk: fit.temperature_sigma() * 1e6,
            temperature_td: fit.temperature / config.doppler_temperature(),
            nu_offset_khz: angular_to_khz(fit.nu_offset),
            nu_offset_sigma_khz: angular_to_khz(fit.nu_offset_sigma()),
            covariance: [[c[0][0], c[0][1] * hz], [c[1][0] * hz, c[1][1] * hz * hz]],
            chi_squared: fit.chi_squared,
            dof: fit.dof,
        }
    }
}

/// Sidecar for a simulated scan: everything needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub num_ions: usize,
    pub freq_khz: f64,
    pub temperature_uk: f64,
    pub span_nm: f64,
    pub num_points: usize,
    pub mean_rate: f64,
    pub bin_time_s: f64,
    pub seed: u64,
    pub rng: String,
    pub model_visibility: f64,
}

pub fn to_toml<T: Serialize>(record: &T) -> String {
    toml::to_string(record).expect("records serialise to TOML")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::solve_chain;
    use crate::config::make_config;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(444.0), "4.44000000e2");
        assert_eq!(fmt9(-1.0 / 3.0), "-3.33333333e-1");
    }

    #[test]
    fn modes_csv_layout() {
        let c = make_config(40.0, &[("num_ions", 2.0)]).unwrap();
        let s = solve_chain(&c, khz_to_angular(454.0)).unwrap();
        let text = modes_csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mode_index,eigenvalue,freq_hz,u_1,u_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,1.00000000e0,4.54000000e5,"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn positions_csv_layout() {
        let c = make_config(40.0, &[("num_ions", 3.0)]).unwrap();
        let s = solve_chain(&c, khz_to_angular(444.0)).unwrap();
        let text = positions_csv(&s, &c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ion_index,z_m,z_half_wavelengths");
        let mid: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(mid[0], "2");
        assert!(mid[1].parse::<f64>().unwrap().abs() < 1e-15);
    }

    #[test]
    fn reads_both_fit_layouts() {
        let scan = "displacement_nm,counts\n0,10\n100,12\n";
        match read_fit_input(scan.as_bytes()).unwrap() {
            FitInput::Scan { displacements, counts } => {
                assert_eq!(counts, vec![10, 12]);
                assert!((displacements[1] - 1e-7).abs() < 1e-20);
            }
            other => panic!("{other:?}"),
        }
        let curve = "freq_khz,visibility,sigma\n400,0.1,0.02\n410,0.2,0.02\n";
        match read_fit_input(curve.as_bytes()).unwrap() {
            FitInput::Curve(c) => assert_eq!(c.len(), 2),
            other => panic!("{other:?}"),
        }
        assert!(read_fit_input("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_fit_input("displacement_nm,counts\n0,-3\n".as_bytes()).is_err());
    }
}
