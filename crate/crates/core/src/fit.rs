//! Two-tier analysis: a sinusoidal fit extracts visibility from each
//! photon-counting scan, and a model fit extracts temperature and a
//! frequency offset from visibility-versus-frequency data.

use std::f64::consts::TAU;

use crate::config::TrapConfig;
use crate::coupling::{VisibilityCurve, VisibilityModel};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::scan::ScanTrace;
use crate::search::{golden_section_max, nelder_mead};

/// Fitted periods are confined to within this fraction of λ/2.
pub const PERIOD_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanFit {
    /// Mean count level A.
    pub amplitude: f64,
    pub visibility: f64,
    /// φ in counts = A(1 + V cos(2π x/period + φ)), in (−π, π].
    pub phase: f64,
    /// Fringe period, m.
    pub period: f64,
    pub residual_rms: f64,
    pub visibility_uncertainty: f64,
    /// False when V is within 3σ of zero.
    pub significant: bool,
}

/// Weighted linear least squares for a + b cos(qx) + s sin(qx) at fixed q.
fn linear_sinusoid(xs: &[f64], ys: &[f64], weights: &[f64], q: f64) -> Option<([f64; 3], f64)> {
    let mut normal = Matrix::zeros(3);
    let mut rhs = [0.0; 3];
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        let (s, c) = (q * x).sin_cos();
        let basis = [1.0, c, s];
        for i in 0..3 {
            rhs[i] += w * basis[i] * y;
            for j in 0..3 {
                normal[(i, j)] += w * basis[i] * basis[j];
            }
        }
    }
    let p = cholesky_solve(&normal, &rhs).ok()?;
    let chi2 = chi_squared(xs, ys, weights, &[p[0], p[1], p[2], q]);
    Some(([p[0], p[1], p[2]], chi2))
}

fn sinusoid(p: &[f64; 4], x: f64) -> f64 {
    let (s, c) = (p[3] * x).sin_cos();
    p[0] + p[1] * c + p[2] * s
}

fn chi_squared(xs: &[f64], ys: &[f64], weights: &[f64], p: &[f64; 4]) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(weights)
        .map(|((&x, &y), &w)| w * (y - sinusoid(p, x)).powi(2))
        .sum()
}

/// Normal matrix JᵀWJ and gradient JᵀW r for the four sinusoid parameters.
fn normal_equations(xs: &[f64], ys: &[f64], weights: &[f64], p: &[f64; 4]) -> (Matrix, [f64; 4]) {
    let mut jtj = Matrix::zeros(4);
    let mut jtr = [0.0; 4];
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        let (s, c) = (p[3] * x).sin_cos();
        let grad = [1.0, c, s, x * (p[2] * c - p[1] * s)];
        let r = y - sinusoid(p, x);
        for i in 0..4 {
            jtr[i] += w * grad[i] * r;
            for j in 0..4 {
                jtj[(i, j)] += w * grad[i] * grad[j];
            }
        }
    }
    (jtj, jtr)
}

fn invert_spd(a: &Matrix) -> Option<Matrix> {
    let n = a.dim();
    let mut inv = Matrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(a, &e).ok()?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(inv)
}

/// Fits counts `ys` at displacements `xs` to A(1 + V cos(qx + φ)) with
/// q near 4π/λ. Weights are Poisson (1/expected counts).
pub fn fit_sinusoid(xs: &[f64], ys: &[f64], wavelength: f64) -> Result<ScanFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("displacement and count lengths differ".into()));
    }
    if xs.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {}", xs.len())));
    }
    let half = 0.5 * wavelength;
    let extent =
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(extent >= half * (1.0 - PERIOD_TOLERANCE)) {
        return Err(Error::Fit(format!(
            "scan covers {:.3} fringe periods, need at least one",
            extent / half
        )));
    }
    let q_nominal = TAU / half;
    let q_lo = q_nominal / (1.0 + PERIOD_TOLERANCE);
    let q_hi = q_nominal / (1.0 - PERIOD_TOLERANCE);

    let mut weights: Vec<f64> = ys.iter().map(|&y| 1.0 / y.max(1.0)).collect();
    let mut params = [0.0; 4];
    for _pass in 0..3 {
        // Profile χ² over q on a grid, then refine around the best node.
        let profile = |q: f64| linear_sinusoid(xs, ys, &weights, q).map_or(f64::NEG_INFINITY, |(_, c)| -c);
        let grid = 241;
        let step = (q_hi - q_lo) / (grid - 1) as f64;
        let best = (0..grid)
            .map(|i| (i, profile(q_lo + i as f64 * step)))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            )
            .0;
        let centre = q_lo + best as f64 * step;
        let (q, _) = golden_section_max(
            profile,
            (centre - step).max(q_lo),
            (centre + step).min(q_hi),
            1e-10 * q_nominal,
        );
        let (abc, _) =
            linear_sinusoid(xs, ys, &weights, q).ok_or_else(|| Error::Fit("degenerate normal equations".into()))?;
        params = [abc[0], abc[1], abc[2], q];

        // Gauss–Newton polish on all four parameters.
        let mut chi2 = chi_squared(xs, ys, &weights, &params);
        for _ in 0..50 {
            let (jtj, jtr) = normal_equations(xs, ys, &weights, &params);
            let Ok(delta) = cholesky_solve(&jtj, &jtr) else { break };
            let mut accepted = false;
            let mut scale = 1.0;
            while scale > 1e-6 {
                let trial = [
                    params[0] + scale * delta[0],
                    params[1] + scale * delta[1],
                    params[2] + scale * delta[2],
                    params[3] + scale * delta[3],
                ];
                let c = chi_squared(xs, ys, &weights, &trial);
                if c <= chi2 && (q_lo..=q_hi).contains(&trial[3]) {
                    accepted = c < chi2;
                    params = trial;
                    chi2 = c;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        weights = xs.iter().map(|&x| 1.0 / sinusoid(&params, x).max(1.0)).collect();
    }

    let [a, b, s, q] = params;
    if !(a.is_finite() && a > 0.0 && b.is_finite() && s.is_finite()) {
        return Err(Error::Fit(format!("fitted mean level {a} is not positive")));
    }
    let r = b.hypot(s);
    let mut visibility = r / a;

    let (jtj, _) = normal_equations(xs, ys, &weights, &params);
    let cov = invert_spd(&jtj).ok_or_else(|| Error::Fit("singular covariance".into()))?;
    let grad = if r > 0.0 {
        [-visibility / a, b / (a * r), s / (a * r), 0.0]
    } else {
        // V = 0 is a cusp; use the radial direction magnitude.
        [0.0, 1.0 / a, 0.0, 0.0]
    };
    let mut var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            var += grad[i] * cov[(i, j)] * grad[j];
        }
    }
    let visibility_uncertainty = var.max(0.0).sqrt();
    if visibility > 1.0 {
        if visibility > 1.0 + 3.0 * visibility_uncertainty {
            return Err(Error::Fit(format!(
                "fitted visibility {visibility:.4} exceeds 1 by more than 3σ ({visibility_uncertainty:.2e})"
            )));
        }
        visibility = 1.0;
    }
    let residual_rms = (xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - sinusoid(&params, x)).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();

    Ok(ScanFit {
        amplitude: a,
        visibility,
        phase: (-s).atan2(b),
        period: TAU / q,
        residual_rms,
        visibility_uncertainty,
        significant: visibility > 3.0 * visibility_uncertainty,
    })
}

/// Sinusoidal fit of a photon-counting scan taken at cavity wavelength
/// `wavelength`.
pub fn fit_scan(trace: &ScanTrace, wavelength: f64) -> Result<ScanFit> {
    let ys: Vec<f64> = trace.counts.iter().map(|&c| c as f64).collect();
    fit_sinusoid(&trace.displacements, &ys, wavelength)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    /// K.
    pub temperature: f64,
    /// Horizontal frequency offset ν₀, angular (rad/s): the model is
    /// evaluated at ω + ν₀.
    pub nu_offset: f64,
    /// Covariance of (temperature [K], nu_offset [rad/s]).
    pub covariance: [[f64; 2]; 2],
    pub chi_squared: f64,
    pub dof: usize,
}

impl CurveFit {
    pub fn temperature_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn nu_offset_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Settings for [`fit_visibility_curve_with`].
#[derive(Debug, Clone)]
pub struct CurveFitOptions {
    /// Start temperatures as multiples of the initial guess.
    pub temperature_factors: Vec<f64>,
    /// Start offsets, rad/s.
    pub offsets: Vec<f64>,
    /// Absolute tolerance on χ² across the simplex.
    pub ftol: f64,
    pub max_evals: usize,
}

impl Default for CurveFitOptions {
    fn default() -> Self {
        CurveFitOptions {
            temperature_factors: vec![0.5, 0.75, 1.0, 1.5, 2.0],
            offsets: [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|khz| TAU * khz * 1e3).collect(),
            ftol: 1e-10,
            max_evals: 4000,
        }
    }
}

/// χ² of a visibility dataset against the model at (temperature, nu_offset).
pub fn curve_objective(model: &VisibilityModel, data: &VisibilityCurve, temperature: f64, nu_offset: f64) -> f64 {
    if !(temperature > 0.0) {
        return f64::INFINITY;
    }
    let mut chi2 = 0.0;
    for p in &data.points {
        match model.visibility(p.com_frequency + nu_offset, temperature) {
            Ok(v) => chi2 += ((v - p.visibility) / p.uncertainty).powi(2),
            Err(_) => return f64::INFINITY,
        }
    }
    chi2
}

pub fn fit_visibility_curve(data: &VisibilityCurve, config: &TrapConfig, initial_temperature: f64) -> Result<CurveFit> {
    fit_visibility_curve_with(data, config, initial_temperature, &CurveFitOptions::default())
}

/// Fits temperature and frequency offset by Nelder–Mead from every start
/// on a (temperature, offset) grid and keeps the best. The covariance is
/// (JᵀJ)⁻¹ with J the Jacobian of the normalised residuals at the optimum.
pub fn fit_visibility_curve_with(
    data: &VisibilityCurve,
    config: &TrapConfig,
    initial_temperature: f64,
    options: &CurveFitOptions,
) -> Result<CurveFit> {
    if data.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 data points, got {}", data.len())));
    }
    if !(initial_temperature > 0.0) {
        return Err(Error::Fit(format!(
            "initial temperature must be positive, got {initial_temperature}"
        )));
    }
    if let Some(p) = data.points.iter().find(|p| !(p.uncertainty > 0.0)) {
        return Err(Error::Fit(format!(
            "data point at {:.3} kHz has non-positive uncertainty",
            p.com_frequency / TAU * 1e-3
        )));
    }
    let model = VisibilityModel::new(config)?;

    // Simplex coordinates: temperature in units of the initial guess,
    // offset in kHz (angular).
    let t_scale = initial_temperature;
    let nu_scale = TAU * 1e3;
    let objective = |p: &[f64]| curve_objective(&model, data, p[0] * t_scale, p[1] * nu_scale);

    let mut best: Option<(f64, f64, f64)> = None;
    let mut start_values = Vec::new();
    for &tf in &options.temperature_factors {
        for &nu in &options.offsets {
            let start = [tf, nu / nu_scale];
            start_values.push(objective(&start));
            let r = nelder_mead(
                objective,
                &start,
                &[0.1 * tf, 0.5],
                options.ftol,
                1e-9,
                options.max_evals,
            );
            if !r.value.is_finite() {
                continue;
            }
            let (t, nu) = (r.point[0] * t_scale, r.point[1] * nu_scale);
            let better = match best {
                None => true,
                Some((bv, bt, _)) => r.value < bv || (r.value == bv && t < bt),
            };
            if better {
                best = Some((r.value, t, nu));
            }
        }
    }
    let Some((chi_squared, temperature, nu_offset)) = best else {
        return Err(Error::Fit(format!(
            "every start failed; start objectives {start_values:?}"
        )));
    };

    let residuals = |t: f64, nu: f64| -> Result<Vec<f64>> {
        data.points
            .iter()
            .map(|p| Ok((model.visibility(p.com_frequency + nu, t)? - p.visibility) / p.uncertainty))
            .collect()
    };
    let ht = 1e-5 * temperature;
    let hn = TAU * 1.0;
    let (tp, tm) = (
        residuals(temperature + ht, nu_offset)?,
        residuals(temperature - ht, nu_offset)?,
    );
    let (np, nm) = (
        residuals(temperature, nu_offset + hn)?,
        residuals(temperature, nu_offset - hn)?,
    );
    let mut f = [[0.0; 2]; 2];
    for i in 0..data.len() {
        let j = [(tp[i] - tm[i]) / (2.0 * ht), (np[i] - nm[i]) / (2.0 * hn)];
        for a in 0..2 {
            for b in 0..2 {
                f[a][b] += j[a] * j[b];
            }
        }
    }
    let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
    if !(det > 0.0) {
        return Err(Error::Fit("fit information matrix is singular".into()));
    }
    let covariance = [[f[1][1] / det, -f[0][1] / det], [-f[1][0] / det, f[0][0] / det]];

    Ok(CurveFit {
        temperature,
        nu_offset,
        covariance,
        chi_squared,
        dof: data.len() - 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::make_config;
    use crate::constants::khz_to_angular;
    use crate::coupling::{CouplingModel, VisibilityPoint};
    use crate::scan::{simulate_scan, simulate_visibility_dataset, ScanSettings};

    const LAMBDA: f64 = 866e-9;

    #[test]
    fn noiseless_sinusoid_is_recovered_exactly() {
        let (a, v, phi) = (1234.5, 0.37, 0.8);
        let q = 2.0 * TAU / LAMBDA;
        let xs: Vec<f64> = (0..64).map(|i| 2.0 * LAMBDA * i as f64 / 63.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| a * (1.0 + v * (q * x + phi).cos())).collect();
        let fit = fit_sinusoid(&xs, &ys, LAMBDA).unwrap();
        assert!((fit.amplitude / a - 1.0).abs() < 1e-9);
        assert!((fit.visibility / v - 1.0).abs() < 1e-9, "{}", fit.visibility);
        assert!((fit.phase - phi).abs() < 1e-9);
        assert!((fit.period / (LAMBDA / 2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn visibility_is_invariant_under_rescaling() {
        let q = 2.0 * TAU / LAMBDA;
        let xs: Vec<f64> = (0..40).map(|i| 1.5 * LAMBDA * i as f64 / 39.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| 500.0 * (1.0 + 0.3 * (q * x).cos()) + [3.0, -5.0, 1.0, 7.0][i % 4])
            .collect();
        let scaled: Vec<f64> = ys.iter().map(|y| 7.5 * y).collect();
        let a = fit_sinusoid(&xs, &ys, LAMBDA).unwrap();
        let b = fit_sinusoid(&xs, &scaled, LAMBDA).unwrap();
        assert!((a.visibility - b.visibility).abs() < 1e-9);
    }

    #[test]
    fn flat_trace_is_not_significant() {
        let c = make_config(40.0, &[]).unwrap();
        let hot = CouplingModel::new(&c, khz_to_angular(100.0), 10.0).unwrap();
        let trace = simulate_scan(&hot, &ScanSettings::for_config(&c, 10_000.0, 5)).unwrap();
        let fit = fit_scan(&trace, LAMBDA).unwrap();
        assert!(!fit.significant, "{fit:?}");
        assert!(fit.visibility < 3.0 * fit.visibility_uncertainty + 1e-12);
    }

    #[test]
    fn single_ion_scan_recovers_39_percent() {
        let c = make_config(40.0, &[]).unwrap();
        let m = CouplingModel::new(&c, khz_to_angular(620.0), 1.2 * c.doppler_temperature()).unwrap();
        let truth = crate::coupling::visibility(&m);
        // 10⁵ expected counts per 100 ms bin.
        let trace = simulate_scan(&m, &ScanSettings::for_config(&c, 1e6, 11)).unwrap();
        let fit = fit_scan(&trace, LAMBDA).unwrap();
        assert!(fit.significant);
        assert!((fit.visibility - truth).abs() < 4.0 * fit.visibility_uncertainty);
        assert!((fit.visibility - 0.39).abs() < 0.01);
        assert!((fit.period / (LAMBDA / 2.0) - 1.0).abs() < 0.2);
    }

    #[test]
    fn cold_ion_scan_has_unit_visibility() {
        let c = make_config(40.0, &[]).unwrap();
        let m = CouplingModel::new(&c, khz_to_angular(620.0), 1e-12).unwrap();
        let trace = simulate_scan(&m, &ScanSettings::for_config(&c, 1e8, 2)).unwrap();
        let fit = fit_scan(&trace, LAMBDA).unwrap();
        assert!(fit.visibility > 0.999, "{fit:?}");
    }

    #[test]
    fn scan_fit_rejects_short_or_narrow_traces() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 1e-7).collect();
        assert!(fit_sinusoid(&xs, &[1.0; 6], LAMBDA).is_err());
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 1e-9).collect();
        assert!(fit_sinusoid(&xs, &[1.0; 10], LAMBDA).is_err());
    }

    fn grid() -> Vec<f64> {
        (0..=88).map(|i| khz_to_angular(400.0 + 2.5 * i as f64)).collect()
    }

    #[test]
    fn two_ion_fit_recovers_truth() {
        let c = make_config(40.0, &[("num_ions", 2.0)]).unwrap();
        let t = 1.5 * c.doppler_temperature();
        let nu0 = TAU * 700.0;
        let data = simulate_visibility_dataset(&c, t, nu0, &grid(), 0.02, 42).unwrap();
        let fit = fit_visibility_curve(&data, &c, c.doppler_temperature()).unwrap();
        assert!((fit.temperature - t).abs() < 3.0 * fit.temperature_sigma(), "{fit:?}");
        assert!((fit.nu_offset - nu0).abs() < 3.0 * fit.nu_offset_sigma(), "{fit:?}");
        assert_eq!(fit.dof, 87);
        let cov = fit.covariance;
        assert_eq!(cov[0][1], cov[1][0]);
        assert!(cov[0][0] > 0.0 && cov[1][1] > 0.0 && cov[0][0] * cov[1][1] >= cov[0][1] * cov[0][1]);
    }

    #[test]
    fn optimum_beats_every_start() {
        let c = make_config(40.0, &[("num_ions", 3.0)]).unwrap();
        let td = c.doppler_temperature();
        let data = simulate_visibility_dataset(&c, 1.56 * td, 0.0, &grid(), 0.02, 8).unwrap();
        let opts = CurveFitOptions::default();
        let fit = fit_visibility_curve_with(&data, &c, td, &opts).unwrap();
        let model = VisibilityModel::new(&c).unwrap();
        for &tf in &opts.temperature_factors {
            for &nu in &opts.offsets {
                assert!(fit.chi_squared <= curve_objective(&model, &data, tf * td, nu));
            }
        }
        assert!(fit.nu_offset.abs() <= TAU * 1.3e3, "{}", fit.nu_offset / TAU);
    }

    #[test]
    fn single_ion_fit_follows_monotone_rise() {
        let c = make_config(40.0, &[]).unwrap();
        let td = c.doppler_temperature();
        let data = simulate_visibility_dataset(&c, 1.5 * td, 0.0, &grid(), 0.02, 77).unwrap();
        let fit = fit_visibility_curve(&data, &c, td).unwrap();
        let model = VisibilityModel::new(&c).unwrap();
        let curve: Vec<f64> = grid()
            .iter()
            .map(|&w| model.visibility(w + fit.nu_offset, fit.temperature).unwrap())
            .collect();
        assert!(curve.windows(2).all(|w| w[1] > w[0]));
        assert!((fit.temperature / td - 1.5).abs() < 0.2);
    }

    #[test]
    fn curve_fit_rejects_bad_input() {
        let c = make_config(40.0, &[]).unwrap();
        let pts = |sigma: f64| VisibilityCurve {
            points: (0..4)
                .map(|i| VisibilityPoint {
                    com_frequency: khz_to_angular(400.0 + i as f64),
                    visibility: 0.1,
                    uncertainty: sigma,
                })
                .collect(),
        };
        assert!(fit_visibility_curve(&pts(0.0), &c, 1e-3).is_err());
        assert!(fit_visibility_curve(&pts(0.02), &c, 0.0).is_err());
        let short = VisibilityCurve {
            points: pts(0.02).points[..2].to_vec(),
        };
        assert!(fit_visibility_curve(&short, &c, 1e-3).is_err());
    }
}
