//! Synthetic measurements: photon-counting cavity scans and visibility
//! datasets.
//!
//! Random numbers come from ChaCha20 (`rand_chacha` 0.9.0, pinned) seeded
//! with `seed_from_u64`. Poisson and normal variates come from `rand_distr`
//! 0.5.1 (pinned). Per-point streams are selected with
//! `ChaCha20Rng::set_stream(index)`, so generation order does not affect the
//! output.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::config::TrapConfig;
use crate::coupling::{emission_profile, CouplingModel, VisibilityCurve, VisibilityModel, VisibilityPoint};
use crate::error::{Error, Result};

/// Name and version of the generator behind every synthetic dataset.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9.0) + rand_distr 0.5.1";

/// Counts recorded while the cavity is stepped along its axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    /// Cavity displacement per bin, m, ascending.
    pub displacements: Vec<f64>,
    pub counts: Vec<u64>,
    /// Integration time per bin, s.
    pub bin_time: f64,
    /// Displacement-averaged count rate, counts/s.
    pub mean_rate: f64,
    pub rng_seed: u64,
}

impl ScanTrace {
    pub fn new(
        displacements: Vec<f64>,
        counts: Vec<u64>,
        bin_time: f64,
        mean_rate: f64,
        rng_seed: u64,
    ) -> Result<ScanTrace> {
        if displacements.len() != counts.len() {
            return Err(Error::Domain(format!(
                "{} displacements but {} count bins",
                displacements.len(),
                counts.len()
            )));
        }
        if !displacements.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("displacements must be strictly ascending".into()));
        }
        Ok(ScanTrace {
            displacements,
            counts,
            bin_time,
            mean_rate,
            rng_seed,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Scan settings; `span` and `bin_time` default to 2λ and 100 ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub span: f64,
    pub num_points: usize,
    pub mean_rate: f64,
    pub bin_time: f64,
    pub seed: u64,
}

impl ScanSettings {
    pub fn for_config(config: &TrapConfig, mean_rate: f64, seed: u64) -> ScanSettings {
        ScanSettings {
            span: 2.0 * config.wavelength(),
            num_points: 64,
            mean_rate,
            bin_time: 0.1,
            seed,
        }
    }
}

/// Expected counts per bin: proportional to the emission profile and
/// normalised so the bin average equals `mean_rate·bin_time`.
pub fn expected_counts(model: &CouplingModel, displacements: &[f64], mean_counts: f64) -> Vec<f64> {
    let w: Vec<f64> = displacements.iter().map(|&x| emission_profile(model, x)).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter().map(|v| mean_counts * v / mean).collect()
}

/// Uniform displacements from 0 to `span` inclusive.
pub fn scan_displacements(span: f64, num_points: usize) -> Vec<f64> {
    (0..num_points)
        .map(|i| span * i as f64 / (num_points - 1) as f64)
        .collect()
}

pub fn simulate_scan(model: &CouplingModel, settings: &ScanSettings) -> Result<ScanTrace> {
    let ScanSettings {
        span,
        num_points,
        mean_rate,
        bin_time,
        seed,
    } = *settings;
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::Domain(format!("scan span must be positive, got {span}")));
    }
    if num_points < 8 {
        return Err(Error::Domain(format!(
            "a scan needs at least 8 points, got {num_points}"
        )));
    }
    if !(bin_time > 0.0 && mean_rate > 0.0 && mean_rate * bin_time >= 1.0) {
        return Err(Error::Domain(format!(
            "need at least one expected count per bin, got {}",
            mean_rate * bin_time
        )));
    }
    let displacements = scan_displacements(span, num_points);
    let expected = expected_counts(model, &displacements, mean_rate * bin_time);
    let counts = expected
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            if lambda <= 0.0 {
                return 0;
            }
            let mut rng = point_rng(seed, i as u64);
            let poisson = Poisson::new(lambda).expect("positive mean");
            poisson.sample(&mut rng) as u64
        })
        .collect();
    ScanTrace::new(displacements, counts, bin_time, mean_rate, seed)
}

fn point_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Model visibilities at `freq_grid + nu_offset` with Gaussian noise of
/// width `sigma` added and clamped to [0, 1]. Frequencies and the offset
/// are angular (rad/s); the returned points are labelled with the grid
/// frequency, not the shifted one.
pub fn simulate_visibility_dataset(
    config: &TrapConfig,
    temperature: f64,
    nu_offset: f64,
    freq_grid: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<VisibilityCurve> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("noise width must be non-negative, got {sigma}")));
    }
    let model = VisibilityModel::new(config)?;
    let points = freq_grid
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut v = model.visibility(w + nu_offset, temperature)?;
            if sigma > 0.0 {
                let noise = Normal::new(0.0, sigma).expect("finite sigma");
                v += noise.sample(&mut point_rng(seed, i as u64));
            }
            Ok(VisibilityPoint {
                com_frequency: w,
                visibility: v.clamp(0.0, 1.0),
                uncertainty: sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VisibilityCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::make_config;
    use crate::constants::khz_to_angular;
    use crate::coupling::visibility_curve;

    fn model(n: usize, khz: f64, t_over_td: f64) -> CouplingModel {
        let c = make_config(40.0, &[("num_ions", n as f64)]).unwrap();
        let t = t_over_td * c.doppler_temperature();
        CouplingModel::new(&c, khz_to_angular(khz), t).unwrap()
    }

    #[test]
    fn same_seed_same_trace() {
        let m = model(2, 454.0, 1.5);
        let s = ScanSettings::for_config(m.config(), 2000.0, 17);
        assert_eq!(simulate_scan(&m, &s).unwrap(), simulate_scan(&m, &s).unwrap());
        let other = ScanSettings { seed: 18, ..s };
        assert_ne!(
            simulate_scan(&m, &s).unwrap().counts,
            simulate_scan(&m, &other).unwrap().counts
        );
    }

    #[test]
    fn rejects_bad_settings() {
        let m = model(1, 620.0, 1.2);
        let s = ScanSettings::for_config(m.config(), 2000.0, 1);
        assert!(simulate_scan(&m, &ScanSettings { num_points: 7, ..s }).is_err());
        assert!(simulate_scan(&m, &ScanSettings { span: 0.0, ..s }).is_err());
        assert!(simulate_scan(&m, &ScanSettings { mean_rate: 5.0, ..s }).is_err());
    }

    #[test]
    fn expectation_is_normalised() {
        let m = model(3, 444.0, 1.56);
        let xs = scan_displacements(2.0 * m.config().wavelength(), 64);
        let e = expected_counts(&m, &xs, 250.0);
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        assert!((mean - 250.0).abs() < 1e-9);
    }

    #[test]
    fn mean_over_seeds_converges_to_expectation() {
        let m = model(1, 620.0, 1.2);
        let s = ScanSettings {
            num_points: 16,
            ..ScanSettings::for_config(m.config(), 500.0, 0)
        };
        let reps = 10_000u64;
        let mut sums = [0.0; 16];
        for seed in 0..reps {
            let t = simulate_scan(&m, &ScanSettings { seed, ..s }).unwrap();
            for (acc, c) in sums.iter_mut().zip(&t.counts) {
                *acc += *c as f64;
            }
        }
        let xs = scan_displacements(s.span, s.num_points);
        let e = expected_counts(&m, &xs, s.mean_rate * s.bin_time);
        for (sum, lambda) in sums.iter().zip(&e) {
            let mean = sum / reps as f64;
            let se = (lambda / reps as f64).sqrt();
            assert!((mean - lambda).abs() < 3.0 * se, "{mean} vs {lambda}");
        }
    }

    #[test]
    fn noiseless_dataset_is_model_curve() {
        let c = make_config(40.0, &[("num_ions", 2.0)]).unwrap();
        let t = 1.5 * c.doppler_temperature();
        let grid: Vec<f64> = (0..12).map(|i| khz_to_angular(400.0 + 20.0 * i as f64)).collect();
        let data = simulate_visibility_dataset(&c, t, 0.0, &grid, 0.0, 3).unwrap();
        let model = visibility_curve(&c, t, &grid).unwrap();
        for (a, b) in data.points.iter().zip(&model.points) {
            assert_eq!(a.visibility, b.visibility);
        }
    }

    #[test]
    fn dataset_is_deterministic_and_clamped() {
        let c = make_config(40.0, &[("num_ions", 3.0)]).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| khz_to_angular(400.0 + 3.0 * i as f64)).collect();
        let a = simulate_visibility_dataset(&c, 1e-3, 0.0, &grid, 0.3, 9).unwrap();
        let b = simulate_visibility_dataset(&c, 1e-3, 0.0, &grid, 0.3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| (0.0..=1.0).contains(&p.visibility)));
        assert!(simulate_visibility_dataset(&c, 1e-3, 0.0, &grid, -0.1, 9).is_err());
    }
}
