//! Independent cross-checks for the main solvers. Nothing here calls into
//! the Newton solver, the eigensolver, or the closed-form visibility; each
//! routine reaches the same quantity by a different route.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chain::ChainSolution;
use crate::constants::BOLTZMANN;

/// Total dimensionless chain energy Σ u²/2 + Σ_{i<j} 1/|u_i − u_j|.
pub fn chain_energy(u: &[f64]) -> f64 {
    let mut e: f64 = u.iter().map(|x| 0.5 * x * x).sum();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            e += 1.0 / (u[i] - u[j]).abs();
        }
    }
    e
}

fn energy_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = u.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= d / d.abs().powi(3);
            }
        }
    }
    g
}

/// Minimises the chain energy by steepest descent from unit spacing, with
/// the step set by a Gershgorin bound on the Hessian. Returns dimensionless
/// positions.
pub fn gradient_descent_equilibrium(n: usize, tolerance: f64, max_iterations: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..n).map(|i| i as f64 - 0.5 * (n as f64 - 1.0)).collect();
    for _ in 0..max_iterations {
        let g = energy_gradient(&u);
        if g.iter().all(|x| x.abs() < tolerance) {
            break;
        }
        let bound = (0..n)
            .map(|i| {
                1.0 + (0..n)
                    .filter(|&j| j != i)
                    .map(|j| 4.0 / (u[i] - u[j]).abs().powi(3))
                    .sum::<f64>()
            })
            .fold(1.0f64, f64::max);
        let step = 1.0 / bound;
        for (x, gx) in u.iter_mut().zip(&g) {
            *x -= step * gx;
        }
    }
    u
}

/// Sample standard deviation of each ion's displacement when every mode
/// amplitude is drawn from a Gaussian with variance 2k_BT/(mω_j²) and
/// projected through the mode matrix.
pub fn monte_carlo_ion_spreads(solution: &ChainSolution, temperature: f64, draws: usize, seed: u64) -> Vec<f64> {
    let n = solution.num_ions();
    let sigmas: Vec<f64> = solution
        .mode_frequencies()
        .iter()
        .map(|w| (2.0 * BOLTZMANN * temperature / (solution.ion_mass() * w * w)).sqrt())
        .collect();
    let u = solution.mode_matrix();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut amplitudes = vec![0.0; n];
    for _ in 0..draws {
        for (a, s) in amplitudes.iter_mut().zip(&sigmas) {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *a = s * xi;
        }
        for i in 0..n {
            let z: f64 = u.row(i).iter().zip(&amplitudes).map(|(uij, a)| uij * a).sum();
            sum[i] += z;
            sum_sq[i] += z * z;
        }
    }
    let m = draws as f64;
    sum.iter()
        .zip(&sum_sq)
        .map(|(s, ss)| ((ss - s * s / m) / (m - 1.0)).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descent_reaches_two_ion_closed_form() {
        let u = gradient_descent_equilibrium(2, 1e-14, 100_000);
        assert!((u[1] - 0.25f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn energy_decreases_along_descent() {
        let start: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let end = gradient_descent_equilibrium(6, 1e-12, 100_000);
        assert!(chain_energy(&end) < chain_energy(&start));
    }
}
