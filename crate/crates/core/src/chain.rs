//! Equilibrium and normal modes of a linear Coulomb chain in a harmonic
//! axial well.
//!
//! Positions are solved in dimensionless form, u = z/ℓ with
//! ℓ = (q²/(4πε₀ m ω²))^(1/3), where the force balance on ion i reads
//!
//! ```text
//! u_i − Σ_{j<i} 1/(u_i − u_j)² + Σ_{j>i} 1/(u_i − u_j)² = 0
//! ```
//!
//! The dimensionless solution (positions, mode eigenvalues μ_j and the mode
//! matrix U) depends only on N. Changing the trap frequency only rescales ℓ
//! and the mode frequencies ω_j = ω·√μ_j, which [`ChainSolution::at_frequency`]
//! exploits.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::TrapConfig;
use crate::constants::{BOLTZMANN, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, jacobi_eigen, Matrix};

/// Newton iteration cap.
pub const NEWTON_MAX_ITERATIONS: usize = 200;
/// Required ∞-norm of the dimensionless force residual.
pub const FORCE_TOLERANCE: f64 = 1e-12;
/// Off-diagonal tolerance for the Jacobi eigensolver.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Natural length unit ℓ of the chain, in metres.
pub fn length_scale(config: &TrapConfig, com_frequency: f64) -> Result<f64> {
    if !(com_frequency.is_finite() && com_frequency > 0.0) {
        return Err(Error::Domain(format!(
            "COM frequency must be positive, got {com_frequency}"
        )));
    }
    let q = config.charge();
    let m = config.ion_mass();
    Ok((q * q / (4.0 * PI * VACUUM_PERMITTIVITY * m * com_frequency * com_frequency)).cbrt())
}

/// Dimensionless force residual F(u).
pub fn force_residual(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    f -= d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

/// Dimensionless Hessian of the chain potential, which is also the Jacobian
/// of [`force_residual`].
pub fn hessian(u: &[f64]) -> Matrix {
    let n = u.len();
    let mut a = Matrix::zeros(n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn is_ordered(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

/// Newton starting point: equally spaced ions spanning ±0.48·N^0.56.
fn initial_guess(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let half = 0.48 * (n as f64).powf(0.56);
    (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}

/// Solves the dimensionless force balance for `n` ions.
pub fn solve_dimensionless_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("a chain needs at least one ion".into()));
    }
    let mut u = initial_guess(n);
    let mut residual = force_residual(&u);
    let mut norm = inf_norm(&residual);

    for _ in 0..NEWTON_MAX_ITERATIONS {
        if norm < 1e-3 * FORCE_TOLERANCE {
            break;
        }
        let step = cholesky_solve(&hessian(&u), &residual)?;
        let mut scale = 1.0;
        let mut accepted = false;
        while scale > 1e-12 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x - scale * s).collect();
            if is_ordered(&trial) {
                let r = force_residual(&trial);
                let rn = inf_norm(&r);
                if rn < norm {
                    u = trial;
                    residual = r;
                    norm = rn;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            // Rounding floor: no step can reduce the residual any further.
            break;
        }
    }

    if norm < FORCE_TOLERANCE {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            what: "equilibrium Newton solver",
            iterations: NEWTON_MAX_ITERATIONS,
            residual: norm,
        })
    }
}

/// Frequency-independent structure of an N-ion chain.
#[derive(Debug, Clone)]
pub struct ChainShape {
    positions: Vec<f64>,
    modes: Option<(Vec<f64>, Matrix)>,
}

impl ChainShape {
    pub fn solve(n: usize) -> Result<ChainShape> {
        let positions = solve_dimensionless_positions(n)?;
        let mut shape = ChainShape { positions, modes: None };
        shape.compute_modes()?;
        Ok(shape)
    }

    fn compute_modes(&mut self) -> Result<()> {
        let eig = jacobi_eigen(&hessian(&self.positions), JACOBI_TOLERANCE)?;
        self.modes = Some((eig.values, eig.vectors));
        Ok(())
    }

    pub fn num_ions(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
}

/// Equilibrium positions and normal modes of an N-ion chain at one COM
/// secular frequency.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    com_frequency: f64,
    length_scale: f64,
    ion_mass: f64,
    shape: Arc<ChainShape>,
}

/// Solves the equilibrium of `config.num_ions()` ions at `com_frequency`.
/// The returned solution has no normal modes yet; see [`normal_modes`].
pub fn equilibrium_positions(config: &TrapConfig, com_frequency: f64) -> Result<ChainSolution> {
    let length_scale = length_scale(config, com_frequency)?;
    let positions = solve_dimensionless_positions(config.num_ions())?;
    Ok(ChainSolution {
        com_frequency,
        length_scale,
        ion_mass: config.ion_mass(),
        shape: Arc::new(ChainShape { positions, modes: None }),
    })
}

/// Diagonalises the chain Hessian at the solved equilibrium.
pub fn normal_modes(solution: ChainSolution) -> Result<ChainSolution> {
    let residual = inf_norm(&force_residual(solution.dimensionless_positions()));
    if !(residual < FORCE_TOLERANCE) {
        return Err(Error::Domain(format!(
            "positions are not an equilibrium (residual {residual:.3e})"
        )));
    }
    let mut shape = Arc::unwrap_or_clone(solution.shape);
    shape.compute_modes()?;
    Ok(ChainSolution {
        shape: Arc::new(shape),
        ..solution
    })
}

/// Equilibrium plus normal modes in one call.
pub fn solve_chain(config: &TrapConfig, com_frequency: f64) -> Result<ChainSolution> {
    normal_modes(equilibrium_positions(config, com_frequency)?)
}

impl ChainSolution {
    /// Builds a solution from a precomputed shape.
    pub fn from_shape(config: &TrapConfig, shape: Arc<ChainShape>, com_frequency: f64) -> Result<ChainSolution> {
        if shape.modes.is_none() {
            return Err(Error::Domain("chain shape has no normal modes".into()));
        }
        Ok(ChainSolution {
            com_frequency,
            length_scale: length_scale(config, com_frequency)?,
            ion_mass: config.ion_mass(),
            shape,
        })
    }

    /// The same chain at another COM frequency. Only the length scale and
    /// mode frequencies change.
    pub fn at_frequency(&self, com_frequency: f64) -> Result<ChainSolution> {
        if !(com_frequency.is_finite() && com_frequency > 0.0) {
            return Err(Error::Domain(format!(
                "COM frequency must be positive, got {com_frequency}"
            )));
        }
        let ratio = self.com_frequency / com_frequency;
        Ok(ChainSolution {
            com_frequency,
            length_scale: self.length_scale * ratio.powf(2.0 / 3.0),
            ion_mass: self.ion_mass,
            shape: Arc::clone(&self.shape),
        })
    }

    pub fn shape(&self) -> &Arc<ChainShape> {
        &self.shape
    }

    pub fn num_ions(&self) -> usize {
        self.shape.num_ions()
    }

    pub fn com_frequency(&self) -> f64 {
        self.com_frequency
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn ion_mass(&self) -> f64 {
        self.ion_mass
    }

    pub fn dimensionless_positions(&self) -> &[f64] {
        &self.shape.positions
    }

    /// Equilibrium positions z_i⁰ in metres, ascending.
    pub fn positions(&self) -> Vec<f64> {
        self.shape.positions.iter().map(|u| u * self.length_scale).collect()
    }

    /// Distances between neighbouring ions, m.
    pub fn spacings(&self) -> Vec<f64> {
        self.positions().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_modes(&self) -> bool {
        self.shape.modes.is_some()
    }

    fn modes(&self) -> &(Vec<f64>, Matrix) {
        self.shape
            .modes
            .as_ref()
            .expect("normal modes have not been computed for this chain")
    }

    /// Dimensionless eigenvalues μ_j, ascending; μ_0 = 1 is the COM mode.
    pub fn mode_eigenvalues(&self) -> &[f64] {
        &self.modes().0
    }

    /// Mode angular frequencies ω_j = ω_COM·√μ_j.
    pub fn mode_frequencies(&self) -> Vec<f64> {
        self.mode_eigenvalues()
            .iter()
            .map(|mu| self.com_frequency * mu.sqrt())
            .collect()
    }

    /// Orthogonal mode matrix U: row i is ion i, column j is mode j.
    pub fn mode_matrix(&self) -> &Matrix {
        &self.modes().1
    }
}

/// Thermal spreads of the mode amplitudes and of each ion.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub temperature: f64,
    /// ΔZ_j, m, in mode order.
    pub mode_spreads: Vec<f64>,
    /// Δz_i, m, in ion order.
    pub ion_spreads: Vec<f64>,
}

/// Positional spread of a harmonic mode at temperature `temperature`:
/// ΔZ² = 2k_BT/(mω²).
///
/// The factor 2 is deliberate. With it, a 39 % single-ion visibility at
/// 620 kHz corresponds to 133 nm and ≈1.2 T_D, which is the set of numbers
/// this model is calibrated against; the bare equipartition variance would
/// not reproduce them.
pub fn mode_spread(ion_mass: f64, mode_frequency: f64, temperature: f64) -> f64 {
    (2.0 * BOLTZMANN * temperature / (ion_mass * mode_frequency * mode_frequency)).sqrt()
}

/// Inverse of [`mode_spread`]: temperature giving spread `spread`.
pub fn temperature_for_spread(ion_mass: f64, mode_frequency: f64, spread: f64) -> f64 {
    spread * spread * ion_mass * mode_frequency * mode_frequency / (2.0 * BOLTZMANN)
}

/// Mode and ion spreads with every mode at the same temperature.
pub fn thermal_spreads(solution: &ChainSolution, temperature: f64) -> Result<ThermalState> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let mode_spreads: Vec<f64> = solution
        .mode_frequencies()
        .iter()
        .map(|&w| mode_spread(solution.ion_mass(), w, temperature))
        .collect();
    let u = solution.mode_matrix();
    let ion_spreads = (0..solution.num_ions())
        .map(|i| {
            u.row(i)
                .iter()
                .zip(&mode_spreads)
                .map(|(uij, dz)| (uij * dz).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(ThermalState {
        temperature,
        mode_spreads,
        ion_spreads,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalisationReport {
    pub holds: bool,
    /// ΔZ_COM, m.
    pub com_spread: f64,
    /// ΔZ_COM − Δz_i for each ion, m.
    pub margins: Vec<f64>,
}

/// Checks that every ion in the chain is better localised than the COM mode
/// amplitude, Δz_i < ΔZ_COM.
pub fn verify_localisation_theorem(solution: &ChainSolution, temperature: f64) -> Result<LocalisationReport> {
    if solution.num_ions() < 2 {
        return Err(Error::Domain("localisation comparison needs at least two ions".into()));
    }
    let thermal = thermal_spreads(solution, temperature)?;
    let com_spread = thermal.mode_spreads[0];
    let margins: Vec<f64> = thermal.ion_spreads.iter().map(|dz| com_spread - dz).collect();
    Ok(LocalisationReport {
        holds: margins.iter().all(|&m| m > 0.0),
        com_spread,
        margins,
    })
}

/// Smallest radial-to-axial frequency ratio at which the string is still
/// linear. The transverse mode of highest axial order softens first; it
/// goes unstable once ω_r² < ω_z²·(μ_max − 1)/2. Advisory only: the trap's
/// radial anisotropy and micromotion are not modelled.
pub fn critical_anisotropy(solution: &ChainSolution) -> f64 {
    let mu_max = solution.mode_eigenvalues().last().copied().unwrap_or(1.0);
    (0.5 * (mu_max - 1.0)).sqrt()
}

/// True when a radial secular frequency `radial_frequency` is too weak to
/// keep the chain linear at its COM frequency.
pub fn kink_warning(solution: &ChainSolution, radial_frequency: f64) -> bool {
    solution.num_ions() > 1 && radial_frequency / solution.com_frequency() <= critical_anisotropy(solution)
}
