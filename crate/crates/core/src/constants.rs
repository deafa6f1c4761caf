//! CODATA 2018 values for the handful of constants the model needs.
//!
//! Exact SI-defined constants are given exactly; the rest carry the full
//! published precision.

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// The same constants as a value, for callers that want to pass them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub boltzmann: f64,
    pub vacuum_permittivity: f64,
    pub elementary_charge: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        boltzmann: BOLTZMANN,
        vacuum_permittivity: VACUUM_PERMITTIVITY,
        elementary_charge: ELEMENTARY_CHARGE,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Converts an ordinary frequency in kHz to angular frequency in rad/s.
pub fn khz_to_angular(khz: f64) -> f64 {
    std::f64::consts::TAU * khz * 1e3
}

/// Converts an angular frequency in rad/s to ordinary kHz.
pub fn angular_to_khz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU * 1e-3
}
