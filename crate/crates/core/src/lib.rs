//! Trapped-ion strings coupled to a standing-wave optical cavity.
//!
//! The crate solves the equilibrium and normal modes of an N-ion Coulomb
//! chain, turns a temperature into per-ion positional spreads, and predicts
//! the cavity-emission fringe visibility and normalised average coupling of
//! the string as the trap frequency changes. Synthetic scans and visibility
//! datasets can be generated and fitted back.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod reproduce;
pub mod scan;
pub mod search;

pub use chain::{
    equilibrium_positions, length_scale, normal_modes, solve_chain, thermal_spreads, verify_localisation_theorem,
    ChainShape, ChainSolution, LocalisationReport, ThermalState,
};
pub use config::{make_config, ConfigFile, RunSettings, TrapConfig};
pub use constants::PhysicalConstants;
pub use coupling::{
    average_coupling, coupling_strength, emission_profile, optimise_frequency, visibility, visibility_curve,
    CouplingModel, CouplingReport, FrequencyOptimum, Objective, VisibilityCurve, VisibilityModel, VisibilityPoint,
};
pub use error::{Error, Result};
pub use fit::{fit_scan, fit_visibility_curve, CurveFit, ScanFit};
pub use scan::{simulate_scan, simulate_visibility_dataset, ScanSettings, ScanTrace};
