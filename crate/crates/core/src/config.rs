//! Trap and cavity configuration.
//!
//! Everything is SI internally: masses in kg, lengths in m, frequencies and
//! coupling rates as angular frequencies in rad/s, temperatures in K. The
//! configuration file uses laboratory units (amu, nm, kHz, MHz, μK) and is
//! converted at the boundary.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{angular_to_khz, khz_to_angular, ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};

/// ⁴⁰Ca⁺ mass in amu.
pub const DEFAULT_MASS_AMU: f64 = 40.0;
/// P₁/₂–D₃/₂ cavity transition wavelength, m.
pub const DEFAULT_WAVELENGTH: f64 = 866e-9;
/// Vacuum coupling g₀ = 2π × 0.9 MHz.
pub const DEFAULT_G0: f64 = TAU * 0.9e6;
/// Doppler temperature of the cooling transition, K.
pub const DEFAULT_DOPPLER_TEMPERATURE: f64 = 535e-6;

/// Apparatus parameters that are carried along for bookkeeping only.
/// No computation reads them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CavityMetadata {
    /// Total decay rate Γ of the excited state, rad/s.
    pub decay_rate: Option<f64>,
    /// Pump detuning Δ, rad/s.
    pub pump_detuning: Option<f64>,
    pub finesse: Option<f64>,
    /// Cavity linewidth, rad/s.
    pub linewidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    ion_mass: f64,
    charge: f64,
    wavelength: f64,
    g0: f64,
    num_ions: usize,
    doppler_temperature: f64,
    metadata: CavityMetadata,
}

/// Keys accepted by [`make_config`].
pub const OVERRIDE_KEYS: &[&str] = &[
    "wavelength",
    "g0",
    "num_ions",
    "doppler_temperature",
    "charge",
    "decay_rate",
    "pump_detuning",
    "cavity_finesse",
    "cavity_linewidth",
];

/// Builds a configuration for an ion of `mass_amu` with ⁴⁰Ca⁺ defaults for
/// every field not named in `overrides`. Override values are SI.
pub fn make_config(mass_amu: f64, overrides: &[(&str, f64)]) -> Result<TrapConfig> {
    let mut cfg = TrapConfig {
        ion_mass: mass_amu * ATOMIC_MASS_UNIT,
        charge: ELEMENTARY_CHARGE,
        wavelength: DEFAULT_WAVELENGTH,
        g0: DEFAULT_G0,
        num_ions: 1,
        doppler_temperature: DEFAULT_DOPPLER_TEMPERATURE,
        metadata: CavityMetadata::default(),
    };
    for &(key, value) in overrides {
        match key {
            "wavelength" => cfg.wavelength = value,
            "g0" => cfg.g0 = value,
            "num_ions" => cfg.num_ions = count_from_f64(value)?,
            "doppler_temperature" => cfg.doppler_temperature = value,
            "charge" => cfg.charge = value,
            "decay_rate" => cfg.metadata.decay_rate = Some(value),
            "pump_detuning" => cfg.metadata.pump_detuning = Some(value),
            "cavity_finesse" => cfg.metadata.finesse = Some(value),
            "cavity_linewidth" => cfg.metadata.linewidth = Some(value),
            other => return Err(Error::UnknownKey(other.to_string())),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn count_from_f64(value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::Config(format!(
            "num_ions must be a positive integer, got {value}"
        )))
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl Default for TrapConfig {
    fn default() -> Self {
        make_config(DEFAULT_MASS_AMU, &[]).expect("defaults are valid")
    }
}

impl TrapConfig {
    fn validate(&self) -> Result<()> {
        require_positive("ion mass", self.ion_mass)?;
        require_positive("charge", self.charge)?;
        require_positive("wavelength", self.wavelength)?;
        require_positive("g0", self.g0)?;
        require_positive("doppler temperature", self.doppler_temperature)?;
        if self.num_ions == 0 {
            return Err(Error::Config("num_ions must be at least 1".into()));
        }
        Ok(())
    }

    /// Same configuration with a different number of ions.
    pub fn with_num_ions(&self, num_ions: usize) -> Result<TrapConfig> {
        let cfg = TrapConfig {
            num_ions,
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ion_mass(&self) -> f64 {
        self.ion_mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Cavity wavenumber k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn num_ions(&self) -> usize {
        self.num_ions
    }

    pub fn doppler_temperature(&self) -> f64 {
        self.doppler_temperature
    }

    pub fn metadata(&self) -> &CavityMetadata {
        &self.metadata
    }

    /// Half the cavity wavelength, the period of the standing-wave intensity.
    pub fn half_wavelength(&self) -> f64 {
        0.5 * self.wavelength
    }
}

/// On-disk configuration in laboratory units (TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0_2pi_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_ions: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_uk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doppler_temperature_uk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secular_freq_khz_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secular_freq_khz_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate_2pi_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_detuning_2pi_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity_finesse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity_linewidth_khz: Option<f64>,
}

/// A parsed configuration file: the trap itself plus the run defaults it
/// may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub config: TrapConfig,
    /// Ion temperature, K.
    pub temperature: Option<f64>,
    /// COM secular-frequency range, rad/s.
    pub freq_range: Option<(f64, f64)>,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // serde reports rejected keys as "unknown field `x`, expected ..."
            match msg.strip_prefix("unknown field `").and_then(|s| s.split('`').next()) {
                Some(key) => Error::UnknownKey(key.to_string()),
                None => Error::Config(msg),
            }
        })
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config file serialises")
    }

    pub fn from_config(config: &TrapConfig) -> ConfigFile {
        let mhz = |w: f64| w / TAU * 1e-6;
        ConfigFile {
            mass_amu: Some(config.ion_mass / ATOMIC_MASS_UNIT),
            wavelength_nm: Some(config.wavelength * 1e9),
            g0_2pi_mhz: Some(mhz(config.g0)),
            num_ions: Some(config.num_ions as u32),
            doppler_temperature_uk: Some(config.doppler_temperature * 1e6),
            charge_e: Some(config.charge / ELEMENTARY_CHARGE),
            decay_rate_2pi_mhz: config.metadata.decay_rate.map(mhz),
            pump_detuning_2pi_mhz: config.metadata.pump_detuning.map(mhz),
            cavity_finesse: config.metadata.finesse,
            cavity_linewidth_khz: config.metadata.linewidth.map(angular_to_khz),
            ..ConfigFile::default()
        }
    }

    pub fn into_settings(self) -> Result<RunSettings> {
        let rad = |mhz: f64| TAU * mhz * 1e6;
        let mut overrides: Vec<(&str, f64)> = Vec::new();
        if let Some(v) = self.wavelength_nm {
            overrides.push(("wavelength", v * 1e-9));
        }
        if let Some(v) = self.g0_2pi_mhz {
            overrides.push(("g0", rad(v)));
        }
        if let Some(v) = self.num_ions {
            overrides.push(("num_ions", v as f64));
        }
        if let Some(v) = self.doppler_temperature_uk {
            overrides.push(("doppler_temperature", v * 1e-6));
        }
        if let Some(v) = self.charge_e {
            overrides.push(("charge", v * ELEMENTARY_CHARGE));
        }
        if let Some(v) = self.decay_rate_2pi_mhz {
            overrides.push(("decay_rate", rad(v)));
        }
        if let Some(v) = self.pump_detuning_2pi_mhz {
            overrides.push(("pump_detuning", rad(v)));
        }
        if let Some(v) = self.cavity_finesse {
            overrides.push(("cavity_finesse", v));
        }
        if let Some(v) = self.cavity_linewidth_khz {
            overrides.push(("cavity_linewidth", khz_to_angular(v)));
        }
        let config = make_config(self.mass_amu.unwrap_or(DEFAULT_MASS_AMU), &overrides)?;

        let temperature = self.temperature_uk.map(|t| t * 1e-6);
        if let Some(t) = temperature {
            require_positive("temperature", t)?;
        }
        let freq_range = match (self.secular_freq_khz_min, self.secular_freq_khz_max) {
            (None, None) => None,
            (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => Some((khz_to_angular(lo), khz_to_angular(hi))),
            (lo, hi) => {
                return Err(Error::Config(format!(
                    "secular frequency range needs 0 < min < max, got {lo:?}..{hi:?}"
                )))
            }
        };
        Ok(RunSettings {
            config,
            temperature,
            freq_range,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_calcium() {
        let cfg = make_config(40.0, &[]).unwrap();
        assert_eq!(cfg.ion_mass(), 40.0 * 1.660_539_066_60e-27);
        assert_eq!(cfg.wavelength(), 866e-9);
        assert_eq!(cfg.num_ions(), 1);
        assert_eq!(cfg.doppler_temperature(), 535e-6);
        assert_eq!(cfg.g0(), TAU * 0.9e6);
    }

    #[test]
    fn default_valued_override_is_identity() {
        let a = make_config(40.0, &[]).unwrap();
        let b = make_config(40.0, &[("wavelength", 866e-9)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_mass_is_rejected() {
        assert!(matches!(make_config(0.0, &[]), Err(Error::Config(_))));
        assert!(make_config(-4.0, &[]).is_err());
        assert!(make_config(f64::NAN, &[]).is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        match make_config(40.0, &[("wavelenght", 1.0)]) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "wavelenght"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_ion_count_is_rejected() {
        assert!(make_config(40.0, &[("num_ions", 2.5)]).is_err());
        assert!(make_config(40.0, &[("num_ions", 0.0)]).is_err());
        assert_eq!(make_config(40.0, &[("num_ions", 5.0)]).unwrap().num_ions(), 5);
    }

    #[test]
    fn wavenumber_times_wavelength_is_tau() {
        for lambda in [866e-9, 397e-9, 1.0e-6, 3.3e-7] {
            let cfg = make_config(40.0, &[("wavelength", lambda)]).unwrap();
            assert!((cfg.wavenumber() * cfg.wavelength() - TAU).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn file_rejects_unknown_keys() {
        let err = ConfigFile::from_toml_str("mass_amu = 40\nbogus = 1\n").unwrap_err();
        match err {
            Error::UnknownKey(k) => assert_eq!(k, "bogus"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_parses_run_settings() {
        let text = r#"
mass_amu = 40
wavelength_nm = 866
g0_2pi_mhz = 0.9
num_ions = 3
temperature_uk = 834.6
doppler_temperature_uk = 535
secular_freq_khz_min = 400
secular_freq_khz_max = 500
"#;
        let settings = ConfigFile::from_toml_str(text).unwrap().into_settings().unwrap();
        assert_eq!(settings.config.num_ions(), 3);
        assert!((settings.temperature.unwrap() - 834.6e-6).abs() < 1e-15);
        let (lo, hi) = settings.freq_range.unwrap();
        assert!((lo - khz_to_angular(400.0)).abs() < 1e-6);
        assert!((hi - khz_to_angular(500.0)).abs() < 1e-6);
    }

    #[test]
    fn inverted_frequency_range_is_rejected() {
        let text = "secular_freq_khz_min = 500\nsecular_freq_khz_max = 400\n";
        assert!(ConfigFile::from_toml_str(text).unwrap().into_settings().is_err());
    }

    #[test]
    fn metadata_round_trips() {
        let cfg = make_config(
            40.0,
            &[
                ("decay_rate", TAU * 22.3e6),
                ("cavity_finesse", 6e4),
                ("cavity_linewidth", TAU * 470e3),
            ],
        )
        .unwrap();
        let text = ConfigFile::from_config(&cfg).to_toml_string();
        let back = ConfigFile::from_toml_str(&text)
            .unwrap()
            .into_settings()
            .unwrap()
            .config;
        assert_eq!(back.metadata().finesse, Some(6e4));
        let rel = (back.metadata().decay_rate.unwrap() / (TAU * 22.3e6) - 1.0).abs();
        assert!(rel < 1e-12);
    }
}
