//! Plain-text `key = value` configuration.
//!
//! Keys are grouped by section (`resonator.`, `vapor.`, `loss.`, `input.`,
//! `solver.`, `drive.`, `memory.`). A file is overlaid on the built-in
//! nominal parameter set, so it only needs the keys it changes. `#` starts a
//! comment. Unknown keys are errors.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    validate, Cavity, LossModel, ModelError, ResonatorParams, Validated, VaporParams,
    KELVIN_OFFSET,
};
use crate::quasistatic::{Inputs, SolverOptions};
use crate::rubidium::{effective_alpha, scaled_alpha, FluxQuantities, RubidiumError};

/// The shipped nominal parameter file.
pub const TABLE1_CONF: &str = include_str!("../config/table1.conf");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: cannot parse `{value}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<ConfigError>,
    },
    #[error("`{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("vapor chain: {0}")]
    Vapor(#[from] RubidiumError),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

/// Where the device's linear loss comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSource {
    Configured,
    FromQ,
}

/// Where the device's two-photon coefficient comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaSource {
    Configured,
    /// Baseline rate scaled to the configured density and detuning.
    VaporChain,
}

impl fmt::Display for GammaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GammaSource::Configured => "configured",
            GammaSource::FromQ => "from_q",
        })
    }
}

impl FromStr for GammaSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "configured" => Ok(GammaSource::Configured),
            "from_q" => Ok(GammaSource::FromQ),
            _ => Err("expected `configured` or `from_q`".into()),
        }
    }
}

impl fmt::Display for AlphaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaSource::Configured => "configured",
            AlphaSource::VaporChain => "vapor_chain",
        })
    }
}

impl FromStr for AlphaSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "configured" => Ok(AlphaSource::Configured),
            "vapor_chain" => Ok(AlphaSource::VaporChain),
            _ => Err("expected `configured` or `vapor_chain`".into()),
        }
    }
}

/// Raw configuration in file units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub q_factor: f64,
    pub major_diameter_um: f64,
    pub minor_diameter_um: f64,
    pub effective_index: f64,
    pub wavelength1_nm: f64,
    pub wavelength2_nm: f64,
    pub coupling_r: f64,
    pub transmission_t: Option<f64>,
    pub mode_volume_cc: Option<f64>,
    pub mode_area_cm2: Option<f64>,
    pub phase1_rad: f64,
    pub phase2_rad: f64,

    pub density_per_cc: f64,
    pub baseline_density_per_cc: f64,
    pub detuning_nm: f64,
    pub baseline_detuning_nm: f64,
    pub temperature_c: f64,
    pub gamma1_per_s: f64,
    pub gamma2_per_s: f64,
    pub dipole12_nm: f64,
    pub dipole23_nm: f64,
    pub r20_per_s: f64,
    pub r10_per_s: f64,
    pub e31_j: f64,

    pub gamma_per_cm: f64,
    pub alpha_cm_per_gw: f64,
    pub gamma_source: GammaSource,
    pub alpha_source: AlphaSource,

    pub p1_w: f64,
    pub p2_w: f64,
    pub seed_i2r_w: f64,
    pub tolerance: f64,
    pub max_iterations: usize,

    pub target_w: f64,
    pub control_w: f64,
    pub target_on_ns: f64,
    pub control_on_ns: f64,
    pub control_off_ns: f64,
    pub duration_ns: f64,
    pub rise_ps: f64,

    pub hold_w: f64,
    pub write_ns: f64,
    pub settle_ns: f64,
    pub period_ns: f64,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            q_factor: 5e7,
            major_diameter_um: 50.0,
            minor_diameter_um: 0.35,
            effective_index: 1.30,
            wavelength1_nm: 780.0,
            wavelength2_nm: 776.0,
            coupling_r: 0.1,
            transmission_t: None,
            mode_volume_cc: Some(7.6e-11),
            mode_area_cm2: None,
            phase1_rad: 0.0,
            phase2_rad: 0.0,

            density_per_cc: 5.6e10,
            baseline_density_per_cc: 1e14,
            detuning_nm: 0.05,
            baseline_detuning_nm: 2.12,
            temperature_c: 43.0,
            gamma1_per_s: 1.9e7,
            gamma2_per_s: 3.14e8,
            dipole12_nm: 0.223,
            dipole23_nm: 0.0492,
            r20_per_s: 9.41e8,
            r10_per_s: 1.12e8,
            e31_j: 5.106e-19,

            gamma_per_cm: 2.13e-3,
            alpha_cm_per_gw: 5.27e5,
            gamma_source: GammaSource::Configured,
            alpha_source: AlphaSource::Configured,

            p1_w: 3.7e-4,
            p2_w: 3.7e-4,
            seed_i2r_w: 0.0,
            tolerance: 1e-10,
            max_iterations: 100_000,

            target_w: 25e-6,
            control_w: 3e-3,
            target_on_ns: 0.0,
            control_on_ns: 2.0,
            control_off_ns: 4.0,
            duration_ns: 7.0,
            rise_ps: 10.0,

            hold_w: 25e-6,
            write_ns: 2.0,
            settle_ns: 1.0,
            period_ns: 10.0,
        }
    }
}

/// Every key, in file order.
pub const KEYS: &[&str] = &[
    "resonator.Q",
    "resonator.major_diameter_um",
    "resonator.minor_diameter_um",
    "resonator.effective_index",
    "resonator.wavelength1_nm",
    "resonator.wavelength2_nm",
    "resonator.coupling_R",
    "resonator.transmission_T",
    "resonator.mode_volume_cc",
    "resonator.mode_area_cm2",
    "resonator.phase1_rad",
    "resonator.phase2_rad",
    "vapor.density_per_cc",
    "vapor.baseline_density_per_cc",
    "vapor.detuning_nm",
    "vapor.baseline_detuning_nm",
    "vapor.temperature_C",
    "vapor.gamma1_per_s",
    "vapor.gamma2_per_s",
    "vapor.dipole12_nm",
    "vapor.dipole23_nm",
    "vapor.R20_per_s",
    "vapor.R10_per_s",
    "vapor.E31_J",
    "loss.gamma_per_cm",
    "loss.alpha_cm_per_GW",
    "loss.gamma_source",
    "loss.alpha_source",
    "input.P1_W",
    "input.P2_W",
    "input.seed_I2R_W",
    "solver.tolerance",
    "solver.max_iterations",
    "drive.target_W",
    "drive.control_W",
    "drive.target_on_ns",
    "drive.control_on_ns",
    "drive.control_off_ns",
    "drive.duration_ns",
    "drive.rise_ps",
    "memory.hold_W",
    "memory.write_ns",
    "memory.settle_ns",
    "memory.period_ns",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|e| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_with<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

impl Config {
    fn float_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "resonator.Q" => &mut self.q_factor,
            "resonator.major_diameter_um" => &mut self.major_diameter_um,
            "resonator.minor_diameter_um" => &mut self.minor_diameter_um,
            "resonator.effective_index" => &mut self.effective_index,
            "resonator.wavelength1_nm" => &mut self.wavelength1_nm,
            "resonator.wavelength2_nm" => &mut self.wavelength2_nm,
            "resonator.coupling_R" => &mut self.coupling_r,
            "resonator.phase1_rad" => &mut self.phase1_rad,
            "resonator.phase2_rad" => &mut self.phase2_rad,
            "vapor.density_per_cc" => &mut self.density_per_cc,
            "vapor.baseline_density_per_cc" => &mut self.baseline_density_per_cc,
            "vapor.detuning_nm" => &mut self.detuning_nm,
            "vapor.baseline_detuning_nm" => &mut self.baseline_detuning_nm,
            "vapor.temperature_C" => &mut self.temperature_c,
            "vapor.gamma1_per_s" => &mut self.gamma1_per_s,
            "vapor.gamma2_per_s" => &mut self.gamma2_per_s,
            "vapor.dipole12_nm" => &mut self.dipole12_nm,
            "vapor.dipole23_nm" => &mut self.dipole23_nm,
            "vapor.R20_per_s" => &mut self.r20_per_s,
            "vapor.R10_per_s" => &mut self.r10_per_s,
            "vapor.E31_J" => &mut self.e31_j,
            "loss.gamma_per_cm" => &mut self.gamma_per_cm,
            "loss.alpha_cm_per_GW" => &mut self.alpha_cm_per_gw,
            "input.P1_W" => &mut self.p1_w,
            "input.P2_W" => &mut self.p2_w,
            "input.seed_I2R_W" => &mut self.seed_i2r_w,
            "solver.tolerance" => &mut self.tolerance,
            "drive.target_W" => &mut self.target_w,
            "drive.control_W" => &mut self.control_w,
            "drive.target_on_ns" => &mut self.target_on_ns,
            "drive.control_on_ns" => &mut self.control_on_ns,
            "drive.control_off_ns" => &mut self.control_off_ns,
            "drive.duration_ns" => &mut self.duration_ns,
            "drive.rise_ps" => &mut self.rise_ps,
            "memory.hold_W" => &mut self.hold_w,
            "memory.write_ns" => &mut self.write_ns,
            "memory.settle_ns" => &mut self.settle_ns,
            "memory.period_ns" => &mut self.period_ns,
            _ => return None,
        })
    }

    /// Sets one key. Setting the mode area clears the mode volume and vice versa.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "resonator.transmission_T" => {
                self.transmission_t = match value {
                    "auto" => None,
                    v => Some(parse_f64(key, v)?),
                };
            }
            "resonator.mode_volume_cc" => {
                self.mode_volume_cc = Some(parse_f64(key, value)?);
                self.mode_area_cm2 = None;
            }
            "resonator.mode_area_cm2" => {
                self.mode_area_cm2 = Some(parse_f64(key, value)?);
                self.mode_volume_cc = None;
            }
            "loss.gamma_source" => self.gamma_source = parse_with(key, value)?,
            "loss.alpha_source" => self.alpha_source = parse_with(key, value)?,
            "solver.max_iterations" => self.max_iterations = parse_with(key, value)?,
            _ => match self.float_mut(key) {
                Some(slot) => *slot = parse_f64(key, value)?,
                None => return Err(ConfigError::UnknownKey(key.into())),
            },
        }
        Ok(())
    }

    /// Current value of `key` as it would be written; `None` for an unset
    /// optional key.
    pub fn get(&self, key: &str) -> Result<Option<String>, ConfigError> {
        Ok(match key {
            "resonator.transmission_T" => Some(
                self.transmission_t
                    .map_or_else(|| "auto".to_string(), |t| t.to_string()),
            ),
            "resonator.mode_volume_cc" => self.mode_volume_cc.map(|v| v.to_string()),
            "resonator.mode_area_cm2" => self.mode_area_cm2.map(|v| v.to_string()),
            "loss.gamma_source" => Some(self.gamma_source.to_string()),
            "loss.alpha_source" => Some(self.alpha_source.to_string()),
            "solver.max_iterations" => Some(self.max_iterations.to_string()),
            _ => {
                let mut copy = self.clone();
                match copy.float_mut(key) {
                    Some(v) => Some(v.to_string()),
                    None => return Err(ConfigError::UnknownKey(key.into())),
                }
            }
        })
    }

    /// Overlays a config text on `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut geometry_key: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.into(),
                });
            };
            let key = key.trim();
            if key == "resonator.mode_area_cm2" || key == "resonator.mode_volume_cc" {
                if let Some(prev) = geometry_key.filter(|p| *p != key) {
                    return Err(ConfigError::AtLine {
                        line,
                        source: Box::new(ConfigError::Invalid {
                            key: "resonator.mode_area_cm2",
                            reason: format!("`{prev}` is already set; give the mode area or the mode volume, not both"),
                        }),
                    });
                }
                geometry_key = Some(if key == "resonator.mode_area_cm2" {
                    "resonator.mode_area_cm2"
                } else {
                    "resonator.mode_volume_cc"
                });
            }
            self.set(key, value).map_err(|e| ConfigError::AtLine {
                line,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// Defaults overlaid with `text`.
    pub fn from_text(text: &str) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies `KEY=VALUE` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: o.into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Full config text. Re-reading it reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let sec = key.split('.').next().unwrap_or("");
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = sec;
            }
            if let Ok(Some(v)) = self.get(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }

    pub fn resonator_params(&self) -> ResonatorParams {
        ResonatorParams {
            q_factor: self.q_factor,
            major_diameter_m: self.major_diameter_um * 1e-6,
            minor_diameter_m: self.minor_diameter_um * 1e-6,
            n_eff: self.effective_index,
            lambda1_m: self.wavelength1_nm * 1e-9,
            lambda2_m: self.wavelength2_nm * 1e-9,
            coupling: self.coupling_r,
            transmission: self.transmission_t,
            mode_volume_cm3: self.mode_volume_cc,
            mode_area_cm2: self.mode_area_cm2,
            phase1: self.phase1_rad,
            phase2: self.phase2_rad,
        }
    }

    pub fn vapor_params(&self) -> VaporParams {
        VaporParams {
            density_per_cc: self.density_per_cc,
            baseline_density_per_cc: self.baseline_density_per_cc,
            detuning_nm: self.detuning_nm,
            baseline_detuning_nm: self.baseline_detuning_nm,
            gamma1_per_s: self.gamma1_per_s,
            gamma2_per_s: self.gamma2_per_s,
            dipole12_m: self.dipole12_nm * 1e-9,
            dipole23_m: self.dipole23_nm * 1e-9,
            r20_per_s: self.r20_per_s,
            r10_per_s: self.r10_per_s,
            e31_j: self.e31_j,
            temperature_k: self.temperature_c + KELVIN_OFFSET,
        }
    }

    pub fn configured_loss(&self) -> LossModel {
        LossModel {
            gamma_per_cm: self.gamma_per_cm,
            alpha_cm_per_gw: self.alpha_cm_per_gw,
        }
    }
}

fn non_negative(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and >= 0, got {v}")))
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

/// A checked configuration with everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub config: Config,
    pub model: Validated,
    pub flux: FluxQuantities,
    /// Loss seen by the device after applying the configured sources.
    pub device_loss: LossModel,
}

impl Setup {
    pub fn new(config: Config) -> Result<Setup, ConfigError> {
        let model = validate(
            config.resonator_params(),
            config.vapor_params(),
            config.configured_loss(),
        )?;

        non_negative("input.P1_W", config.p1_w)?;
        non_negative("input.P2_W", config.p2_w)?;
        non_negative("input.seed_I2R_W", config.seed_i2r_w)?;
        positive("solver.tolerance", config.tolerance)?;
        if config.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be >= 1"));
        }
        non_negative("drive.target_W", config.target_w)?;
        non_negative("drive.control_W", config.control_w)?;
        non_negative("drive.target_on_ns", config.target_on_ns)?;
        non_negative("drive.control_on_ns", config.control_on_ns)?;
        non_negative("drive.rise_ps", config.rise_ps)?;
        if !(config.control_off_ns > config.control_on_ns) {
            return Err(invalid("drive.control_off_ns", "must come after drive.control_on_ns"));
        }
        if !(config.duration_ns > config.control_off_ns) {
            return Err(invalid("drive.duration_ns", "must extend past drive.control_off_ns"));
        }
        non_negative("memory.hold_W", config.hold_w)?;
        positive("memory.write_ns", config.write_ns)?;
        positive("memory.settle_ns", config.settle_ns)?;
        if !(config.period_ns > config.write_ns + config.settle_ns) {
            return Err(invalid(
                "memory.period_ns",
                "must exceed memory.write_ns + memory.settle_ns",
            ));
        }

        let res = &model.resonator;
        let center_m = 0.5 * (res.lambda1_m + res.lambda2_m);
        let flux = effective_alpha(
            model.derived.mode_volume_cm3,
            res.major_diameter_m,
            res.n_eff,
            model.vapor.r20_per_s,
            center_m,
        );
        let gamma = match config.gamma_source {
            GammaSource::Configured => config.gamma_per_cm,
            GammaSource::FromQ => model.derived.gamma_from_q_per_cm,
        };
        let alpha = match config.alpha_source {
            AlphaSource::Configured => config.alpha_cm_per_gw,
            AlphaSource::VaporChain => scaled_alpha(flux.alpha0_cm_per_gw, &model.vapor)?,
        };
        let device_loss = LossModel {
            gamma_per_cm: gamma,
            alpha_cm_per_gw: alpha,
        };
        Ok(Setup {
            config,
            model,
            flux,
            device_loss,
        })
    }

    pub fn from_text(text: &str) -> Result<Setup, ConfigError> {
        Setup::new(Config::from_text(text)?)
    }

    pub fn nominal() -> Setup {
        Setup::new(Config::default()).expect("built-in defaults are valid")
    }

    pub fn cavity(&self) -> Cavity {
        Cavity::new(&self.model, self.device_loss)
    }

    pub fn inputs(&self) -> Inputs {
        Inputs::new(self.config.p1_w, self.config.p2_w)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.config.tolerance,
            max_iterations: self.config.max_iterations,
        }
    }
}
