//! Physical constants, device parameters and their validation.
//!
//! Unit conventions used throughout the crate:
//!
//! * intracavity amplitudes are complex with `|a|^2` equal to the circulating
//!   power in watts;
//! * the intensity entering the two-photon exponent is `|a|^2 / A` in GW/cm^2,
//!   with the mode area `A` in cm^2 and `alpha` in cm/GW;
//! * the linear field loss `gamma` is per cm and the circumference `L` is in cm,
//!   so `gamma * L` and `alpha * I * L` are dimensionless;
//! * everything else (times, wavelengths, dipole lengths) is SI.

use std::f64::consts::PI;

use thiserror::Error;

/// Watts per gigawatt.
pub const W_PER_GW: f64 = 1e9;
/// Centimetres per metre.
pub const CM_PER_M: f64 = 100.0;
/// Offset between kelvin and degrees Celsius.
pub const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Speed of light, m/s.
    pub c: f64,
    /// Planck constant, J s.
    pub h: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Elementary charge, C.
    pub q: f64,
}

/// Exact SI values (2019 redefinition).
pub const SI: PhysConstants = PhysConstants {
    c: 299_792_458.0,
    h: 6.626_070_15e-34,
    hbar: 6.626_070_15e-34 / (2.0 * PI),
    q: 1.602_176_634e-19,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and >= 0, got {v}")))
    }
}

/// Toroid geometry, coupling and wavelengths.
///
/// `transmission` may be left out, in which case it is derived from the
/// lossless-coupler relation `R^2 + T^2 = 1`. Exactly one of `mode_volume_cm3`
/// and `mode_area_cm2` must be given; the other follows from `A = V / (pi D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    pub q_factor: f64,
    pub major_diameter_m: f64,
    pub minor_diameter_m: f64,
    pub n_eff: f64,
    pub lambda1_m: f64,
    pub lambda2_m: f64,
    /// Amplitude coupling coefficient `R` (the coupler multiplies by `iR`).
    pub coupling: f64,
    /// Amplitude transmission coefficient `T`.
    pub transmission: Option<f64>,
    pub mode_volume_cm3: Option<f64>,
    pub mode_area_cm2: Option<f64>,
    /// Round-trip detuning phases `k_i L mod 2 pi`.
    pub phase1: f64,
    pub phase2: f64,
}

/// Rubidium vapor description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaporParams {
    pub density_per_cc: f64,
    pub baseline_density_per_cc: f64,
    /// Detuning of photon 1 from the 5S-5P transition, as a wavelength offset.
    pub detuning_nm: f64,
    pub baseline_detuning_nm: f64,
    /// Half-width of level 2, 1/s.
    pub gamma1_per_s: f64,
    /// Half-width of level 3, 1/s.
    pub gamma2_per_s: f64,
    pub dipole12_m: f64,
    pub dipole23_m: f64,
    /// Baseline cross two-photon rate for one photon per field.
    pub r20_per_s: f64,
    /// Baseline single-photon loss rate.
    pub r10_per_s: f64,
    /// Energy of level 3 above level 1, J.
    pub e31_j: f64,
    pub temperature_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    /// Linear field loss per cm of travel.
    pub gamma_per_cm: f64,
    /// Cross two-photon absorption coefficient, cm/GW.
    pub alpha_cm_per_gw: f64,
}

/// Quantities derived during validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub circumference_cm: f64,
    pub mode_area_cm2: f64,
    pub mode_volume_cm3: f64,
    pub transmission: f64,
    /// Round-trip transit time `pi D n_eff / c`, s.
    pub round_trip_s: f64,
    /// Field loss implied by the quality factor at `lambda1`, 1/cm.
    pub gamma_from_q_per_cm: f64,
}

/// A parameter set that passed [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validated {
    pub resonator: ResonatorParams,
    pub vapor: VaporParams,
    /// The loss model exactly as configured.
    pub loss: LossModel,
    pub derived: Derived,
}

pub fn validate(
    res: ResonatorParams,
    vapor: VaporParams,
    loss: LossModel,
) -> Result<Validated, ModelError> {
    positive("resonator.Q", res.q_factor)?;
    positive("resonator.major_diameter_um", res.major_diameter_m)?;
    positive("resonator.minor_diameter_um", res.minor_diameter_m)?;
    if res.minor_diameter_m >= res.major_diameter_m {
        return Err(invalid(
            "resonator.minor_diameter_um",
            "minor diameter must be smaller than the major diameter",
        ));
    }
    positive("resonator.effective_index", res.n_eff)?;
    positive("resonator.wavelength1_nm", res.lambda1_m)?;
    positive("resonator.wavelength2_nm", res.lambda2_m)?;

    let r = res.coupling;
    if !(r.is_finite() && (0.0..1.0).contains(&r)) {
        return Err(invalid(
            "resonator.coupling_R",
            format!("must lie in [0, 1), got {r}"),
        ));
    }
    let t = match res.transmission {
        Some(t) => {
            non_negative("resonator.transmission_T", t)?;
            let excess = r * r + t * t - 1.0;
            if excess.abs() > 1e-12 {
                return Err(invalid(
                    "resonator.transmission_T",
                    format!("R^2 + T^2 must equal 1 (off by {excess:e})"),
                ));
            }
            t
        }
        None => (1.0 - r * r).sqrt(),
    };
    if !res.phase1.is_finite() {
        return Err(invalid("resonator.phase1_rad", "must be finite"));
    }
    if !res.phase2.is_finite() {
        return Err(invalid("resonator.phase2_rad", "must be finite"));
    }

    let circumference_cm = PI * res.major_diameter_m * CM_PER_M;
    let (mode_area_cm2, mode_volume_cm3) = match (res.mode_area_cm2, res.mode_volume_cm3) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "resonator.mode_area_cm2",
                "give either the mode area or the mode volume, not both",
            ))
        }
        (None, None) => {
            return Err(invalid(
                "resonator.mode_volume_cc",
                "one of mode volume or mode area is required",
            ))
        }
        (Some(a), None) => {
            positive("resonator.mode_area_cm2", a)?;
            (a, a * circumference_cm)
        }
        (None, Some(v)) => {
            positive("resonator.mode_volume_cc", v)?;
            (v / circumference_cm, v)
        }
    };

    positive("vapor.density_per_cc", vapor.density_per_cc)?;
    positive("vapor.baseline_density_per_cc", vapor.baseline_density_per_cc)?;
    positive("vapor.detuning_nm", vapor.detuning_nm)?;
    positive("vapor.baseline_detuning_nm", vapor.baseline_detuning_nm)?;
    positive("vapor.gamma1_per_s", vapor.gamma1_per_s)?;
    positive("vapor.gamma2_per_s", vapor.gamma2_per_s)?;
    positive("vapor.dipole12_nm", vapor.dipole12_m)?;
    positive("vapor.dipole23_nm", vapor.dipole23_m)?;
    positive("vapor.R20_per_s", vapor.r20_per_s)?;
    positive("vapor.R10_per_s", vapor.r10_per_s)?;
    positive("vapor.E31_J", vapor.e31_j)?;
    positive("vapor.temperature_C", vapor.temperature_k)?;

    non_negative("loss.gamma_per_cm", loss.gamma_per_cm)?;
    non_negative("loss.alpha_cm_per_GW", loss.alpha_cm_per_gw)?;

    let round_trip_s = res.major_diameter_m * PI * res.n_eff / SI.c;
    let gamma_from_q_per_cm =
        2.0 * PI * res.n_eff / (res.lambda1_m * CM_PER_M * res.q_factor);

    Ok(Validated {
        resonator: res,
        vapor,
        loss,
        derived: Derived {
            circumference_cm,
            mode_area_cm2,
            mode_volume_cm3,
            transmission: t,
            round_trip_s,
            gamma_from_q_per_cm,
        },
    })
}

/// Which of the two input frequencies a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    One,
    Two,
}

impl Field {
    pub fn other(self) -> Field {
        match self {
            Field::One => Field::Two,
            Field::Two => Field::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Field::One => 0,
            Field::Two => 1,
        }
    }
}

/// Everything the field equations need, in the units listed in the module docs.
///
/// Both couplers are identical: coupling by `iR`, transmission by real `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub coupling: f64,
    pub transmission: f64,
    pub circumference_cm: f64,
    pub mode_area_cm2: f64,
    pub round_trip_s: f64,
    pub phases: [f64; 2],
    pub loss: LossModel,
}

impl Cavity {
    pub fn new(v: &Validated, loss: LossModel) -> Cavity {
        Cavity {
            coupling: v.resonator.coupling,
            transmission: v.derived.transmission,
            circumference_cm: v.derived.circumference_cm,
            mode_area_cm2: v.derived.mode_area_cm2,
            round_trip_s: v.derived.round_trip_s,
            phases: [v.resonator.phase1, v.resonator.phase2],
            loss,
        }
    }

    /// Replaces `R` and resets `T = sqrt(1 - R^2)`.
    pub fn with_coupling(mut self, r: f64) -> Cavity {
        self.coupling = r;
        self.transmission = (1.0 - r * r).sqrt();
        self
    }

    pub fn with_loss(mut self, gamma_per_cm: f64, alpha_cm_per_gw: f64) -> Cavity {
        self.loss = LossModel {
            gamma_per_cm,
            alpha_cm_per_gw,
        };
        self
    }

    pub fn with_phases(mut self, phase1: f64, phase2: f64) -> Cavity {
        self.phases = [phase1, phase2];
        self
    }

    pub fn phase(&self, field: Field) -> f64 {
        self.phases[field.index()]
    }

    /// Intensity in GW/cm^2 of a field circulating with `power_w`.
    pub fn intensity_gw_per_cm2(&self, power_w: f64) -> f64 {
        power_w / W_PER_GW / self.mode_area_cm2
    }

    /// Round-trip field attenuation exponent `(gamma + alpha I_other) L`.
    pub fn loop_exponent(&self, other_power_w: f64) -> f64 {
        (self.loss.gamma_per_cm
            + self.loss.alpha_cm_per_gw * self.intensity_gw_per_cm2(other_power_w))
            * self.circumference_cm
    }
}
