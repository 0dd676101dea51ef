//! Absorption model for rubidium vapor on the 5S - 5P - 5D ladder.
//!
//! Two routes are provided. The single-atom point formulas take a field
//! amplitude at the atom and a detuning energy. The baseline-anchored scaling
//! laws start from the integrated rates `R20` and `R10` (one photon per field in
//! the toroid, baseline density and detuning). The device model only uses the
//! second route.
//!
//! Dipole matrix elements are orientation-averaged, `<|q d . E|^2> = (q d E)^2 / 3`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{VaporParams, CM_PER_M, SI, W_PER_GW};

/// Ideal-gas conversion from torr and kelvin to atoms per cm^3.
pub const IDEAL_GAS_FACTOR: f64 = 9.63e18;
/// Lower end of the temperature range covered by the vapor-pressure fit, K.
pub const T_MIN_K: f64 = 250.0;
/// Upper end of that range, K.
pub const T_MAX_K: f64 = 500.0;

// log10 P[torr] = A - B/T + C T - D log10 T
const VP_A: f64 = 15.88253;
const VP_B: f64 = 4529.635;
const VP_C: f64 = 0.00058663;
const VP_D: f64 = 2.99138;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RubidiumError {
    #[error("zero detuning puts the intermediate level on resonance")]
    VirtualLevelResonance,
    #[error("{what} = {value:e} is outside the supported range [{min:e}, {max:e}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// Cross two-photon absorption.
    pub r2: f64,
    /// Single-photon absorption of field 1.
    pub r1: f64,
    /// Self two-photon absorption of field 1.
    pub rs: f64,
}

/// Conversion of the baseline two-photon rate to an effective coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxQuantities {
    pub mode_area_cm2: f64,
    pub dt_roundtrip_s: f64,
    pub photon_energy_j: f64,
    /// Power of one photon circulating in the toroid, W.
    pub p_f_w: f64,
    /// Baseline two-photon loss per cm of travel.
    pub l0_per_cm: f64,
    pub alpha0_cm_per_gw: f64,
}

/// Detuning energy for a wavelength offset around `center_nm`.
pub fn detuning_energy_j(delta_nm: f64, center_nm: f64) -> f64 {
    SI.h * SI.c * (delta_nm * 1e-9) / (center_nm * 1e-9).powi(2)
}

fn matrix_element_sq(dipole_m: f64, field_v_per_m: f64) -> f64 {
    (SI.q * dipole_m * field_v_per_m).powi(2) / 3.0
}

fn two_photon_numerator(d12_m: f64, d23_m: f64, field1: f64, field2: f64) -> f64 {
    8.0 * matrix_element_sq(d12_m, field1) * matrix_element_sq(d23_m, field2)
}

/// Cross two-photon rate of one atom. `field1` drives 1 -> 2, `field2` drives
/// 2 -> 3; `delta_j` is the energy detuning of photon 1 from level 2.
pub fn single_atom_tpa_rate(
    d12_m: f64,
    d23_m: f64,
    field1_v_per_m: f64,
    field2_v_per_m: f64,
    delta_j: f64,
    gamma2_per_s: f64,
) -> Result<f64, RubidiumError> {
    if delta_j == 0.0 {
        return Err(RubidiumError::VirtualLevelResonance);
    }
    if !(gamma2_per_s > 0.0) {
        return Err(RubidiumError::InvalidInput("gamma2 must be > 0".into()));
    }
    Ok(two_photon_numerator(d12_m, d23_m, field1_v_per_m, field2_v_per_m)
        / (SI.hbar.powi(2) * delta_j.powi(2))
        / gamma2_per_s)
}

/// Two-photon rate of one atom for two photons of the same frequency, whose
/// summed energy misses level 3 by `mismatch_j`.
pub fn single_atom_self_tpa_rate(
    d12_m: f64,
    d23_m: f64,
    field_v_per_m: f64,
    delta_j: f64,
    mismatch_j: f64,
    gamma2_per_s: f64,
) -> Result<f64, RubidiumError> {
    if delta_j == 0.0 {
        return Err(RubidiumError::VirtualLevelResonance);
    }
    if !(gamma2_per_s > 0.0) {
        return Err(RubidiumError::InvalidInput("gamma2 must be > 0".into()));
    }
    let width = SI.hbar * gamma2_per_s;
    Ok(
        two_photon_numerator(d12_m, d23_m, field_v_per_m, field_v_per_m) / delta_j.powi(2)
            * gamma2_per_s
            / (mismatch_j.powi(2) + width.powi(2)),
    )
}

/// Single-photon (Lorentzian) absorption rate of one atom.
pub fn single_atom_1pa_rate(
    d12_m: f64,
    field_v_per_m: f64,
    delta_j: f64,
    gamma1_per_s: f64,
) -> Result<f64, RubidiumError> {
    if !(gamma1_per_s > 0.0) {
        return Err(RubidiumError::InvalidInput("gamma1 must be > 0".into()));
    }
    Ok(2.0 * matrix_element_sq(d12_m, field_v_per_m) * gamma1_per_s
        / (delta_j.powi(2) + (SI.hbar * gamma1_per_s).powi(2)))
}

/// `Rs / R2` for two beams `delta_lambda_nm` apart around `lambda_center_nm`.
pub fn self_tpa_ratio(delta_lambda_nm: f64, lambda_center_nm: f64, gamma2_per_s: f64) -> f64 {
    let lambda = lambda_center_nm * 1e-9;
    let d_omega = 2.0 * PI * SI.c * (delta_lambda_nm * 1e-9) / (lambda * lambda);
    let g2 = gamma2_per_s * gamma2_per_s;
    g2 / (d_omega * d_omega + g2)
}

fn scale_factor(vapor: &VaporParams) -> Result<f64, RubidiumError> {
    if vapor.detuning_nm == 0.0 {
        return Err(RubidiumError::VirtualLevelResonance);
    }
    Ok(vapor.density_per_cc / vapor.baseline_density_per_cc
        * (vapor.baseline_detuning_nm / vapor.detuning_nm).powi(2))
}

/// Rates for intracavity intensities `i1`, `i2` given in units of the
/// one-photon intensities. `rs` uses the self/cross ratio for the two
/// wavelengths.
pub fn scaled_rates(
    vapor: &VaporParams,
    i1: f64,
    i2: f64,
    lambda1_nm: f64,
    lambda2_nm: f64,
) -> Result<RateResult, RubidiumError> {
    if !(i1 >= 0.0 && i2 >= 0.0) {
        return Err(RubidiumError::InvalidInput(
            "normalised intensities must be >= 0".into(),
        ));
    }
    let s = scale_factor(vapor)?;
    let r2 = s * (i1 * i2) * vapor.r20_per_s;
    let r1 = s * i1 * vapor.r10_per_s;
    let ratio = self_tpa_ratio(
        (lambda1_nm - lambda2_nm).abs(),
        0.5 * (lambda1_nm + lambda2_nm),
        vapor.gamma2_per_s,
    );
    Ok(RateResult { r2, r1, rs: ratio * r2 })
}

/// Density that restores the baseline two-photon rate at `detuning_nm`.
pub fn required_density(vapor: &VaporParams, detuning_nm: f64) -> f64 {
    vapor.baseline_density_per_cc * (detuning_nm / vapor.baseline_detuning_nm).powi(2)
}

/// Effective two-photon coefficient from the baseline rate.
pub fn effective_alpha(
    mode_volume_cm3: f64,
    major_diameter_m: f64,
    n_eff: f64,
    r20_per_s: f64,
    lambda_m: f64,
) -> FluxQuantities {
    let circumference_cm = PI * major_diameter_m * CM_PER_M;
    let mode_area_cm2 = mode_volume_cm3 / circumference_cm;
    let group_speed_m = SI.c / n_eff;
    let dt_roundtrip_s = PI * major_diameter_m / group_speed_m;
    let photon_energy_j = SI.h * SI.c / lambda_m;
    let p_f_w = photon_energy_j / dt_roundtrip_s;
    let l0_per_cm = r20_per_s / (group_speed_m * CM_PER_M);
    let alpha0_cm_per_gw = l0_per_cm * mode_area_cm2 / (p_f_w / W_PER_GW);
    FluxQuantities {
        mode_area_cm2,
        dt_roundtrip_s,
        photon_energy_j,
        p_f_w,
        l0_per_cm,
        alpha0_cm_per_gw,
    }
}

/// Effective coefficient at the vapor's density and detuning.
pub fn scaled_alpha(alpha0_cm_per_gw: f64, vapor: &VaporParams) -> Result<f64, RubidiumError> {
    Ok(alpha0_cm_per_gw * scale_factor(vapor)?)
}

pub fn vapor_pressure_torr(t_k: f64) -> Result<f64, RubidiumError> {
    if !(t_k > 0.0 && t_k.is_finite()) {
        return Err(RubidiumError::InvalidInput(format!(
            "temperature must be > 0 K, got {t_k}"
        )));
    }
    let log_p = VP_A - VP_B / t_k + VP_C * t_k - VP_D * t_k.log10();
    Ok(10f64.powf(log_p))
}

/// Atom density in cm^-3 of saturated vapor at `t_k`.
pub fn density_from_temperature(t_k: f64) -> Result<f64, RubidiumError> {
    if !(T_MIN_K..=T_MAX_K).contains(&t_k) {
        return Err(RubidiumError::OutOfRange {
            what: "temperature (K)",
            value: t_k,
            min: T_MIN_K,
            max: T_MAX_K,
        });
    }
    Ok(vapor_pressure_torr(t_k)? * IDEAL_GAS_FACTOR / t_k)
}

/// Inverse of [`density_from_temperature`] by bisection.
pub fn temperature_for_density(rho_per_cc: f64) -> Result<f64, RubidiumError> {
    let lo_rho = density_from_temperature(T_MIN_K)?;
    let hi_rho = density_from_temperature(T_MAX_K)?;
    if !(lo_rho..=hi_rho).contains(&rho_per_cc) {
        return Err(RubidiumError::OutOfRange {
            what: "density (cm^-3)",
            value: rho_per_cc,
            min: lo_rho,
            max: hi_rho,
        });
    }
    let (mut lo, mut hi) = (T_MIN_K, T_MAX_K);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if density_from_temperature(mid)? < rho_per_cc {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
