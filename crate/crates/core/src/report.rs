//! Nominal-parameter regression table and the performance summary.

use std::fmt::Write as _;

use crate::config::Setup;
use crate::model::{CM_PER_M, KELVIN_OFFSET};
use crate::performance::{
    balance_power, balance_residual, critical_coupling, enhancement_factor, switch_quality,
    PerfError, PerfReport, REFERENCE_BALANCE_POWER_W,
};
use crate::rubidium::{
    density_from_temperature, required_density, scaled_alpha, temperature_for_density,
    RubidiumError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: &'static str,
    pub unit: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: Tolerance,
}

impl Row {
    pub fn relative_deviation(&self) -> f64 {
        (self.computed - self.reference) / self.reference
    }

    pub fn pass(&self) -> bool {
        let d = self.computed - self.reference;
        match self.tolerance {
            Tolerance::Relative(t) => (d / self.reference).abs() <= t,
            Tolerance::Absolute(t) => d.abs() <= t,
        }
    }
}

/// Every quantity derived from the configuration next to its nominal value.
pub fn table1_rows(setup: &Setup) -> Result<Vec<Row>, RubidiumError> {
    let m = &setup.model;
    let r = &m.resonator;
    let v = &m.vapor;
    let flux = &setup.flux;
    let l_m = m.derived.circumference_cm / CM_PER_M;
    let rel = Tolerance::Relative;
    let row = |name, unit, computed, reference, tolerance| Row {
        name,
        unit,
        computed,
        reference,
        tolerance,
    };
    let rho_needed = required_density(v, v.detuning_nm);
    Ok(vec![
        row("f", "", enhancement_factor(r.lambda1_m, r.q_factor, r.n_eff, l_m), 30350.0, rel(0.01)),
        row("dt_roundtrip", "s", flux.dt_roundtrip_s, 6.81e-13, rel(0.005)),
        row("P_f", "W", flux.p_f_w, 3.74e-7, rel(0.005)),
        row("L0", "1/cm", flux.l0_per_cm, 4.08e-2, rel(0.01)),
        row("alpha0", "cm/GW", flux.alpha0_cm_per_gw, 5.27e5, rel(0.01)),
        row("A", "cm^2", m.derived.mode_area_cm2, 4.83e-9, rel(0.005)),
        row("rho(T)", "1/cc", density_from_temperature(v.temperature_k)?, 5.6e10, rel(0.03)),
        row("gamma_from_Q", "1/cm", m.derived.gamma_from_q_per_cm, 2.13e-3, rel(0.02)),
        row("rho_required(delta)", "1/cc", rho_needed, 5.6e10, rel(0.03)),
        row(
            "T_required(delta)",
            "C",
            temperature_for_density(rho_needed)? - KELVIN_OFFSET,
            43.0,
            Tolerance::Absolute(2.0),
        ),
        row("alpha(rho, delta)", "cm/GW", scaled_alpha(flux.alpha0_cm_per_gw, v)?, 5.27e5, rel(0.01)),
    ])
}

pub fn table1_text(rows: &[Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>14} {:>14} {:>10} {:>10} {:<6} status",
        "quantity", "computed", "nominal", "rel_dev", "tolerance", "unit"
    );
    for r in rows {
        let tol = match r.tolerance {
            Tolerance::Relative(t) => format!("{:.1}%", t * 100.0),
            Tolerance::Absolute(t) => format!("+-{t}"),
        };
        let _ = writeln!(
            s,
            "{:<20} {:>14.6e} {:>14.6e} {:>+10.3e} {:>10} {:<6} {}",
            r.name,
            r.computed,
            r.reference,
            r.relative_deviation(),
            tol,
            r.unit,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    let passed = rows.iter().filter(|r| r.pass()).count();
    let _ = writeln!(s, "{passed}/{} within tolerance", rows.len());
    s
}

/// Closed-form relations with the device loss, plus switch metrics at the
/// configured input powers (field 1 is the control, field 2 the target).
pub fn perf_report(setup: &Setup) -> Result<PerfReport, PerfError> {
    let m = &setup.model;
    let r = &m.resonator;
    let l_cm = m.derived.circumference_cm;
    let f = enhancement_factor(r.lambda1_m, r.q_factor, r.n_eff, l_cm / CM_PER_M);
    let loss = setup.device_loss;
    let r_crit = critical_coupling(loss.gamma_per_cm, l_cm)?;
    let area = m.derived.mode_area_cm2;
    let p_c = balance_power(loss.gamma_per_cm, area, loss.alpha_cm_per_gw, f);
    let residual = balance_residual(loss.gamma_per_cm, area, loss.alpha_cm_per_gw, f, p_c);
    let q = switch_quality(&setup.cavity(), setup.config.p1_w, setup.config.p2_w, &setup.solver())?;
    Ok(PerfReport {
        f,
        r_crit,
        gamma_configured: setup.config.gamma_per_cm,
        gamma_q: m.derived.gamma_from_q_per_cm,
        gamma_used: loss.gamma_per_cm,
        p_c,
        p_c_reference: REFERENCE_BALANCE_POWER_W,
        balance_residual: residual,
        operating_power: setup.config.p2_w,
        crosstalk: q.crosstalk,
        insertion_loss: q.insertion_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_rows_pass() {
        let rows = table1_rows(&Setup::nominal()).unwrap();
        for r in &rows {
            assert!(r.pass(), "{r:?}");
        }
        let text = table1_text(&rows);
        assert!(text.contains(&format!("{0}/{0} within tolerance", rows.len())));
    }

    #[test]
    fn tolerance_kinds() {
        let r = Row {
            name: "x",
            unit: "",
            computed: 44.9,
            reference: 43.0,
            tolerance: Tolerance::Absolute(2.0),
        };
        assert!(r.pass());
        let r = Row {
            computed: 1.02,
            reference: 1.0,
            tolerance: Tolerance::Relative(0.01),
            ..r
        };
        assert!(!r.pass());
    }

    #[test]
    fn perf_reports_both_balance_powers() {
        let p = perf_report(&Setup::nominal()).unwrap();
        // gamma A / (alpha f), W
        let oracle = 2.13e-3 * (7.6e-11 / (std::f64::consts::PI * 50e-4)) / (5.27e5 * p.f) * 1e9;
        assert!((p.p_c - oracle).abs() / oracle < 1e-12);
        assert_eq!(p.p_c_reference, 3.7e-7);
        assert!(p.balance_residual < 1e-9);
        let text = p.to_text();
        assert!(text.contains("P_c_W = "));
        assert!(text.contains("P_c_reference_W = 3.7e-7"));
    }
}
