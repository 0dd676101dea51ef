//! Acceptance suite. Each criterion prints one `criterion N ...: PASS|FAIL`
//! line; the process exits non-zero if any fail.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, RngAlgorithm, TestRng, TestRunner};

use zeno_core::config::{Config, Setup};
use zeno_core::dynamics::{simulate, switching_times, CavityState, DriveSignal, Waveform};
use zeno_core::figures;
use zeno_core::output::Table;
use zeno_core::quasistatic::{
    classify_stability, find_symmetric_solution, solve_fixed_point, Branch, Inputs,
};
use zeno_core::report::{perf_report, table1_rows};
use zeno_core::rubidium::{
    density_from_temperature, scaled_rates, self_tpa_ratio, temperature_for_density,
};
use zeno_core::Field;

const BIN: &str = env!("CARGO_BIN_EXE_zeno");

fn zeno(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(BIN)
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn zeno");
    assert!(
        out.status.success(),
        "zeno {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv(path: &Path) -> Table {
    Table::read_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    t.numeric_column(name).unwrap_or_else(|| panic!("no column {name}"))
}

fn value_at(t: &Table, x: &str, y: &str, at: f64) -> f64 {
    let xs = column(t, x);
    let ys = column(t, y);
    let i = xs
        .iter()
        .position(|v| (v - at).abs() < 1e-12)
        .unwrap_or_else(|| panic!("{x} = {at} not on the grid"));
    ys[i]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn table1_regression() -> String {
    let t0 = Instant::now();
    let rows = table1_rows(&Setup::nominal()).unwrap();
    let elapsed = t0.elapsed();
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass()).map(|r| r.name).collect();
    assert!(failed.is_empty(), "out of tolerance: {failed:?}");
    assert!(elapsed.as_millis() < 100, "{elapsed:?}");
    let dir = tempfile::tempdir().unwrap();
    let text = zeno(dir.path(), &["table1"]);
    assert!(!text.contains("FAIL"), "{text}");
    format!("{} rows in tolerance, {:.2} ms", rows.len(), elapsed.as_secs_f64() * 1e3)
}

fn baseline_rates() -> String {
    let v = Setup::nominal().model.vapor;
    let mut base = v;
    base.density_per_cc = base.baseline_density_per_cc;
    base.detuning_nm = base.baseline_detuning_nm;
    let r = scaled_rates(&base, 1.0, 1.0, 780.0, 776.0).unwrap();
    assert_eq!(r.r2, 9.41e8);
    assert_eq!(r.r1, 1.12e8);
    let (i1, i2) = (3.0, 7.0);
    let reference = scaled_rates(&base, i1, i2, 780.0, 776.0).unwrap();
    let reference = reference.r2 / reference.r1;
    let mut worst: f64 = 0.0;
    for a in 0..10 {
        for b in 0..10 {
            let mut p = v;
            p.density_per_cc = 1e9 * 10f64.powf(a as f64 * 0.7);
            p.detuning_nm = 0.01 * 10f64.powf(b as f64 * 0.3);
            let r = scaled_rates(&p, i1, i2, 780.0, 776.0).unwrap();
            worst = worst.max(rel(r.r2 / r.r1, reference));
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
    format!("R2 = 9.41e8, R1 = 1.12e8, worst ratio drift {worst:.1e}")
}

fn self_tpa_suppression() -> String {
    assert_eq!(self_tpa_ratio(0.0, 778.0, 3.14e8), 1.0);
    let r = self_tpa_ratio(0.5, 778.0, 3.14e8);
    assert!((1e-8..=1e-7).contains(&r), "{r:e}");
    let dir = tempfile::tempdir().unwrap();
    zeno(dir.path(), &["fig9"]);
    let t = csv(&dir.path().join("fig9.csv"));
    let y = column(&t, "log10_ratio");
    assert!(y.len() > 100);
    assert!(y.windows(2).all(|w| w[1] < w[0]), "fig9 not strictly decreasing");
    format!("ratio(0.5 nm) = {r:.3e}, fig9 strictly decreasing over {} points", y.len())
}

fn design_curves() -> String {
    let dir = tempfile::tempdir().unwrap();
    zeno(dir.path(), &["fig10"]);
    zeno(dir.path(), &["fig11"]);
    let t_c = value_at(&csv(&dir.path().join("fig11.csv")), "detuning_nm", "temperature_C", 0.05);
    let rho = 10f64.powf(value_at(
        &csv(&dir.path().join("fig10.csv")),
        "detuning_nm",
        "log10_density_per_cc",
        0.05,
    ));
    assert!((t_c - 43.0).abs() <= 2.0, "{t_c}");
    assert!(rel(rho, 5.6e10) <= 0.03, "{rho:e}");
    let mut worst: f64 = 0.0;
    for k in 0..=100 {
        let t = 260.0 + 2.3 * k as f64;
        let back = temperature_for_density(density_from_temperature(t).unwrap()).unwrap();
        worst = worst.max((back - t).abs());
    }
    assert!(worst < 1e-4, "{worst:e}");
    format!("T(0.05 nm) = {t_c:.2} C, rho(0.05 nm) = {rho:.3e}/cc, round trip {worst:.1e} K")
}

fn bistability() -> String {
    let t0 = Instant::now();
    let s = Setup::nominal();
    let cav = s.cavity();
    let p = 3.7e-4;
    let inputs = Inputs::symmetric(p);
    let sym = find_symmetric_solution(&cav, p).unwrap();
    let st = classify_stability(&cav, &inputs, sym.i1r, sym.i2r).unwrap();
    assert!(st.spectral_radius > 1.0 && !st.stable, "{st:?}");
    let mut runner = TestRunner::new_with_rng(
        PtConfig { cases: 32, failure_persistence: None, ..PtConfig::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&(0.0f64..0.95, 1.05f64..10.0), |(below, above)| {
            let lo = solve_fixed_point(&cav, &inputs, below * sym.i2r, &s.solver()).unwrap();
            let hi = solve_fixed_point(&cav, &inputs, above * sym.i2r, &s.solver()).unwrap();
            prop_assert_eq!(lo.branch, Branch::Field1Dominant);
            prop_assert_eq!(hi.branch, Branch::Field2Dominant);
            for b in [&lo, &hi] {
                let st = classify_stability(&cav, &inputs, b.i1r, b.i2r).unwrap();
                prop_assert!(st.stable && st.spectral_radius < 1.0);
            }
            prop_assert!(rel(lo.i1r, hi.i2r) < 1e-8);
            Ok(())
        })
        .unwrap();
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
    format!(
        "symmetric radius {:.3}, 32 seed pairs split onto both branches, {:.0} ms",
        st.spectral_radius,
        elapsed.as_secs_f64() * 1e3
    )
}

fn dynamic_equivalence() -> String {
    let base = Setup::nominal();
    let mut runner = TestRunner::new_with_rng(
        PtConfig { cases: 20, failure_persistence: None, ..PtConfig::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let worst = std::cell::Cell::new(0.0f64);
    runner
        .run(
            &(0.08f64..0.14, 3e5f64..8e5, 1.5e-3f64..3e-3, 1e-4f64..6e-4, any::<bool>()),
            |(r, alpha, gamma, p, one_first)| {
                let cav = base.cavity().with_coupling(r).with_loss(gamma, alpha);
                let (on1, on2) = if one_first { (0.0, 30e-12) } else { (30e-12, 0.0) };
                let drive = DriveSignal {
                    field1: Waveform::pulse(on1, None, p, 10e-12).unwrap(),
                    field2: Waveform::pulse(on2, None, p, 10e-12).unwrap(),
                };
                let ts = simulate(&cav, &drive, 3e-9, CavityState::default()).unwrap();
                let last = ts.last();
                let seed = if one_first { 0.0 } else { 10.0 * last.i2r };
                let q = solve_fixed_point(&cav, &Inputs::symmetric(p), seed, &base.solver()).unwrap();
                let d = rel(last.i1r, q.i1r).max(rel(last.i2r, q.i2r));
                worst.set(worst.get().max(d));
                prop_assert!(d < 1e-6, "relative mismatch {:e}", d);
                Ok(())
            },
        )
        .unwrap();
    format!("20 cases, worst relative mismatch {:.1e}", worst.get())
}

fn switching_dynamics() -> String {
    let dir = tempfile::tempdir().unwrap();
    let text = zeno(dir.path(), &["fig6"]);
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("no {key} in output"))
            .parse()
            .unwrap()
    };
    let on = get("on_latency_s");
    let off = get("off_latency_s");
    // stated targets with the x2 band
    assert!(on <= 2.0 * 300e-12, "on {on:e}");
    assert!(off <= 2.0 * 500e-12, "off {off:e}");
    assert!(get("passivity_margin_J") >= 0.0);
    format!("on {:.1} ps (<= 300), off {:.1} ps (<= 500)", on * 1e12, off * 1e12)
}

fn switch_quality() -> String {
    let s = Setup::nominal();
    let perf = perf_report(&s).unwrap();
    assert!(perf.crosstalk < 0.01, "{}", perf.crosstalk);
    assert!((0.0..=1.0).contains(&perf.insertion_loss));

    let mut runs = vec![
        figures::fig6(&s).unwrap().series,
        figures::fig7(&s).unwrap().series,
        figures::memory(&s).unwrap().1.series,
    ];
    for mw in [3.0, 10.0, 30.0] {
        let mut c = Config::default();
        c.apply_overrides(&[format!("drive.control_W={}", mw * 1e-3)]).unwrap();
        let s = Setup::new(c).unwrap();
        let (drive, dur) = figures::switching_drive(&s).unwrap();
        let ts = simulate(&s.cavity(), &drive, dur, CavityState::default()).unwrap();
        switching_times(&ts, 0.9).unwrap();
        runs.push(ts);
    }
    for ts in &runs {
        let m = ts.passivity_margin();
        assert!(m >= -1e-15 * ts.supplied_energy(), "margin {m:e}");
    }
    for (p1, p2) in [(0.0, 3.7e-4), (3.7e-4, 3.7e-4), (3e-3, 25e-6)] {
        let sol = solve_fixed_point(&s.cavity(), &Inputs::new(p1, p2), 0.0, &s.solver()).unwrap();
        assert!(sol.outputs.total(Field::One) <= p1 + 1e-15);
        assert!(sol.outputs.total(Field::Two) <= p2 + 1e-15);
    }
    format!(
        "crosstalk {:.2e}, insertion loss {:.2e}, {} dynamic runs passive",
        perf.crosstalk,
        perf.insertion_loss,
        runs.len()
    )
}

fn discrepancy_reporting() -> String {
    let dir = tempfile::tempdir().unwrap();
    let text = zeno(dir.path(), &["perf"]);
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("no {key} in perf output"))
            .parse()
            .unwrap()
    };
    let p_c = get("P_c_W");
    let quoted = get("P_c_reference_W");
    let ratio = get("P_c_reference_over_computed");
    assert_eq!(quoted, 3.7e-7);
    assert!(rel(ratio, quoted / p_c) < 1e-12);
    // independent evaluation of the balance condition at the printed P_c
    let f = get("f");
    let gamma = get("gamma_used_per_cm");
    let area = 7.6e-11 / (std::f64::consts::PI * 50e-4);
    let alpha = 5.27e5;
    let intensity_gw = f * p_c * 1e-9 / area;
    let tpa = alpha * intensity_gw;
    assert!(rel(tpa, gamma) < 1e-9, "{:e}", rel(tpa, gamma));
    assert!(get("balance_residual_rel") < 1e-9);
    format!("P_c = {p_c:.3e} W, quoted 3.7e-7 W, ratio {ratio:.3e}")
}

type Check = fn() -> String;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("nominal parameter regression", table1_regression),
        ("baseline rates", baseline_rates),
        ("self-TPA suppression", self_tpa_suppression),
        ("design curves", design_curves),
        ("bistability", bistability),
        ("quasistatic/dynamic equivalence", dynamic_equivalence),
        ("switching dynamics", switching_dynamics),
        ("switch quality", switch_quality),
        ("discrepancy reporting", discrepancy_reporting),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {} {name}: FAIL ({msg})", i + 1);
            }
        }
    }
    let _ = panic::take_hook();
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
