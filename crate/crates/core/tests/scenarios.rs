//! End-to-end device scenarios at the nominal parameters.

use zeno_core::config::{Config, Setup};
use zeno_core::dynamics::{
    memory_sequence, simulate, switching_times, Bit, CavityState, DriveSignal, DynamicsError,
    MemorySchedule, Waveform,
};
use zeno_core::figures::{fig6, fig7, memory, switching_drive};
use zeno_core::quasistatic::{
    classify_stability, find_symmetric_solution, solve_fixed_point, Branch, Inputs,
};
use zeno_core::Field;

fn setup_with(overrides: &[&str]) -> Setup {
    let mut c = Config::default();
    c.apply_overrides(overrides).unwrap();
    Setup::new(c).unwrap()
}

#[test]
fn cw_switching_latencies() {
    let s = Setup::nominal();
    let fig = fig6(&s).unwrap();
    let lat = fig.latencies.unwrap();
    println!("on {:.1} ps, off {:.1} ps", lat.on_s * 1e12, lat.off_s * 1e12);
    assert!(lat.on_s <= 300e-12, "{lat:?}");
    assert!(lat.off_s <= 500e-12, "{lat:?}");
    assert!((lat.control_on_s - 2e-9).abs() < 10e-12);
    assert!((lat.control_off_s - 4e-9).abs() < 10e-12);
}

#[test]
fn cw_target_alone_is_reflected() {
    let s = Setup::nominal();
    let fig = fig6(&s).unwrap();
    // just before the control edge
    let before = fig
        .series
        .samples
        .iter()
        .rev()
        .find(|x| x.t_s < 1.95e-9)
        .unwrap();
    let p = 25e-6;
    assert!(before.outputs.out_2a / p > 0.99, "{:?}", before.outputs);
    assert!(before.outputs.out_2b / p < 0.01, "{:?}", before.outputs);
}

#[test]
fn no_tpa_means_no_switching() {
    let s = setup_with(&["loss.alpha_cm_per_GW=0"]);
    let (drive, dur) = switching_drive(&s).unwrap();
    let ts = simulate(&s.cavity(), &drive, dur, CavityState::default()).unwrap();
    assert!(matches!(switching_times(&ts, 0.9), Err(DynamicsError::NotSwitched(_))));
}

#[test]
fn equal_power_pulses_switch() {
    let s = Setup::nominal();
    let fig = fig7(&s).unwrap();
    let lat = fig.latencies.unwrap();
    assert!(lat.on_s.is_finite() && lat.off_s.is_finite());
    // first target pulse, no control: leaves through the reflected port
    let mid1 = fig.series.samples.iter().find(|x| x.t_s >= 1.0e-9).unwrap();
    assert!(mid1.outputs.out_2a > 10.0 * mid1.outputs.out_2b, "{:?}", mid1.outputs);
    // second target pulse with control: passes straight through
    let mid2 = fig.series.samples.iter().find(|x| x.t_s >= 3.5e-9).unwrap();
    assert!(mid2.outputs.out_2b > 10.0 * mid2.outputs.out_2a, "{:?}", mid2.outputs);
}

#[test]
fn on_latency_non_increasing_in_control_power() {
    let mut last = f64::INFINITY;
    for mw in [3.0, 6.0, 12.0, 30.0] {
        let s = setup_with(&[&format!("drive.control_W={}", mw * 1e-3)]);
        let lat = fig6(&s).unwrap().latencies.unwrap();
        assert!(lat.on_s <= last + 1e-15, "{mw} mW: {} > {last}", lat.on_s);
        last = lat.on_s;
    }
}

#[test]
fn memory_writes_and_holds() {
    let s = Setup::nominal();
    let (fig, run) = memory(&s).unwrap();
    assert_eq!(fig.table.rows.len(), run.series.samples.len());
    assert_eq!(run.holds.len(), 3);
    for h in &run.holds {
        assert!(h.held, "{h:?}");
    }
    assert_eq!(run.final_bit(), Bit::Zero);
}

#[test]
fn memory_set_then_hold_long() {
    let s = Setup::nominal();
    let schedule = MemorySchedule {
        hold_w: 25e-6,
        writes: vec![(0.0, Bit::Zero)],
        write_window_s: 2e-9,
        settle_s: 1e-9,
        edge_s: 10e-12,
        duration_s: 12e-9,
    };
    let run = memory_sequence(&s.cavity(), &schedule).unwrap();
    assert!(run.holds[0].held);
    let after = run
        .series
        .samples
        .iter()
        .zip(&run.bits)
        .filter(|(x, _)| x.t_s > 3e-9);
    assert!(after.into_iter().all(|(_, b)| *b == Bit::Zero));

    let reset = MemorySchedule {
        writes: vec![(0.0, Bit::Zero), (5e-9, Bit::One)],
        ..schedule
    };
    assert_eq!(memory_sequence(&s.cavity(), &reset).unwrap().final_bit(), Bit::One);
}

#[test]
fn zero_drive_is_indeterminate() {
    let s = Setup::nominal();
    let schedule = MemorySchedule {
        hold_w: 0.0,
        writes: vec![],
        write_window_s: 1e-9,
        settle_s: 0.5e-9,
        edge_s: 10e-12,
        duration_s: 2e-9,
    };
    assert!(matches!(
        memory_sequence(&s.cavity(), &schedule),
        Err(DynamicsError::IndeterminateState { .. })
    ));
}

#[test]
fn bistability_at_operating_point() {
    let s = Setup::nominal();
    let cav = s.cavity();
    let opts = s.solver();
    let inputs = Inputs::symmetric(3.7e-4);
    let sym = find_symmetric_solution(&cav, 3.7e-4).unwrap();
    assert!(!sym.stable);
    assert!(sym.spectral_radius > 1.0);

    let low = solve_fixed_point(&cav, &inputs, 0.5 * sym.i2r, &opts).unwrap();
    let high = solve_fixed_point(&cav, &inputs, 2.0 * sym.i2r, &opts).unwrap();
    assert_eq!(low.branch, Branch::Field1Dominant);
    assert_eq!(high.branch, Branch::Field2Dominant);
    assert!(low.stable && high.stable);
    assert!(low.spectral_radius < 1.0 && high.spectral_radius < 1.0);
    let st = classify_stability(&cav, &inputs, low.i1r, low.i2r).unwrap();
    assert!(st.stable);
    // mirror images
    assert!((low.i1r - high.i2r).abs() <= 1e-8 * low.i1r);
}

#[test]
fn long_run_matches_quasistatic_both_branches() {
    let s = Setup::nominal();
    let cav = s.cavity();
    let p = 3.7e-4;
    for (first, seed_big) in [(Field::One, false), (Field::Two, true)] {
        // the leading field turns on 20 ps earlier and wins
        let (on1, on2) = if first == Field::One { (0.0, 20e-12) } else { (20e-12, 0.0) };
        let drive = DriveSignal {
            field1: Waveform::pulse(on1, None, p, 10e-12).unwrap(),
            field2: Waveform::pulse(on2, None, p, 10e-12).unwrap(),
        };
        let ts = simulate(&cav, &drive, 3e-9, CavityState::default()).unwrap();
        let last = ts.last();
        let seed = if seed_big { 10.0 * last.i2r.max(last.i1r) } else { 0.0 };
        let q = solve_fixed_point(&cav, &Inputs::symmetric(p), seed, &s.solver()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        let big = q.i1r.max(q.i2r);
        assert!((last.i1r - q.i1r).abs() / big < 1e-6, "{} vs {}", last.i1r, q.i1r);
        assert!((last.i2r - q.i2r).abs() / big < 1e-6, "{} vs {}", last.i2r, q.i2r);
        assert!(rel(last.outputs.out_2b, q.outputs.out_2b) < 1e-5);
    }
}
