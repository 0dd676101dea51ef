//! Data behind each figure command: a CSV table and a plot.

use thiserror::Error;

use crate::config::Setup;
use crate::dynamics::{
    memory_sequence, simulate, switching_times, Bit, CavityState, DriveSignal, DynamicsError,
    EdgeShape, Latencies, MemoryRun, MemorySchedule, Segment, TimeSeries, Waveform,
};
use crate::model::{Field, KELVIN_OFFSET};
use crate::output::{num, Plot, Table};
use crate::quasistatic::{find_symmetric_solution, response_curves, SolveError, SteadySolution};
use crate::rubidium::{required_density, self_tpa_ratio, temperature_for_density, RubidiumError};

/// Columns of every time-series CSV.
pub const TIME_SERIES_COLUMNS: [&str; 7] = [
    "time_s", "I1R_W", "I2R_W", "out_1A_W", "out_1B_W", "out_2A_W", "out_2B_W",
];

/// Number of assumed-intensity points on the response curves.
pub const RESPONSE_POINTS: usize = 401;

/// Pulsed-switching timing, ns: first target pulse, control window, second target onset, end.
pub const PULSED_TARGET_1_NS: (f64, f64) = (0.2, 1.2);
pub const PULSED_CONTROL_NS: (f64, f64) = (2.0, 4.0);
pub const PULSED_TARGET_2_ON_NS: f64 = 2.2;
pub const PULSED_DURATION_NS: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FigureError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Rubidium(#[from] RubidiumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: &'static str,
    pub table: Table,
    pub plot: Plot,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Detuning grid `k / 100` nm for `k = 1..=250`.
pub fn detuning_grid_nm() -> Vec<f64> {
    (1..=250).map(|k| k as f64 / 100.0).collect()
}

/// Wavelength-difference grid `k / 100` nm for `k = 0..=400`.
pub fn wavelength_difference_grid_nm() -> Vec<f64> {
    (0..=400).map(|k| k as f64 / 100.0).collect()
}

/// Assumed intensities from 0 to 1.2 times the largest single-field
/// circulating power, so the grid covers both curves' full range.
fn response_grid(setup: &Setup) -> Vec<f64> {
    let cav = setup.cavity();
    let inputs = setup.inputs();
    let peak = [Field::One, Field::Two]
        .into_iter()
        .map(|f| {
            let g = (-cav.loop_exponent(0.0)).exp();
            let t2 = cav.transmission * cav.transmission;
            inputs.power(f) * cav.coupling.powi(2) / (1.0 - t2 * g).powi(2)
        })
        .fold(0.0, f64::max);
    let top = if peak > 0.0 { 1.2 * peak } else { 1.0 };
    linspace(0.0, top, RESPONSE_POINTS)
}

pub fn fig3(setup: &Setup) -> Result<Figure, FigureError> {
    let curves = response_curves(&setup.cavity(), &setup.inputs(), &response_grid(setup))?;
    let mut table = Table::new(&["assumed_intensity_W", "responding_intensity_W"]);
    for &(x, y) in &curves.field2_vs_i1 {
        table.push_numbers(&[x, y]);
    }
    let plot = Plot::new("I2R for an assumed I1R", "assumed I1R (W)", "I2R (W)")
        .with_series("I2R", curves.field2_vs_i1);
    Ok(Figure { name: "fig3", table, plot })
}

pub fn fig4(setup: &Setup) -> Result<Figure, FigureError> {
    let curves = response_curves(&setup.cavity(), &setup.inputs(), &response_grid(setup))?;
    let mut table = Table::new(&["assumed_intensity_W", "responding_intensity_W"]);
    for &(x, y) in &curves.field1_vs_i2 {
        table.push_numbers(&[x, y]);
    }
    let plot = Plot::new("I1R for an assumed I2R", "assumed I2R (W)", "I1R (W)")
        .with_series("I1R", curves.field1_vs_i2);
    Ok(Figure { name: "fig4", table, plot })
}

/// Both curves in the `(I1R, I2R)` plane. Their crossings are the fixed points.
pub fn fig5(setup: &Setup) -> Result<Figure, FigureError> {
    let curves = response_curves(&setup.cavity(), &setup.inputs(), &response_grid(setup))?;
    let mut table = Table::new(&["curve", "I1R_W", "I2R_W"]);
    let a: Vec<(f64, f64)> = curves.field2_vs_i1.clone();
    let b: Vec<(f64, f64)> = curves.field1_vs_i2.iter().map(|&(x, y)| (y, x)).collect();
    for &(i1, i2) in &a {
        table.push(vec!["I2R_from_I1R".into(), num(i1), num(i2)]);
    }
    for &(i1, i2) in &b {
        table.push(vec!["I1R_from_I2R".into(), num(i1), num(i2)]);
    }
    let plot = Plot::new("Response curves", "I1R (W)", "I2R (W)")
        .with_series("I2R from I1R", a)
        .with_series("I1R from I2R", b);
    Ok(Figure { name: "fig5", table, plot })
}

/// Symmetric fixed point at the configured `input.P1_W`, if the inputs are symmetric.
pub fn symmetric_point(setup: &Setup) -> Result<SteadySolution, SolveError> {
    find_symmetric_solution(&setup.cavity(), setup.config.p1_w)
}

pub fn time_series_table(ts: &TimeSeries) -> Table {
    let mut t = Table::new(&TIME_SERIES_COLUMNS);
    for s in &ts.samples {
        let o = &s.outputs;
        t.push_numbers(&[s.t_s, s.i1r, s.i2r, o.out_1a, o.out_1b, o.out_2a, o.out_2b]);
    }
    t
}

fn time_series_plot(title: &str, ts: &TimeSeries) -> Plot {
    let ns = |f: fn(&crate::dynamics::Sample) -> f64| -> Vec<(f64, f64)> {
        ts.samples.iter().map(|s| (s.t_s * 1e9, f(s))).collect()
    };
    Plot::new(title, "time (ns)", "power (W)")
        .with_series("target in", ns(|s| s.in2))
        .with_series("transmitted target (2B)", ns(|s| s.outputs.out_2b))
        .with_series("reflected target (2A)", ns(|s| s.outputs.out_2a))
}

fn edge(rise_s: f64) -> EdgeShape {
    if rise_s > 0.0 {
        EdgeShape::RaisedCosine
    } else {
        EdgeShape::Step
    }
}

fn seg(start_s: f64, level_w: f64, rise_s: f64) -> Segment {
    Segment {
        start_s,
        shape: edge(rise_s),
        level_w,
        edge_s: rise_s,
    }
}

/// CW target on field 2 and one control pulse on field 1, from the `drive.` keys.
pub fn switching_drive(setup: &Setup) -> Result<(DriveSignal, f64), DynamicsError> {
    let c = &setup.config;
    let rise = c.rise_ps * 1e-12;
    let drive = DriveSignal {
        field1: Waveform::new(vec![
            seg(c.control_on_ns * 1e-9, c.control_w, rise),
            seg(c.control_off_ns * 1e-9, 0.0, rise),
        ])?,
        field2: Waveform::new(vec![seg(c.target_on_ns * 1e-9, c.target_w, rise)])?,
    };
    Ok((drive, c.duration_ns * 1e-9))
}

/// Equal-power pulses: a target pulse alone, then a control pulse with a
/// target that arrives after it. Both levels are `drive.target_W`.
pub fn pulsed_drive(setup: &Setup) -> Result<(DriveSignal, f64), DynamicsError> {
    let c = &setup.config;
    let rise = c.rise_ps * 1e-12;
    let p = c.target_w;
    let drive = DriveSignal {
        field1: Waveform::new(vec![
            seg(PULSED_CONTROL_NS.0 * 1e-9, p, rise),
            seg(PULSED_CONTROL_NS.1 * 1e-9, 0.0, rise),
        ])?,
        field2: Waveform::new(vec![
            seg(PULSED_TARGET_1_NS.0 * 1e-9, p, rise),
            seg(PULSED_TARGET_1_NS.1 * 1e-9, 0.0, rise),
            seg(PULSED_TARGET_2_ON_NS * 1e-9, p, rise),
        ])?,
    };
    Ok((drive, PULSED_DURATION_NS * 1e-9))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicFigure {
    pub figure: Figure,
    pub series: TimeSeries,
    pub latencies: Result<Latencies, DynamicsError>,
}

fn dynamic(
    setup: &Setup,
    name: &'static str,
    title: &str,
    (drive, duration): (DriveSignal, f64),
) -> Result<DynamicFigure, FigureError> {
    let ts = simulate(&setup.cavity(), &drive, duration, CavityState::default())?;
    let latencies = switching_times(&ts, 0.9);
    let figure = Figure {
        name,
        table: time_series_table(&ts),
        plot: time_series_plot(title, &ts),
    };
    Ok(DynamicFigure {
        figure,
        series: ts,
        latencies,
    })
}

pub fn fig6(setup: &Setup) -> Result<DynamicFigure, FigureError> {
    dynamic(setup, "fig6", "Switching a CW target", switching_drive(setup)?)
}

pub fn fig7(setup: &Setup) -> Result<DynamicFigure, FigureError> {
    dynamic(setup, "fig7", "Switching pulsed signals", pulsed_drive(setup)?)
}

/// Writes 0, then 1, then 0, one `memory.period_ns` apart.
pub fn memory_schedule(setup: &Setup) -> MemorySchedule {
    let c = &setup.config;
    let period = c.period_ns * 1e-9;
    MemorySchedule {
        hold_w: c.hold_w,
        writes: vec![(0.0, Bit::Zero), (period, Bit::One), (2.0 * period, Bit::Zero)],
        write_window_s: c.write_ns * 1e-9,
        settle_s: c.settle_ns * 1e-9,
        edge_s: c.rise_ps * 1e-12,
        duration_s: 3.0 * period,
    }
}

pub fn memory(setup: &Setup) -> Result<(Figure, MemoryRun), FigureError> {
    let run = memory_sequence(&setup.cavity(), &memory_schedule(setup))?;
    let mut table = Table::new(&[
        "time_s", "I1R_W", "I2R_W", "out_1A_W", "out_1B_W", "out_2A_W", "out_2B_W", "bit",
    ]);
    for (s, b) in run.series.samples.iter().zip(&run.bits) {
        let o = &s.outputs;
        let mut row: Vec<String> = [s.t_s, s.i1r, s.i2r, o.out_1a, o.out_1b, o.out_2a, o.out_2b]
            .iter()
            .map(|&x| num(x))
            .collect();
        row.push(b.as_char().to_string());
        table.push(row);
    }
    let at = |f: fn(&crate::dynamics::Sample) -> f64| -> Vec<(f64, f64)> {
        run.series.samples.iter().map(|s| (s.t_s * 1e9, f(s))).collect()
    };
    let plot = Plot::new("Memory: write 0, 1, 0", "time (ns)", "circulating power (W)")
        .with_series("I1R", at(|s| s.i1r))
        .with_series("I2R", at(|s| s.i2r));
    Ok((Figure { name: "memory", table, plot }, run))
}

pub fn fig9(setup: &Setup) -> Result<Figure, FigureError> {
    let v = &setup.model.vapor;
    let r = &setup.model.resonator;
    let center_nm = 0.5 * (r.lambda1_m + r.lambda2_m) * 1e9;
    let mut table = Table::new(&["wavelength_difference_nm", "log10_ratio"]);
    let mut pts = Vec::new();
    for dl in wavelength_difference_grid_nm() {
        let y = self_tpa_ratio(dl, center_nm, v.gamma2_per_s).log10();
        table.push_numbers(&[dl, y]);
        pts.push((dl, y));
    }
    let plot = Plot::new(
        "Self / cross two-photon rate",
        "wavelength difference (nm)",
        "log10 Rs/R2",
    )
    .with_series("log10 ratio", pts);
    Ok(Figure { name: "fig9", table, plot })
}

pub fn fig10(setup: &Setup) -> Result<Figure, FigureError> {
    let v = &setup.model.vapor;
    let mut table = Table::new(&["detuning_nm", "log10_density_per_cc"]);
    let mut pts = Vec::new();
    for d in detuning_grid_nm() {
        let y = required_density(v, d).log10();
        table.push_numbers(&[d, y]);
        pts.push((d, y));
    }
    let plot = Plot::new("Required density", "detuning (nm)", "log10 density (1/cc)")
        .with_series("log10 density", pts);
    Ok(Figure { name: "fig10", table, plot })
}

pub fn fig11(setup: &Setup) -> Result<Figure, FigureError> {
    let v = &setup.model.vapor;
    let mut table = Table::new(&["detuning_nm", "temperature_C"]);
    let mut pts = Vec::new();
    for d in detuning_grid_nm() {
        let t = temperature_for_density(required_density(v, d))? - KELVIN_OFFSET;
        table.push_numbers(&[d, t]);
        pts.push((d, t));
    }
    let plot = Plot::new("Required vapor temperature", "detuning (nm)", "temperature (C)")
        .with_series("temperature", pts);
    Ok(Figure { name: "fig11", table, plot })
}
