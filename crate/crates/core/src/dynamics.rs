//! Round-trip-resolved time-domain model.
//!
//! One complex amplitude per field is kept, sampled just after that field's
//! input coupler. Each step advances both amplitudes by one transit of the
//! toroid. The two-photon loss seen by a field during a step uses the other
//! field's intensity at the start of the step.
//!
//! Couplers are the unitary matrix `[[T, iR], [iR, T]]`, so within a step
//!
//! ```text
//! stored(k) + outputs(k) <= stored(k-1) + inputs(k)
//! ```
//!
//! holds exactly (up to rounding), which is what the passivity checks rely on.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{Cavity, Field};
use crate::quasistatic::{Inputs, OutputPowers};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid drive: {0}")]
    InvalidDrive(String),
    #[error("run duration {duration_s:e} s is shorter than one round trip ({dt_s:e} s)")]
    EmptyRun { duration_s: f64, dt_s: f64 },
    #[error("control channel has no on-edge followed by an off-edge")]
    NoControlEdges,
    #[error("not switched: {0}")]
    NotSwitched(String),
    #[error("memory state indeterminate for {duration_s:e} s starting at t = {start_s:e} s")]
    IndeterminateState { start_s: f64, duration_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeShape {
    /// Jump to the new level at the segment start.
    Step,
    /// Raised-cosine transition lasting the segment's edge time.
    RaisedCosine,
}

/// From `start_s` on, the power moves to `level_w` with the given edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_s: f64,
    pub shape: EdgeShape,
    pub level_w: f64,
    pub edge_s: f64,
}

/// Piecewise input power for one port. The level before the first segment is 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Waveform {
    segments: Vec<Segment>,
}

impl Waveform {
    pub fn new(segments: Vec<Segment>) -> Result<Waveform, DynamicsError> {
        for s in &segments {
            if !(s.level_w.is_finite() && s.level_w >= 0.0) {
                return Err(DynamicsError::InvalidDrive(format!(
                    "level must be finite and >= 0, got {}",
                    s.level_w
                )));
            }
            if !(s.start_s.is_finite() && s.edge_s.is_finite() && s.edge_s >= 0.0) {
                return Err(DynamicsError::InvalidDrive(
                    "segment start and edge time must be finite, edge >= 0".into(),
                ));
            }
            if s.shape == EdgeShape::RaisedCosine && s.edge_s == 0.0 {
                return Err(DynamicsError::InvalidDrive(
                    "raised-cosine edge needs a positive edge time".into(),
                ));
            }
        }
        for w in segments.windows(2) {
            let end = w[0].start_s
                + if w[0].shape == EdgeShape::RaisedCosine {
                    w[0].edge_s
                } else {
                    0.0
                };
            if w[1].start_s < end {
                return Err(DynamicsError::InvalidDrive(format!(
                    "segment at {:e} s overlaps the edge of the one at {:e} s",
                    w[1].start_s, w[0].start_s
                )));
            }
        }
        Ok(Waveform { segments })
    }

    pub fn off() -> Waveform {
        Waveform::default()
    }

    /// Constant level from `t = 0`.
    pub fn constant(level_w: f64) -> Result<Waveform, DynamicsError> {
        Waveform::new(vec![Segment {
            start_s: 0.0,
            shape: EdgeShape::Step,
            level_w,
            edge_s: 0.0,
        }])
    }

    /// Raised-cosine rise at `on_s`, fall at `off_s`; `off_s = None` keeps it on.
    pub fn pulse(on_s: f64, off_s: Option<f64>, level_w: f64, edge_s: f64) -> Result<Waveform, DynamicsError> {
        let mut segs = vec![Segment {
            start_s: on_s,
            shape: EdgeShape::RaisedCosine,
            level_w,
            edge_s,
        }];
        if let Some(off) = off_s {
            segs.push(Segment {
                start_s: off,
                shape: EdgeShape::RaisedCosine,
                level_w: 0.0,
                edge_s,
            });
        }
        Waveform::new(segs)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn power_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.start_s <= t);
        if idx == 0 {
            return 0.0;
        }
        let seg = &self.segments[idx - 1];
        let before = if idx >= 2 {
            self.segments[idx - 2].level_w
        } else {
            0.0
        };
        match seg.shape {
            EdgeShape::RaisedCosine if t < seg.start_s + seg.edge_s => {
                let frac = 0.5 * (1.0 - (PI * (t - seg.start_s) / seg.edge_s).cos());
                before + (seg.level_w - before) * frac
            }
            _ => seg.level_w,
        }
    }

    pub fn peak(&self) -> f64 {
        self.segments.iter().map(|s| s.level_w).fold(0.0, f64::max)
    }
}

/// Input power in waveguide A at frequency 1 and waveguide B at frequency 2.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriveSignal {
    pub field1: Waveform,
    pub field2: Waveform,
}

impl DriveSignal {
    pub fn inputs_at(&self, t: f64) -> Inputs {
        Inputs::new(self.field1.power_at(t), self.field2.power_at(t))
    }
}

/// Intracavity amplitudes just after each field's input coupler.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CavityState {
    pub a1: Complex64,
    pub a2: Complex64,
}

impl CavityState {
    pub fn power(&self, field: Field) -> f64 {
        match field {
            Field::One => self.a1.norm_sqr(),
            Field::Two => self.a2.norm_sqr(),
        }
    }

    /// Circulating power summed over both fields; times `dt` this is the
    /// stored energy.
    pub fn stored_power(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }
}

/// Advances one round trip. `next` are the input powers arriving at the
/// couplers at the end of the step; the returned outputs leave the device
/// during the step.
pub fn step(cav: &Cavity, state: &CavityState, next: &Inputs) -> (CavityState, OutputPowers) {
    let ir = Complex64::new(0.0, cav.coupling);
    let t = cav.transmission;
    let advance = |field: Field, own: Complex64, other_power: f64| {
        let g = cav.loop_exponent(other_power);
        let half = Complex64::from_polar((-0.5 * g).exp(), 0.5 * cav.phase(field));
        let at_far_coupler = half * own;
        let dropped = ir * at_far_coupler;
        let returning = half * (t * at_far_coupler);
        let e_in = next.amplitude(field);
        let through = t * e_in + ir * returning;
        let updated = t * returning + ir * e_in;
        (updated, through.norm_sqr(), dropped.norm_sqr())
    };
    let (a1, through1, drop1) = advance(Field::One, state.a1, state.a2.norm_sqr());
    let (a2, through2, drop2) = advance(Field::Two, state.a2, state.a1.norm_sqr());
    (
        CavityState { a1, a2 },
        OutputPowers {
            out_1a: through1,
            out_1b: drop1,
            out_2a: drop2,
            out_2b: through2,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t_s: f64,
    pub i1r: f64,
    pub i2r: f64,
    pub in1: f64,
    pub in2: f64,
    pub outputs: OutputPowers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Round-trip time, s.
    pub dt: f64,
    /// Circulating power of the initial state.
    pub initial_stored_w: f64,
    pub samples: Vec<Sample>,
    pub final_state: CavityState,
}

impl TimeSeries {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("non-empty run")
    }

    /// Smallest value over all prefixes of
    /// `initial stored + input energy - output energy`, J. Non-negative for a
    /// passive device, up to rounding.
    pub fn passivity_margin(&self) -> f64 {
        let mut cum_in = self.initial_stored_w * self.dt;
        let mut cum_out = 0.0;
        let mut worst = f64::INFINITY;
        for s in &self.samples {
            cum_in += (s.in1 + s.in2) * self.dt;
            cum_out += (s.outputs.out_1a + s.outputs.out_1b + s.outputs.out_2a + s.outputs.out_2b)
                * self.dt;
            worst = worst.min(cum_in - cum_out);
        }
        worst
    }

    /// Total input energy over the run plus the initial stored energy, J.
    pub fn supplied_energy(&self) -> f64 {
        self.initial_stored_w * self.dt
            + self.samples.iter().map(|s| (s.in1 + s.in2) * self.dt).sum::<f64>()
    }
}

/// Runs `ceil(duration / dt)` round trips from `initial`. Sample `k` is at
/// `t = k dt`, `k = 1..=n`.
pub fn simulate(
    cav: &Cavity,
    drive: &DriveSignal,
    duration_s: f64,
    initial: CavityState,
) -> Result<TimeSeries, DynamicsError> {
    let dt = cav.round_trip_s;
    if !(duration_s >= dt) {
        return Err(DynamicsError::EmptyRun { duration_s, dt_s: dt });
    }
    let n = (duration_s / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(n);
    let mut state = initial;
    for k in 1..=n {
        let t = k as f64 * dt;
        let inputs = drive.inputs_at(t);
        let (next, outputs) = step(cav, &state, &inputs);
        state = next;
        samples.push(Sample {
            t_s: t,
            i1r: state.a1.norm_sqr(),
            i2r: state.a2.norm_sqr(),
            in1: inputs.p1_w,
            in2: inputs.p2_w,
            outputs,
        });
    }
    Ok(TimeSeries {
        dt,
        initial_stored_w: initial.stored_power(),
        samples,
        final_state: state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latencies {
    /// Control on-edge (50% crossing of the control input), s.
    pub control_on_s: f64,
    pub control_off_s: f64,
    /// Delay until the transmitted target reaches the threshold fraction of its plateau.
    pub on_s: f64,
    /// Delay until the reflected target recovers to the threshold fraction of its plateau.
    pub off_s: f64,
}

fn tail_mean(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = values.len();
    let take = (n / 10).max(1);
    values.skip(n - take).sum::<f64>() / take as f64
}

/// Switching latencies of the target (field 2) around one control (field 1)
/// pulse. Plateaus are the mean of the final 10% of samples of each interval.
pub fn switching_times(ts: &TimeSeries, threshold_fraction: f64) -> Result<Latencies, DynamicsError> {
    let s = &ts.samples;
    let peak = s.iter().map(|x| x.in1).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(DynamicsError::NoControlEdges);
    }
    let half = 0.5 * peak;
    let on = s
        .iter()
        .position(|x| x.in1 >= half)
        .ok_or(DynamicsError::NoControlEdges)?;
    let off = on
        + s[on..]
            .iter()
            .position(|x| x.in1 < half)
            .ok_or(DynamicsError::NoControlEdges)?;
    if on == 0 || off == s.len() - 1 {
        return Err(DynamicsError::NoControlEdges);
    }

    let latency = |from: usize,
                   to: usize,
                   baseline_from: usize,
                   channel: fn(&Sample) -> f64,
                   what: &str|
     -> Result<f64, DynamicsError> {
        let window = &s[from..to];
        let plateau = tail_mean(window.iter().map(channel));
        let baseline = tail_mean(s[baseline_from..from].iter().map(channel));
        if !(plateau > 0.0 && plateau > 2.0 * baseline) {
            return Err(DynamicsError::NotSwitched(format!(
                "{what} plateau {plateau:e} W vs {baseline:e} W before the edge"
            )));
        }
        let hit = window
            .iter()
            .find(|x| channel(x) >= threshold_fraction * plateau)
            .ok_or_else(|| DynamicsError::NotSwitched(format!("{what} never reached threshold")))?;
        Ok(hit.t_s - s[from].t_s)
    };

    let on_s = latency(on, off, 0, |x| x.outputs.out_2b, "transmitted target")?;
    let off_s = latency(off, s.len(), on, |x| x.outputs.out_2a, "reflected target")?;
    Ok(Latencies {
        control_on_s: s[on].t_s,
        control_off_s: s[off].t_s,
        on_s,
        off_s,
    })
}

/// Memory bit: field 1 dominant is 0, field 2 dominant is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bit {
    Zero,
    One,
    Ambiguous,
}

impl Bit {
    /// Ambiguous when the two intensities are within 1% of the larger.
    pub fn from_intensities(i1: f64, i2: f64) -> Bit {
        let m = i1.max(i2);
        if m <= 0.0 || (i1 - i2).abs() < 0.01 * m {
            Bit::Ambiguous
        } else if i1 > i2 {
            Bit::Zero
        } else {
            Bit::One
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Bit::Zero => '0',
            Bit::One => '1',
            Bit::Ambiguous => '?',
        }
    }
}

/// Both fields held at `hold_w`; a bit is written by gating the losing
/// field's input to zero for `write_window_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorySchedule {
    pub hold_w: f64,
    /// `(time, bit)` pairs in increasing time order; bits must not be ambiguous.
    pub writes: Vec<(f64, Bit)>,
    pub write_window_s: f64,
    pub settle_s: f64,
    pub edge_s: f64,
    pub duration_s: f64,
}

impl MemorySchedule {
    pub fn drive(&self) -> Result<DriveSignal, DynamicsError> {
        for w in self.writes.windows(2) {
            if w[1].0 < w[0].0 + self.write_window_s {
                return Err(DynamicsError::InvalidDrive("write windows overlap".into()));
            }
        }
        if self.writes.iter().any(|(_, b)| *b == Bit::Ambiguous) {
            return Err(DynamicsError::InvalidDrive("cannot write an ambiguous bit".into()));
        }
        let gated = |loser: Bit| -> Result<Waveform, DynamicsError> {
            let mut segs = Vec::new();
            let mut on_from = 0.0;
            let rise = |t: f64| Segment {
                start_s: t,
                shape: EdgeShape::RaisedCosine,
                level_w: self.hold_w,
                edge_s: self.edge_s,
            };
            for &(t, bit) in &self.writes {
                if bit != loser {
                    continue;
                }
                if t > on_from {
                    segs.push(rise(on_from));
                    segs.push(Segment {
                        start_s: t,
                        shape: EdgeShape::RaisedCosine,
                        level_w: 0.0,
                        edge_s: self.edge_s,
                    });
                }
                on_from = t + self.write_window_s;
            }
            if on_from < self.duration_s {
                segs.push(rise(on_from));
            }
            Waveform::new(segs)
        };
        Ok(DriveSignal {
            // field 1 loses when a 1 is written
            field1: gated(Bit::One)?,
            field2: gated(Bit::Zero)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldInterval {
    pub written: Bit,
    pub start_s: f64,
    pub end_s: f64,
    /// Whether every sample from `start_s + settle` to `end_s` reads `written`.
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRun {
    pub series: TimeSeries,
    pub bits: Vec<Bit>,
    pub holds: Vec<HoldInterval>,
}

impl MemoryRun {
    pub fn final_bit(&self) -> Bit {
        *self.bits.last().expect("non-empty run")
    }
}

pub fn memory_sequence(cav: &Cavity, schedule: &MemorySchedule) -> Result<MemoryRun, DynamicsError> {
    let drive = schedule.drive()?;
    let series = simulate(cav, &drive, schedule.duration_s, CavityState::default())?;
    let bits: Vec<Bit> = series
        .samples
        .iter()
        .map(|s| Bit::from_intensities(s.i1r, s.i2r))
        .collect();

    let window = (schedule.settle_s / series.dt).ceil() as usize;
    let mut run_start = None;
    for (k, bit) in bits.iter().enumerate() {
        match (bit, run_start) {
            (Bit::Ambiguous, None) => run_start = Some(k),
            (Bit::Ambiguous, Some(start)) if k - start + 1 > window => {
                return Err(DynamicsError::IndeterminateState {
                    start_s: series.samples[start].t_s,
                    duration_s: (k - start + 1) as f64 * series.dt,
                });
            }
            (Bit::Ambiguous, Some(_)) => {}
            _ => run_start = None,
        }
    }

    let mut holds = Vec::with_capacity(schedule.writes.len());
    for (i, &(t, bit)) in schedule.writes.iter().enumerate() {
        let start_s = t + schedule.write_window_s;
        let end_s = schedule
            .writes
            .get(i + 1)
            .map(|w| w.0)
            .unwrap_or(schedule.duration_s);
        let check_from = start_s + schedule.settle_s;
        let held = series
            .samples
            .iter()
            .zip(&bits)
            .filter(|(s, _)| s.t_s >= check_from && s.t_s < end_s)
            .all(|(_, b)| *b == bit);
        holds.push(HoldInterval {
            written: bit,
            start_s,
            end_s,
            held,
        });
    }
    Ok(MemoryRun {
        series,
        bits,
        holds,
    })
}
