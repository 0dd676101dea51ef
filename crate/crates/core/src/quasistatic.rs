//! Steady-state intracavity fields under slowly varying inputs.
//!
//! Field 1 enters from waveguide A at the upper coupler and field 2 from
//! waveguide B at the lower coupler. `E1R` is sampled just after the upper
//! coupler, `E2R` just after the lower one. Each field sees the linear loss
//! `gamma` plus cross two-photon loss `alpha * I_other`, with `I_other` taken
//! as uniform around the loop (high-Q approximation).
//!
//! For a fixed intensity of the other field the round trip is linear and
//!
//! ```text
//! E_R = i R E_in / (1 - e^{i phi} e^{-(gamma + alpha I_other) L} T^2)
//! ```
//!
//! The coupled pair is solved by alternating the two relations, starting from
//! a seed for `I2R`.

use std::collections::VecDeque;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{Cavity, Field};

/// Denominator magnitude below which the resonance is treated as singular.
const SINGULAR_DENOMINATOR: f64 = 1e-15;
/// Relative separation below which two intensities count as equal.
const SYMMETRIC_REL: f64 = 1e-6;
/// Number of trailing iterates kept for divergence reports.
const TAIL_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular resonance: |1 - T^2 e^(i phi) e^(-gL)| = {0:e}")]
    SingularResonance(f64),
    #[error("fixed-point iteration did not converge in {iterations} iterations (last relative change {last_change:e})")]
    Divergence {
        iterations: usize,
        last_change: f64,
        /// Trailing `(I1R, I2R)` iterates, oldest first.
        tail: Vec<(f64, f64)>,
    },
    #[error("no bracketing interval found for the symmetric solution")]
    NoSymmetricSolution,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Input powers in the two waveguides, W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inputs {
    pub p1_w: f64,
    pub p2_w: f64,
}

impl Inputs {
    pub fn new(p1_w: f64, p2_w: f64) -> Inputs {
        Inputs { p1_w, p2_w }
    }

    pub fn symmetric(p_w: f64) -> Inputs {
        Inputs { p1_w: p_w, p2_w: p_w }
    }

    pub fn power(&self, field: Field) -> f64 {
        match field {
            Field::One => self.p1_w,
            Field::Two => self.p2_w,
        }
    }

    /// Input amplitudes are real; the input phase is the reference.
    pub fn amplitude(&self, field: Field) -> Complex64 {
        Complex64::new(self.power(field).sqrt(), 0.0)
    }

    fn check(&self) -> Result<(), SolveError> {
        for (name, p) in [("P1_in", self.p1_w), ("P2_in", self.p2_w)] {
            if !(p.is_finite() && p >= 0.0) {
                return Err(SolveError::InvalidInput(format!(
                    "{name} must be finite and >= 0, got {p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the relative change of both intensities drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Field1Dominant,
    Field2Dominant,
    Symmetric,
}

impl Branch {
    pub fn classify(i1r: f64, i2r: f64) -> Branch {
        let scale = i1r.max(i2r);
        if (i1r - i2r).abs() <= SYMMETRIC_REL * scale {
            Branch::Symmetric
        } else if i1r > i2r {
            Branch::Field1Dominant
        } else {
            Branch::Field2Dominant
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Field1Dominant => "field1-dominant",
            Branch::Field2Dominant => "field2-dominant",
            Branch::Symmetric => "symmetric",
        }
    }
}

/// Powers leaving the device, W.
///
/// `out_1a` and `out_2b` are the through ports (straight past the toroid);
/// `out_1b` and `out_2a` are the drop ports (coupled out at the opposite
/// coupler and travelling backwards).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputPowers {
    pub out_1a: f64,
    pub out_1b: f64,
    pub out_2a: f64,
    pub out_2b: f64,
}

impl OutputPowers {
    pub fn through(&self, field: Field) -> f64 {
        match field {
            Field::One => self.out_1a,
            Field::Two => self.out_2b,
        }
    }

    pub fn drop_port(&self, field: Field) -> f64 {
        match field {
            Field::One => self.out_1b,
            Field::Two => self.out_2a,
        }
    }

    pub fn total(&self, field: Field) -> f64 {
        self.through(field) + self.drop_port(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub spectral_radius: f64,
    /// Jacobian of one solver sweep, `d(next I_i) / d(I_j)`.
    pub jacobian: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadySolution {
    pub i1r: f64,
    pub i2r: f64,
    pub e1r: Complex64,
    pub e2r: Complex64,
    pub branch: Branch,
    pub stable: bool,
    pub spectral_radius: f64,
    pub iterations: usize,
    pub outputs: OutputPowers,
}

impl SteadySolution {
    pub fn intensity(&self, field: Field) -> f64 {
        match field {
            Field::One => self.i1r,
            Field::Two => self.i2r,
        }
    }
}

/// Intracavity amplitude for input amplitude `e_in` while the other field
/// circulates with `other_power_w`.
pub fn intracavity_response(
    cav: &Cavity,
    e_in: Complex64,
    other_power_w: f64,
    phase: f64,
) -> Result<Complex64, SolveError> {
    let round_trip = cav.transmission.powi(2) * (-cav.loop_exponent(other_power_w)).exp();
    let denom = Complex64::new(1.0, 0.0) - Complex64::from_polar(round_trip, phase);
    let mag = denom.norm();
    if mag < SINGULAR_DENOMINATOR {
        return Err(SolveError::SingularResonance(mag));
    }
    Ok(Complex64::new(0.0, cav.coupling) * e_in / denom)
}

/// [`intracavity_response`] for one of the two device inputs.
pub fn field_response(
    cav: &Cavity,
    inputs: &Inputs,
    field: Field,
    other_power_w: f64,
) -> Result<Complex64, SolveError> {
    intracavity_response(cav, inputs.amplitude(field), other_power_w, cav.phase(field))
}

fn response_power(
    cav: &Cavity,
    inputs: &Inputs,
    field: Field,
    other_power_w: f64,
) -> Result<f64, SolveError> {
    Ok(field_response(cav, inputs, field, other_power_w)?.norm_sqr())
}

fn rel_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}

/// Alternates the two field relations from `seed_i2r` until self-consistent.
pub fn solve_fixed_point(
    cav: &Cavity,
    inputs: &Inputs,
    seed_i2r: f64,
    opts: &SolverOptions,
) -> Result<SteadySolution, SolveError> {
    inputs.check()?;
    if !(seed_i2r.is_finite() && seed_i2r >= 0.0) {
        return Err(SolveError::InvalidInput(format!(
            "seed must be finite and >= 0, got {seed_i2r}"
        )));
    }

    let mut i1 = f64::NAN;
    let mut i2 = seed_i2r;
    let mut tail = VecDeque::with_capacity(TAIL_LEN);
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let next_i1 = response_power(cav, inputs, Field::One, i2)?;
        let next_i2 = response_power(cav, inputs, Field::Two, next_i1)?;
        change = if i1.is_nan() {
            f64::INFINITY
        } else {
            rel_change(i1, next_i1).max(rel_change(i2, next_i2))
        };
        if !change.is_finite() && !i1.is_nan() {
            break;
        }
        i1 = next_i1;
        i2 = next_i2;
        if tail.len() == TAIL_LEN {
            tail.pop_front();
        }
        tail.push_back((i1, i2));
        if change < opts.tolerance {
            return finish(cav, inputs, i2, iterations);
        }
    }
    Err(SolveError::Divergence {
        iterations,
        last_change: change,
        tail: tail.into_iter().collect(),
    })
}

fn finish(
    cav: &Cavity,
    inputs: &Inputs,
    i2: f64,
    iterations: usize,
) -> Result<SteadySolution, SolveError> {
    let e1r = field_response(cav, inputs, Field::One, i2)?;
    let e2r = field_response(cav, inputs, Field::Two, e1r.norm_sqr())?;
    let (i1r, i2r) = (e1r.norm_sqr(), e2r.norm_sqr());
    let stability = classify_stability(cav, inputs, i1r, i2r)?;
    Ok(SteadySolution {
        i1r,
        i2r,
        e1r,
        e2r,
        branch: Branch::classify(i1r, i2r),
        stable: stability.stable,
        spectral_radius: stability.spectral_radius,
        iterations,
        outputs: output_fields(cav, inputs, e1r, e2r),
    })
}

/// The fixed point with `I1R = I2R` for equal inputs and phases, found by
/// bracketing and bisection on `F(I) - I`.
pub fn find_symmetric_solution(
    cav: &Cavity,
    p_in: f64,
) -> Result<SteadySolution, SolveError> {
    let inputs = Inputs::symmetric(p_in);
    inputs.check()?;
    if cav.phases[0] != cav.phases[1] {
        return Err(SolveError::InvalidInput(
            "symmetric solution needs identical round-trip phases".into(),
        ));
    }
    let excess =
        |i: f64| -> Result<f64, SolveError> { Ok(response_power(cav, &inputs, Field::One, i)? - i) };

    let linear = response_power(cav, &inputs, Field::One, 0.0)?;
    let mut lo = 0.0;
    let mut hi = linear;
    let mut steps = 0;
    if linear > 0.0 {
        let mut grown = 0;
        loop {
            let g = excess(hi)?;
            if !g.is_finite() {
                return Err(SolveError::NoSymmetricSolution);
            }
            if g <= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            grown += 1;
            if grown > 64 {
                return Err(SolveError::NoSymmetricSolution);
            }
        }
        while steps < 400 && hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if excess(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
    }
    let i = 0.5 * (lo + hi);

    let e1r = field_response(cav, &inputs, Field::One, i)?;
    let e2r = field_response(cav, &inputs, Field::Two, i)?;
    let stability = classify_stability(cav, &inputs, i, i)?;
    Ok(SteadySolution {
        i1r: i,
        i2r: i,
        e1r,
        e2r,
        branch: Branch::Symmetric,
        stable: stability.stable,
        spectral_radius: stability.spectral_radius,
        iterations: steps,
        outputs: output_fields(cav, &inputs, e1r, e2r),
    })
}

/// Linear stability of one solver sweep `(I1, I2) -> (F1(I2), F2(F1(I2)))`
/// at the given point, from a central-difference Jacobian.
pub fn classify_stability(
    cav: &Cavity,
    inputs: &Inputs,
    i1r: f64,
    i2r: f64,
) -> Result<Stability, SolveError> {
    let sweep = |x: [f64; 2]| -> Result<[f64; 2], SolveError> {
        let n1 = response_power(cav, inputs, Field::One, x[1])?;
        let n2 = response_power(cav, inputs, Field::Two, n1)?;
        Ok([n1, n2])
    };
    let point = [i1r, i2r];
    let scale = i1r.max(i2r).max(1e-300);
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = 1e-6 * if point[j] > 0.0 { point[j] } else { scale };
        let mut up = point;
        up[j] += h;
        let f_up = sweep(up)?;
        let (f_down, span) = if point[j] - h >= 0.0 {
            let mut down = point;
            down[j] -= h;
            (sweep(down)?, 2.0 * h)
        } else {
            (sweep(point)?, h)
        };
        for i in 0..2 {
            jac[i][j] = (f_up[i] - f_down[i]) / span;
        }
    }
    let radius = spectral_radius(&jac);
    Ok(Stability {
        stable: radius < 1.0,
        spectral_radius: radius,
        jacobian: jac,
    })
}

fn spectral_radius(m: &[[f64; 2]; 2]) -> f64 {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (half_trace + root).abs().max((half_trace - root).abs())
    } else {
        // complex pair, |lambda|^2 = det
        det.sqrt()
    }
}

/// Output powers for intracavity amplitudes `e1r`, `e2r`.
///
/// Through port: `T E_in + i R T e^{i phi} e^{-g} E_R`. Drop port: the field
/// after half a loop, `i R e^{i phi/2} e^{-g/2} E_R`.
pub fn output_fields(
    cav: &Cavity,
    inputs: &Inputs,
    e1r: Complex64,
    e2r: Complex64,
) -> OutputPowers {
    let ports = |field: Field, own: Complex64, other: Complex64| -> (f64, f64) {
        let g = cav.loop_exponent(other.norm_sqr());
        let phase = cav.phase(field);
        let half = Complex64::from_polar((-0.5 * g).exp(), 0.5 * phase);
        let ir = Complex64::new(0.0, cav.coupling);
        let t = cav.transmission;
        let through = inputs.amplitude(field) * t + ir * half * half * own * t;
        let dropped = ir * half * own;
        (through.norm_sqr(), dropped.norm_sqr())
    };
    let (out_1a, out_1b) = ports(Field::One, e1r, e2r);
    let (out_2b, out_2a) = ports(Field::Two, e2r, e1r);
    OutputPowers {
        out_1a,
        out_1b,
        out_2a,
        out_2b,
    }
}

/// The two single-field response curves over a grid of assumed intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurves {
    /// `(assumed I1R, I2R)` from the field-2 relation.
    pub field2_vs_i1: Vec<(f64, f64)>,
    /// `(assumed I2R, I1R)` from the field-1 relation.
    pub field1_vs_i2: Vec<(f64, f64)>,
}

pub fn response_curves(
    cav: &Cavity,
    inputs: &Inputs,
    grid: &[f64],
) -> Result<ResponseCurves, SolveError> {
    if grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(SolveError::InvalidInput(
            "assumed intensities must be finite and >= 0".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(SolveError::InvalidInput("grid must be non-decreasing".into()));
    }
    let mut curves = ResponseCurves {
        field2_vs_i1: Vec::with_capacity(grid.len()),
        field1_vs_i2: Vec::with_capacity(grid.len()),
    };
    for &x in grid {
        curves
            .field2_vs_i1
            .push((x, response_power(cav, inputs, Field::Two, x)?));
        curves
            .field1_vs_i2
            .push((x, response_power(cav, inputs, Field::One, x)?));
    }
    Ok(curves)
}
