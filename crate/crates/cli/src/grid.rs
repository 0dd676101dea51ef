//! `KEY=start:stop:steps[:log]` sweep axes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid `{0}`: expected KEY=start:stop:steps[:log]")]
    Syntax(String),
    #[error("grid `{spec}`: {reason}")]
    Invalid { spec: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Axis, GridError> {
        let syntax = || GridError::Syntax(spec.to_string());
        let invalid = |reason: &str| GridError::Invalid {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (key, range) = spec.split_once('=').ok_or_else(syntax)?;
        let parts: Vec<&str> = range.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            _ => return Err(syntax()),
        };
        let start: f64 = parts[0].trim().parse().map_err(|_| syntax())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| syntax())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| syntax())?;
        if steps == 0 {
            return Err(invalid("steps must be >= 1"));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(invalid("bounds must be finite"));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(invalid("log spacing needs positive bounds"));
        }
        let at = |i: usize| {
            if i == 0 {
                return start;
            }
            let f = i as f64 / (steps - 1) as f64;
            if i == steps - 1 {
                stop
            } else if log {
                (start.ln() + f * (stop.ln() - start.ln())).exp()
            } else {
                start + f * (stop - start)
            }
        };
        Ok(Axis {
            key: key.trim().to_string(),
            values: (0..steps).map(at).collect(),
        })
    }
}

/// Cartesian product in row-major order: the last axis varies fastest.
pub fn points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}
