//! Simulation of a two-waveguide toroidal microresonator switch and memory
//! driven by cross two-photon absorption in rubidium vapor.
//!
//! Units: circulating and port powers in W, intensities in GW/cm^2, loss in
//! 1/cm, two-photon coefficients in cm/GW.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod figures;
pub mod model;
pub mod output;
pub mod performance;
pub mod quasistatic;
pub mod report;
pub mod rubidium;

pub use config::{Config, ConfigError, Setup};
pub use model::{Cavity, Field, LossModel};
pub use quasistatic::{Branch, Inputs, SolveError, SolverOptions, SteadySolution};
