//! Simulation and bifurcation analysis of the N-agent motivation-dynamics
//! rendezvous system.
//!
//! Each agent blends two navigation tasks (visit its designated point,
//! move to the centroid of the others) through a motivation `m ∈ [-1, 1]`
//! that follows an unfolding-pitchfork ODE driven by low-pass filtered task
//! costs. The crate provides the vector fields, the symmetric deadlock
//! equilibrium, analytic Jacobians and stability thresholds, and trajectory
//! tools (integration, regime classification, Poincaré sections).

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod linearization;
pub mod output;
pub mod simulate;

pub use error::{Error, Result};
