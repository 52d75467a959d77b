//! Parametric finite-element curvature flow of planar triods.
//!
//! Three piecewise-linear curves share a mobile triple junction and end in
//! fixed points. The semi-implicit scheme evolves them by curvature flow,
//! with an `epsilon`-weighted harmonic-map term that redistributes nodes
//! tangentially and lets the junction move. Besides the time stepper the
//! crate contains the experiment harness: nested-grid error functionals,
//! conditioning studies and the scenario runner behind the `triodflow` CLI.

pub mod assembly;
pub mod cg;
pub mod config;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod scenarios;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use mesh::{CurveChain, ElementGeometry, Point, SimParams, TriodState};
pub use stepper::{evolve, time_step, StepReport, StoppingRule, Trajectory};
