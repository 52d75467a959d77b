//! Semi-implicit time stepping and full evolutions.
//!
//! Each step freezes the geometry (tangent, normal, length element) at the
//! previous time level, treats the stiffness term implicitly and solves the
//! resulting constrained system for the nodal increment with CG.

use serde::{Deserialize, Serialize};

use crate::assembly::{build_step_system, Layout, LinearOperator};
use crate::cg::{cg_solve, DEFAULT_TOLERANCE, MAX_ITER_PER_UNKNOWN};
use crate::error::{Error, Result};
use crate::mesh::{energy, min_segment_length, Point, SimParams, TriodState, MIN_CHORD_LENGTH};

/// Diagnostics of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub cg_iterations: usize,
    pub final_relative_residual: f64,
    pub energy_after: f64,
    pub min_segment_length_after: f64,
    /// `max |U_j^n - U_j^{n-1}| / delta` over nodes `1..=J` of all curves.
    pub max_nodal_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// Run all `params.steps` steps.
    FixedSteps,
    /// Stop at the first step whose maximal nodal speed drops below the
    /// threshold; `params.steps` caps the run.
    VelocityBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_rel: f64,
    pub max_iter_per_unknown: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_rel: DEFAULT_TOLERANCE,
            max_iter_per_unknown: MAX_ITER_PER_UNKNOWN,
        }
    }
}

/// Recorded evolution. `states[k]` is the state after `k * stride` steps;
/// `reports[n - 1]` describes step `n`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SimParams,
    pub stride: usize,
    pub states: Vec<TriodState>,
    pub reports: Vec<StepReport>,
    pub final_state: TriodState,
    /// Index of the last computed step (`N_tot` for velocity-stopped runs).
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn time_of(&self, k: usize) -> f64 {
        (k * self.stride) as f64 * self.params.delta
    }
}

pub fn time_step(triod: &TriodState, params: &SimParams) -> Result<(TriodState, StepReport)> {
    time_step_with(triod, params, SolverSettings::default())
}

pub fn time_step_with(
    triod: &TriodState,
    params: &SimParams,
    settings: SolverSettings,
) -> Result<(TriodState, StepReport)> {
    if triod.elements() != params.elements() {
        return Err(Error::InvalidParams(format!(
            "triod has {} elements per curve but parameters say {}",
            triod.elements(),
            params.elements()
        )));
    }
    let system = build_step_system(triod, params)?;
    let max_iter = settings.max_iter_per_unknown * system.operator.dim();
    let outcome = cg_solve(&system.operator, &system.rhs, settings.tol_rel, max_iter)?;
    let inc = outcome.solution;
    let layout = Layout::new(triod.elements());
    let j_max = triod.elements();

    let mut next = triod.clone();
    let junction_inc = Point::new(inc[layout.index(0, 0, 0)], inc[layout.index(0, 0, 1)]);
    let junction = triod.junction() + junction_inc;
    let mut max_step: f64 = 0.0;
    for (i, curve) in next.curves_mut().iter_mut().enumerate() {
        let nodes = curve.nodes_mut();
        nodes[0] = junction;
        for (j, node) in nodes.iter_mut().enumerate().take(j_max).skip(1) {
            let d = Point::new(inc[layout.index(i, j, 0)], inc[layout.index(i, j, 1)]);
            *node += d;
            max_step = max_step.max(d.norm());
        }
    }
    next.time = triod.time + params.delta;

    let min_len = min_segment_length(&next);
    if !(min_len > MIN_CHORD_LENGTH) {
        next.geometry()?;
    }
    let report = StepReport {
        cg_iterations: outcome.iterations,
        final_relative_residual: outcome.relative_residual,
        energy_after: energy(&next, params.epsilon)?,
        min_segment_length_after: min_len,
        max_nodal_speed: max_step / params.delta,
    };
    Ok((next, report))
}

/// Outcome of [`evolve_observed`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: TriodState,
    pub steps_taken: usize,
    pub reports: Vec<StepReport>,
}

/// Runs an evolution and hands every state to `observe`, starting with the
/// initial one (`report = None`).
pub fn evolve_observed<F>(
    initial: &TriodState,
    params: &SimParams,
    stop: StoppingRule,
    mut observe: F,
) -> Result<RunSummary>
where
    F: FnMut(usize, &TriodState, Option<&StepReport>) -> Result<()>,
{
    observe(0, initial, None)?;
    let mut state = initial.clone();
    let mut reports = Vec::new();
    let mut n = 0;
    while n < params.steps {
        let (next, report) = time_step(&state, params)?;
        n += 1;
        observe(n, &next, Some(&report))?;
        reports.push(report);
        state = next;
        if let StoppingRule::VelocityBelow(threshold) = stop {
            if report.max_nodal_speed < threshold {
                break;
            }
        }
    }
    Ok(RunSummary {
        final_state: state,
        steps_taken: n,
        reports,
    })
}

pub fn evolve(
    initial: &TriodState,
    params: &SimParams,
    stop: StoppingRule,
    stride: usize,
) -> Result<Trajectory> {
    let stride = stride.max(1);
    let mut states = Vec::new();
    let summary = evolve_observed(initial, params, stop, |n, s, _| {
        if n % stride == 0 {
            states.push(s.clone());
        }
        Ok(())
    })?;
    Ok(Trajectory {
        params: *params,
        stride,
        states,
        reports: summary.reports,
        final_state: summary.final_state,
        steps_taken: summary.steps_taken,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{interpolate_initial, translate};
    use approx::assert_relative_eq;

    fn steiner(j: usize) -> TriodState {
        let curves = [90.0f64, 210.0, 330.0].map(|a| {
            let d = Point::new(a.to_radians().cos(), a.to_radians().sin());
            interpolate_initial(|x| d * x, j)
        });
        TriodState::new(curves, 0.0).unwrap()
    }

    fn wobbly(j: usize) -> TriodState {
        let curves = [0.3f64, 2.4, 4.4].map(|a| {
            let (s, c) = a.sin_cos();
            interpolate_initial(
                move |x| {
                    let w = 0.15 * (std::f64::consts::PI * x).sin();
                    Point::new(c * x - s * w, s * x + c * w)
                },
                j,
            )
        });
        TriodState::new(curves, 0.0).unwrap()
    }

    #[test]
    fn steiner_triod_is_stationary() {
        let p = SimParams::new(1e-3, 10, 1e-3, 1).unwrap();
        let (next, report) = time_step(&steiner(10), &p).unwrap();
        assert!(report.max_nodal_speed * p.delta <= 1e-9);
        for (a, b) in next.curves().iter().zip(steiner(10).curves()) {
            for (x, y) in a.nodes().iter().zip(b.nodes()) {
                assert!((x - y).amax() <= 1e-9);
            }
        }
    }

    #[test]
    fn junction_and_endpoints_exact() {
        let t = wobbly(12);
        let p = SimParams::new(0.01, 12, 0.002, 5).unwrap();
        let traj = evolve(&t, &p, StoppingRule::FixedSteps, 1).unwrap();
        assert_eq!(traj.states.len(), 6);
        for s in &traj.states {
            let c = s.curves();
            assert_eq!(c[0].junction(), c[1].junction());
            assert_eq!(c[1].junction(), c[2].junction());
            assert_eq!(s.endpoints(), t.endpoints());
        }
        assert_relative_eq!(traj.final_state.time, 5.0 * 0.002, epsilon = 1e-15);
        assert!(traj.reports.iter().all(|r| r.final_relative_residual <= 1e-10));
    }

    #[test]
    fn zero_steps_keeps_initial_state() {
        let t = wobbly(6);
        let p = SimParams::new(0.01, 6, 0.01, 0).unwrap();
        let traj = evolve(&t, &p, StoppingRule::FixedSteps, 1).unwrap();
        assert_eq!(traj.states, vec![t.clone()]);
        assert_eq!(traj.steps_taken, 0);
        assert!(traj.reports.is_empty());
    }

    #[test]
    fn translation_equivariance() {
        let t = wobbly(9);
        let p = SimParams::new(0.05, 9, 0.004, 1).unwrap();
        let shift = Point::new(0.37, -1.25);
        let (a, _) = time_step(&translate(&t, shift), &p).unwrap();
        let (b, _) = time_step(&t, &p).unwrap();
        let b = translate(&b, shift);
        for (ca, cb) in a.curves().iter().zip(b.curves()) {
            for (x, y) in ca.nodes().iter().zip(cb.nodes()) {
                assert!((x - y).amax() <= 1e-13, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn velocity_rule_stops_early() {
        let p = SimParams::new(0.01, 6, 0.01, 50).unwrap();
        let traj = evolve(&steiner(6), &p, StoppingRule::VelocityBelow(1e-6), 1).unwrap();
        assert_eq!(traj.steps_taken, 1);
    }

    #[test]
    fn mismatched_params_rejected() {
        let p = SimParams::new(0.01, 7, 0.01, 1).unwrap();
        assert!(time_step(&steiner(6), &p).is_err());
    }
}
