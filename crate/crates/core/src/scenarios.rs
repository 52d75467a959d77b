//! Initial data and drivers for the experiment scenarios.
//!
//! Drivers return plain result structs; writing them to disk is the job of
//! [`crate::report`]. Independent runs of a sweep go through a rayon pool
//! whose size can be capped with `TRIODFLOW_WORKERS`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{energy, interpolate_initial, min_segment_length, rotate, Point, SimParams, TriodState};
use crate::metrics::{
    eoc, epsilon_errors, junction_coefficients, ErrorAccumulator, ErrorReport, JunctionBalance,
    NestedGridMap,
};
use crate::spectral::{
    attach_eocs, equilibrated_mass_spectrum, system_condition, SpectrumReport, SystemConvention,
};
use crate::stepper::{evolve_observed, StepReport, StoppingRule, Trajectory};

/// Rotation applied to the convergence initial data, degrees.
pub const CONVERGENCE_ROTATION_DEG: f64 = 18.0;

pub const WORKERS_ENV: &str = "TRIODFLOW_WORKERS";

fn check_elements(j: usize) -> Result<()> {
    if j < 2 {
        return Err(Error::InvalidParams(format!("need J >= 2, got {j}")));
    }
    Ok(())
}

fn triod_from(j: usize, f: impl Fn(usize, f64) -> Point) -> Result<TriodState> {
    let curves = [0, 1, 2].map(|i| interpolate_initial(|x| f(i, x), j));
    TriodState::new(curves, 0.0)
}

/// Junction offset of the convergence data before rotation.
pub fn convergence_junction_offset() -> f64 {
    (3f64.sqrt() - 2f64.sqrt()) / 2.0
}

pub fn make_convergence_initial_unrotated(j: usize) -> Result<TriodState> {
    check_elements(j)?;
    let zt = convergence_junction_offset();
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    triod_from(j, |i, x| match i {
        0 => Point::new(zt + x * (1.0 - zt), (1.0 - zt) * (PI * x).sin() / (2.0 * PI)),
        1 => Point::new(zt - s3 * x / 2.0, s2 * x / 2.0),
        _ => Point::new(zt - s3 * x * x / 2.0, -s2 * x / 2.0),
    })
}

pub fn make_convergence_initial(j: usize) -> Result<TriodState> {
    Ok(rotate(&make_convergence_initial_unrotated(j)?, CONVERGENCE_ROTATION_DEG))
}

/// Straight horizontal chain from `(-zt, 0)` to `(1, 0)` plus two vertical
/// chains to `(-zt, +-z)`, with `zt = sqrt(1 - z^2)`.
pub fn make_epsilon_initial(j: usize, z: f64) -> Result<TriodState> {
    check_elements(j)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < z < 1, got {z}")));
    }
    let zt = (1.0 - z * z).sqrt();
    triod_from(j, |i, x| match i {
        0 => Point::new(-zt + x * (1.0 + zt), 0.0),
        1 => Point::new(-zt, x * z),
        _ => Point::new(-zt, -x * z),
    })
}

pub fn make_spiral_initial(j: usize) -> Result<TriodState> {
    check_elements(j)?;
    triod_from(j, |i, x| {
        let a = 6.0 * PI * x + 2.0 * PI * i as f64 / 3.0;
        Point::new(a.cos(), a.sin()) * x
    })
}

/// Three unit segments meeting at the origin at 120 degrees.
pub fn make_steiner_initial(j: usize) -> Result<TriodState> {
    check_elements(j)?;
    triod_from(j, |i, x| {
        let a = (90.0 + 120.0 * i as f64).to_radians();
        Point::new(a.cos(), a.sin()) * x
    })
}

/// How the self-intersecting data are made to share a junction.
///
/// With the parabola `b` as written, the second and third curves start at
/// `(0, +-b(0))` instead of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionFix {
    /// Shift curves 2 and 3 by `-+(0, b(0))`.
    #[default]
    Shift,
    /// Use `b(x) - b(0)` written out as its own parabola.
    Reinterpret,
    /// Take the formulas literally; fails since the junction is split.
    None,
}

pub fn self_intersect_parabola(x: f64) -> f64 {
    1.5 * 3f64.sqrt() * (x - 1.0 / 3.0).powi(2) - 3f64.sqrt() / 2.0
}

pub fn make_self_intersect_initial(j: usize, fix: JunctionFix) -> Result<TriodState> {
    check_elements(j)?;
    let b0 = self_intersect_parabola(0.0);
    let b = |x: f64| match fix {
        JunctionFix::Shift => self_intersect_parabola(x) - b0,
        JunctionFix::Reinterpret => 1.5 * 3f64.sqrt() * (x - 1.0 / 3.0).powi(2) - 3f64.sqrt() / 6.0,
        JunctionFix::None => self_intersect_parabola(x),
    };
    triod_from(j, |i, x| match i {
        0 => Point::new(x, 0.0),
        1 => Point::new(-x, b(x)),
        _ => Point::new(x, -b(x)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialShape {
    Convergence,
    Epsilon,
    Spiral,
    SelfIntersect,
    Steiner,
}

pub fn make_initial(shape: InitialShape, j: usize, z: f64, fix: JunctionFix) -> Result<TriodState> {
    match shape {
        InitialShape::Convergence => make_convergence_initial(j),
        InitialShape::Epsilon => make_epsilon_initial(j, z),
        InitialShape::Spiral => make_spiral_initial(j),
        InitialShape::SelfIntersect => make_self_intersect_initial(j, fix),
        InitialShape::Steiner => make_steiner_initial(j),
    }
}

/// Thread pool honouring `TRIODFLOW_WORKERS`.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config(format!("{WORKERS_ENV} must be positive")));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    worker_pool()?.install(|| items.par_iter().map(f).collect())
}

/// Invariant and health checks gathered along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// Largest `E(U^n) - E(U^{n-1})`; negative when the energy strictly decays.
    pub max_energy_increase: f64,
    pub junction_exact: bool,
    pub endpoints_exact: bool,
    pub max_cg_iterations: usize,
    pub min_segment_length: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
}

struct Monitor {
    endpoints: [Point; 3],
    last_energy: f64,
    diag: RunDiagnostics,
}

impl Monitor {
    fn new(initial: &TriodState, epsilon: f64) -> Result<Self> {
        let e0 = energy(initial, epsilon)?;
        Ok(Self {
            endpoints: initial.endpoints(),
            last_energy: e0,
            diag: RunDiagnostics {
                max_energy_increase: f64::NEG_INFINITY,
                junction_exact: true,
                endpoints_exact: true,
                max_cg_iterations: 0,
                min_segment_length: min_segment_length(initial),
                initial_energy: e0,
                final_energy: e0,
            },
        })
    }

    fn observe(&mut self, state: &TriodState, report: Option<&StepReport>) {
        let c = state.curves();
        let j = c[0].junction();
        self.diag.junction_exact &= c[1].junction() == j && c[2].junction() == j;
        self.diag.endpoints_exact &= state.endpoints() == self.endpoints;
        if let Some(r) = report {
            self.diag.max_energy_increase = self.diag.max_energy_increase.max(r.energy_after - self.last_energy);
            self.last_energy = r.energy_after;
            self.diag.final_energy = r.energy_after;
            self.diag.max_cg_iterations = self.diag.max_cg_iterations.max(r.cg_iterations);
            self.diag.min_segment_length = self.diag.min_segment_length.min(r.min_segment_length_after);
        }
    }
}

/// Evolution with every state stored, plus diagnostics.
pub fn run_recorded(
    initial: &TriodState,
    params: &SimParams,
    stop: StoppingRule,
) -> Result<(Trajectory, RunDiagnostics)> {
    let mut monitor = Monitor::new(initial, params.epsilon)?;
    let mut states = Vec::with_capacity(params.steps + 1);
    let summary = evolve_observed(initial, params, stop, |_, s, r| {
        monitor.observe(s, r);
        states.push(s.clone());
        Ok(())
    })?;
    let traj = Trajectory {
        params: *params,
        stride: 1,
        states,
        reports: summary.reports,
        final_state: summary.final_state,
        steps_taken: summary.steps_taken,
    };
    Ok((traj, monitor.diag))
}

/// Number of steps of size `final_time / steps` must reproduce `delta`.
pub fn steps_for(final_time: f64, delta: f64) -> Result<usize> {
    let n = (final_time / delta).round();
    if n < 1.0 || ((n * delta - final_time).abs() > 1e-9 * final_time) {
        return Err(Error::InvalidParams(format!(
            "final time {final_time} is not a multiple of delta {delta}"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionAxis {
    /// EOCs against `J`.
    Space,
    /// EOCs against `N`.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub epsilon: f64,
    pub final_time: f64,
    /// `(J, N)` of the compared runs.
    pub runs: Vec<(usize, usize)>,
    /// `(J_ref, N_ref)`.
    pub reference: (usize, usize),
    pub axis: ResolutionAxis,
}

impl ConvergenceSetup {
    fn params(&self, j: usize, n: usize) -> Result<SimParams> {
        SimParams::new(self.epsilon, j, self.final_time / n as f64, n)
    }

    pub fn validate(&self) -> Result<Vec<NestedGridMap>> {
        if self.runs.is_empty() {
            return Err(Error::InvalidParams("no runs to compare".into()));
        }
        let reference = self.params(self.reference.0, self.reference.1)?;
        self.runs
            .iter()
            .map(|&(j, n)| NestedGridMap::new(&self.params(j, n)?, &reference))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub elements: usize,
    pub steps: usize,
    pub errors: ErrorReport,
    /// Against the previous row; `None` on the first row or when an error is
    /// zero.
    pub eoc: [Option<f64>; 4],
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOutcome {
    pub rows: Vec<ConvergenceRow>,
    pub reference_diagnostics: RunDiagnostics,
}

/// Runs the compared discretisations (in parallel), then streams one
/// reference evolution past all of them.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceOutcome> {
    let maps = setup.validate()?;
    let coarse = par_map(&setup.runs, |&(j, n)| {
        let params = setup.params(j, n)?;
        log::info!("convergence run J={j} N={n}");
        run_recorded(&make_convergence_initial(j)?, &params, StoppingRule::FixedSteps)
    })?;

    let mut accumulators = coarse
        .iter()
        .zip(&maps)
        .map(|((traj, _), map)| ErrorAccumulator::new(traj, *map))
        .collect::<Result<Vec<_>>>()?;
    let (jr, nr) = setup.reference;
    let ref_params = setup.params(jr, nr)?;
    log::info!("reference run J={jr} N={nr}");
    let ref_initial = make_convergence_initial(jr)?;
    let mut monitor = Monitor::new(&ref_initial, setup.epsilon)?;
    evolve_observed(&ref_initial, &ref_params, StoppingRule::FixedSteps, |n, s, r| {
        monitor.observe(s, r);
        accumulators.iter_mut().try_for_each(|a| a.observe(n, s))
    })?;

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(coarse.len());
    let finished = accumulators
        .into_iter()
        .map(ErrorAccumulator::finish)
        .collect::<Result<Vec<_>>>()?;
    for ((errors, (_, diagnostics)), &(j, n)) in finished.into_iter().zip(&coarse).zip(&setup.runs) {
        let diagnostics = *diagnostics;
        let mut order = [None; 4];
        if let Some(prev) = rows.last() {
            let (ra, rb) = match setup.axis {
                ResolutionAxis::Space => (prev.elements as f64, j as f64),
                ResolutionAxis::Time => (prev.steps as f64, n as f64),
            };
            let a = [prev.errors.e1, prev.errors.e2, prev.errors.e3, prev.errors.e4];
            let b = [errors.e1, errors.e2, errors.e3, errors.e4];
            for k in 0..4 {
                order[k] = eoc(&[(ra, a[k]), (rb, b[k])]).ok().map(|v| v[0]);
            }
        }
        rows.push(ConvergenceRow {
            elements: j,
            steps: n,
            errors,
            eoc: order,
            diagnostics,
        });
    }
    Ok(ConvergenceOutcome {
        rows,
        reference_diagnostics: monitor.diag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSetup {
    pub elements: usize,
    pub delta: f64,
    pub z: f64,
    pub threshold: f64,
    pub epsilons: Vec<f64>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub n_tot: usize,
    /// Whether the velocity rule fired before `max_steps`.
    pub relaxed: bool,
    pub e_ang: f64,
    pub e_pos: f64,
    pub eoc_ang: Option<f64>,
    pub eoc_pos: Option<f64>,
    pub balance: JunctionBalance,
    pub final_state: TriodState,
    pub diagnostics: RunDiagnostics,
}

pub fn epsilon_study(setup: &EpsilonSetup) -> Result<Vec<EpsilonRow>> {
    if setup.epsilons.is_empty() {
        return Err(Error::InvalidParams("no epsilon values given".into()));
    }
    let initial = make_epsilon_initial(setup.elements, setup.z)?;
    let runs = par_map(&setup.epsilons, |&eps| {
        let params = SimParams::new(eps, setup.elements, setup.delta, setup.max_steps)?;
        log::info!("epsilon run eps={eps}");
        let mut monitor = Monitor::new(&initial, eps)?;
        let summary = evolve_observed(&initial, &params, StoppingRule::VelocityBelow(setup.threshold), |_, s, r| {
            monitor.observe(s, r);
            Ok(())
        })?;
        let relaxed = summary
            .reports
            .last()
            .is_some_and(|r| r.max_nodal_speed < setup.threshold);
        Ok((summary, relaxed, monitor.diag))
    })?;

    let mut rows: Vec<EpsilonRow> = Vec::with_capacity(runs.len());
    for ((summary, relaxed, diagnostics), &eps) in runs.into_iter().zip(&setup.epsilons) {
        let (e_ang, e_pos) = epsilon_errors(&summary.final_state, setup.z)?;
        let (eoc_ang, eoc_pos) = match rows.last() {
            Some(prev) => (
                eoc(&[(1.0 / prev.epsilon, prev.e_ang), (1.0 / eps, e_ang)]).ok().map(|v| v[0]),
                eoc(&[(1.0 / prev.epsilon, prev.e_pos), (1.0 / eps, e_pos)]).ok().map(|v| v[0]),
            ),
            None => (None, None),
        };
        rows.push(EpsilonRow {
            epsilon: eps,
            n_tot: summary.steps_taken,
            relaxed,
            e_ang,
            e_pos,
            eoc_ang,
            eoc_pos,
            balance: junction_coefficients(&summary.final_state, eps)?,
            final_state: summary.final_state,
            diagnostics,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassConditioningRow {
    pub epsilon: f64,
    pub spectrum: SpectrumReport,
}

/// Equilibrated mass spectra on the convergence data for each `epsilon`.
pub fn conditioning_mass(
    elements: usize,
    delta: f64,
    epsilons: &[f64],
    rotation_deg: f64,
) -> Result<Vec<MassConditioningRow>> {
    let triod = rotate(&make_convergence_initial_unrotated(elements)?, rotation_deg);
    let mut spectra = par_map(epsilons, |&eps| {
        equilibrated_mass_spectrum(&triod, &SimParams::new(eps, elements, delta, 1)?)
    })?;
    attach_eocs(epsilons, &mut spectra)?;
    Ok(epsilons
        .iter()
        .zip(spectra)
        .map(|(&epsilon, spectrum)| MassConditioningRow { epsilon, spectrum })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConditioningRow {
    pub elements: usize,
    pub h: f64,
    pub delta: f64,
    pub cond_a: f64,
    pub cond_b: f64,
    /// `cond_b / cond_a`.
    pub ratio: f64,
}

/// Step-matrix condition numbers at two `epsilon` values with
/// `delta = delta_factor * h^2`.
pub fn conditioning_system(
    elements: &[usize],
    delta_factor: f64,
    epsilons: (f64, f64),
    convention: SystemConvention,
) -> Result<Vec<SystemConditioningRow>> {
    par_map(elements, |&j| {
        let h = 1.0 / j as f64;
        let delta = delta_factor * h * h;
        let triod = make_convergence_initial(j)?;
        let a = system_condition(&triod, &SimParams::new(epsilons.0, j, delta, 1)?, convention)?;
        let b = system_condition(&triod, &SimParams::new(epsilons.1, j, delta, 1)?, convention)?;
        Ok(SystemConditioningRow {
            elements: j,
            h,
            delta,
            cond_a: a.cond2,
            cond_b: b.cond2,
            ratio: b.cond2 / a.cond2,
        })
    })
}

/// A long run with a minimal-segment-length trace and snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedRun {
    pub params: SimParams,
    /// `(step, time, min segment length)` for every state including the
    /// initial one.
    pub trace: Vec<(usize, f64, f64)>,
    pub snapshots: Vec<(f64, TriodState)>,
    pub final_state: TriodState,
    pub diagnostics: RunDiagnostics,
}

/// Step indices of the requested snapshot times; each must be a multiple of
/// `delta` within the run.
pub fn snapshot_steps(times: &[f64], delta: f64, steps: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let n = (t / delta).round();
            if n < 0.0 || n as usize > steps || (n * delta - t).abs() > 1e-9 * t.max(delta) {
                return Err(Error::InvalidParams(format!(
                    "snapshot time {t} is not a step of size {delta} within the run"
                )));
            }
            Ok(n as usize)
        })
        .collect()
}

pub fn traced_run(initial: &TriodState, params: &SimParams, snapshot_times: &[f64]) -> Result<TracedRun> {
    let snap = snapshot_steps(snapshot_times, params.delta, params.steps)?;
    let mut monitor = Monitor::new(initial, params.epsilon)?;
    let mut trace = Vec::with_capacity(params.steps + 1);
    let mut snapshots = Vec::new();
    let summary = evolve_observed(initial, params, StoppingRule::FixedSteps, |n, s, r| {
        monitor.observe(s, r);
        trace.push((n, n as f64 * params.delta, min_segment_length(s)));
        for (k, &m) in snap.iter().enumerate() {
            if m == n {
                snapshots.push((snapshot_times[k], s.clone()));
            }
        }
        Ok(())
    })?;
    Ok(TracedRun {
        params: *params,
        trace,
        snapshots,
        final_state: summary.final_state,
        diagnostics: monitor.diag,
    })
}

pub const SPIRAL_SNAPSHOT_TIMES: [f64; 6] = [0.0, 0.04, 0.08, 0.16, 0.28, 0.48];
pub const SELF_INTERSECT_SNAPSHOT_TIMES: [f64; 6] = [0.0, 0.02, 0.05, 0.06, 0.07, 0.5];

/// Spiral runs for several step sizes up to `final_time`.
pub fn spiral_study(
    elements: usize,
    epsilon: f64,
    deltas: &[f64],
    final_time: f64,
    snapshot_times: &[f64],
) -> Result<Vec<TracedRun>> {
    let initial = make_spiral_initial(elements)?;
    par_map(deltas, |&delta| {
        let params = SimParams::new(epsilon, elements, delta, steps_for(final_time, delta)?)?;
        log::info!("spiral run delta={delta}");
        traced_run(&initial, &params, snapshot_times)
    })
}

pub fn self_intersect_run(
    elements: usize,
    epsilon: f64,
    delta: f64,
    final_time: f64,
    fix: JunctionFix,
    snapshot_times: &[f64],
) -> Result<TracedRun> {
    let initial = make_self_intersect_initial(elements, fix)?;
    let params = SimParams::new(epsilon, elements, delta, steps_for(final_time, delta)?)?;
    traced_run(&initial, &params, snapshot_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::junction_sector_angles;
    use approx::assert_relative_eq;

    #[test]
    fn convergence_data_geometry() {
        let t = make_convergence_initial_unrotated(10).unwrap();
        let zt = convergence_junction_offset();
        assert_relative_eq!(zt, 0.158919, epsilon = 1e-6);
        assert_eq!(t.junction(), Point::new(zt, 0.0));
        let e = t.curves()[1].endpoint();
        assert_relative_eq!(e.x, zt - 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(e.y, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        for p in make_convergence_initial(10).unwrap().endpoints() {
            assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
        }
        let r = make_convergence_initial(10).unwrap();
        let c = r.curves();
        assert_eq!(c[0].junction(), c[1].junction());
        assert_eq!(c[0].junction(), c[2].junction());
    }

    #[test]
    fn epsilon_data() {
        let t = make_epsilon_initial(20, 0.1).unwrap();
        assert_relative_eq!(t.junction().x, -(0.99f64.sqrt()), epsilon = 1e-15);
        let a = junction_sector_angles(&t).unwrap();
        assert_relative_eq!(a[0], 180.0, epsilon = 1e-12);
        assert_relative_eq!(a[1], 90.0, epsilon = 1e-12);
        assert_relative_eq!(a[2], 90.0, epsilon = 1e-12);
        assert!(make_epsilon_initial(20, 1.0).is_err());
    }

    #[test]
    fn spiral_data() {
        let t = make_spiral_initial(60).unwrap();
        assert_eq!(t.junction(), Point::zeros());
        let r = rotate(&t, 120.0);
        for (k, p) in t.endpoints().iter().enumerate() {
            assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-14);
            let q = r.curves()[k].nodes();
            let next = t.curves()[(k + 1) % 3].nodes();
            for (a, b) in q.iter().zip(next) {
                assert!((a - b).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn self_intersect_data() {
        assert_relative_eq!(self_intersect_parabola(0.0), -(3f64.sqrt()) / 3.0, epsilon = 1e-15);
        assert!(make_self_intersect_initial(12, JunctionFix::None).is_err());
        let a = make_self_intersect_initial(12, JunctionFix::Shift).unwrap();
        let b = make_self_intersect_initial(12, JunctionFix::Reinterpret).unwrap();
        for (ca, cb) in a.curves().iter().zip(b.curves()) {
            for (p, q) in ca.nodes().iter().zip(cb.nodes()) {
                assert!((p - q).amax() < 1e-15);
            }
        }
        // curve 3 is curve 2 reflected through the origin
        for (p, q) in a.curves()[1].nodes().iter().zip(a.curves()[2].nodes()) {
            assert_eq!(*p, -q);
        }
        assert_eq!(a.junction(), Point::zeros());
    }

    #[test]
    fn step_count_checks() {
        assert_eq!(steps_for(0.48, 2e-4).unwrap(), 2400);
        assert!(steps_for(0.48, 7e-4).is_err());
        assert_eq!(snapshot_steps(&SPIRAL_SNAPSHOT_TIMES, 2e-4, 2400).unwrap(), vec![0, 200, 400, 800, 1400, 2400]);
        assert!(snapshot_steps(&[0.5], 2e-4, 2400).is_err());
    }

    #[test]
    fn small_convergence_study() {
        let setup = ConvergenceSetup {
            epsilon: 1e-3,
            final_time: 0.02,
            runs: vec![(4, 4), (6, 4)],
            reference: (12, 8),
            axis: ResolutionAxis::Space,
        };
        let out = convergence_study(&setup).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.rows[0].eoc.iter().all(Option::is_none));
        for r in &out.rows {
            assert!(r.errors.e1 > 0.0 && r.errors.e2 > 0.0 && r.errors.e3 > 0.0);
            assert!(r.diagnostics.junction_exact && r.diagnostics.endpoints_exact);
        }
        let bad = ConvergenceSetup {
            reference: (10, 8),
            ..setup
        };
        assert!(matches!(convergence_study(&bad), Err(Error::GridMismatch(_))));
    }
}
