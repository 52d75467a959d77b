//! Error functionals against a finer reference computation on nested grids,
//! experimental orders of convergence, and the junction-relaxation errors of
//! the epsilon study.
//!
//! The reference run can be compared on the fly through [`ErrorAccumulator`],
//! so it never has to be stored. The trajectory-based functions
//! [`error_e1`]..[`error_e3`] feed an accumulator from a stored reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{junction_sector_angles, Point, SimParams, TriodState};
use crate::stepper::Trajectory;

/// Index maps between a coarse run and a reference run nested in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedGridMap {
    pub elements: usize,
    pub steps: usize,
    pub ref_elements: usize,
    pub ref_steps: usize,
    /// `J_ref / J`.
    pub space_ratio: usize,
    /// `N_ref / N = delta / delta_ref`.
    pub time_ratio: usize,
    pub delta: f64,
    pub ref_delta: f64,
}

impl NestedGridMap {
    pub fn new(coarse: &SimParams, reference: &SimParams) -> Result<Self> {
        let (j, jr) = (coarse.elements(), reference.elements());
        let (n, nr) = (coarse.steps, reference.steps);
        if jr % j != 0 {
            return Err(Error::GridMismatch(format!(
                "J_ref = {jr} is not a multiple of J = {j}"
            )));
        }
        if n == 0 || nr % n != 0 {
            return Err(Error::GridMismatch(format!(
                "N_ref = {nr} is not a multiple of N = {n}"
            )));
        }
        let k = nr / n;
        let ratio = coarse.delta / reference.delta;
        if (ratio - k as f64).abs() > 1e-9 * k as f64 {
            return Err(Error::GridMismatch(format!(
                "delta / delta_ref = {ratio} but N_ref / N = {k}"
            )));
        }
        Ok(Self {
            elements: j,
            steps: n,
            ref_elements: jr,
            ref_steps: nr,
            space_ratio: jr / j,
            time_ratio: k,
            delta: coarse.delta,
            ref_delta: reference.delta,
        })
    }

    pub fn ref_time_index(&self, n: usize) -> usize {
        n * self.time_ratio
    }

    pub fn ref_node_index(&self, j: usize) -> usize {
        j * self.space_ratio
    }

    /// Coarse step `n` with `n_ref * delta_ref` in `[n delta, (n+1) delta)`.
    pub fn time_index(&self, n_ref: usize) -> usize {
        n_ref / self.time_ratio
    }

    /// Coarse element containing reference element `j_ref`.
    pub fn node_index(&self, j_ref: usize) -> usize {
        j_ref / self.space_ratio
    }
}

/// The four error functionals of a convergence run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// Degrees.
    pub e4: f64,
}

/// `max_{j, i} |U_j - U_ref_{j m}|^2` at one matching time.
fn nodal_sq_error(coarse: &TriodState, reference: &TriodState, m: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (c, r) in coarse.curves().iter().zip(reference.curves()) {
        for (j, p) in c.nodes().iter().enumerate() {
            worst = worst.max((p - r.nodes()[j * m]).norm_squared());
        }
    }
    worst
}

/// `sum_{j_ref, i} h_ref |dU/dx - dU_ref/dx|^2` at one matching time.
fn derivative_sq_error(coarse: &TriodState, reference: &TriodState, m: usize) -> f64 {
    let h = coarse.h();
    let h_ref = reference.h();
    let mut total = 0.0;
    for (c, r) in coarse.curves().iter().zip(reference.curves()) {
        for j_ref in 0..r.elements() {
            let dc = c.chord(j_ref / m) / h;
            let dr = r.chord(j_ref) / h_ref;
            total += h_ref * (dc - dr).norm_squared();
        }
    }
    total
}

/// Piecewise-linear coarse nodal field evaluated at reference node `j_ref`.
fn coarse_at(values: &[Point], j_ref: usize, m: usize) -> Point {
    let j = j_ref / m;
    let r = j_ref % m;
    if r == 0 {
        values[j]
    } else {
        let s = r as f64 / m as f64;
        values[j] * (1.0 - s) + values[j + 1] * s
    }
}

/// `sum_i int_0^1 |V - V_ref|^2 dx` for piecewise-linear velocities; exact,
/// since the difference is linear on every reference element.
fn velocity_sq_integral(
    coarse_vel: &[Vec<Point>; 3],
    ref_prev: &TriodState,
    ref_next: &TriodState,
    ref_delta: f64,
    m: usize,
) -> f64 {
    let h_ref = ref_next.h();
    let mut total = 0.0;
    for i in 0..3 {
        let a = ref_prev.curves()[i].nodes();
        let b = ref_next.curves()[i].nodes();
        let diff = |k: usize| coarse_at(&coarse_vel[i], k, m) - (b[k] - a[k]) / ref_delta;
        let mut left = diff(0);
        for k in 1..b.len() {
            let right = diff(k);
            total += h_ref / 3.0 * (left.norm_squared() + left.dot(&right) + right.norm_squared());
            left = right;
        }
    }
    total
}

fn coarse_velocity(prev: &TriodState, next: &TriodState, delta: f64) -> [Vec<Point>; 3] {
    [0, 1, 2].map(|i| {
        prev.curves()[i]
            .nodes()
            .iter()
            .zip(next.curves()[i].nodes())
            .map(|(a, b)| (b - a) / delta)
            .collect()
    })
}

/// Streams a reference run against a stored coarse trajectory.
///
/// Feed every reference state in order through [`Self::observe`], starting
/// with `n_ref = 0`.
#[derive(Debug)]
pub struct ErrorAccumulator<'a> {
    coarse: &'a Trajectory,
    map: NestedGridMap,
    e1: f64,
    e2: f64,
    e3: f64,
    prev_ref: Option<TriodState>,
    next_index: usize,
    cached_velocity: Option<(usize, [Vec<Point>; 3])>,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(coarse: &'a Trajectory, map: NestedGridMap) -> Result<Self> {
        if coarse.stride != 1 {
            return Err(Error::GridMismatch(
                "coarse trajectory must record every step".into(),
            ));
        }
        if coarse.states.len() != map.steps + 1 {
            return Err(Error::GridMismatch(format!(
                "coarse trajectory has {} states, expected {}",
                coarse.states.len(),
                map.steps + 1
            )));
        }
        if coarse.states[0].elements() != map.elements {
            return Err(Error::GridMismatch("coarse element count differs from map".into()));
        }
        Ok(Self {
            coarse,
            map,
            e1: 0.0,
            e2: 0.0,
            e3: 0.0,
            prev_ref: None,
            next_index: 0,
            cached_velocity: None,
        })
    }

    pub fn observe(&mut self, n_ref: usize, state: &TriodState) -> Result<()> {
        if n_ref != self.next_index {
            return Err(Error::GridMismatch(format!(
                "reference state {n_ref} observed, expected {}",
                self.next_index
            )));
        }
        if state.elements() != self.map.ref_elements {
            return Err(Error::GridMismatch(format!(
                "reference state has {} elements, expected {}",
                state.elements(),
                self.map.ref_elements
            )));
        }
        let m = self.map.space_ratio;
        if n_ref.is_multiple_of(self.map.time_ratio) {
            let n = n_ref / self.map.time_ratio;
            let c = &self.coarse.states[n];
            self.e1 = self.e1.max(nodal_sq_error(c, state, m));
            self.e2 = self.e2.max(derivative_sq_error(c, state, m));
        }
        if let Some(prev) = &self.prev_ref {
            let n = self.map.time_index(n_ref - 1);
            let stale = self.cached_velocity.as_ref().is_none_or(|(k, _)| *k != n);
            if stale {
                let v = coarse_velocity(
                    &self.coarse.states[n],
                    &self.coarse.states[n + 1],
                    self.map.delta,
                );
                self.cached_velocity = Some((n, v));
            }
            let vel = &self.cached_velocity.as_ref().expect("velocity cached").1;
            self.e3 += self.map.ref_delta
                * velocity_sq_integral(vel, prev, state, self.map.ref_delta, m);
        }
        self.prev_ref = Some(state.clone());
        self.next_index += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<ErrorReport> {
        if self.next_index != self.map.ref_steps + 1 {
            return Err(Error::GridMismatch(format!(
                "reference run supplied {} states, expected {}",
                self.next_index,
                self.map.ref_steps + 1
            )));
        }
        Ok(ErrorReport {
            e1: self.e1,
            e2: self.e2,
            e3: self.e3,
            e4: error_e4(self.coarse)?,
        })
    }
}

fn check_full(traj: &Trajectory, steps: usize, what: &str) -> Result<()> {
    if traj.stride != 1 || traj.states.len() != steps + 1 {
        return Err(Error::GridMismatch(format!(
            "{what} trajectory must record all {} states (stride 1), has {} at stride {}",
            steps + 1,
            traj.states.len(),
            traj.stride
        )));
    }
    Ok(())
}

/// Reference state at `n_ref` from a possibly strided reference trajectory.
fn ref_state(reference: &Trajectory, n_ref: usize) -> Result<&TriodState> {
    if !n_ref.is_multiple_of(reference.stride) {
        return Err(Error::GridMismatch(format!(
            "reference stride {} does not contain step {n_ref}",
            reference.stride
        )));
    }
    reference
        .states
        .get(n_ref / reference.stride)
        .ok_or_else(|| Error::GridMismatch(format!("reference lacks step {n_ref}")))
}

pub fn error_e1(traj: &Trajectory, reference: &Trajectory, map: &NestedGridMap) -> Result<f64> {
    check_full(traj, map.steps, "coarse")?;
    let mut worst: f64 = 0.0;
    for (n, c) in traj.states.iter().enumerate() {
        let r = ref_state(reference, map.ref_time_index(n))?;
        worst = worst.max(nodal_sq_error(c, r, map.space_ratio));
    }
    Ok(worst)
}

pub fn error_e2(traj: &Trajectory, reference: &Trajectory, map: &NestedGridMap) -> Result<f64> {
    check_full(traj, map.steps, "coarse")?;
    let mut worst: f64 = 0.0;
    for (n, c) in traj.states.iter().enumerate() {
        let r = ref_state(reference, map.ref_time_index(n))?;
        worst = worst.max(derivative_sq_error(c, r, map.space_ratio));
    }
    Ok(worst)
}

pub fn error_e3(traj: &Trajectory, reference: &Trajectory, map: &NestedGridMap) -> Result<f64> {
    check_full(traj, map.steps, "coarse")?;
    check_full(reference, map.ref_steps, "reference")?;
    let mut acc = ErrorAccumulator::new(traj, *map)?;
    for (n_ref, s) in reference.states.iter().enumerate() {
        acc.observe(n_ref, s)?;
    }
    Ok(acc.e3)
}

/// `max_n max_i |theta_i - 120|` over the recorded states, in degrees.
pub fn error_e4(traj: &Trajectory) -> Result<f64> {
    if traj.states.is_empty() {
        return Err(Error::InvalidSequence("empty trajectory".into()));
    }
    let mut worst: f64 = 0.0;
    for s in &traj.states {
        worst = worst.max(angle_error(s)?);
    }
    Ok(worst)
}

/// `max_i |theta_i - 120|` for one state.
pub fn angle_error(state: &TriodState) -> Result<f64> {
    Ok(junction_sector_angles(state)?
        .iter()
        .map(|a| (a - 120.0).abs())
        .fold(0.0, f64::max))
}

/// Orders `(log E_a - log E_b) / (log J_b - log J_a)` of consecutive pairs
/// `(J, E)`. Pass `N` (temporal) or `1/epsilon` in place of `J` as needed.
pub fn eoc(pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    if pairs.len() < 2 {
        return Err(Error::InvalidSequence(
            "need at least two (resolution, error) pairs".into(),
        ));
    }
    for &(r, e) in pairs {
        if !(r > 0.0 && e > 0.0) {
            return Err(Error::InvalidSequence(format!(
                "resolutions and errors must be positive, got ({r}, {e})"
            )));
        }
    }
    Ok(pairs
        .windows(2)
        .map(|w| (w[0].1.ln() - w[1].1.ln()) / (w[1].0.ln() - w[0].0.ln()))
        .collect())
}

/// Junction position of the `epsilon -> 0` Steiner configuration for the
/// relaxation data with parameter `z`.
pub fn steiner_point(z: f64) -> Point {
    let zt = (1.0 - z * z).sqrt();
    Point::new(-zt + z / 3f64.sqrt(), 0.0)
}

/// Angle error (degrees) and junction displacement from the Steiner point of
/// a relaxed state.
pub fn epsilon_errors(final_state: &TriodState, z: f64) -> Result<(f64, f64)> {
    let e_ang = angle_error(final_state)?;
    let e_pos = (final_state.junction() - steiner_point(z)).norm();
    Ok((e_ang, e_pos))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionBalance {
    /// `1 + eps |u_x|` on each curve's junction element.
    pub sigma: [f64; 3],
    /// Sector angle opposite each curve, degrees.
    pub theta: [f64; 3],
    /// Largest pairwise difference of `sin(theta_i) / sigma_i`.
    pub residual: f64,
}

pub fn junction_coefficients(triod: &TriodState, epsilon: f64) -> Result<JunctionBalance> {
    let theta = junction_sector_angles(triod)?;
    let h = triod.h();
    let sigma = [0, 1, 2].map(|i| 1.0 + epsilon * triod.curves()[i].chord(0).norm() / h);
    let ratio = [0, 1, 2].map(|i| theta[i].to_radians().sin() / sigma[i]);
    let residual = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| (ratio[a] - ratio[b]).abs())
        .fold(0.0, f64::max);
    Ok(JunctionBalance {
        sigma,
        theta,
        residual,
    })
}
