//! Discrete triods on the uniform parameter mesh of `[0, 1]`.
//!
//! Each of the three curves is a piecewise-linear chain of `J + 1` nodes.
//! Node `0` is the curve's copy of the triple junction and node `J` is its
//! fixed outer endpoint. The junction is stored once per curve; every
//! constructor and every update keeps the three copies bit-identical.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Chords at or below this length abort the computation.
pub const MIN_CHORD_LENGTH: f64 = 1e-12;

/// Discretisation parameters of a run.
///
/// The spatial step is always derived from the element count, `h = 1 / J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub epsilon: f64,
    elements: usize,
    pub delta: f64,
    pub steps: usize,
}

impl SimParams {
    pub fn new(epsilon: f64, elements: usize, delta: f64, steps: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if elements == 0 {
            return Err(Error::InvalidParams("J must be at least 1".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be positive and finite, got {delta}"
            )));
        }
        Ok(Self {
            epsilon,
            elements,
            delta,
            steps,
        })
    }

    /// Number of elements `J` per curve.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements as f64
    }

    pub fn final_time(&self) -> f64 {
        self.steps as f64 * self.delta
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        Self::new(self.epsilon, self.elements, self.delta, self.steps)
    }
}

/// One piecewise-linear curve; the last node is the fixed endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveChain {
    nodes: Vec<Point>,
}

impl CurveChain {
    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidTriod(format!(
                "a curve needs at least two nodes, got {}",
                nodes.len()
            )));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [Point] {
        &mut self.nodes
    }

    /// Number of elements `J`.
    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn junction(&self) -> Point {
        self.nodes[0]
    }

    pub fn endpoint(&self) -> Point {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn chord(&self, element: usize) -> Point {
        self.nodes[element + 1] - self.nodes[element]
    }

    pub fn chord_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm())
    }
}

/// Three curves meeting in a common triple junction, at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct TriodState {
    curves: [CurveChain; 3],
    pub time: f64,
}

impl TriodState {
    pub fn new(curves: [CurveChain; 3], time: f64) -> Result<Self> {
        let j = curves[0].elements();
        if curves.iter().any(|c| c.elements() != j) {
            return Err(Error::InvalidTriod(
                "all three curves must have the same number of elements".into(),
            ));
        }
        let p = curves[0].junction();
        if curves.iter().any(|c| c.junction() != p) {
            return Err(Error::InvalidTriod(format!(
                "junction copies differ: {:?}, {:?}, {:?}",
                curves[0].junction(),
                curves[1].junction(),
                curves[2].junction()
            )));
        }
        Ok(Self { curves, time })
    }

    pub fn curves(&self) -> &[CurveChain; 3] {
        &self.curves
    }

    pub(crate) fn curves_mut(&mut self) -> &mut [CurveChain; 3] {
        &mut self.curves
    }

    pub fn elements(&self) -> usize {
        self.curves[0].elements()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements() as f64
    }

    pub fn junction(&self) -> Point {
        self.curves[0].junction()
    }

    pub fn endpoints(&self) -> [Point; 3] {
        [
            self.curves[0].endpoint(),
            self.curves[1].endpoint(),
            self.curves[2].endpoint(),
        ]
    }

    /// Element geometry of all three curves.
    pub fn geometry(&self) -> Result<[ElementGeometry; 3]> {
        let g0 = element_geometry(&self.curves[0]).map_err(|e| e.on_curve(0))?;
        let g1 = element_geometry(&self.curves[1]).map_err(|e| e.on_curve(1))?;
        let g2 = element_geometry(&self.curves[2]).map_err(|e| e.on_curve(2))?;
        Ok([g0, g1, g2])
    }

    fn map_points(&self, f: impl Fn(&Point) -> Point) -> TriodState {
        let curves = self.curves.clone().map(|c| CurveChain {
            nodes: c.nodes.iter().map(&f).collect(),
        });
        TriodState {
            curves,
            time: self.time,
        }
    }
}

/// Per-element derivative magnitude, unit tangent and unit normal of one curve.
///
/// Element `e` joins nodes `e` and `e + 1`. The normal is the tangent rotated
/// by +90 degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub length_element: Vec<f64>,
    pub tangent: Vec<Point>,
    pub normal: Vec<Point>,
    pub h: f64,
}

impl ElementGeometry {
    pub fn elements(&self) -> usize {
        self.length_element.len()
    }
}

pub fn perp(v: &Point) -> Point {
    Point::new(-v.y, v.x)
}

/// Samples `curve_fn` at the mesh nodes `x_j = j / J`.
pub fn interpolate_initial(curve_fn: impl Fn(f64) -> Point, elements: usize) -> CurveChain {
    let nodes = (0..=elements)
        .map(|j| curve_fn(j as f64 / elements as f64))
        .collect();
    CurveChain { nodes }
}

pub fn element_geometry(curve: &CurveChain) -> Result<ElementGeometry> {
    let j = curve.elements();
    let h = 1.0 / j as f64;
    let mut length_element = Vec::with_capacity(j);
    let mut tangent = Vec::with_capacity(j);
    let mut normal = Vec::with_capacity(j);
    for e in 0..j {
        let chord = curve.chord(e);
        let len = chord.norm();
        if !(len > MIN_CHORD_LENGTH) {
            return Err(Error::DegenerateElement {
                curve: 0,
                element: e,
                length: len,
            });
        }
        let tau = chord / len;
        length_element.push(len / h);
        tangent.push(tau);
        normal.push(perp(&tau));
    }
    Ok(ElementGeometry {
        length_element,
        tangent,
        normal,
        h,
    })
}

/// `sum_i int (|u_x| + eps/2 |u_x|^2) dx`, exact for piecewise-linear curves.
pub fn energy(triod: &TriodState, epsilon: f64) -> Result<f64> {
    let mut total = 0.0;
    for g in triod.geometry()? {
        total += g
            .length_element
            .iter()
            .map(|&q| g.h * (q + 0.5 * epsilon * q * q))
            .sum::<f64>();
    }
    Ok(total)
}

/// Sector angles (degrees) between the junction-adjacent tangents.
///
/// Entry `i` is the sector opposite curve `i`, i.e. the one bounded by the
/// tangents of the other two curves. The three sectors sum to 360.
pub fn junction_sector_angles(triod: &TriodState) -> Result<[f64; 3]> {
    let mut polar = [0.0; 3];
    for (i, curve) in triod.curves().iter().enumerate() {
        let chord = curve.chord(0);
        let len = chord.norm();
        if !(len > MIN_CHORD_LENGTH) {
            return Err(Error::DegenerateElement {
                curve: i,
                element: 0,
                length: len,
            });
        }
        polar[i] = chord.y.atan2(chord.x).to_degrees().rem_euclid(360.0);
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| polar[a].total_cmp(&polar[b]));

    let mut sectors = [0.0; 3];
    for k in 0..3 {
        let from = order[k];
        let to = order[(k + 1) % 3];
        let opposite = order[(k + 2) % 3];
        let mut s = polar[to] - polar[from];
        if k == 2 {
            s += 360.0;
        }
        sectors[opposite] = s;
    }
    Ok(sectors)
}

pub fn min_segment_length(triod: &TriodState) -> f64 {
    triod
        .curves()
        .iter()
        .flat_map(|c| c.chord_lengths())
        .fold(f64::INFINITY, f64::min)
}

/// Rotates every node counter-clockwise about the origin.
pub fn rotate(triod: &TriodState, angle_deg: f64) -> TriodState {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let r = Matrix2::new(c, -s, s, c);
    triod.map_points(|p| r * p)
}

pub fn translate(triod: &TriodState, shift: Point) -> TriodState {
    triod.map_points(|p| p + shift)
}

/// Reflection `(x, y) -> (x, -y)`.
pub fn reflect_x_axis(triod: &TriodState) -> TriodState {
    triod.map_points(|p| Point::new(p.x, -p.y))
}

pub fn scale(triod: &TriodState, factor: f64) -> TriodState {
    triod.map_points(|p| p * factor)
}
