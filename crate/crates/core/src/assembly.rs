//! Mass and stiffness matrices of the linearised step, the junction
//! projection and Dirichlet masking.
//!
//! Vectors over a triod have `3 * 2 * (J + 1)` entries, ordered curve by
//! curve, node by node, with the two planar components interleaved:
//! entry `(curve * (J + 1) + node) * 2 + component`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::Result;
use crate::mesh::{ElementGeometry, SimParams, TriodState};

/// Index helper for the flat triod vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub elements: usize,
}

impl Layout {
    pub fn new(elements: usize) -> Self {
        Self { elements }
    }

    pub fn nodes(&self) -> usize {
        self.elements + 1
    }

    /// Scalar unknowns per curve.
    pub fn curve_len(&self) -> usize {
        2 * self.nodes()
    }

    pub fn len(&self) -> usize {
        3 * self.curve_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, curve: usize, node: usize, component: usize) -> usize {
        (curve * self.nodes() + node) * 2 + component
    }

    pub fn curve<'a>(&self, v: &'a [f64], curve: usize) -> &'a [f64] {
        &v[curve * self.curve_len()..(curve + 1) * self.curve_len()]
    }

    pub fn curve_mut<'a>(&self, v: &'a mut [f64], curve: usize) -> &'a mut [f64] {
        &mut v[curve * self.curve_len()..(curve + 1) * self.curve_len()]
    }
}

/// Nodal coordinates of a triod in the flat layout.
pub fn state_vector(triod: &TriodState) -> Vec<f64> {
    triod
        .curves()
        .iter()
        .flat_map(|c| c.nodes().iter().flat_map(|p| [p.x, p.y]))
        .collect()
}

/// Symmetric block-tridiagonal matrix with 2x2 blocks.
///
/// `off[j]` is block `(j, j + 1)`; block `(j + 1, j)` is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiag {
    pub diag: Vec<Matrix2<f64>>,
    pub off: Vec<Matrix2<f64>>,
}

impl BlockTridiag {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            diag: vec![Matrix2::zeros(); nodes],
            off: vec![Matrix2::zeros(); nodes.saturating_sub(1)],
        }
    }

    pub fn nodes(&self) -> usize {
        self.diag.len()
    }

    /// `y = A x` for one curve (`2 * nodes` entries).
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nodes();
        debug_assert_eq!(x.len(), 2 * n);
        debug_assert_eq!(y.len(), 2 * n);
        for j in 0..n {
            let d = &self.diag[j];
            let (x0, x1) = (x[2 * j], x[2 * j + 1]);
            let mut y0 = d[(0, 0)] * x0 + d[(0, 1)] * x1;
            let mut y1 = d[(1, 0)] * x0 + d[(1, 1)] * x1;
            if j + 1 < n {
                let o = &self.off[j];
                let (a, b) = (x[2 * j + 2], x[2 * j + 3]);
                y0 += o[(0, 0)] * a + o[(0, 1)] * b;
                y1 += o[(1, 0)] * a + o[(1, 1)] * b;
            }
            if j > 0 {
                // transpose of block (j - 1, j)
                let o = &self.off[j - 1];
                let (a, b) = (x[2 * j - 2], x[2 * j - 1]);
                y0 += o[(0, 0)] * a + o[(1, 0)] * b;
                y1 += o[(0, 1)] * a + o[(1, 1)] * b;
            }
            y[2 * j] = y0;
            y[2 * j + 1] = y1;
        }
    }

    pub fn add(&self, other: &BlockTridiag) -> BlockTridiag {
        BlockTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.nodes();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            m.fixed_view_mut::<2, 2>(2 * j, 2 * j).copy_from(&self.diag[j]);
            if j + 1 < n {
                m.fixed_view_mut::<2, 2>(2 * j, 2 * j + 2)
                    .copy_from(&self.off[j]);
                m.fixed_view_mut::<2, 2>(2 * j + 2, 2 * j)
                    .copy_from(&self.off[j].transpose());
            }
        }
        m
    }

    fn add_element(&mut self, e: usize, same: Matrix2<f64>, cross: Matrix2<f64>) {
        self.diag[e] += same;
        self.diag[e + 1] += same;
        self.off[e] += cross;
    }
}

/// Mass matrix with density `(|u_x| nu nu^T + eps |u_x|^2 tau tau^T) / delta`.
///
/// Hat-function products are integrated exactly: `h/3` per element on the
/// diagonal and `h/6` off the diagonal.
pub fn assemble_mass(geom: &ElementGeometry, epsilon: f64, delta: f64) -> BlockTridiag {
    let h = geom.h;
    let mut m = BlockTridiag::zeros(geom.elements() + 1);
    for e in 0..geom.elements() {
        let q = geom.length_element[e];
        let nu = &geom.normal[e];
        let tau = &geom.tangent[e];
        let density = (nu * nu.transpose() * q + tau * tau.transpose() * (epsilon * q * q)) / delta;
        m.add_element(e, density * (h / 3.0), density * (h / 6.0));
    }
    m
}

/// Stiffness matrix with density `(eps + 1/|u_x|) I`, exact integration of
/// `phi_j' phi_k'`.
pub fn assemble_stiffness(geom: &ElementGeometry, epsilon: f64) -> BlockTridiag {
    let h = geom.h;
    let mut s = BlockTridiag::zeros(geom.elements() + 1);
    for e in 0..geom.elements() {
        let c = (epsilon + 1.0 / geom.length_element[e]) / h;
        let block = Matrix2::identity() * c;
        s.add_element(e, block, -block);
    }
    s
}

/// `S x` for one curve, accumulated element by element from chords so that
/// adding a constant to `x` changes nothing beyond the rounding of the
/// chords themselves.
pub fn stiffness_action(geom: &ElementGeometry, epsilon: f64, x: &[f64], y: &mut [f64]) {
    let h = geom.h;
    y.iter_mut().for_each(|v| *v = 0.0);
    for e in 0..geom.elements() {
        let c = (epsilon + 1.0 / geom.length_element[e]) / h;
        for comp in 0..2 {
            let f = c * (x[2 * e + 2 + comp] - x[2 * e + comp]);
            y[2 * e + comp] -= f;
            y[2 * e + 2 + comp] += f;
        }
    }
}

/// Replaces the three junction copies by their mean, per component.
///
/// Already-equal copies are left untouched, so the map is idempotent
/// bit-for-bit.
pub fn apply_projection(v: &mut [f64], layout: Layout) {
    for comp in 0..2 {
        let idx = [
            layout.index(0, 0, comp),
            layout.index(1, 0, comp),
            layout.index(2, 0, comp),
        ];
        let (a, b, c) = (v[idx[0]], v[idx[1]], v[idx[2]]);
        if a == b && b == c {
            continue;
        }
        let mean = (a + b + c) / 3.0;
        for i in idx {
            v[i] = mean;
        }
    }
}

pub fn projected(v: &[f64], layout: Layout) -> Vec<f64> {
    let mut w = v.to_vec();
    apply_projection(&mut w, layout);
    w
}

/// Zeroes the entries of the fixed endpoints (node `J` of every curve).
pub fn apply_dirichlet_mask(v: &mut [f64], layout: Layout) {
    for curve in 0..3 {
        for comp in 0..2 {
            v[layout.index(curve, layout.elements, comp)] = 0.0;
        }
    }
}

/// A linear operator on triod vectors, together with the projection onto the
/// subspace it acts on.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Maps a vector into the admissible subspace.
    fn constrain(&self, _v: &mut [f64]) {}
}

/// `Mask * P * diag(A_1, A_2, A_3) * P * Mask`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct ConstrainedOperator {
    pub blocks: [BlockTridiag; 3],
    pub layout: Layout,
}

impl ConstrainedOperator {
    pub fn new(blocks: [BlockTridiag; 3]) -> Self {
        let layout = Layout::new(blocks[0].nodes() - 1);
        Self { blocks, layout }
    }

    /// Orthonormal basis of the constrained subspace: one vector per
    /// junction component (weight `1/sqrt 3` on each copy) followed by the
    /// unit vectors of nodes `1..J-1` of every curve. Dimension `6J - 4`.
    pub fn subspace_basis(&self) -> Vec<Vec<(usize, f64)>> {
        constrained_basis(self.layout)
    }

    /// Dense matrix of the operator restricted to [`Self::subspace_basis`].
    pub fn reduced_matrix(&self) -> DMatrix<f64> {
        let basis = self.subspace_basis();
        let n = basis.len();
        let mut out = DMatrix::zeros(n, n);
        let mut x = vec![0.0; self.dim()];
        let mut y = vec![0.0; self.dim()];
        for (k, bk) in basis.iter().enumerate() {
            x.iter_mut().for_each(|v| *v = 0.0);
            for &(i, w) in bk {
                x[i] = w;
            }
            self.apply(&x, &mut y);
            for (l, bl) in basis.iter().enumerate() {
                out[(l, k)] = bl.iter().map(|&(i, w)| w * y[i]).sum();
            }
        }
        out
    }
}

pub fn constrained_basis(layout: Layout) -> Vec<Vec<(usize, f64)>> {
    let w = 1.0 / 3f64.sqrt();
    let mut basis = Vec::with_capacity(6 * layout.elements - 4);
    for comp in 0..2 {
        basis.push((0..3).map(|c| (layout.index(c, 0, comp), w)).collect());
    }
    for curve in 0..3 {
        for node in 1..layout.elements {
            for comp in 0..2 {
                basis.push(vec![(layout.index(curve, node, comp), 1.0)]);
            }
        }
    }
    basis
}

impl LinearOperator for ConstrainedOperator {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let layout = self.layout;
        let mut w = x.to_vec();
        apply_dirichlet_mask(&mut w, layout);
        apply_projection(&mut w, layout);
        for (i, block) in self.blocks.iter().enumerate() {
            block.mul_into(layout.curve(&w, i), layout.curve_mut(y, i));
        }
        apply_projection(y, layout);
        apply_dirichlet_mask(y, layout);
    }

    fn constrain(&self, v: &mut [f64]) {
        apply_dirichlet_mask(v, self.layout);
        apply_projection(v, self.layout);
    }
}

/// The linear system of one time step, in increments `U^n - U^{n-1}`.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub operator: ConstrainedOperator,
    pub rhs: Vec<f64>,
    pub mass: [BlockTridiag; 3],
    pub stiffness: [BlockTridiag; 3],
}

/// Assembles `Mask P diag(M+S) P Mask` and `-Mask P diag(S) P U^{n-1}`.
pub fn build_step_system(triod: &TriodState, params: &SimParams) -> Result<StepSystem> {
    let geometry = triod.geometry()?;
    let layout = Layout::new(triod.elements());
    let mass = [0, 1, 2].map(|i| assemble_mass(&geometry[i], params.epsilon, params.delta));
    let stiffness = [0, 1, 2].map(|i| assemble_stiffness(&geometry[i], params.epsilon));

    let mut u = state_vector(triod);
    apply_projection(&mut u, layout);
    let mut rhs = vec![0.0; layout.len()];
    for (i, g) in geometry.iter().enumerate() {
        stiffness_action(g, params.epsilon, layout.curve(&u, i), layout.curve_mut(&mut rhs, i));
    }
    apply_projection(&mut rhs, layout);
    apply_dirichlet_mask(&mut rhs, layout);
    rhs.iter_mut().for_each(|v| *v = -*v);

    let blocks = [0, 1, 2].map(|i| mass[i].add(&stiffness[i]));
    Ok(StepSystem {
        operator: ConstrainedOperator::new(blocks),
        rhs,
        mass,
        stiffness,
    })
}
