//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2};

use triodflow::assembly::{state_vector, Layout};
use triodflow::mesh::{Point, SimParams, TriodState};

/// Hat function `j` on `[0, 1]` with `J` elements.
fn hat(j: usize, elements: usize, x: f64) -> f64 {
    let xj = j as f64 / elements as f64;
    (1.0 - (x - xj).abs() * elements as f64).max(0.0)
}

fn hat_slope(j: usize, elements: usize, x: f64) -> f64 {
    let h = 1.0 / elements as f64;
    let xj = j as f64 * h;
    if x > xj - h && x < xj {
        1.0 / h
    } else if x > xj && x < xj + h {
        -1.0 / h
    } else {
        0.0
    }
}

/// Simpson's rule on each element; exact for the quadratic hat products.
fn simpson_element(e: usize, elements: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / elements as f64;
    let (a, b) = (e as f64 * h, (e + 1) as f64 * h);
    h / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

/// Per-element constant derivative, tangent and normal from angles.
fn element_frame(nodes: &[Point], e: usize, elements: usize) -> (f64, Point, Point) {
    let d = (nodes[e + 1] - nodes[e]) * elements as f64;
    let q = d.x.hypot(d.y);
    let t = d.y.atan2(d.x);
    (q, Point::new(t.cos(), t.sin()), Point::new(-t.sin(), t.cos()))
}

pub fn brute_mass(nodes: &[Point], epsilon: f64, delta: f64) -> DMatrix<f64> {
    let j = nodes.len() - 1;
    let mut m = DMatrix::zeros(2 * (j + 1), 2 * (j + 1));
    for e in 0..j {
        let (q, tau, nu) = element_frame(nodes, e, j);
        let density: Matrix2<f64> = (nu * nu.transpose() * q + tau * tau.transpose() * (epsilon * q * q)) / delta;
        // midpoint of the element, strictly inside its support
        let xm = (e as f64 + 0.5) / j as f64;
        for a in 0..=j {
            for b in 0..=j {
                if hat(a, j, xm) == 0.0 || hat(b, j, xm) == 0.0 {
                    continue;
                }
                let w = simpson_element(e, j, |x| hat(a, j, x) * hat(b, j, x));
                for r in 0..2 {
                    for c in 0..2 {
                        m[(2 * a + r, 2 * b + c)] += w * density[(r, c)];
                    }
                }
            }
        }
    }
    m
}

pub fn brute_stiffness(nodes: &[Point], epsilon: f64) -> DMatrix<f64> {
    let j = nodes.len() - 1;
    let mut s = DMatrix::zeros(2 * (j + 1), 2 * (j + 1));
    for e in 0..j {
        let (q, _, _) = element_frame(nodes, e, j);
        let xm = (e as f64 + 0.5) / j as f64;
        for a in 0..=j {
            for b in 0..=j {
                let w = simpson_element(e, j, |_| hat_slope(a, j, xm) * hat_slope(b, j, xm)) * (epsilon + 1.0 / q);
                for r in 0..2 {
                    s[(2 * a + r, 2 * b + r)] += w;
                }
            }
        }
    }
    s
}

/// Orthonormal basis of junction-equal, endpoint-free vectors, built
/// directly from the layout.
pub fn basis_matrix(j: usize) -> DMatrix<f64> {
    let layout = Layout::new(j);
    let n = layout.len();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for comp in 0..2 {
        let mut v = DVector::zeros(n);
        for c in 0..3 {
            v[layout.index(c, 0, comp)] = 1.0;
        }
        cols.push(v.normalize());
    }
    for c in 0..3 {
        for node in 1..j {
            for comp in 0..2 {
                let mut v = DVector::zeros(n);
                v[layout.index(c, node, comp)] = 1.0;
                cols.push(v);
            }
        }
    }
    DMatrix::from_columns(&cols)
}

pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut o = 0;
    for b in blocks {
        out.view_mut((o, o), b.shape()).copy_from(b);
        o += b.nrows();
    }
    out
}

/// Increment of one time step from a dense direct solve of the reduced
/// system assembled by quadrature.
pub fn dense_step_increment(triod: &TriodState, params: &SimParams) -> DVector<f64> {
    let (eps, delta) = (params.epsilon, params.delta);
    let masses: Vec<_> = triod.curves().iter().map(|c| brute_mass(c.nodes(), eps, delta)).collect();
    let stiffs: Vec<_> = triod.curves().iter().map(|c| brute_stiffness(c.nodes(), eps)).collect();
    let a = block_diag(&masses) + block_diag(&stiffs);
    let s = block_diag(&stiffs);
    let b = basis_matrix(triod.elements());
    let u = DVector::from_vec(state_vector(triod));
    let reduced = b.transpose() * &a * &b;
    let rhs = -(b.transpose() * (&s * &u));
    let y = reduced.lu().solve(&rhs).expect("nonsingular");
    &b * y
}
