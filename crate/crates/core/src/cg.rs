//! Unpreconditioned conjugate gradients on a constrained subspace.

use crate::assembly::LinearOperator;
use crate::error::{Error, Result};

/// Relative residual at which a time step's solve is accepted.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Iteration cap as a multiple of the number of unknowns.
pub const MAX_ITER_PER_UNKNOWN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = rhs` starting from `x = 0`.
///
/// The right-hand side is first mapped into the operator's subspace; since
/// the operator's range lies in that subspace too, every residual, search
/// direction and iterate stays there.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(rhs.len(), n, "rhs length does not match operator dimension");

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    op.constrain(&mut r);
    let rhs_norm = dot(&r, &r).sqrt();
    if rhs_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: the operator is not positive definite on the span.
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol_rel * rhs_norm {
            return Ok(CgOutcome {
                solution: x,
                iterations,
                relative_residual: rr_new.sqrt() / rhs_norm,
            });
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::CgDidNotConverge {
        iterations,
        residual: rr.sqrt() / rhs_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Identity(usize);

    impl LinearOperator for Identity {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            y.copy_from_slice(x);
        }
    }

    struct Diag(Vec<f64>);

    impl LinearOperator for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..x.len() {
                y[i] = self.0[i] * x[i];
            }
        }
    }

    #[test]
    fn zero_rhs() {
        let out = cg_solve(&Identity(5), &[0.0; 5], 1e-10, 100).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = [1.0, -2.0, 3.5, 0.25];
        let out = cg_solve(&Identity(4), &b, 1e-10, 100).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.solution, b.to_vec());
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let d = Diag((1..=50).map(|k| k as f64 * k as f64).collect());
        let b = vec![1.0; 50];
        match cg_solve(&d, &b, 1e-14, 3) {
            Err(Error::CgDidNotConverge { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
