//! Conditioning of the step matrices.
//!
//! All spectra are computed with a cyclic Jacobi sweep on dense symmetric
//! matrices; the largest problem (`6J - 4` unknowns at `J = 64`) is small.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_mass, build_step_system};
use crate::error::{Error, Result};
use crate::mesh::{SimParams, TriodState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub cond2: f64,
    pub eoc_vs_previous: Option<f64>,
}

impl SpectrumReport {
    fn from_extremes(lambda_max: f64, lambda_min: f64) -> Self {
        Self {
            lambda_max,
            lambda_min,
            cond2: lambda_max / lambda_min,
            eoc_vs_previous: None,
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
///
/// Only the lower triangle's symmetric counterpart is assumed; the input is
/// symmetrised as `(A + A^T) / 2` first.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = (a + a.transpose()) * 0.5;
    let frob2: f64 = m.iter().map(|v| v * v).sum();
    let tol2 = (f64::EPSILON * f64::EPSILON) * frob2;

    for _sweep in 0..100 {
        let mut off2 = 0.0;
        for q in 1..n {
            for p in 0..q {
                off2 += 2.0 * m[(p, q)] * m[(p, q)];
            }
        }
        if off2 <= tol2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `diag(M_1, M_2, M_3)` as a dense matrix (no boundary modification).
pub fn mass_block_matrix(triod: &TriodState, params: &SimParams) -> Result<DMatrix<f64>> {
    let geometry = triod.geometry()?;
    let per = 2 * (triod.elements() + 1);
    let mut out = DMatrix::zeros(3 * per, 3 * per);
    for (i, g) in geometry.iter().enumerate() {
        let m = assemble_mass(g, params.epsilon, params.delta).to_dense();
        out.view_mut((i * per, i * per), (per, per)).copy_from(&m);
    }
    Ok(out)
}

/// Spectrum of the row-equilibrated mass block `D^{-1} M`.
///
/// `D^{-1} M` is similar to `D^{-1/2} M D^{-1/2}`, which is symmetric; the
/// latter is what gets diagonalised.
pub fn equilibrated_mass_spectrum(triod: &TriodState, params: &SimParams) -> Result<SpectrumReport> {
    let m = mass_block_matrix(triod, params)?;
    let scaled = symmetric_equilibration(&m)?;
    let ev = symmetric_eigenvalues(&scaled);
    Ok(SpectrumReport::from_extremes(ev[ev.len() - 1], ev[0]))
}

/// `D^{-1/2} A D^{-1/2}` with `D = diag(A)`.
pub fn symmetric_equilibration(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut inv_sqrt = Vec::with_capacity(n);
    for i in 0..n {
        let d = a[(i, i)];
        if !(d > 0.0) {
            return Err(Error::NonpositiveDiagonal { row: i, value: d });
        }
        inv_sqrt.push(1.0 / d.sqrt());
    }
    Ok(DMatrix::from_fn(n, n, |i, j| a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]))
}

/// How the Dirichlet rows enter the system matrix whose condition is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemConvention {
    /// Restrict to the constrained subspace (junction-equal, endpoint
    /// increments zero); the operator is symmetric positive definite there.
    #[default]
    Reduced,
    /// Keep the full `6(J+1)` matrix with the endpoint rows replaced by unit
    /// rows. Those rows add the eigenvalue 1 to the reduced spectrum; the
    /// kernel of the projection is ignored.
    RowAmended,
}

/// Condition number of the step matrix at the given state.
pub fn system_condition(
    triod: &TriodState,
    params: &SimParams,
    convention: SystemConvention,
) -> Result<SpectrumReport> {
    let system = build_step_system(triod, params)?;
    let reduced = system.operator.reduced_matrix();
    let ev = symmetric_eigenvalues(&reduced);
    let (mut lo, mut hi) = (ev[0], ev[ev.len() - 1]);
    if convention == SystemConvention::RowAmended {
        lo = lo.min(1.0);
        hi = hi.max(1.0);
    }
    Ok(SpectrumReport::from_extremes(hi, lo))
}

/// Consecutive-pair orders `(log c_{l-1} - log c_l) / (log e_{l-1} - log e_l)`
/// for `(parameter, condition number)` pairs.
pub fn conditioning_eoc(values: &[(f64, f64)]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidSequence(
            "need at least two (parameter, value) pairs".into(),
        ));
    }
    for &(p, v) in values {
        if !(p > 0.0 && v > 0.0) {
            return Err(Error::InvalidSequence(format!(
                "parameters and values must be positive, got ({p}, {v})"
            )));
        }
    }
    Ok(values
        .windows(2)
        .map(|w| (w[0].1.ln() - w[1].1.ln()) / (w[0].0.ln() - w[1].0.ln()))
        .collect())
}

/// Fills `eoc_vs_previous` along a sweep.
pub fn attach_eocs(params: &[f64], reports: &mut [SpectrumReport]) -> Result<()> {
    if reports.len() < 2 {
        return Ok(());
    }
    let pairs: Vec<(f64, f64)> = params.iter().copied().zip(reports.iter().map(|r| r.cond2)).collect();
    let eocs = conditioning_eoc(&pairs)?;
    for (r, e) in reports.iter_mut().skip(1).zip(eocs) {
        r.eoc_vs_previous = Some(e);
    }
    Ok(())
}
