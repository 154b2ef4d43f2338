//! Dense complex-matrix algebra and a checked Hermitian eigensolver.
//!
//! Matrices are `ndarray::Array2<Complex64>` in row-major order; the
//! decomposition backend is faer's self-adjoint solver. Every decomposition
//! returned by [`hermitian_eig`] satisfies the contract checked here:
//! ascending eigenvalues, per-pair residual `‖H v − λ v‖ ≤ 1e-9 ‖H‖` (with
//! `‖H‖` the spectral norm), and orthonormal eigenvectors to 1e-10.

use faer::c64;
use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Dense complex matrix, the working type of the whole crate.
pub type CMatrix = nd::Array2<C64>;

/// Relative Hermiticity gate applied to eigensolver inputs.
pub const HERMITICITY_REL_TOL: f64 = 1e-12;
/// Per-eigenpair residual bound, relative to the spectral norm.
pub const EIG_RESIDUAL_REL_TOL: f64 = 1e-9;
/// Absolute bound on `max |V^†V − I|`.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Adjacent eigenvalues closer than this (GHz) are flagged as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Result of [`hermitian_eig`].
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, ascending; ties keep the backend's stable column order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
    /// True when some adjacent pair of eigenvalues is closer than
    /// [`DEGENERACY_TOL`]; degenerate subspaces are reported as-is.
    pub degenerate: bool,
}

/// Kronecker product; dimensions multiply,
/// `out[(i·p + k, j·q + l)] = a[(i, j)] · b[(k, l)]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn max_abs(h: &CMatrix) -> f64 {
    h.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Largest element of `|H − H^†|`, the asymmetry reported on rejection.
fn max_asymmetry(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_eig (square matrix required)",
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let scale = max_abs(h);
    let asym = max_asymmetry(h);
    let tol = HERMITICITY_REL_TOL * scale;
    // scale == 0 is the zero matrix, which is Hermitian.
    if scale > 0.0 && asym > tol {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
            tol,
        });
    }
    Ok(())
}

fn to_faer(h: &CMatrix) -> faer::Mat<c64> {
    faer::Mat::from_fn(h.nrows(), h.ncols(), |i, j| {
        let z = h[(i, j)];
        c64::new(z.re, z.im)
    })
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
///
/// Rejects inputs whose asymmetry exceeds [`HERMITICITY_REL_TOL`] relative to
/// the largest element, and verifies the residual and orthonormality bounds
/// on the decomposition before returning it.
pub fn hermitian_eig(h: &CMatrix) -> Result<EigenDecomposition> {
    check_hermitian(h)?;
    let n = h.nrows();
    let m = to_faer(h);
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::EigenFailed(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();

    // Ascending order with a stable permutation (the backend is already
    // sorted on every platform we have seen; this makes it a guarantee).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.partial_cmp(&s[b].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| s[k].re).collect();

    let mut vectors = CMatrix::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            let z = u[(i, k)];
            vectors[(i, col)] = C64::new(z.re, z.im);
        }
    }

    verify_contract(h, &values, &vectors)?;

    let degenerate = values.windows(2).any(|w| w[1] - w[0] < DEGENERACY_TOL);
    Ok(EigenDecomposition {
        values,
        vectors,
        degenerate,
    })
}

/// Eigenvalues only (ascending); cheaper than [`hermitian_eig`] for large
/// matrices where the vectors are not needed.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let m = to_faer(h);
    let mut values = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::EigenFailed(format!("{e:?}")))?;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}

/// Residual and orthonormality verification on a finished decomposition.
fn verify_contract(h: &CMatrix, values: &[f64], vectors: &CMatrix) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    // Spectral norm of a Hermitian matrix is the largest |eigenvalue|.
    let norm_h = values
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    // Residual per pair: ‖H v_k − λ_k v_k‖.
    let hv = h.dot(vectors);
    let mut worst_residual = 0.0f64;
    for k in 0..n {
        let mut acc = 0.0f64;
        for i in 0..n {
            let r = hv[(i, k)] - values[k] * vectors[(i, k)];
            acc += r.norm_sqr();
        }
        worst_residual = worst_residual.max(acc.sqrt());
    }
    let rtol = EIG_RESIDUAL_REL_TOL * norm_h;
    if worst_residual > rtol {
        return Err(Error::EigenContract {
            what: "residual",
            value: worst_residual,
            tol: rtol,
        });
    }

    // Orthonormality: max |V^†V − I|.
    let gram = conj_t(vectors).dot(vectors);
    let mut worst_gram = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst_gram = worst_gram.max((gram[(i, j)] - C64::new(expect, 0.0)).norm());
        }
    }
    if worst_gram > ORTHONORMALITY_TOL {
        return Err(Error::EigenContract {
            what: "orthonormality",
            value: worst_gram,
            tol: ORTHONORMALITY_TOL,
        });
    }
    Ok(())
}

/// Conjugate transpose.
pub fn conj_t(m: &CMatrix) -> CMatrix {
    let (r, c) = m.dim();
    CMatrix::from_shape_fn((c, r), |(i, j)| m[(j, i)].conj())
}
