//! Spin and bosonic operators and tensor-product embedding.
//!
//! Subsystem order is fixed globally as (qubit 1, qubit 2, resonator); every
//! bare-state index |q₁ q₂ n⟩ follows it, with the resonator index fastest:
//! `index = ((q1 · 2) + q2) · n_cut + n`.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::linalg::{kron, CMatrix};
use crate::{Error, Result};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// n×n identity.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::eye(n)
}

/// Pauli x.
pub fn sigma_x() -> CMatrix {
    nd::array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
}

/// Pauli y.
pub fn sigma_y() -> CMatrix {
    nd::array![
        [c(0.0), C64::new(0.0, -1.0)],
        [C64::new(0.0, 1.0), c(0.0)]
    ]
}

/// Pauli z (eigenvalue +1 on basis index 0).
pub fn sigma_z() -> CMatrix {
    nd::array![[c(1.0), c(0.0)], [c(0.0), c(-1.0)]]
}

/// Truncated bosonic annihilation operator: `a[n-1, n] = √n`.
pub fn annihilation(n_cut: usize) -> Result<CMatrix> {
    if n_cut < 2 {
        return Err(Error::InvalidParam(format!(
            "photon cutoff must be at least 2, got {n_cut}"
        )));
    }
    let mut a = CMatrix::zeros((n_cut, n_cut));
    for n in 1..n_cut {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    Ok(a)
}

/// Photon number operator `a†·a = diag(0, 1, …, n_cut−1)`.
pub fn number_op(n_cut: usize) -> Result<CMatrix> {
    if n_cut < 2 {
        return Err(Error::InvalidParam(format!(
            "photon cutoff must be at least 2, got {n_cut}"
        )));
    }
    Ok(CMatrix::from_diag(&nd::Array1::from_iter(
        (0..n_cut).map(|n| c(n as f64)),
    )))
}

/// Field quadrature `a + a†`.
pub fn quadrature(n_cut: usize) -> Result<CMatrix> {
    let a = annihilation(n_cut)?;
    let ad = crate::linalg::conj_t(&a);
    Ok(a + ad)
}

/// Places `op` on subsystem `slot`, identity elsewhere.
///
/// `dims` lists the subsystem dimensions in the fixed order
/// (qubit 1, qubit 2, resonator) — or any other chain when used generically.
pub fn embed(op: &CMatrix, slot: usize, dims: &[usize]) -> Result<CMatrix> {
    if slot >= dims.len() {
        return Err(Error::DimensionMismatch {
            context: "embed (slot index)",
            expected: dims.len(),
            got: slot,
        });
    }
    if op.nrows() != dims[slot] || op.ncols() != dims[slot] {
        return Err(Error::DimensionMismatch {
            context: "embed (operator vs slot dimension)",
            expected: dims[slot],
            got: op.nrows(),
        });
    }
    let mut out = identity(1);
    for (k, &d) in dims.iter().enumerate() {
        out = if k == slot {
            kron(&out, op)
        } else {
            kron(&out, &identity(d))
        };
    }
    Ok(out)
}
