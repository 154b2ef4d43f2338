//! Charge-basis quantization of the four-junction loop behind each qubit.
//!
//! Each qubit is a superconducting loop of three Josephson junctions plus a
//! shared (β-scaled) junction through which it couples galvanically to the
//! resonator inductor. With the loop's phase constraint eliminated, three
//! phase coordinates remain, (φ_β, φ_a, φ_b), quantized here on a truncated
//! charge lattice |n| ≤ n_charge per coordinate:
//!
//! H = 4E_c n⃗ᵀM̃⁻¹n⃗ + E_Lr φ_β²
//!     − E_J [β cos φ_β + cos φ_a + cos φ_b + α cos(2πφ_e − φ_β − φ_a − φ_b)]
//!
//! in GHz (E/h). M̃ is the dimensionless capacitance (mass) matrix, E_Lr the
//! inductive energy of the shared resonator inductor, φ_e the external flux
//! in units of the flux quantum. The α-junction term carries the whole flux
//! dependence; its phase is fixed by the loop constraint, so in the charge
//! basis it transfers one Cooper pair through *all three* coordinates at
//! once.
//!
//! Coupling to the resonator enters through the matrix elements of φ_β:
//! g_ij = √(ω_r·E_Lr)·⟨i|φ̂_β|j⟩ (GHz), which [`two_level_reduce`] condenses
//! into the (ε, Δ, g) parameters of the two-qubit model.

use num_complex::Complex64 as C64;

use crate::linalg::{hermitian_eig, hermitian_eigenvalues, kron, CMatrix, EigenDecomposition};
use crate::model::DickeParams;
use crate::operators::{identity, number_op, quadrature};
use crate::{Error, Result};

/// Charge cutoff used when nothing else is configured; the convergence
/// invariant (levels move < 1e−4·E_J under n_charge → n_charge + 2) holds
/// comfortably here for junction parameters of a few tens of GHz.
pub const DEFAULT_N_CHARGE: usize = 7;

/// Flux offset used to measure the bias slope dε/dφ_e next to the symmetry
/// point; small enough to stay in the linear regime, large enough that the
/// induced splitting dominates rounding error.
const DPHI_REF: f64 = 0.002;

/// One qubit's junction-loop parameters plus the shared resonator section.
/// All energies in GHz; `phi_e` in flux quanta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Josephson energy of the two identical loop junctions.
    pub e_j: f64,
    /// Charging energy scale of those junctions.
    pub e_c: f64,
    /// Size ratio of the flux-controlling (α) junction.
    pub alpha: f64,
    /// Size ratio of the shared (β) junction facing the resonator.
    pub beta: f64,
    /// External flux through the loop, in units of Φ₀.
    pub phi_e: f64,
    /// Inductive energy Φ₀²/2L_r of the shared resonator inductor.
    pub e_lr: f64,
    /// Resonator frequency (GHz), used to scale coupling matrix elements.
    pub omega_r: f64,
    /// Charge cutoff per coordinate; the matrix dimension is (2·n_charge+1)³.
    pub n_charge: usize,
}

impl CircuitParams {
    /// Demonstration loop with a light, fast-converging junction (levels
    /// drift ~2e−4 GHz between n_charge 5 and 7).
    pub fn demo_qubit1() -> Self {
        CircuitParams {
            e_j: 45.0,
            e_c: 4.0,
            alpha: 0.72,
            beta: 1.4,
            phi_e: 0.5,
            e_lr: 2.0,
            omega_r: 5.15,
            n_charge: 5,
        }
    }

    /// A second, inequivalent demonstration loop.
    pub fn demo_qubit2() -> Self {
        CircuitParams {
            e_j: 40.0,
            e_c: 5.0,
            alpha: 0.75,
            beta: 1.2,
            phi_e: 0.5,
            e_lr: 2.0,
            omega_r: 5.15,
            n_charge: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_j", self.e_j),
            ("e_c", self.e_c),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("e_lr", self.e_lr),
            ("omega_r", self.omega_r),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.phi_e.is_finite() {
            return Err(Error::InvalidParam("phi_e is not finite".into()));
        }
        if self.n_charge < 2 {
            return Err(Error::InvalidParam(format!(
                "n_charge must be at least 2, got {}",
                self.n_charge
            )));
        }
        Ok(())
    }

    /// Single-coordinate basis size 2·n_charge + 1.
    pub fn charge_dim(&self) -> usize {
        2 * self.n_charge + 1
    }

    /// Full three-coordinate dimension (2·n_charge + 1)³.
    pub fn dim(&self) -> usize {
        self.charge_dim().pow(3)
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dimensionless capacitance (mass) matrix of the three phase coordinates,
/// scaled by the junction capacitance `c_j`:
/// c_j·[[β+α, α, α], [α, 1+α, α], [α, α, 1+α]].
pub fn mass_matrix(alpha: f64, beta: f64, c_j: f64) -> [[f64; 3]; 3] {
    [
        [c_j * (beta + alpha), c_j * alpha, c_j * alpha],
        [c_j * alpha, c_j * (1.0 + alpha), c_j * alpha],
        [c_j * alpha, c_j * alpha, c_j * (1.0 + alpha)],
    ]
}

fn invert_3x3(m: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-14 {
        return Err(Error::InvalidParam(
            "mass matrix is singular; check alpha and beta".into(),
        ));
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // cofactor expansion; indices of the 2x2 minor
            let r = [(i + 1) % 3, (i + 2) % 3];
            let s = [(j + 1) % 3, (j + 2) % 3];
            let minor = m[r[0]][s[0]] * m[r[1]][s[1]] - m[r[0]][s[1]] * m[r[1]][s[0]];
            out[j][i] = inv_det * minor;
        }
    }
    Ok(out)
}

/// Charge-raising operator R = e^{iφ}: ⟨n+1|R|n⟩ = 1.
fn raise_op(d: usize) -> CMatrix {
    let mut r = CMatrix::zeros((d, d));
    for m in 0..d - 1 {
        r[(m + 1, m)] = c(1.0);
    }
    r
}

/// Compact phase operator on (−π, π]: ⟨n|φ|m⟩ = i·(−1)^(n−m)/(n−m), zero on
/// the diagonal.
fn phi_op(d: usize) -> CMatrix {
    let mut p = CMatrix::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            if a != b {
                let k = a as isize - b as isize;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                p[(a, b)] = C64::new(0.0, sign / k as f64);
            }
        }
    }
    p
}

/// φ² on the same interval: π²/3 on the diagonal, 2·(−1)^(n−m)/(n−m)² off.
fn phi_sq_op(d: usize) -> CMatrix {
    let mut p = CMatrix::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            let k = a as isize - b as isize;
            if k == 0 {
                p[(a, b)] = c(std::f64::consts::PI.powi(2) / 3.0);
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                p[(a, b)] = c(2.0 * sign / (k * k) as f64);
            }
        }
    }
    p
}

fn kron3(a: &CMatrix, b: &CMatrix, r: &CMatrix) -> CMatrix {
    kron(&kron(a, b), r)
}

/// Full charge-basis Hamiltonian of one qubit loop (dimension
/// (2·n_charge+1)³), Hermitian, in GHz.
pub fn build_qubit_hamiltonian(p: &CircuitParams) -> Result<CMatrix> {
    p.validate()?;
    let d = p.charge_dim();
    let dim = p.dim();
    let nq = p.n_charge as isize;
    let minv = invert_3x3(&mass_matrix(p.alpha, p.beta, 1.0))?;

    let mut h = CMatrix::zeros((dim, dim));
    // kinetic term: diagonal in the charge basis
    for i1 in 0..d {
        for i2 in 0..d {
            for i3 in 0..d {
                let q = [
                    (i1 as isize - nq) as f64,
                    (i2 as isize - nq) as f64,
                    (i3 as isize - nq) as f64,
                ];
                let mut quad = 0.0;
                for (i, qi) in q.iter().enumerate() {
                    for (j, qj) in q.iter().enumerate() {
                        quad += minv[i][j] * qi * qj;
                    }
                }
                let s = (i1 * d + i2) * d + i3;
                h[(s, s)] = c(4.0 * p.e_c * quad);
            }
        }
    }

    let i = identity(d);
    let r = raise_op(d);
    let cos = (&r + &crate::linalg::conj_t(&r)) * c(0.5);

    h = h + kron3(&phi_sq_op(d), &i, &i) * c(p.e_lr);
    h = h - kron3(&cos, &i, &i) * c(p.e_j * p.beta);
    h = h - kron3(&i, &cos, &i) * c(p.e_j);
    h = h - kron3(&i, &i, &cos) * c(p.e_j);

    // α junction: −E_J·α·cos(2πφ_e − φ_β − φ_a − φ_b); the triple-raising
    // operator T = e^{i(φ_β+φ_a+φ_b)} moves one Cooper pair through the
    // whole loop, as the flux-quantization constraint demands
    let t = kron3(&r, &r, &r);
    let ph = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * p.phi_e);
    let half = c(0.5 * p.e_j * p.alpha);
    h = h - (&t * (ph * half) + &crate::linalg::conj_t(&t) * (ph.conj() * half));
    Ok(h)
}

/// Coupling matrix g_ij = √(ω_r·E_Lr)·⟨i|φ̂_β|j⟩ (GHz) between the lowest
/// `n_levels` eigenstates of a diagonalized loop.
///
/// Eigenvector phases are fixed so that ⟨0|φ̂_β|i⟩ is real and ≥ 0 for every
/// i ≥ 1 (in particular g₀₁ ≥ 0); diagonal entries are phase-independent.
pub fn coupling_elements(
    p: &CircuitParams,
    decomp: &EigenDecomposition,
    n_levels: usize,
) -> Result<CMatrix> {
    let dim = p.dim();
    if decomp.vectors.nrows() != dim {
        return Err(Error::DimensionMismatch {
            context: "coupling_elements eigenbasis",
            expected: dim,
            got: decomp.vectors.nrows(),
        });
    }
    if n_levels < 1 || n_levels > dim {
        return Err(Error::InvalidParam(format!(
            "n_levels must be in 1..={dim}, got {n_levels}"
        )));
    }
    let d = p.charge_dim();
    let i = identity(d);
    let phib = kron3(&phi_op(d), &i, &i);

    // pm = V† φ_β V over the kept levels
    let v = decomp.vectors.slice(ndarray::s![.., ..n_levels]);
    let pv = phib.dot(&v);
    let mut pm = CMatrix::zeros((n_levels, n_levels));
    for a in 0..n_levels {
        for b in 0..n_levels {
            let mut z = C64::new(0.0, 0.0);
            for k in 0..dim {
                z += v[(k, a)].conj() * pv[(k, b)];
            }
            pm[(a, b)] = z;
        }
    }

    // phase fixing: rotate column i so that pm[0, i] is real >= 0
    for i in 1..n_levels {
        let z = pm[(0, i)];
        if z.norm() > 1e-12 {
            let ph = z / z.norm();
            for a in 0..n_levels {
                pm[(a, i)] *= ph.conj();
            }
            for b in 0..n_levels {
                pm[(i, b)] *= ph;
            }
        }
    }

    let scale = (p.omega_r * p.e_lr).sqrt();
    Ok(pm * c(scale))
}

/// Result of condensing one qubit loop to the two-level parameters of the
/// coupled model, together with the multi-level data the reduction is based
/// on.
#[derive(Debug, Clone)]
pub struct QubitReduction {
    /// Eigenenergies at the operating flux, relative to the ground state
    /// (levels[0] = 0), in GHz.
    pub levels: Vec<f64>,
    /// Coupling matrix g_ij (GHz) between those levels, phase convention
    /// g₀₁ ≥ 0.
    pub g_matrix: CMatrix,
    /// Two-level bias energy ε = slope·(φ_e − 1/2) (GHz); zero at the
    /// symmetry point, positive above it.
    pub eps: f64,
    /// Two-level gap Δ: the minimal 0→1 splitting, reached at φ_e = 1/2
    /// (GHz).
    pub delta: f64,
    /// Two-level coupling magnitude g (GHz); see [`two_level_reduce`].
    pub g: f64,
    /// Measured bias slope dε/dφ_e (GHz per flux quantum).
    pub slope: f64,
}

/// Reduce one qubit loop to the (ε, Δ, g) parameters of the coupled model.
///
/// Three diagonalizations: at the symmetry point φ_e = 1/2 (the minimal
/// splitting there is Δ), at 1/2 + 0.002 (the extra splitting measures the
/// bias slope, so ε = slope·(φ_e − 1/2) with the sign of φ_e − 1/2), and at
/// the operating flux (levels and coupling matrix). The two-level coupling
/// is the basis-invariant magnitude of the traceless part of the 2×2
/// coupling block, g = √(((g₀₀−g₁₁)/2)² + |g₀₁|²), which equals |g₀₁| at the
/// symmetry point and stays nearly flat as the bias tilts the eigenbasis.
pub fn two_level_reduce(p: &CircuitParams, n_levels: usize) -> Result<QubitReduction> {
    p.validate()?;
    if n_levels < 2 || n_levels > p.dim() {
        return Err(Error::InvalidParam(format!(
            "n_levels must be in 2..={}, got {n_levels}",
            p.dim()
        )));
    }

    let at = |phi_e: f64| CircuitParams { phi_e, ..*p };

    let w_half = hermitian_eigenvalues(&build_qubit_hamiltonian(&at(0.5))?)?;
    let delta = w_half[1] - w_half[0];

    let w_ref = hermitian_eigenvalues(&build_qubit_hamiltonian(&at(0.5 + DPHI_REF))?)?;
    let gap_ref = w_ref[1] - w_ref[0];
    let slope = (gap_ref.powi(2) - delta.powi(2)).max(0.0).sqrt() / DPHI_REF;
    let eps = slope * (p.phi_e - 0.5);

    let d = hermitian_eig(&build_qubit_hamiltonian(p)?)?;
    let levels: Vec<f64> = d.values[..n_levels].iter().map(|e| e - d.values[0]).collect();
    let g_matrix = coupling_elements(p, &d, n_levels)?;

    let g00 = g_matrix[(0, 0)].re;
    let g11 = g_matrix[(1, 1)].re;
    let g01 = g_matrix[(0, 1)].norm();
    let g = ((0.5 * (g00 - g11)).powi(2) + g01 * g01).sqrt();

    Ok(QubitReduction {
        levels,
        g_matrix,
        eps,
        delta,
        g,
        slope,
    })
}

/// Maximum absolute drift (GHz) of the lowest `n_levels` eigenvalues when
/// the charge cutoff is raised by 2 — the basis-convergence measure. Values
/// below 1e−4·E_J indicate a converged cutoff.
pub fn charge_convergence(p: &CircuitParams, n_levels: usize) -> Result<f64> {
    p.validate()?;
    if n_levels < 1 || n_levels > p.dim() {
        return Err(Error::InvalidParam(format!(
            "n_levels must be in 1..={}, got {n_levels}",
            p.dim()
        )));
    }
    let w_lo = hermitian_eigenvalues(&build_qubit_hamiltonian(p)?)?;
    let bigger = CircuitParams {
        n_charge: p.n_charge + 2,
        ..*p
    };
    let w_hi = hermitian_eigenvalues(&build_qubit_hamiltonian(&bigger)?)?;
    Ok((0..n_levels).fold(0.0f64, |m, k| m.max((w_lo[k] - w_hi[k]).abs())))
}

/// Assemble the coupled two-qubit-plus-resonator Hamiltonian directly from
/// two loop reductions, keeping every level and the full coupling matrices:
///
/// H = Ω₁ + Ω₂ + ω_r a†a − (G₁ − G₂)(a†+a) − (2/ω_r)G₁G₂
///
/// with Ωₖ the diagonal level matrices and Gₖ the coupling matrices. Its
/// spectrum is the yardstick for how much the two-level (ε, Δ, g) reduction
/// truncates away.
pub fn assemble_reduced(
    r1: &QubitReduction,
    r2: &QubitReduction,
    omega_r: f64,
    n_photons: usize,
) -> Result<CMatrix> {
    if !(omega_r > 0.0) {
        return Err(Error::InvalidParam(format!(
            "omega_r must be positive, got {omega_r}"
        )));
    }
    let (n1, n2) = (r1.levels.len(), r2.levels.len());
    if r1.g_matrix.nrows() != n1 || r2.g_matrix.nrows() != n2 {
        return Err(Error::DimensionMismatch {
            context: "assemble_reduced coupling matrix",
            expected: n1,
            got: r1.g_matrix.nrows(),
        });
    }
    let lev = |r: &QubitReduction| {
        let n = r.levels.len();
        let mut m = CMatrix::zeros((n, n));
        for (k, &e) in r.levels.iter().enumerate() {
            m[(k, k)] = c(e);
        }
        m
    };
    let (o1, o2) = (lev(r1), lev(r2));
    let (i1, i2) = (identity(n1), identity(n2));
    let ir = identity(n_photons);
    let nop = number_op(n_photons)?;
    let x = quadrature(n_photons)?;

    let mut h = kron3(&o1, &i2, &ir);
    h = h + kron3(&i1, &o2, &ir);
    h = h + kron3(&i1, &i2, &nop) * c(omega_r);
    h = h - kron3(&r1.g_matrix, &i2, &x);
    h = h + kron3(&i1, &r2.g_matrix, &x);
    h = h - kron3(&r1.g_matrix, &r2.g_matrix, &ir) * c(2.0 / omega_r);
    Ok(h)
}

/// Bundle two loop reductions into the parameters of the two-level coupled
/// model.
pub fn reduced_dicke_params(
    r1: &QubitReduction,
    r2: &QubitReduction,
    omega_r: f64,
    n_cut: usize,
) -> Result<DickeParams> {
    let p = DickeParams {
        omega_r,
        eps1: r1.eps,
        eps2: r2.eps,
        delta1: r1.delta,
        delta2: r2.delta,
        g1: r1.g,
        g2: r2.g,
        n_cut,
    };
    p.validate()?;
    Ok(p)
}
