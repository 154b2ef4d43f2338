//! Hamiltonian builders for two flux qubits coupled to one resonator mode.
//!
//! Three builders share a single unit system (linear frequency, GHz, h = 1;
//! the resonator zero-point offset is dropped — it shifts every level equally
//! and no transition depends on it):
//!
//! * [`build_h_flux`] — the flux (persistent-current) basis:
//!   ω_r a†a + Σₖ (εₖ/2)σ_zk + (Δₖ/2)σ_xk − (g₁σ_z1 − g₂σ_z2)(a†+a)
//!   − (2g₁g₂/ω_r)σ_z1σ_z2.
//! * [`build_h_dicke`] — the qubit-diagonal frame, obtained from the flux
//!   basis by a qubit-local rotation; exactly isospectral.
//! * [`build_h_reference`] — the non-interacting reference with gaps
//!   renormalized by the vacuum displacement, Δₖ → Δₖ·exp(−2(gₖ/ω_r)²),
//!   used to judge how far the full spectrum departs from free lines.
//!
//! Subsystem order is (qubit 1, qubit 2, resonator); the flux-basis index of
//! |q₁ q₂ n⟩ is `((q1·2) + q2)·n_cut + n`.

use num_complex::Complex64 as C64;

use crate::linalg::{kron, CMatrix};
use crate::operators::{identity, number_op, quadrature, sigma_x, sigma_z};
use crate::{Error, Result};

/// Model parameters, all in GHz except the dimensionless Fock cutoff.
///
/// `eps1`/`eps2` are the persistent-current bias energies (sign convention:
/// positive bias raises the energy of the positive-circulation well);
/// `delta1`/`delta2` the tunnel gaps; `g1`/`g2` the qubit–resonator
/// couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DickeParams {
    pub omega_r: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
    /// Fock-space truncation of the resonator (matrix dim is 4·n_cut).
    pub n_cut: usize,
}

/// Default Fock cutoff; passes the doubling test at the device parameters
/// (couplings ≈ 0.65·ω_r displace the field by ~1.3 quanta, so large photon
/// dressing is needed).
pub const DEFAULT_N_CUT: usize = 30;

impl DickeParams {
    /// A realistic device parameter set (two nearly identical flux qubits
    /// galvanically coupled to a 5.15 GHz resonator), used throughout the
    /// examples and tests. `eps1` is the swept bias and defaults to 0.
    pub fn reference_device() -> Self {
        DickeParams {
            omega_r: 5.15,
            eps1: 0.0,
            eps2: -3.22,
            delta1: 1.31,
            delta2: 1.27,
            g1: 3.33,
            g2: 3.45,
            n_cut: DEFAULT_N_CUT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) {
            return Err(Error::InvalidParam(format!(
                "omega_r must be positive, got {}",
                self.omega_r
            )));
        }
        if !(self.delta1 > 0.0) || !(self.delta2 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "qubit gaps must be positive, got delta1={}, delta2={}",
                self.delta1, self.delta2
            )));
        }
        if self.g1 < 0.0 || self.g2 < 0.0 {
            return Err(Error::InvalidParam(format!(
                "couplings must be non-negative, got g1={}, g2={}",
                self.g1, self.g2
            )));
        }
        if self.n_cut < 2 {
            return Err(Error::InvalidParam(format!(
                "n_cut must be at least 2, got {}",
                self.n_cut
            )));
        }
        for (name, v) in [
            ("omega_r", self.omega_r),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("g1", self.g1),
            ("g2", self.g2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Signed qubit frequency sgn(ε)·√(ε² + Δ²); sgn(0) = +1 so the function is
/// total and continuous from the right.
pub fn qubit_frequency(eps: f64, delta: f64) -> f64 {
    let sign = if eps < 0.0 { -1.0 } else { 1.0 };
    sign * (eps * eps + delta * delta).sqrt()
}

/// Mixing angle −arctan(ε/Δ) between the flux basis and the qubit eigenbasis;
/// 0 means the coupling is purely transverse.
pub fn mixing_angle(eps: f64, delta: f64) -> f64 {
    -(eps / delta).atan()
}

/// Rotated-frame quantities derived from [`DickeParams`].
#[derive(Debug, Clone, Copy)]
pub struct MixedAngleParams {
    pub omega_q1: f64,
    pub omega_q2: f64,
    /// Radians, in (−π/2, π/2).
    pub theta1: f64,
    pub theta2: f64,
}

pub fn mixed_angle_params(p: &DickeParams) -> MixedAngleParams {
    MixedAngleParams {
        omega_q1: qubit_frequency(p.eps1, p.delta1),
        omega_q2: qubit_frequency(p.eps2, p.delta2),
        theta1: mixing_angle(p.eps1, p.delta1),
        theta2: mixing_angle(p.eps2, p.delta2),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron3(a: &CMatrix, b: &CMatrix, r: &CMatrix) -> CMatrix {
    kron(&kron(a, b), r)
}

/// Flux-basis Hamiltonian (dimension 4·n_cut).
pub fn build_h_flux(p: &DickeParams) -> Result<CMatrix> {
    p.validate()?;
    let i2 = identity(2);
    let ir = identity(p.n_cut);
    let nop = number_op(p.n_cut)?;
    let x = quadrature(p.n_cut)?;
    let sz = sigma_z();
    let sx = sigma_x();

    let mut h = kron3(&i2, &i2, &nop) * c(p.omega_r);
    h = h + kron3(&sz, &i2, &ir) * c(0.5 * p.eps1);
    h = h + kron3(&sx, &i2, &ir) * c(0.5 * p.delta1);
    h = h + kron3(&i2, &sz, &ir) * c(0.5 * p.eps2);
    h = h + kron3(&i2, &sx, &ir) * c(0.5 * p.delta2);
    h = h - kron3(&sz, &i2, &x) * c(p.g1);
    h = h + kron3(&i2, &sz, &x) * c(p.g2);
    h = h - kron3(&sz, &sz, &ir) * c(2.0 * p.g1 * p.g2 / p.omega_r);
    Ok(h)
}

/// Coupling direction of qubit k in the rotated frame.
///
/// The qubit-local rotation that takes (ε/2)σ_z + (Δ/2)σ_x onto (ω_q/2)σ_z
/// maps σ_z onto (Δ σ_x + |ε| σ_z)/√(ε²+Δ²) = cosθ σ_x + |sinθ| σ_z for
/// either sign of the bias — the |·| on the z-coefficient is what keeps
/// [`build_h_dicke`] exactly isospectral to [`build_h_flux`].
fn lambda_op(theta: f64) -> CMatrix {
    let sx = sigma_x();
    let sz = sigma_z();
    sx * c(theta.cos()) + sz * c(theta.sin().abs())
}

/// Rotated-frame (qubit-diagonal) Hamiltonian:
/// ω_r a†a + Σₖ (ω_qk/2)σ_zk − (g₁Λ₁ − g₂Λ₂)(a†+a) − (2g₁g₂/ω_r)Λ₁Λ₂,
/// with Λₖ = cosθₖ σ_x + |sinθₖ| σ_z.
pub fn build_h_dicke(p: &DickeParams) -> Result<CMatrix> {
    p.validate()?;
    let ma = mixed_angle_params(p);
    let i2 = identity(2);
    let ir = identity(p.n_cut);
    let nop = number_op(p.n_cut)?;
    let x = quadrature(p.n_cut)?;
    let sz = sigma_z();
    let l1 = lambda_op(ma.theta1);
    let l2 = lambda_op(ma.theta2);

    let mut h = kron3(&i2, &i2, &nop) * c(p.omega_r);
    h = h + kron3(&sz, &i2, &ir) * c(0.5 * ma.omega_q1);
    h = h + kron3(&i2, &sz, &ir) * c(0.5 * ma.omega_q2);
    h = h - kron3(&l1, &i2, &x) * c(p.g1);
    h = h + kron3(&i2, &l2, &x) * c(p.g2);
    h = h - kron3(&l1, &l2, &ir) * c(2.0 * p.g1 * p.g2 / p.omega_r);
    Ok(h)
}

/// Gap renormalization factor exp(−2(g/ω_r)²) of the vacuum displacement.
pub fn renormalized_gap(delta: f64, g: f64, omega_r: f64) -> f64 {
    delta * (-2.0 * (g / omega_r).powi(2)).exp()
}

/// Non-interacting reference: couplings removed, gaps renormalized by
/// Δₖ → Δₖ·exp(−2(gₖ/ω_r)²). Its lines approximately track the full model
/// away from avoided crossings.
pub fn build_h_reference(p: &DickeParams) -> Result<CMatrix> {
    p.validate()?;
    let mut q = *p;
    q.delta1 = renormalized_gap(p.delta1, p.g1, p.omega_r);
    q.delta2 = renormalized_gap(p.delta2, p.g2, p.omega_r);
    q.g1 = 0.0;
    q.g2 = 0.0;
    build_h_dicke(&q)
}

/// Excitation parity σ_z1 σ_z2 exp(iπ a†a); commutes with the rotated-frame
/// Hamiltonian when both biases vanish.
pub fn parity_op(n_cut: usize) -> Result<CMatrix> {
    let mut ph = CMatrix::zeros((n_cut, n_cut));
    for n in 0..n_cut {
        ph[(n, n)] = c(if n % 2 == 0 { 1.0 } else { -1.0 });
    }
    Ok(kron3(&sigma_z(), &sigma_z(), &ph))
}

/// Flux-basis index of the rotated-frame bare state |q₁ q₂ n⟩ where each
/// qubit label is `false` = ground, `true` = excited.
///
/// |g⟩/|e⟩ are the lower/higher eigenstates of (ω_q/2)σ_z: for ω_q ≥ 0 the
/// ground state is the σ_z = −1 basis state (index 1), for ω_q < 0 it is
/// σ_z = +1 (index 0). At the reference device's operating point both biases
/// are negative, so there |g⟩ is index 0 on both qubits.
pub fn bare_state_index(p: &DickeParams, excited1: bool, excited2: bool, n: usize) -> usize {
    let ma = mixed_angle_params(p);
    let q_index = |omega_q: f64, excited: bool| -> usize {
        let ground_is_plus = omega_q < 0.0;
        match (ground_is_plus, excited) {
            (true, false) | (false, true) => 0,
            (true, true) | (false, false) => 1,
        }
    };
    let q1 = q_index(ma.omega_q1, excited1);
    let q2 = q_index(ma.omega_q2, excited2);
    (q1 * 2 + q2) * p.n_cut + n
}

/// Normalized coupling rates (g₁/ω_r, g₂/ω_r), the figure of merit for
/// ultrastrong coupling.
pub fn coupling_ratios(p: &DickeParams) -> (f64, f64) {
    (p.g1 / p.omega_r, p.g2 / p.omega_r)
}

/// One-line report of the normalized coupling rates.
pub fn coupling_ratio_report(p: &DickeParams) -> String {
    let (r1, r2) = coupling_ratios(p);
    format!("g1/omega_r = {r1:.4}  g2/omega_r = {r2:.4}")
}
