//! Closed-form solution of the zero-tunneling limit (Δ₁ = Δ₂ = 0, g₁ = g₂).
//!
//! With the gaps removed, both σ_z operators are conserved, so the
//! Hamiltonian splits into four sectors labelled by the circulation
//! eigenvalues. Each sector is a displaced harmonic oscillator that can be
//! solved exactly; the displacement is controlled by a single integer
//! [`m_value`] M ∈ {−2, 0, +2}:
//!
//! * ⟨a⟩ = −M·g/ω_r in the sector ground state,
//! * ⟨a†a⟩ = (M·g/ω_r)²,
//! * E(m₁, m₂, n) = n·ω_r + |ε₁|m₁/2 + |ε₂|m₂/2 − 2g²/ω_r.
//!
//! The −2g²/ω_r constant is the combined oscillator-displacement and direct
//! spin–spin energy; after cancellation it is the *same* in every sector,
//! displaced or not (the displacement gain −M²g²/ω_r and the spin–spin term
//! always sum to it).
//!
//! These formulas serve as an independent oracle for the numerical
//! diagonalization: its eigenvalues must reproduce every sector energy once
//! the gaps are taken to zero.

use crate::linalg::hermitian_eig;
use crate::model::{build_h_flux, DickeParams};
use crate::operators::{embed, number_op};
use crate::{Error, Result};

/// Parameters of the zero-tunneling limit (GHz). Both qubits share one
/// coupling g; the limit with g₁ ≠ g₂ is still exactly solvable but is not
/// needed here and is not implemented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalParams {
    pub omega_r: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub g: f64,
}

impl LongitudinalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) {
            return Err(Error::InvalidParam(format!(
                "omega_r must be positive, got {}",
                self.omega_r
            )));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParam(format!(
                "coupling must be non-negative, got {}",
                self.g
            )));
        }
        for (name, v) in [("omega_r", self.omega_r), ("eps1", self.eps1), ("eps2", self.eps2), ("g", self.g)] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Embed into the full model at (numerically) zero gap for cross-checks.
    pub fn to_dicke(&self, delta_floor: f64, n_cut: usize) -> DickeParams {
        DickeParams {
            omega_r: self.omega_r,
            eps1: self.eps1,
            eps2: self.eps2,
            delta1: delta_floor,
            delta2: delta_floor,
            g1: self.g,
            g2: self.g,
            n_cut,
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn check_m(m: i32) -> Result<()> {
    if m == 1 || m == -1 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "sector labels must be +1 or -1, got {m}"
        )))
    }
}

/// Displacement integer M = sgn(ε₂)m₂ − sgn(ε₁)m₁ ∈ {−2, 0, +2}.
///
/// `m1`, `m2` ∈ {−1, +1} label each qubit relative to its own ground state
/// (−1 = lower well, +1 = upper well), so the map to σ_z eigenvalues depends
/// on the bias signs; sgn(0) = +1. M = 0 sectors leave the resonator in
/// vacuum, M = ±2 displace it to a coherent state.
pub fn m_value(eps1: f64, eps2: f64, m1: i32, m2: i32) -> Result<i32> {
    check_m(m1)?;
    check_m(m2)?;
    Ok((sgn(eps2) * m2 as f64 - sgn(eps1) * m1 as f64) as i32)
}

/// Exact energy of Fock level n of sector (m₁, m₂):
/// n·ω_r + |ε₁|m₁/2 + |ε₂|m₂/2 − 2g²/ω_r.
pub fn sector_energy(p: &LongitudinalParams, m1: i32, m2: i32, n: usize) -> Result<f64> {
    p.validate()?;
    check_m(m1)?;
    check_m(m2)?;
    Ok(n as f64 * p.omega_r + 0.5 * p.eps1.abs() * m1 as f64 + 0.5 * p.eps2.abs() * m2 as f64
        - 2.0 * p.g * p.g / p.omega_r)
}

/// Coherent amplitude ⟨a⟩ = −M·g/ω_r of the sector ground state (real by
/// choice of gauge).
pub fn coherent_amplitude(p: &LongitudinalParams, m1: i32, m2: i32) -> Result<f64> {
    p.validate()?;
    let m = m_value(p.eps1, p.eps2, m1, m2)?;
    Ok(-(m as f64) * p.g / p.omega_r)
}

/// Mean photon number ⟨a†a⟩ = (M·g/ω_r)² of the sector ground state.
pub fn mean_photons(p: &LongitudinalParams, m1: i32, m2: i32) -> Result<f64> {
    let a = coherent_amplitude(p, m1, m2)?;
    Ok(a * a)
}

/// One solved sector of the zero-tunneling limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSummary {
    pub m1: i32,
    pub m2: i32,
    /// Displacement integer M.
    pub m: i32,
    /// "gg", "ge", "eg" or "ee" (−1 = g, +1 = e per qubit).
    pub atomic_label: String,
    /// ⟨a⟩ of the sector ground state.
    pub amplitude: f64,
    /// ⟨a†a⟩ of the sector ground state.
    pub mean_photons: f64,
    /// Ground (n = 0) energy of the sector.
    pub energy0: f64,
}

impl SectorSummary {
    /// True when the sector ground state carries a displaced (coherent)
    /// resonator field rather than vacuum.
    pub fn displaced(&self) -> bool {
        self.m != 0
    }

    /// Compact ket label, e.g. `|eg>|-1.3359>` or `|gg>|0>`.
    pub fn display_label(&self) -> String {
        if self.displaced() {
            format!("|{}>|{:+.4}>", self.atomic_label, self.amplitude)
        } else {
            format!("|{}>|0>", self.atomic_label)
        }
    }
}

fn atomic_char(m: i32) -> char {
    if m < 0 {
        'g'
    } else {
        'e'
    }
}

/// All four sectors in (m₁, m₂) lexicographic order:
/// (−1,−1), (−1,+1), (+1,−1), (+1,+1).
pub fn sector_table(p: &LongitudinalParams) -> Result<Vec<SectorSummary>> {
    p.validate()?;
    let mut rows = Vec::with_capacity(4);
    for m1 in [-1, 1] {
        for m2 in [-1, 1] {
            let m = m_value(p.eps1, p.eps2, m1, m2)?;
            let amplitude = coherent_amplitude(p, m1, m2)?;
            rows.push(SectorSummary {
                m1,
                m2,
                m,
                atomic_label: format!("{}{}", atomic_char(m1), atomic_char(m2)),
                amplitude,
                mean_photons: amplitude * amplitude,
                energy0: sector_energy(p, m1, m2, 0)?,
            });
        }
    }
    Ok(rows)
}

/// Energies of all sectors for n = 0..n_max, merged and sorted ascending —
/// the exact spectrum of the zero-tunneling model up to that photon number.
pub fn merged_spectrum(p: &LongitudinalParams, n_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(4 * (n_max + 1));
    for m1 in [-1, 1] {
        for m2 in [-1, 1] {
            for n in 0..=n_max {
                out.push(sector_energy(p, m1, m2, n)?);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Numerical cross-check data: ground-state energy and mean photon number of
/// the full model evaluated at a tiny residual gap.
pub struct GroundCheck {
    pub energy: f64,
    pub mean_photons: f64,
}

/// Diagonalize the full model at gap `delta_floor` and return its global
/// ground-state energy and photon population, for comparison against the
/// closed-form sector values.
pub fn numerical_ground(p: &LongitudinalParams, delta_floor: f64, n_cut: usize) -> Result<GroundCheck> {
    let dp = p.to_dicke(delta_floor, n_cut);
    let h = build_h_flux(&dp)?;
    let d = hermitian_eig(&h)?;
    let v = d.vectors.column(0);
    let nop = embed(&number_op(n_cut)?, 2, &[2, 2, n_cut])?;
    let nv = nop.dot(&v);
    let n_exp: num_complex::Complex64 = v.iter().zip(nv.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(GroundCheck {
        energy: d.values[0],
        mean_photons: n_exp.re,
    })
}
