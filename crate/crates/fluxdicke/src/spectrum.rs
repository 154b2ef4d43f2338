//! Bias sweeps and spectral analysis built on the Hamiltonian builders.
//!
//! The experiment's knob is a bias current; [`SweepCalibration`] maps it to
//! the qubit-1 bias energy and captures two parasitic couplings of that knob
//! into the rest of the device (a linear shift of the qubit-2 bias and a
//! small, sign-dependent pull of the resonator frequency). Everything else
//! here — transition tables, bare-state projections, avoided-crossing
//! search, dressed frequencies, reference-model comparison — is a pure
//! function of the resulting model parameters.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::linalg::{hermitian_eig, hermitian_eigenvalues, CMatrix};
use crate::model::{
    bare_state_index, build_h_dicke, build_h_flux, build_h_reference, DickeParams,
};
use crate::operators::{number_op, quadrature};
use crate::{Error, Result};

/// Calibration of the swept bias line, including its parasitic crosstalk.
///
/// * `eps_tilde0` (GHz/mA) and `i_b0` (mA) give the linear bias map
///   ε₁ = ε̃₀·(I_b − I_b0).
/// * `a` leaks the swept bias into qubit 2: ε₂ → ε₂ + a·ε₁.
/// * `b_plus`/`b_minus` (1/GHz) pull the resonator:
///   ω_r → ω_r·(1 + b±·ε₁), with `b_plus` applied for ε₁ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCalibration {
    pub eps_tilde0: f64,
    pub i_b0: f64,
    pub a: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

impl SweepCalibration {
    /// Measured calibration of the reference device.
    pub fn reference_device() -> Self {
        SweepCalibration {
            eps_tilde0: 201.6,
            i_b0: 0.547,
            a: -9.43e-3,
            b_plus: 0.78e-3,
            b_minus: 0.73e-3,
        }
    }

    /// The same bias map with all crosstalk switched off — the idealized
    /// model used by most analysis and tests.
    pub fn crosstalk_free() -> Self {
        SweepCalibration {
            a: 0.0,
            b_plus: 0.0,
            b_minus: 0.0,
            ..Self::reference_device()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_tilde0 == 0.0 || !self.eps_tilde0.is_finite() {
            return Err(Error::InvalidParam(format!(
                "eps_tilde0 must be finite and non-zero, got {}",
                self.eps_tilde0
            )));
        }
        for (name, v) in [
            ("i_b0", self.i_b0),
            ("a", self.a),
            ("b_plus", self.b_plus),
            ("b_minus", self.b_minus),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Bias current (mA) → qubit-1 bias energy (GHz).
pub fn bias_to_epsilon(cal: &SweepCalibration, i_b: f64) -> f64 {
    cal.eps_tilde0 * (i_b - cal.i_b0)
}

/// Qubit-1 bias energy (GHz) → bias current (mA).
pub fn epsilon_to_bias(cal: &SweepCalibration, eps1: f64) -> f64 {
    cal.i_b0 + eps1 / cal.eps_tilde0
}

/// Model parameters at bias ε₁, with the calibration's crosstalk applied.
///
/// The shifted resonator frequency feeds every ω_r-dependent term, including
/// the σ_z1σ_z2 coefficient 2g₁g₂/ω_r.
pub fn apply_crosstalk(
    cal: &SweepCalibration,
    base: &DickeParams,
    eps1: f64,
) -> Result<DickeParams> {
    cal.validate()?;
    let b = if eps1 >= 0.0 { cal.b_plus } else { cal.b_minus };
    let omega_r = base.omega_r * (1.0 + b * eps1);
    if !(omega_r > 0.0) {
        return Err(Error::InvalidParam(format!(
            "resonator pull drives omega_r non-positive ({omega_r}) at eps1 = {eps1}"
        )));
    }
    let p = DickeParams {
        eps1,
        eps2: base.eps2 + cal.a * eps1,
        omega_r,
        ..*base
    };
    p.validate()?;
    Ok(p)
}

/// Eigenvalues of the lowest levels across a bias sweep.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    /// Qubit-1 bias at each grid point (GHz).
    pub eps1: Vec<f64>,
    /// `energies[k][i]` — i-th eigenvalue at grid point k (GHz), ascending.
    pub energies: Vec<Vec<f64>>,
    pub n_levels: usize,
}

impl SpectrumTable {
    /// Transition frequency E_i − E_j at every grid point.
    pub fn transition(&self, i: usize, j: usize) -> Vec<f64> {
        self.energies.iter().map(|row| row[i] - row[j]).collect()
    }

    /// Spectral line ω_i0 = E_i − E_0 at every grid point.
    pub fn line(&self, i: usize) -> Vec<f64> {
        self.transition(i, 0)
    }
}

fn sweep_with(
    build: impl Fn(&DickeParams) -> Result<crate::linalg::CMatrix> + Sync,
    base: &DickeParams,
    cal: &SweepCalibration,
    eps_grid: &[f64],
    n_levels: usize,
) -> Result<SpectrumTable> {
    let dim = 4 * base.n_cut;
    if n_levels == 0 || n_levels > dim {
        return Err(Error::InvalidParam(format!(
            "n_levels must be in 1..={dim}, got {n_levels}"
        )));
    }
    let energies: Result<Vec<Vec<f64>>> = eps_grid
        .par_iter()
        .map(|&e| {
            let p = apply_crosstalk(cal, base, e)?;
            let w = hermitian_eigenvalues(&build(&p)?)?;
            Ok(w[..n_levels].to_vec())
        })
        .collect();
    Ok(SpectrumTable {
        eps1: eps_grid.to_vec(),
        energies: energies?,
        n_levels,
    })
}

/// Sweep the full model over a bias grid (parallel, order-preserving).
pub fn sweep(
    base: &DickeParams,
    cal: &SweepCalibration,
    eps_grid: &[f64],
    n_levels: usize,
) -> Result<SpectrumTable> {
    sweep_with(build_h_flux, base, cal, eps_grid, n_levels)
}

/// Sweep the renormalized non-interacting reference over the same grid.
pub fn reference_sweep(
    base: &DickeParams,
    cal: &SweepCalibration,
    eps_grid: &[f64],
    n_levels: usize,
) -> Result<SpectrumTable> {
    sweep_with(build_h_reference, base, cal, eps_grid, n_levels)
}

/// Evenly spaced grid of `n` points on [lo, hi] (n ≥ 2).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "grid needs at least 2 points, got {n}"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| lo + step * k as f64).collect())
}

/// Parse a bare-state label like `gg0`, `eg1` or `ee12` into
/// (qubit-1 excited, qubit-2 excited, photon number).
pub fn parse_label(label: &str, n_cut: usize) -> Result<(bool, bool, usize)> {
    let bad = || Error::UnknownLabel(label.to_string());
    let mut chars = label.chars();
    let q = |c: Option<char>| match c {
        Some('g') => Ok(false),
        Some('e') => Ok(true),
        _ => Err(bad()),
    };
    let e1 = q(chars.next())?;
    let e2 = q(chars.next())?;
    let n: usize = chars.as_str().parse().map_err(|_| bad())?;
    if n >= n_cut {
        return Err(Error::UnknownLabel(format!(
            "{label} (photon index {n} outside cutoff {n_cut})"
        )));
    }
    Ok((e1, e2, n))
}

/// Every bare-state label of a 4·n_cut basis, for completeness checks.
pub fn complete_label_set(n_cut: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(4 * n_cut);
    for q1 in ['g', 'e'] {
        for q2 in ['g', 'e'] {
            for n in 0..n_cut {
                out.push(format!("{q1}{q2}{n}"));
            }
        }
    }
    out
}

/// Squared overlaps of low eigenstates with chosen bare states across a
/// bias sweep.
#[derive(Debug, Clone)]
pub struct ProjectionTable {
    pub eps1: Vec<f64>,
    pub labels: Vec<String>,
    pub n_states: usize,
    /// `weights[k][i][l]` — |⟨label l | eigenstate i⟩|² at grid point k.
    pub weights: Vec<Vec<Vec<f64>>>,
    /// `energies[k][i]` — eigenvalue of state i at grid point k (GHz).
    pub energies: Vec<Vec<f64>>,
}

/// Project the lowest `n_states` eigenstates onto the given bare labels at
/// every grid point.
///
/// Bare states are defined in the rotated (qubit-diagonal) frame, where they
/// are basis vectors; the qubit ground/excited assignment tracks the sign of
/// each qubit frequency, so labels stay physical on both sides of zero bias.
pub fn projections(
    base: &DickeParams,
    cal: &SweepCalibration,
    eps_grid: &[f64],
    labels: &[&str],
    n_states: usize,
) -> Result<ProjectionTable> {
    let dim = 4 * base.n_cut;
    if n_states == 0 || n_states > dim {
        return Err(Error::InvalidParam(format!(
            "n_states must be in 1..={dim}, got {n_states}"
        )));
    }
    let parsed: Vec<(bool, bool, usize)> = labels
        .iter()
        .map(|l| parse_label(l, base.n_cut))
        .collect::<Result<_>>()?;

    type PointData = (Vec<Vec<f64>>, Vec<f64>);
    let rows: Result<Vec<PointData>> = eps_grid
        .par_iter()
        .map(|&e| {
            let p = apply_crosstalk(cal, base, e)?;
            let d = hermitian_eig(&build_h_dicke(&p)?)?;
            let indices: Vec<usize> = parsed
                .iter()
                .map(|&(e1, e2, n)| bare_state_index(&p, e1, e2, n))
                .collect();
            let mut weights = Vec::with_capacity(n_states);
            for i in 0..n_states {
                weights.push(
                    indices
                        .iter()
                        .map(|&idx| d.vectors[(idx, i)].norm_sqr())
                        .collect(),
                );
            }
            Ok((weights, d.values[..n_states].to_vec()))
        })
        .collect();
    let rows = rows?;
    Ok(ProjectionTable {
        eps1: eps_grid.to_vec(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
        n_states,
        weights: rows.iter().map(|(w, _)| w.clone()).collect(),
        energies: rows.into_iter().map(|(_, e)| e).collect(),
    })
}

/// A located avoided crossing between two adjacent levels.
#[derive(Debug, Clone, Copy)]
pub struct Anticrossing {
    /// Bias energy at the gap minimum (GHz).
    pub eps1_star: f64,
    /// The same point in bias current (mA).
    pub bias_star_ma: f64,
    /// Minimal gap E_hi − E_lo (GHz).
    pub gap: f64,
    /// Half the minimal gap (GHz) — the splitting quoted against linewidths.
    pub half_split: f64,
    /// Lower branch transition ω_lo,0 at the minimum (GHz).
    pub branch_lo: f64,
    /// Upper branch transition ω_hi,0 at the minimum (GHz).
    pub branch_hi: f64,
    /// Mean of the two branches (GHz).
    pub midpoint: f64,
    pub level_lo: usize,
    pub level_hi: usize,
}

const INVPHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of f on [a, b] to window width `xtol`.
fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<f64> {
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Locate the avoided crossing between levels `level_lo` < `level_hi` inside
/// `window = (eps_start, eps_stop)`.
///
/// A coarse scan of `coarse_points` points brackets the gap minimum, then a
/// golden-section search refines it to 1e−5 GHz in bias. If the smallest gap
/// sits on the window edge there is no interior anticrossing to report and
/// the search fails with [`Error::MonotoneGap`] rather than returning an
/// extrapolated point.
pub fn find_anticrossing(
    base: &DickeParams,
    cal: &SweepCalibration,
    level_lo: usize,
    level_hi: usize,
    window: (f64, f64),
    coarse_points: usize,
) -> Result<Anticrossing> {
    if level_lo >= level_hi || level_hi >= 4 * base.n_cut {
        return Err(Error::InvalidParam(format!(
            "level pair ({level_lo}, {level_hi}) is not ordered within the basis"
        )));
    }
    if !(window.0 < window.1) {
        return Err(Error::InvalidParam(format!(
            "search window ({}, {}) is empty",
            window.0, window.1
        )));
    }
    if coarse_points < 5 {
        return Err(Error::InvalidParam(format!(
            "coarse scan needs at least 5 points, got {coarse_points}"
        )));
    }

    let gap_at = |e: f64| -> Result<f64> {
        let p = apply_crosstalk(cal, base, e)?;
        let w = hermitian_eigenvalues(&build_h_flux(&p)?)?;
        Ok(w[level_hi] - w[level_lo])
    };

    let grid = linspace(window.0, window.1, coarse_points)?;
    let gaps: Result<Vec<f64>> = grid.par_iter().map(|&e| gap_at(e)).collect();
    let gaps = gaps?;
    let k_min = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    if k_min == 0 || k_min == grid.len() - 1 {
        return Err(Error::MonotoneGap {
            gap_start: gaps[0],
            gap_stop: *gaps.last().unwrap(),
        });
    }

    let eps1_star = golden_min(gap_at, grid[k_min - 1], grid[k_min + 1], 1e-5)?;
    let p = apply_crosstalk(cal, base, eps1_star)?;
    let w = hermitian_eigenvalues(&build_h_flux(&p)?)?;
    let branch_lo = w[level_lo] - w[0];
    let branch_hi = w[level_hi] - w[0];
    let gap = branch_hi - branch_lo;
    Ok(Anticrossing {
        eps1_star,
        bias_star_ma: epsilon_to_bias(cal, eps1_star),
        gap,
        half_split: 0.5 * gap,
        branch_lo,
        branch_hi,
        midpoint: 0.5 * (branch_lo + branch_hi),
        level_lo,
        level_hi,
    })
}

/// Dressed single-excitation frequencies at one bias point, classified by
/// which bare state dominates each low eigenstate.
#[derive(Debug, Clone, Copy)]
pub struct DressedFrequencies {
    /// Dressed qubit-1 transition (eigenstate dominated by |eg0⟩) (GHz).
    pub omega_q1: f64,
    /// Dressed qubit-2 transition (dominated by |ge0⟩) (GHz).
    pub omega_q2: f64,
    /// Dressed resonator transition (dominated by |gg1⟩) (GHz).
    pub omega_r: f64,
    pub weight_q1: f64,
    pub weight_q2: f64,
    pub weight_r: f64,
    /// Eigenstate index behind each frequency.
    pub state_q1: usize,
    pub state_q2: usize,
    pub state_r: usize,
    /// Set when any winning weight falls below 0.4 or two labels pick the
    /// same eigenstate. Deep in the ultrastrong regime qubit-flip states
    /// carry displaced photon fields, so even a correct classification can
    /// have modest single-label weight; the flag marks results that should
    /// be read with that in mind (and outright collisions at avoided
    /// crossings, where one bare state splits across two branches).
    pub ambiguous: bool,
}

/// Flux-basis comparison state for dressed-line classification: the product
/// of the two single-qubit eigenstates (`excited` picks upper/lower of
/// (ε/2)σ_z + (Δ/2)σ_x) with Fock state `n` of the mean-field-displaced
/// resonator ω_r a†a − κ̄(a†+a), κ̄ = g₁⟨σ_z1⟩ − g₂⟨σ_z2⟩.
///
/// A qubit flip drags the resonator field along (by |2g/ω_r| per qubit in
/// the zero-gap limit), so undisplaced label vectors overlap the photon
/// *replicas* of a flipped state more strongly than its lowest member; the
/// displaced ansatz keeps the overlap concentrated on the line being
/// tracked. It reduces to the plain bare label at weak coupling.
fn displaced_label_state(
    p: &DickeParams,
    excited1: bool,
    excited2: bool,
    n: usize,
) -> Result<Vec<C64>> {
    let qubit = |eps: f64, delta: f64, excited: bool| -> Result<(Vec<C64>, f64)> {
        let mut h2 = CMatrix::zeros((2, 2));
        h2[(0, 0)] = C64::new(0.5 * eps, 0.0);
        h2[(1, 1)] = C64::new(-0.5 * eps, 0.0);
        h2[(0, 1)] = C64::new(0.5 * delta, 0.0);
        h2[(1, 0)] = C64::new(0.5 * delta, 0.0);
        let d = hermitian_eig(&h2)?;
        let col = usize::from(excited);
        let u = vec![d.vectors[(0, col)], d.vectors[(1, col)]];
        let mz = u[0].norm_sqr() - u[1].norm_sqr();
        Ok((u, mz))
    };
    let (u1, m1) = qubit(p.eps1, p.delta1, excited1)?;
    let (u2, m2) = qubit(p.eps2, p.delta2, excited2)?;

    let kappa = p.g1 * m1 - p.g2 * m2;
    let hosc = number_op(p.n_cut)? * C64::new(p.omega_r, 0.0)
        - quadrature(p.n_cut)? * C64::new(kappa, 0.0);
    let dosc = hermitian_eig(&hosc)?;

    let mut out = vec![C64::new(0.0, 0.0); 4 * p.n_cut];
    for (i1, &a) in u1.iter().enumerate() {
        for (i2, &b) in u2.iter().enumerate() {
            for m in 0..p.n_cut {
                out[(i1 * 2 + i2) * p.n_cut + m] = a * b * dosc.vectors[(m, n)];
            }
        }
    }
    Ok(out)
}

/// Classify the lowest `n_search` excited eigenstates by which dressed label
/// among {eg0, ge0, gg1} dominates them and report the corresponding
/// transition frequencies from the ground state.
pub fn dressed_frequencies(
    base: &DickeParams,
    cal: &SweepCalibration,
    eps1: f64,
    n_search: usize,
) -> Result<DressedFrequencies> {
    let dim = 4 * base.n_cut;
    if n_search < 2 || n_search > dim {
        return Err(Error::InvalidParam(format!(
            "n_search must be in 2..={dim}, got {n_search}"
        )));
    }
    let p = apply_crosstalk(cal, base, eps1)?;
    let d = hermitian_eig(&build_h_flux(&p)?)?;

    let targets = [(true, false, 0), (false, true, 0), (false, false, 1)];
    let mut freqs = [0.0f64; 3];
    let mut weights = [0.0f64; 3];
    let mut winners = [0usize; 3];
    for (t, &(e1, e2, n)) in targets.iter().enumerate() {
        let chi = displaced_label_state(&p, e1, e2, n)?;
        let (best_i, best_w) = (1..n_search)
            .map(|i| {
                let overlap: C64 = chi
                    .iter()
                    .zip(d.vectors.column(i).iter())
                    .map(|(c, v)| c.conj() * v)
                    .sum();
                (i, overlap.norm_sqr())
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        freqs[t] = d.values[best_i] - d.values[0];
        weights[t] = best_w;
        winners[t] = best_i;
    }
    let duplicate = winners[0] == winners[1] || winners[0] == winners[2] || winners[1] == winners[2];
    Ok(DressedFrequencies {
        omega_q1: freqs[0],
        omega_q2: freqs[1],
        omega_r: freqs[2],
        weight_q1: weights[0],
        weight_q2: weights[1],
        weight_r: weights[2],
        state_q1: winners[0],
        state_q2: winners[1],
        state_r: winners[2],
        ambiguous: duplicate || weights.iter().any(|&w| w < 0.4),
    })
}

/// One full-model line compared against its nearest reference line at one
/// grid point.
#[derive(Debug, Clone, Copy)]
pub struct LineDeviation {
    pub grid_index: usize,
    /// Index into the `full` slice passed to [`masked_line_deviations`].
    pub line_index: usize,
    pub full_value: f64,
    pub ref_value: f64,
    pub deviation: f64,
}

/// Compare spectral lines of the full model against a reference set,
/// point by point, skipping comparisons that cannot be matched cleanly.
///
/// `full[i][k]` and `reference[j][k]` are line frequencies over a common
/// grid. A comparison at (line i, point k) is masked out when another full
/// line passes within `isolation` (the lines hybridize and neither tracks a
/// single reference line), or when the nearest reference line has another
/// reference line within `isolation` of it (the match is ambiguous).
pub fn masked_line_deviations(
    full: &[Vec<f64>],
    reference: &[Vec<f64>],
    isolation: f64,
) -> Vec<LineDeviation> {
    let mut out = Vec::new();
    if full.is_empty() || reference.is_empty() {
        return out;
    }
    let n_points = full[0].len();
    for k in 0..n_points {
        for (i, line) in full.iter().enumerate() {
            let v = line[k];
            let crowded = full
                .iter()
                .enumerate()
                .any(|(b, other)| b != i && (other[k] - v).abs() < isolation);
            if crowded {
                continue;
            }
            let (j, rv) = reference
                .iter()
                .enumerate()
                .map(|(j, r)| (j, r[k]))
                .min_by(|a, b| (a.1 - v).abs().partial_cmp(&(b.1 - v).abs()).unwrap())
                .unwrap();
            let ambiguous = reference
                .iter()
                .enumerate()
                .any(|(j2, r)| j2 != j && (r[k] - rv).abs() < isolation);
            if ambiguous {
                continue;
            }
            out.push(LineDeviation {
                grid_index: k,
                line_index: i,
                full_value: v,
                ref_value: rv,
                deviation: (v - rv).abs(),
            });
        }
    }
    out
}
