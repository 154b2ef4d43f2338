//! Recovery of the device parameters from measured peak positions.
//!
//! Spectroscopy delivers a table of (bias, frequency) peak positions; this
//! module fits the eleven-parameter device description to that table by
//! staged derivative-free least squares:
//!
//! 1. **Stage 1** fits the eight core parameters (resonator frequency, two
//!    couplings, two qubit gaps, the static qubit-2 bias, and the linear
//!    bias-current map) with the crosstalk terms pinned to zero.
//! 2. **Stage 2** releases the three crosstalk parameters (bias leakage into
//!    qubit 2 and the sign-dependent resonator pull) and refits all eleven.
//!
//! Each stage is run twice — the second run rebuilds a fresh simplex around
//! the first run's minimum, which recovers the progress a collapsed simplex
//! would otherwise leave on the table.
//!
//! The objective is a weighted nearest-line residual: at every distinct bias
//! the model is diagonalized once, its seven lowest spectral lines (the six
//! transitions from the ground state plus the 1→2 transition) are computed,
//! and each measured peak is charged the squared distance to whichever line
//! lies closest. The fit minimizes the square root of the weighted mean of
//! those squares — an RMS in GHz.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::fmt_sig;
use crate::linalg::hermitian_eigenvalues;
use crate::model::{build_h_flux, DickeParams};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::spectrum::{apply_crosstalk, bias_to_epsilon, SweepCalibration};
use crate::{Error, Result};

/// Names of the eleven fit parameters, in vector order.
pub const PARAM_NAMES: [&str; 11] = [
    "omega_r", "g1", "g2", "delta1", "delta2", "eps2", "eps_tilde0", "i_b0", "a", "b_plus",
    "b_minus",
];

/// Number of spectral lines entering the residual.
pub const LINE_COUNT: usize = 7;

/// Names of the fitted lines: `wIJ` is the transition frequency E_I − E_J.
pub const LINE_NAMES: [&str; LINE_COUNT] = ["w10", "w20", "w30", "w40", "w50", "w60", "w12"];

/// The full device description targeted by the fit: the bias-independent
/// model parameters plus the sweep calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub omega_r: f64,
    pub g1: f64,
    pub g2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Static bias of qubit 2 (GHz), before crosstalk.
    pub eps2: f64,
    pub cal: SweepCalibration,
}

impl DeviceParams {
    /// Measured parameters of the reference device.
    pub fn reference_device() -> Self {
        DeviceParams {
            omega_r: 5.15,
            g1: 3.33,
            g2: 3.45,
            delta1: 1.31,
            delta2: 1.27,
            eps2: -3.22,
            cal: SweepCalibration::reference_device(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_dicke(crate::model::DEFAULT_N_CUT)?.validate()?;
        self.cal.validate()
    }

    /// The parameters as a flat vector in [`PARAM_NAMES`] order.
    pub fn to_vec(&self) -> [f64; 11] {
        [
            self.omega_r,
            self.g1,
            self.g2,
            self.delta1,
            self.delta2,
            self.eps2,
            self.cal.eps_tilde0,
            self.cal.i_b0,
            self.cal.a,
            self.cal.b_plus,
            self.cal.b_minus,
        ]
    }

    /// Rebuild from a flat vector in [`PARAM_NAMES`] order.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 11 {
            return Err(Error::DimensionMismatch {
                context: "device parameter vector",
                expected: 11,
                got: v.len(),
            });
        }
        Ok(DeviceParams {
            omega_r: v[0],
            g1: v[1],
            g2: v[2],
            delta1: v[3],
            delta2: v[4],
            eps2: v[5],
            cal: SweepCalibration {
                eps_tilde0: v[6],
                i_b0: v[7],
                a: v[8],
                b_plus: v[9],
                b_minus: v[10],
            },
        })
    }

    /// Model parameters at zero qubit-1 bias (the bias is swept separately
    /// and applied through [`apply_crosstalk`]).
    pub fn base_dicke(&self, n_cut: usize) -> Result<DickeParams> {
        let p = DickeParams {
            omega_r: self.omega_r,
            eps1: 0.0,
            eps2: self.eps2,
            delta1: self.delta1,
            delta2: self.delta2,
            g1: self.g1,
            g2: self.g2,
            n_cut,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Which quantity the peak table's first column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbscissaKind {
    /// Bias current in mA; converted to ε₁ through the fitted calibration.
    BiasMilliamp,
    /// Qubit-1 bias energy in GHz, used directly (the bias-map parameters
    /// then never enter the model and stay at their starting values).
    EpsilonGigahertz,
}

impl AbscissaKind {
    /// Column header naming this abscissa in peak-table CSV files.
    pub fn header(self) -> &'static str {
        match self {
            AbscissaKind::BiasMilliamp => "i_b_ma",
            AbscissaKind::EpsilonGigahertz => "eps1_ghz",
        }
    }
}

/// One measured peak: abscissa, frequency (GHz), and a positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPoint {
    pub x: f64,
    pub omega: f64,
    pub weight: f64,
}

/// A table of measured peaks sharing one abscissa convention.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakData {
    pub kind: AbscissaKind,
    pub points: Vec<PeakPoint>,
}

impl PeakData {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParam("peak table is empty".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.x.is_finite() || !p.omega.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "peak {i} has non-finite coordinates ({}, {})",
                    p.x, p.omega
                )));
            }
            if !(p.weight > 0.0) || !p.weight.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "peak {i} has non-positive weight {}",
                    p.weight
                )));
            }
        }
        Ok(())
    }

    /// Parse a peak table from CSV text.
    ///
    /// The first non-comment line must be a header: `i_b_ma,omega_ghz` or
    /// `eps1_ghz,omega_ghz`, optionally followed by `,weight`. Data rows hold
    /// period-decimal numbers; blank lines and lines starting with `#` are
    /// skipped. Missing weights default to 1.
    pub fn from_csv(text: &str) -> Result<PeakData> {
        let mut kind: Option<AbscissaKind> = None;
        let mut has_weight = false;
        let mut points = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let Some(k0) = kind else {
                let abscissa = match cells[0] {
                    "i_b_ma" => AbscissaKind::BiasMilliamp,
                    "eps1_ghz" => AbscissaKind::EpsilonGigahertz,
                    other => {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!(
                                "unknown abscissa column `{other}` (expected \
                                 `i_b_ma` or `eps1_ghz`)"
                            ),
                        })
                    }
                };
                match &cells[1..] {
                    ["omega_ghz"] => has_weight = false,
                    ["omega_ghz", "weight"] => has_weight = true,
                    _ => {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!(
                                "header must be `{0},omega_ghz` or \
                                 `{0},omega_ghz,weight`",
                                abscissa.header()
                            ),
                        })
                    }
                }
                kind = Some(abscissa);
                continue;
            };
            let _ = k0;
            let expected = if has_weight { 3 } else { 2 };
            if cells.len() != expected {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("expected {expected} columns, got {}", cells.len()),
                });
            }
            let mut parsed = [0.0f64; 3];
            for (slot, cell) in parsed.iter_mut().zip(&cells) {
                *slot = cell.parse().map_err(|_| Error::Csv {
                    line: line_no,
                    message: format!("cannot parse `{cell}` as a number"),
                })?;
            }
            let weight = if has_weight { parsed[2] } else { 1.0 };
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("weight must be positive and finite, got {weight}"),
                });
            }
            points.push(PeakPoint {
                x: parsed[0],
                omega: parsed[1],
                weight,
            });
        }
        let kind = kind.ok_or(Error::Csv {
            line: 0,
            message: "no header row found".into(),
        })?;
        let data = PeakData { kind, points };
        data.validate()?;
        Ok(data)
    }

    /// Render the table as CSV (12 significant digits, period decimals).
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},omega_ghz,weight\n", self.kind.header());
        for p in &self.points {
            s.push_str(&fmt_sig(p.x, 12));
            s.push(',');
            s.push_str(&fmt_sig(p.omega, 12));
            s.push(',');
            s.push_str(&fmt_sig(p.weight, 12));
            s.push('\n');
        }
        s
    }
}

/// The seven fitted spectral lines of the model at one qubit-1 bias:
/// ω_10 … ω_60 and ω_12, in [`LINE_NAMES`] order (GHz).
pub fn model_lines(dev: &DeviceParams, eps1: f64, n_cut: usize) -> Result<[f64; LINE_COUNT]> {
    let base = dev.base_dicke(n_cut)?;
    let p = apply_crosstalk(&dev.cal, &base, eps1)?;
    let w = hermitian_eigenvalues(&build_h_flux(&p)?)?;
    if w.len() < 7 {
        return Err(Error::DimensionMismatch {
            context: "model_lines spectrum",
            expected: 7,
            got: w.len(),
        });
    }
    Ok([
        w[1] - w[0],
        w[2] - w[0],
        w[3] - w[0],
        w[4] - w[0],
        w[5] - w[0],
        w[6] - w[0],
        w[2] - w[1],
    ])
}

/// Index of the line closest to `omega`; ties go to the lower index.
pub fn nearest_line(lines: &[f64], omega: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &l) in lines.iter().enumerate() {
        let d = (omega - l).abs();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

/// Weighted nearest-line RMS residual (GHz) of the model against a peak
/// table. Points sharing an abscissa are grouped so each distinct bias costs
/// one diagonalization; groups are evaluated in parallel and accumulated in
/// a fixed order, so the value is bit-reproducible.
pub fn rms_residual(dev: &DeviceParams, data: &PeakData, n_cut: usize) -> Result<f64> {
    data.validate()?;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, p) in data.points.iter().enumerate() {
        match groups.iter_mut().find(|(x, _)| x.to_bits() == p.x.to_bits()) {
            Some(g) => g.1.push(i),
            None => groups.push((p.x, vec![i])),
        }
    }
    let contributions: Result<Vec<(f64, f64)>> = groups
        .par_iter()
        .map(|(x, members)| {
            let eps1 = match data.kind {
                AbscissaKind::BiasMilliamp => bias_to_epsilon(&dev.cal, *x),
                AbscissaKind::EpsilonGigahertz => *x,
            };
            let lines = model_lines(dev, eps1, n_cut)?;
            let mut sq = 0.0;
            let mut wt = 0.0;
            for &i in members {
                let p = &data.points[i];
                let d = p.omega - lines[nearest_line(&lines, p.omega)];
                sq += p.weight * d * d;
                wt += p.weight;
            }
            Ok((sq, wt))
        })
        .collect();
    let mut sq = 0.0;
    let mut wt = 0.0;
    for (s, w) in contributions? {
        sq += s;
        wt += w;
    }
    Ok((sq / wt).sqrt())
}

/// Knobs of the staged fit.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    /// Fock cutoff of the model diagonalized inside the objective.
    pub n_cut: usize,
    pub max_iter_stage1: usize,
    pub max_iter_stage2: usize,
    pub fatol: f64,
    pub xatol: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            n_cut: 16,
            max_iter_stage1: 4000,
            max_iter_stage2: 6000,
            fatol: 1e-12,
            xatol: 1e-10,
        }
    }
}

/// Result of a staged fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub device: DeviceParams,
    /// Final RMS residual (GHz).
    pub rms: f64,
    /// RMS after the crosstalk-free stage (GHz).
    pub stage1_rms: f64,
    /// Simplex iterations summed over all four runs.
    pub iterations: usize,
    /// Objective evaluations summed over all four runs.
    pub evaluations: usize,
    /// True when the final run of both stages met its tolerances.
    pub converged: bool,
}

/// Clamping box for the parameter vector: frequencies capped at 20 GHz, the
/// qubit-2 bias allowed either sign, the crosstalk terms confined to ranges
/// where the resonator pull can never drive ω_r negative.
fn fit_bounds() -> [(f64, f64); 11] {
    let freq = (1e-6, 20.0);
    [
        freq,            // omega_r
        freq,            // g1
        freq,            // g2
        freq,            // delta1
        freq,            // delta2
        (-20.0, 20.0),   // eps2
        (1e-3, 1e3),     // eps_tilde0 (GHz/mA)
        (-10.0, 10.0),   // i_b0 (mA)
        (-0.1, 0.1),     // a
        (-0.01, 0.01),   // b_plus (1/GHz)
        (-0.01, 0.01),   // b_minus (1/GHz)
    ]
}

/// Fit the device description to a peak table, starting from `start`.
///
/// Stage 1 fits the first eight parameters with the crosstalk pinned to
/// zero; stage 2 refits all eleven. Each stage runs the simplex twice (the
/// second run restarts from the first run's best point). The fit is
/// deterministic: no randomness enters after the data is fixed.
pub fn fit(data: &PeakData, start: &DeviceParams, settings: &FitSettings) -> Result<FitOutcome> {
    start.validate()?;
    data.validate()?;
    let n_cut = settings.n_cut;
    // Fail fast (with a real error) if the start point itself is unusable.
    rms_residual(start, data, n_cut)?;

    let full = |v: &[f64]| -> f64 {
        let dev = match DeviceParams::from_slice(v) {
            Ok(d) => d,
            Err(_) => return f64::INFINITY,
        };
        rms_residual(&dev, data, n_cut).unwrap_or(f64::INFINITY)
    };
    let bounds = fit_bounds();

    let mut iterations = 0;
    let mut evaluations = 0;

    // Stage 1: eight core parameters, crosstalk pinned to zero.
    let start_vec = start.to_vec();
    let mut x8: Vec<f64> = start_vec[..8].to_vec();
    let opts1 = NelderMeadOptions {
        max_iter: settings.max_iter_stage1,
        fatol: settings.fatol,
        xatol: settings.xatol,
    };
    let mut stage1_converged = false;
    let mut stage1_rms = f64::INFINITY;
    for _ in 0..2 {
        let r = minimize(
            |v8| {
                let mut v = [0.0; 11];
                v[..8].copy_from_slice(v8);
                full(&v)
            },
            &x8,
            Some(&bounds[..8]),
            &opts1,
        )?;
        x8 = r.x;
        stage1_rms = r.f;
        stage1_converged = r.converged;
        iterations += r.iterations;
        evaluations += r.evaluations;
    }

    // Stage 2: all eleven parameters, crosstalk released at its start value.
    let mut x11 = [0.0; 11];
    x11[..8].copy_from_slice(&x8);
    x11[8..].copy_from_slice(&start_vec[8..]);
    let mut x = x11.to_vec();
    let opts2 = NelderMeadOptions {
        max_iter: settings.max_iter_stage2,
        ..opts1
    };
    let mut rms = stage1_rms;
    let mut stage2_converged = false;
    for _ in 0..2 {
        let r = minimize(&full, &x, Some(&bounds[..]), &opts2)?;
        x = r.x;
        rms = r.f;
        stage2_converged = r.converged;
        iterations += r.iterations;
        evaluations += r.evaluations;
    }

    Ok(FitOutcome {
        device: DeviceParams::from_slice(&x)?,
        rms,
        stage1_rms,
        iterations,
        evaluations,
        converged: stage1_converged && stage2_converged,
    })
}

/// Generate a synthetic peak table from a known device: the seven model
/// lines at each bias, plus Gaussian frequency noise of the given standard
/// deviation (GHz). Deterministic for a fixed seed; the clean lines are
/// computed in parallel, the noise is drawn in (bias, line) order.
pub fn synthesize_peaks(
    dev: &DeviceParams,
    biases_ma: &[f64],
    noise_ghz: f64,
    seed: u64,
    n_cut: usize,
) -> Result<PeakData> {
    dev.validate()?;
    if biases_ma.is_empty() {
        return Err(Error::InvalidParam("no bias points given".into()));
    }
    if !(noise_ghz >= 0.0) || !noise_ghz.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise level must be a finite non-negative frequency, got {noise_ghz}"
        )));
    }
    let lines: Result<Vec<[f64; LINE_COUNT]>> = biases_ma
        .par_iter()
        .map(|&ib| model_lines(dev, bias_to_epsilon(&dev.cal, ib), n_cut))
        .collect();
    let lines = lines?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal is well-formed");
    let mut points = Vec::with_capacity(biases_ma.len() * LINE_COUNT);
    for (row, &ib) in lines.iter().zip(biases_ma) {
        for &w in row {
            points.push(PeakPoint {
                x: ib,
                omega: w + noise_ghz * normal.sample(&mut rng),
                weight: 1.0,
            });
        }
    }
    Ok(PeakData {
        kind: AbscissaKind::BiasMilliamp,
        points,
    })
}

/// Displace every parameter by the given relative amount with alternating
/// sign (+, -, +, ... in [`PARAM_NAMES`] order), as a deterministic starting
/// point for round-trip demonstrations. Parameters that are exactly zero
/// (typically the crosstalk terms) are left at zero.
pub fn perturb_device(dev: &DeviceParams, frac: f64) -> DeviceParams {
    let mut x = dev.to_vec();
    for (i, v) in x.iter_mut().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *v *= 1.0 + sign * frac;
    }
    DeviceParams::from_slice(&x).expect("perturbed copy keeps the vector length")
}
