//! Derivative-free simplex minimization (Nelder–Mead) with the
//! dimension-adaptive expansion/contraction coefficients that keep the
//! method effective in ten-plus dimensions.
//!
//! The implementation follows the widely used simplex update order
//! (reflect → expand → outside/inside contract → shrink) with adaptive
//! coefficients ρ = 1, χ = 1 + 2/n, ψ = 3/4 − 1/(2n), σ = 1 − 1/n, an
//! initial simplex built by perturbing each coordinate of the start point by
//! 5% (or 2.5e−4 where it is zero), and a combined convergence test: the
//! simplex is converged when both its x-spread (∞-norm) falls below `xatol`
//! and its f-spread below `fatol`.
//!
//! Optional box bounds are enforced by clipping every candidate point, the
//! start point and the initial simplex included. The algorithm is fully
//! deterministic: same inputs, same trajectory.

use crate::{Error, Result};

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Iteration cap; 0 means the customary 200·n.
    pub max_iter: usize,
    /// Absolute tolerance on the simplex f-spread.
    pub fatol: f64,
    /// Absolute tolerance on the simplex x-spread (∞-norm).
    pub xatol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 0,
            fatol: 1e-4,
            xatol: 1e-4,
        }
    }
}

/// Outcome of a simplex minimization.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// True when both tolerance tests were met before the iteration cap.
    pub converged: bool,
    /// Best objective value after each iteration (non-increasing).
    pub trace: Vec<f64>,
}

fn clip(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

/// Minimize `f` starting from `x0`, optionally inside per-coordinate bounds.
///
/// `f` must be finite-valued or `f64::INFINITY` (use infinity to reject
/// points); NaN objectives poison the ordering and are reported as an error.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    bounds: Option<&[(f64, f64)]>,
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidParam("cannot minimize in 0 dimensions".into()));
    }
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "minimize bounds",
                expected: n,
                got: b.len(),
            });
        }
        for &(lo, hi) in b {
            if !(lo <= hi) {
                return Err(Error::InvalidParam(format!(
                    "bound ({lo}, {hi}) is empty"
                )));
            }
        }
    }
    let max_iter = if opts.max_iter == 0 { 200 * n } else { opts.max_iter };

    // adaptive coefficients
    let nf = n as f64;
    let rho = 1.0;
    let chi = 1.0 + 2.0 / nf;
    let psi = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf;

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| -> Result<f64> {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            return Err(Error::InvalidParam(format!(
                "objective returned NaN at {x:?}"
            )));
        }
        Ok(v)
    };

    // initial simplex: x0 plus one 5% (or 2.5e-4) bump per coordinate
    let mut start = x0.to_vec();
    clip(&mut start, bounds);
    let mut sim: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    sim.push(start.clone());
    for k in 0..n {
        let mut y = start.clone();
        if y[k] != 0.0 {
            y[k] *= 1.05;
        } else {
            y[k] = 0.00025;
        }
        clip(&mut y, bounds);
        sim.push(y);
    }
    let mut fsim: Vec<f64> = Vec::with_capacity(n + 1);
    for v in &sim {
        fsim.push(eval(v)?);
    }

    let sort_simplex = |sim: &mut Vec<Vec<f64>>, fsim: &mut Vec<f64>| {
        let mut order: Vec<usize> = (0..sim.len()).collect();
        order.sort_by(|&a, &b| fsim[a].partial_cmp(&fsim[b]).unwrap());
        let new_sim: Vec<Vec<f64>> = order.iter().map(|&k| sim[k].clone()).collect();
        let new_f: Vec<f64> = order.iter().map(|&k| fsim[k]).collect();
        *sim = new_sim;
        *fsim = new_f;
    };
    sort_simplex(&mut sim, &mut fsim);

    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;

    while iterations < max_iter {
        // convergence: x-spread and f-spread against the current best
        let x_spread = sim[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&sim[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let f_spread = fsim[1..]
            .iter()
            .fold(0.0f64, |m, &v| m.max((v - fsim[0]).abs()));
        if x_spread <= opts.xatol && f_spread <= opts.fatol {
            converged = true;
            break;
        }
        iterations += 1;

        // centroid of all but the worst vertex
        let mut xbar = vec![0.0; n];
        for v in &sim[..n] {
            for (s, &vi) in xbar.iter_mut().zip(v) {
                *s += vi / nf;
            }
        }
        let worst = sim[n].clone();
        let fworst = fsim[n];

        let blend = |a: f64, b: f64| -> Vec<f64> {
            // a·xbar + b·worst, clipped
            let mut v: Vec<f64> = xbar
                .iter()
                .zip(&worst)
                .map(|(&xb, &xw)| a * xb + b * xw)
                .collect();
            clip(&mut v, bounds);
            v
        };

        let xr = blend(1.0 + rho, -rho);
        let fr = eval(&xr)?;

        let mut shrink = false;
        if fr < fsim[0] {
            let xe = blend(1.0 + rho * chi, -rho * chi);
            let fe = eval(&xe)?;
            if fe < fr {
                sim[n] = xe;
                fsim[n] = fe;
            } else {
                sim[n] = xr;
                fsim[n] = fr;
            }
        } else if fr < fsim[n - 1] {
            sim[n] = xr;
            fsim[n] = fr;
        } else if fr < fworst {
            // outside contraction
            let xc = blend(1.0 + psi * rho, -psi * rho);
            let fc = eval(&xc)?;
            if fc <= fr {
                sim[n] = xc;
                fsim[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            // inside contraction
            let xcc = blend(1.0 - psi, psi);
            let fcc = eval(&xcc)?;
            if fcc < fworst {
                sim[n] = xcc;
                fsim[n] = fcc;
            } else {
                shrink = true;
            }
        }

        if shrink {
            let best = sim[0].clone();
            for j in 1..=n {
                let mut y: Vec<f64> = best
                    .iter()
                    .zip(&sim[j])
                    .map(|(&b, &v)| b + sigma * (v - b))
                    .collect();
                clip(&mut y, bounds);
                fsim[j] = eval(&y)?;
                sim[j] = y;
            }
        }

        sort_simplex(&mut sim, &mut fsim);
        trace.push(fsim[0]);
    }

    Ok(NelderMeadResult {
        x: sim[0].clone(),
        f: fsim[0],
        iterations,
        evaluations,
        converged,
        trace,
    })
}
