//! Config-driven command drivers shared by the `fluxdicke` binary and any
//! caller that wants file outputs rather than in-process values.
//!
//! Each driver reads a [`RawConfig`], fills defaults, runs the corresponding
//! library routine, and writes its outputs into one directory:
//!
//! * a CSV data file (period decimals, GHz, 12 significant digits),
//! * a `<command>_config.txt` echo of the fully resolved configuration
//!   (every default filled in), so a run can be reproduced from its outputs
//!   alone, and
//! * a human-readable summary returned to the caller (and printed by the
//!   binary).
//!
//! Every output file starts with a header naming the command and the FNV-1a
//! digest of the config text that produced it. Writes are atomic
//! (write-then-rename), so a crashed run never leaves a truncated file
//! behind. Each driver also runs an internal convergence check (basis-cutoff
//! drift, optimizer convergence, completeness) and reports it in
//! [`CmdReport::ok`]; the binary turns that into the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::circuit::{
    assemble_reduced, charge_convergence, reduced_dicke_params, two_level_reduce, CircuitParams,
};
use crate::config::{fmt_sig, RawConfig};
use crate::fit::{
    fit, perturb_device, rms_residual, synthesize_peaks, DeviceParams, FitSettings, PeakData,
    LINE_NAMES, PARAM_NAMES,
};
use crate::linalg::hermitian_eigenvalues;
use crate::longitudinal::{merged_spectrum, numerical_ground, sector_table, LongitudinalParams};
use crate::model::{
    build_h_flux, coupling_ratio_report, coupling_ratios, DickeParams,
};
use crate::spectrum::{
    apply_crosstalk, bias_to_epsilon, complete_label_set, dressed_frequencies, epsilon_to_bias,
    find_anticrossing, linspace, projections, reference_sweep, sweep, SweepCalibration,
};
use crate::{Error, Result};

/// Per-invocation context: where outputs go and the seed override.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Seed from the command line; falls back to the config, then to 1.
    pub seed: Option<u64>,
}

/// What a driver produced.
#[derive(Debug, Clone)]
pub struct CmdReport {
    /// Human-readable summary (printed by the binary).
    pub summary: String,
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
    /// True when every internal convergence check passed.
    pub ok: bool,
}

/// Every (section, key) the config format accepts, across all commands.
/// Anything outside this table is a typo and parsing fails loudly.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "model",
        &["omega_r", "eps1", "eps2", "delta1", "delta2", "g1", "g2", "n_cut"],
    ),
    (
        "calibration",
        &["eps_tilde0", "i_b0", "a", "b_plus", "b_minus"],
    ),
    ("grid", &["unit", "start", "stop", "points"]),
    ("sweep", &["n_levels", "reference", "transitions"]),
    (
        "anticross",
        &[
            "level_lo",
            "level_hi",
            "window_lo_ghz",
            "window_hi_ghz",
            "coarse_points",
            "n_search",
        ],
    ),
    ("project", &["labels", "n_states", "report_eps1_ghz"]),
    (
        "oracle",
        &["g", "eps1_ghz", "eps2_ghz", "n_max", "n_cut", "delta_floor"],
    ),
    (
        "fit",
        &[
            "data",
            "noise_mhz",
            "seed",
            "biases",
            "bias_min_ma",
            "bias_max_ma",
            "n_cut",
            "max_iter_stage1",
            "max_iter_stage2",
            "fatol",
            "xatol",
            "start_perturb",
        ],
    ),
    (
        "quantize",
        &[
            "q1_e_j", "q1_e_c", "q1_alpha", "q1_beta", "q1_phi_e", "q2_e_j", "q2_e_c", "q2_alpha",
            "q2_beta", "q2_phi_e", "e_lr", "n_charge", "n_levels", "n_photons", "n_cut",
        ],
    ),
];

/// Accumulates the fully resolved (defaults filled) configuration a command
/// actually ran with, for the reproducibility echo.
struct Resolved {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Resolved {
    fn new() -> Self {
        Resolved { sections: Vec::new() }
    }

    fn put(&mut self, section: &str, key: &str, value: impl std::fmt::Display) {
        let entry = (key.to_string(), value.to_string());
        match self.sections.iter_mut().find(|(s, _)| s == section) {
            Some((_, keys)) => keys.push(entry),
            None => self.sections.push((section.to_string(), vec![entry])),
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.sections {
            let _ = writeln!(out, "[{section}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Write `content` to `path` atomically: write to a sibling temp file, then
/// rename over the target (same directory, so the rename cannot cross a
/// filesystem boundary).
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header(command: &str, digest: u64) -> String {
    format!("# command = {command}\n# config_digest = {digest:#018x}\n")
}

fn emit(
    ctx: &RunContext,
    files: &mut Vec<PathBuf>,
    name: &str,
    command: &str,
    digest: u64,
    body: &str,
) -> Result<()> {
    let path = ctx.out_dir.join(name);
    let content = format!("{}{}", header(command, digest), body);
    write_atomic(&path, &content)?;
    files.push(path);
    Ok(())
}

fn echo_config(
    ctx: &RunContext,
    files: &mut Vec<PathBuf>,
    command: &str,
    digest: u64,
    res: &Resolved,
) -> Result<()> {
    emit(
        ctx,
        files,
        &format!("{command}_config.txt"),
        command,
        digest,
        &res.render(),
    )
}

fn load_model(cfg: &RawConfig, res: &mut Resolved) -> Result<DickeParams> {
    let d = DickeParams::reference_device();
    let p = DickeParams {
        omega_r: cfg.f64("model", "omega_r", d.omega_r)?,
        eps1: cfg.f64("model", "eps1", 0.0)?,
        eps2: cfg.f64("model", "eps2", d.eps2)?,
        delta1: cfg.f64("model", "delta1", d.delta1)?,
        delta2: cfg.f64("model", "delta2", d.delta2)?,
        g1: cfg.f64("model", "g1", d.g1)?,
        g2: cfg.f64("model", "g2", d.g2)?,
        n_cut: cfg.usize("model", "n_cut", d.n_cut)?,
    };
    p.validate()?;
    for (k, v) in [
        ("omega_r", p.omega_r),
        ("eps1", p.eps1),
        ("eps2", p.eps2),
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("g1", p.g1),
        ("g2", p.g2),
    ] {
        res.put("model", k, v);
    }
    res.put("model", "n_cut", p.n_cut);
    Ok(p)
}

fn load_calibration(cfg: &RawConfig, res: &mut Resolved) -> Result<SweepCalibration> {
    let d = SweepCalibration::reference_device();
    let cal = SweepCalibration {
        eps_tilde0: cfg.f64("calibration", "eps_tilde0", d.eps_tilde0)?,
        i_b0: cfg.f64("calibration", "i_b0", d.i_b0)?,
        a: cfg.f64("calibration", "a", d.a)?,
        b_plus: cfg.f64("calibration", "b_plus", d.b_plus)?,
        b_minus: cfg.f64("calibration", "b_minus", d.b_minus)?,
    };
    cal.validate()?;
    for (k, v) in [
        ("eps_tilde0", cal.eps_tilde0),
        ("i_b0", cal.i_b0),
        ("a", cal.a),
        ("b_plus", cal.b_plus),
        ("b_minus", cal.b_minus),
    ] {
        res.put("calibration", k, v);
    }
    Ok(cal)
}

struct Grid {
    eps: Vec<f64>,
    bias: Vec<f64>,
}

fn load_grid(cfg: &RawConfig, cal: &SweepCalibration, res: &mut Resolved) -> Result<Grid> {
    let unit = cfg.string("grid", "unit", "ghz");
    let start = cfg.f64("grid", "start", -6.0)?;
    let stop = cfg.f64("grid", "stop", 6.0)?;
    let points = cfg.usize("grid", "points", 97)?;
    let grid = match unit.as_str() {
        "ghz" => {
            let eps = linspace(start, stop, points)?;
            let bias = eps.iter().map(|&e| epsilon_to_bias(cal, e)).collect();
            Grid { eps, bias }
        }
        "ma" => {
            let bias = linspace(start, stop, points)?;
            let eps = bias.iter().map(|&i| bias_to_epsilon(cal, i)).collect();
            Grid { eps, bias }
        }
        other => {
            let line = cfg.get("grid", "unit").map_or(0, |e| e.line);
            return Err(Error::Config {
                line,
                message: format!("grid unit must be `ghz` or `ma`, got `{other}`"),
            });
        }
    };
    res.put("grid", "unit", unit);
    res.put("grid", "start", start);
    res.put("grid", "stop", stop);
    res.put("grid", "points", points);
    Ok(grid)
}

/// Cutoff-drift check shared by the sweep-style commands: compare the lowest
/// `n_lines` transitions at the grid point of largest |ε₁| against the same
/// model with ten more Fock states, and report the largest drift (GHz).
fn cutoff_drift(base: &DickeParams, cal: &SweepCalibration, eps1: f64, n_lines: usize) -> Result<f64> {
    let trans = |n_cut: usize| -> Result<Vec<f64>> {
        let p = apply_crosstalk(cal, &DickeParams { n_cut, ..*base }, eps1)?;
        let w = hermitian_eigenvalues(&build_h_flux(&p)?)?;
        Ok((1..=n_lines).map(|i| w[i] - w[0]).collect())
    };
    let lo = trans(base.n_cut)?;
    let hi = trans(base.n_cut + 10)?;
    Ok(lo
        .iter()
        .zip(&hi)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

fn csv_int(v: impl std::fmt::Display) -> String {
    v.to_string()
}

/// Transition-spectrum sweep over the bias grid; writes `sweep.csv` and,
/// when `[sweep] reference = true`, the renormalized non-interacting model's
/// lines over the same grid in `sweep_reference.csv`.
pub fn cmd_sweep(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let cal = load_calibration(cfg, &mut res)?;
    let grid = load_grid(cfg, &cal, &mut res)?;
    let n_levels = cfg.usize("sweep", "n_levels", 8)?;
    let with_reference = cfg.bool("sweep", "reference", false)?;
    let extra_raw = cfg.list("sweep", "transitions", &[]);
    res.put("sweep", "n_levels", n_levels);
    res.put("sweep", "reference", with_reference);
    res.put("sweep", "transitions", extra_raw.join(", "));

    let mut extra: Vec<(usize, usize)> = Vec::new();
    for t in &extra_raw {
        let line = cfg.get("sweep", "transitions").map_or(0, |e| e.line);
        let Some((a, b)) = t.split_once('-') else {
            return Err(Error::Config {
                line,
                message: format!("transition `{t}` must look like `1-2`"),
            });
        };
        let (a, b): (usize, usize) = match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("transition `{t}` must name two level indices"),
                })
            }
        };
        if a >= b || b > n_levels {
            return Err(Error::Config {
                line,
                message: format!(
                    "transition `{t}` must satisfy lower < upper <= n_levels ({n_levels})"
                ),
            });
        }
        extra.push((a, b));
    }

    let table = sweep(&base, &cal, &grid.eps, n_levels + 1)?;
    let mut files = Vec::new();

    let render = |table: &crate::spectrum::SpectrumTable| -> String {
        let mut body = String::from("i_b_ma,eps1_ghz");
        for i in 1..=n_levels {
            let _ = write!(body, ",omega_{i}0_ghz");
        }
        for &(a, b) in &extra {
            let _ = write!(body, ",omega_{a}{b}_ghz");
        }
        body.push('\n');
        for (k, &e) in table.eps1.iter().enumerate() {
            body.push_str(&fmt_sig(grid.bias[k], 12));
            body.push(',');
            body.push_str(&fmt_sig(e, 12));
            let row = &table.energies[k];
            for i in 1..=n_levels {
                body.push(',');
                body.push_str(&fmt_sig(row[i] - row[0], 12));
            }
            for &(a, b) in &extra {
                body.push(',');
                body.push_str(&fmt_sig(row[b] - row[a], 12));
            }
            body.push('\n');
        }
        body
    };

    emit(ctx, &mut files, "sweep.csv", "sweep", digest, &render(&table))?;
    if with_reference {
        let ref_table = reference_sweep(&base, &cal, &grid.eps, n_levels + 1)?;
        emit(
            ctx,
            &mut files,
            "sweep_reference.csv",
            "sweep",
            digest,
            &render(&ref_table),
        )?;
    }
    echo_config(ctx, &mut files, "sweep", digest, &res)?;

    let edge = grid
        .eps
        .iter()
        .copied()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap();
    let drift = cutoff_drift(&base, &cal, edge, n_levels)?;
    let ok = drift < 1e-3;
    let (r1, r2) = coupling_ratios(&base);
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "sweep: {} points, eps1 in [{}, {}] GHz, {} lines",
        grid.eps.len(),
        fmt_sig(grid.eps[0], 6),
        fmt_sig(*grid.eps.last().unwrap(), 6),
        n_levels + extra.len(),
    );
    let _ = writeln!(summary, "normalized couplings: {}", coupling_ratio_report(&base));
    if r1.max(r2) > 0.1 {
        let _ = writeln!(
            summary,
            "  (both a sizeable fraction of the resonator frequency: deep strong coupling)"
        );
    }
    let _ = writeln!(
        summary,
        "cutoff check at eps1 = {} GHz: max line drift {} GHz for +10 Fock states -> {}",
        fmt_sig(edge, 6),
        fmt_sig(drift, 3),
        if ok { "PASS" } else { "FAIL (raise n_cut)" }
    );
    Ok(CmdReport { summary, files, ok })
}

/// Locate the avoided crossing between two levels, refine it, and report the
/// dressed frequencies at the located bias.
pub fn cmd_anticross(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let cal = load_calibration(cfg, &mut res)?;
    let level_lo = cfg.usize("anticross", "level_lo", 3)?;
    let level_hi = cfg.usize("anticross", "level_hi", 4)?;
    let window_lo = cfg.f64("anticross", "window_lo_ghz", -2.3)?;
    let window_hi = cfg.f64("anticross", "window_hi_ghz", -1.8)?;
    let coarse_points = cfg.usize("anticross", "coarse_points", 64)?;
    let n_search = cfg.usize("anticross", "n_search", 8)?;
    for (k, v) in [("level_lo", level_lo), ("level_hi", level_hi), ("coarse_points", coarse_points), ("n_search", n_search)] {
        res.put("anticross", k, v);
    }
    res.put("anticross", "window_lo_ghz", window_lo);
    res.put("anticross", "window_hi_ghz", window_hi);

    let ac = find_anticrossing(&base, &cal, level_lo, level_hi, (window_lo, window_hi), coarse_points)?;
    let dressed = dressed_frequencies(&base, &cal, ac.eps1_star, n_search)?;
    let dressed_sum = dressed.omega_q1 + dressed.omega_q2;

    // cutoff check: the reported gap must be stable against +10 Fock states
    let gap_at = |n_cut: usize| -> Result<f64> {
        let p = apply_crosstalk(&cal, &DickeParams { n_cut, ..base }, ac.eps1_star)?;
        let w = hermitian_eigenvalues(&build_h_flux(&p)?)?;
        Ok(w[level_hi] - w[level_lo])
    };
    let gap_drift = (gap_at(base.n_cut)? - gap_at(base.n_cut + 10)?).abs();
    let branch_drift = cutoff_drift(&base, &cal, ac.eps1_star, level_hi)?;
    let ok = gap_drift < 1e-4 && branch_drift < 1e-3;

    let mut body = String::from(
        "eps1_star_ghz,bias_star_ma,gap_ghz,half_split_ghz,branch_lo_ghz,branch_hi_ghz,\
         midpoint_ghz,level_lo,level_hi,dressed_q1_ghz,dressed_q2_ghz,dressed_sum_ghz,\
         dressed_ambiguous\n",
    );
    for v in [
        ac.eps1_star,
        ac.bias_star_ma,
        ac.gap,
        ac.half_split,
        ac.branch_lo,
        ac.branch_hi,
        ac.midpoint,
    ] {
        body.push_str(&fmt_sig(v, 12));
        body.push(',');
    }
    let _ = write!(
        body,
        "{},{},{},{},{},{}\n",
        csv_int(ac.level_lo),
        csv_int(ac.level_hi),
        fmt_sig(dressed.omega_q1, 12),
        fmt_sig(dressed.omega_q2, 12),
        fmt_sig(dressed_sum, 12),
        dressed.ambiguous
    );
    let mut files = Vec::new();
    emit(ctx, &mut files, "anticross.csv", "anticross", digest, &body)?;
    echo_config(ctx, &mut files, "anticross", digest, &res)?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "avoided crossing of levels ({}, {}): eps1* = {} GHz (bias {} mA)",
        level_lo,
        level_hi,
        fmt_sig(ac.eps1_star, 7),
        fmt_sig(ac.bias_star_ma, 7)
    );
    let _ = writeln!(
        summary,
        "half splitting = {:.4} MHz; branches {:.6} / {:.6} GHz, midpoint {:.6} GHz",
        ac.half_split * 1e3,
        ac.branch_lo,
        ac.branch_hi,
        ac.midpoint
    );
    let _ = writeln!(
        summary,
        "dressed lines there: q1 {:.6} GHz (state {}), q2 {:.6} GHz (state {}); \
         sum {:.6} GHz vs midpoint {:.6} GHz",
        dressed.omega_q1,
        dressed.state_q1,
        dressed.omega_q2,
        dressed.state_q2,
        dressed_sum,
        ac.midpoint
    );
    let _ = writeln!(
        summary,
        "cutoff check: gap drift {} GHz, branch drift {} GHz for +10 Fock states -> {}",
        fmt_sig(gap_drift, 3),
        fmt_sig(branch_drift, 3),
        if ok { "PASS" } else { "FAIL (raise n_cut)" }
    );
    Ok(CmdReport { summary, files, ok })
}

/// Bare-state composition of the low eigenstates across the bias grid.
pub fn cmd_project(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let cal = load_calibration(cfg, &mut res)?;
    let grid = load_grid(cfg, &cal, &mut res)?;
    let labels = cfg.list("project", "labels", &["gg0", "gg1", "ee0", "ge0", "eg0"]);
    let n_states = cfg.usize("project", "n_states", 8)?;
    let report_at = cfg.f64("project", "report_eps1_ghz", -2.4)?;
    res.put("project", "labels", labels.join(", "));
    res.put("project", "n_states", n_states);
    res.put("project", "report_eps1_ghz", report_at);

    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let table = projections(&base, &cal, &grid.eps, &label_refs, n_states)?;

    let mut body = String::from("i_b_ma,eps1_ghz");
    for i in 0..n_states {
        for l in &labels {
            let _ = write!(body, ",p{i}_{l}");
        }
    }
    body.push('\n');
    for (k, &e) in table.eps1.iter().enumerate() {
        body.push_str(&fmt_sig(grid.bias[k], 12));
        body.push(',');
        body.push_str(&fmt_sig(e, 12));
        for i in 0..n_states {
            for l in 0..labels.len() {
                body.push(',');
                body.push_str(&fmt_sig(table.weights[k][i][l], 12));
            }
        }
        body.push('\n');
    }
    let mut files = Vec::new();
    emit(ctx, &mut files, "projections.csv", "project", digest, &body)?;
    echo_config(ctx, &mut files, "project", digest, &res)?;

    // completeness check at the report point: over the full bare basis every
    // eigenstate's weights must sum to 1
    let k_report = grid
        .eps
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - report_at)
                .abs()
                .partial_cmp(&(b.1 - report_at).abs())
                .unwrap()
        })
        .map(|(k, _)| k)
        .unwrap();
    let all_labels = complete_label_set(base.n_cut);
    let all_refs: Vec<&str> = all_labels.iter().map(String::as_str).collect();
    let full = projections(
        &base,
        &cal,
        &grid.eps[k_report..=k_report],
        &all_refs,
        n_states,
    )?;
    let worst = (0..n_states)
        .map(|i| (full.weights[0][i].iter().sum::<f64>() - 1.0).abs())
        .fold(0.0f64, f64::max);
    let ok = worst < 1e-9;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "projections of the lowest {} states onto {{{}}} over {} points",
        n_states,
        labels.join(", "),
        grid.eps.len()
    );
    let e_report = grid.eps[k_report];
    for i in 0..n_states {
        let (l_best, w_best) = table.weights[k_report][i]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(l, &w)| (l, w))
            .unwrap();
        let _ = writeln!(
            summary,
            "  state {i} at eps1 = {:.3} GHz: strongest listed label {} (weight {:.3})",
            e_report, labels[l_best], w_best
        );
    }
    let _ = writeln!(
        summary,
        "completeness over the full bare basis at eps1 = {:.3} GHz: \
         max |1 - sum| = {:.2e} -> {}",
        e_report,
        worst,
        if ok { "PASS" } else { "FAIL" }
    );
    Ok(CmdReport { summary, files, ok })
}

/// Exact zero-gap (longitudinal) solution: sector table plus the
/// analytic-versus-numeric cross-checks.
pub fn cmd_oracle(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let _cal = load_calibration(cfg, &mut res)?;
    let g_default = 0.5 * (base.g1 + base.g2);
    let p = LongitudinalParams {
        omega_r: base.omega_r,
        eps1: cfg.f64("oracle", "eps1_ghz", -2.1)?,
        eps2: cfg.f64("oracle", "eps2_ghz", base.eps2)?,
        g: cfg.f64("oracle", "g", g_default)?,
    };
    p.validate()?;
    let n_max = cfg.usize("oracle", "n_max", 3)?;
    let n_cut = cfg.usize("oracle", "n_cut", base.n_cut)?;
    let delta_floor = cfg.f64("oracle", "delta_floor", 1e-9)?;
    res.put("oracle", "g", p.g);
    res.put("oracle", "eps1_ghz", p.eps1);
    res.put("oracle", "eps2_ghz", p.eps2);
    res.put("oracle", "n_max", n_max);
    res.put("oracle", "n_cut", n_cut);
    res.put("oracle", "delta_floor", delta_floor);

    let sectors = sector_table(&p)?;
    let mut body =
        String::from("m1,m2,m,atomic_label,display_label,amplitude,mean_photons,energy0_ghz\n");
    for s in &sectors {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            s.m1,
            s.m2,
            s.m,
            s.atomic_label,
            s.display_label(),
            fmt_sig(s.amplitude, 12),
            fmt_sig(s.mean_photons, 12),
            fmt_sig(s.energy0, 12)
        );
    }
    let mut files = Vec::new();
    emit(ctx, &mut files, "oracle.csv", "oracle", digest, &body)?;
    echo_config(ctx, &mut files, "oracle", digest, &res)?;

    // check 1: the lowest analytic levels must reproduce the numeric
    // spectrum of the same model with the gaps floored to delta_floor
    let n_compare = 8;
    let analytic = merged_spectrum(&p, n_max)?;
    let numeric =
        hermitian_eigenvalues(&build_h_flux(&p.to_dicke(delta_floor, n_cut))?)?;
    let worst_level = analytic
        .iter()
        .take(n_compare)
        .zip(&numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let levels_pass = worst_level < 1e-9;

    // check 2: ground-sector photon population
    let ground = numerical_ground(&p, delta_floor, n_cut)?;
    let analytic_ground = sectors
        .iter()
        .min_by(|a, b| a.energy0.partial_cmp(&b.energy0).unwrap())
        .unwrap();
    let photon_err = (ground.mean_photons - analytic_ground.mean_photons).abs();
    let photons_pass = photon_err < 1e-6;

    let ok = levels_pass && photons_pass;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "zero-gap sectors at eps1 = {} GHz, eps2 = {} GHz, g = {} GHz:",
        p.eps1, p.eps2, p.g
    );
    for s in &sectors {
        let _ = writeln!(
            summary,
            "  {}  M = {:+}  <a> = {:+.4}  <n> = {:.4}  E0 = {:+.6} GHz",
            s.display_label(),
            s.m,
            s.amplitude,
            s.mean_photons,
            s.energy0
        );
    }
    let _ = writeln!(
        summary,
        "analytic = numeric (lowest {n_compare} levels): max |diff| = {:.2e} GHz -> {}",
        worst_level,
        if levels_pass { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        summary,
        "ground photon number: analytic {:.6}, numeric {:.6} -> {}",
        analytic_ground.mean_photons,
        ground.mean_photons,
        if photons_pass { "PASS" } else { "FAIL" }
    );
    Ok(CmdReport { summary, files, ok })
}

/// Staged parameter fit against a peak table (from a CSV file, or
/// synthesized from the configured model when no file is given).
pub fn cmd_fit(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let cal = load_calibration(cfg, &mut res)?;
    let truth = DeviceParams {
        omega_r: base.omega_r,
        g1: base.g1,
        g2: base.g2,
        delta1: base.delta1,
        delta2: base.delta2,
        eps2: base.eps2,
        cal,
    };
    let settings = FitSettings {
        n_cut: cfg.usize("fit", "n_cut", 16)?,
        max_iter_stage1: cfg.usize("fit", "max_iter_stage1", 4000)?,
        max_iter_stage2: cfg.usize("fit", "max_iter_stage2", 6000)?,
        fatol: cfg.f64("fit", "fatol", 1e-12)?,
        xatol: cfg.f64("fit", "xatol", 1e-10)?,
    };
    let noise_mhz = cfg.f64("fit", "noise_mhz", 2.0)?;
    let n_biases = cfg.usize("fit", "biases", 31)?;
    let bias_min = cfg.f64("fit", "bias_min_ma", 0.520)?;
    let bias_max = cfg.f64("fit", "bias_max_ma", 0.580)?;
    let start_perturb = cfg.f64("fit", "start_perturb", 0.0)?;
    let seed = ctx.seed.unwrap_or(cfg.u64("fit", "seed", 1)?);
    let data_path = cfg.opt_string("fit", "data");
    res.put("fit", "n_cut", settings.n_cut);
    res.put("fit", "max_iter_stage1", settings.max_iter_stage1);
    res.put("fit", "max_iter_stage2", settings.max_iter_stage2);
    res.put("fit", "fatol", settings.fatol);
    res.put("fit", "xatol", settings.xatol);
    res.put("fit", "seed", seed);

    let mut files = Vec::new();
    let (data, synthetic) = match &data_path {
        Some(path) => {
            res.put("fit", "data", path);
            let text = fs::read_to_string(path)?;
            (PeakData::from_csv(&text)?, false)
        }
        None => {
            res.put("fit", "noise_mhz", noise_mhz);
            res.put("fit", "biases", n_biases);
            res.put("fit", "bias_min_ma", bias_min);
            res.put("fit", "bias_max_ma", bias_max);
            res.put("fit", "start_perturb", start_perturb);
            let biases = linspace(bias_min, bias_max, n_biases)?;
            let data =
                synthesize_peaks(&truth, &biases, noise_mhz * 1e-3, seed, settings.n_cut)?;
            emit(ctx, &mut files, "fit_data.csv", "fit", digest, &data.to_csv())?;
            (data, true)
        }
    };
    let start = if synthetic && start_perturb != 0.0 {
        perturb_device(&truth, start_perturb)
    } else {
        truth
    };

    let start_rms = rms_residual(&start, &data, settings.n_cut)?;
    let outcome = fit(&data, &start, &settings)?;

    let fitted = outcome.device.to_vec();
    let mut txt = String::new();
    for (name, v) in PARAM_NAMES.iter().zip(&fitted) {
        let _ = writeln!(txt, "{name} = {}", fmt_sig(*v, 12));
    }
    let _ = writeln!(txt, "rms_ghz = {}", fmt_sig(outcome.rms, 12));
    let _ = writeln!(txt, "stage1_rms_ghz = {}", fmt_sig(outcome.stage1_rms, 12));
    let _ = writeln!(txt, "start_rms_ghz = {}", fmt_sig(start_rms, 12));
    let _ = writeln!(txt, "iterations = {}", outcome.iterations);
    let _ = writeln!(txt, "evaluations = {}", outcome.evaluations);
    let _ = writeln!(txt, "converged = {}", outcome.converged);
    let _ = writeln!(txt, "n_points = {}", data.points.len());
    let _ = writeln!(txt, "lines = {}", LINE_NAMES.join(","));
    let mut max_rel = 0.0f64;
    if synthetic {
        let tv = truth.to_vec();
        for ((name, t), f) in PARAM_NAMES.iter().zip(&tv).zip(&fitted) {
            let rel = (f - t).abs() / t.abs();
            max_rel = max_rel.max(rel);
            let _ = writeln!(txt, "truth_{name} = {}", fmt_sig(*t, 12));
            let _ = writeln!(txt, "rel_err_{name} = {}", fmt_sig(rel, 3));
        }
    }
    emit(ctx, &mut files, "fit_result.txt", "fit", digest, &txt)?;

    let mut csv = String::new();
    for name in PARAM_NAMES {
        let _ = write!(csv, "{name},");
    }
    csv.push_str("rms_ghz,stage1_rms_ghz,iterations,evaluations,converged\n");
    for v in &fitted {
        csv.push_str(&fmt_sig(*v, 12));
        csv.push(',');
    }
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        fmt_sig(outcome.rms, 12),
        fmt_sig(outcome.stage1_rms, 12),
        outcome.iterations,
        outcome.evaluations,
        outcome.converged
    );
    emit(ctx, &mut files, "fit_result.csv", "fit", digest, &csv)?;
    echo_config(ctx, &mut files, "fit", digest, &res)?;

    let ok = outcome.converged;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "fit over {} peaks ({}): rms {} -> {} GHz in {} iterations ({})",
        data.points.len(),
        if synthetic { "synthesized" } else { "from file" },
        fmt_sig(start_rms, 3),
        fmt_sig(outcome.rms, 3),
        outcome.iterations,
        if outcome.converged { "converged" } else { "NOT converged" }
    );
    for (name, v) in PARAM_NAMES.iter().zip(&fitted) {
        let _ = writeln!(summary, "  {name:>11} = {}", fmt_sig(*v, 7));
    }
    if synthetic {
        let _ = writeln!(
            summary,
            "worst relative error against the generating parameters: {:.2e}",
            max_rel
        );
    }
    let _ = writeln!(
        summary,
        "convergence -> {}",
        if ok { "PASS" } else { "FAIL (raise iteration budget)" }
    );
    Ok(CmdReport { summary, files, ok })
}

fn load_circuit(
    cfg: &RawConfig,
    which: &str,
    defaults: &CircuitParams,
    omega_r: f64,
    e_lr: f64,
    n_charge: usize,
    res: &mut Resolved,
) -> Result<CircuitParams> {
    let key = |suffix: &str| format!("{which}_{suffix}");
    let p = CircuitParams {
        e_j: cfg.f64("quantize", &key("e_j"), defaults.e_j)?,
        e_c: cfg.f64("quantize", &key("e_c"), defaults.e_c)?,
        alpha: cfg.f64("quantize", &key("alpha"), defaults.alpha)?,
        beta: cfg.f64("quantize", &key("beta"), defaults.beta)?,
        phi_e: cfg.f64("quantize", &key("phi_e"), defaults.phi_e)?,
        e_lr,
        omega_r,
        n_charge,
    };
    p.validate()?;
    for (k, v) in [
        ("e_j", p.e_j),
        ("e_c", p.e_c),
        ("alpha", p.alpha),
        ("beta", p.beta),
        ("phi_e", p.phi_e),
    ] {
        res.put("quantize", &key(k), v);
    }
    Ok(p)
}

/// Charge-basis quantization of both qubit loops, their two-level reduction,
/// and the resulting coupled-model parameters.
pub fn cmd_quantize(cfg: &RawConfig, ctx: &RunContext) -> Result<CmdReport> {
    cfg.check_schema(SCHEMA)?;
    let digest = cfg.digest();
    let mut res = Resolved::new();
    let base = load_model(cfg, &mut res)?;
    let _cal = load_calibration(cfg, &mut res)?;
    let e_lr = cfg.f64("quantize", "e_lr", 2.0)?;
    let n_charge = cfg.usize("quantize", "n_charge", 5)?;
    let n_levels = cfg.usize("quantize", "n_levels", 3)?;
    let n_photons = cfg.usize("quantize", "n_photons", 8)?;
    let n_cut = cfg.usize("quantize", "n_cut", base.n_cut)?;
    res.put("quantize", "e_lr", e_lr);
    res.put("quantize", "n_charge", n_charge);
    res.put("quantize", "n_levels", n_levels);
    res.put("quantize", "n_photons", n_photons);
    res.put("quantize", "n_cut", n_cut);
    let q1 = load_circuit(
        cfg,
        "q1",
        &CircuitParams::demo_qubit1(),
        base.omega_r,
        e_lr,
        n_charge,
        &mut res,
    )?;
    let q2 = load_circuit(
        cfg,
        "q2",
        &CircuitParams::demo_qubit2(),
        base.omega_r,
        e_lr,
        n_charge,
        &mut res,
    )?;

    let r1 = two_level_reduce(&q1, n_levels)?;
    let r2 = two_level_reduce(&q2, n_levels)?;
    let drift1 = charge_convergence(&q1, 4)?;
    let drift2 = charge_convergence(&q2, 4)?;
    let budget1 = 1e-4 * q1.e_j;
    let budget2 = 1e-4 * q2.e_j;

    let reduced = reduced_dicke_params(&r1, &r2, base.omega_r, n_cut);
    // the two-level reduction needs a nonzero gap; a gapless loop is
    // reported rather than treated as a failure of the quantizer itself
    let (reduced_summary, assembled_rel) = match &reduced {
        Ok(pd) => {
            let w_asm = hermitian_eigenvalues(&assemble_reduced(&r1, &r2, base.omega_r, n_photons)?)?;
            let w_red = hermitian_eigenvalues(&build_h_flux(pd)?)?;
            let rel = (1..=4)
                .map(|k| {
                    let asm = w_asm[k] - w_asm[0];
                    let red = w_red[k] - w_red[0];
                    ((asm - red) / asm).abs()
                })
                .fold(0.0f64, f64::max);
            (Some(*pd), rel)
        }
        Err(_) => (None, f64::INFINITY),
    };

    let mut body = String::from(
        "qubit,e_j_ghz,e_c_ghz,alpha,beta,phi_e,delta_ghz,eps_ghz,g_ghz,\
         slope_ghz_per_flux,drift_ghz,budget_ghz\n",
    );
    for (name, q, r, drift, budget) in
        [("q1", &q1, &r1, drift1, budget1), ("q2", &q2, &r2, drift2, budget2)]
    {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            fmt_sig(q.e_j, 12),
            fmt_sig(q.e_c, 12),
            fmt_sig(q.alpha, 12),
            fmt_sig(q.beta, 12),
            fmt_sig(q.phi_e, 12),
            fmt_sig(r.delta, 12),
            fmt_sig(r.eps, 12),
            fmt_sig(r.g, 12),
            fmt_sig(r.slope, 12),
            fmt_sig(drift, 12),
            fmt_sig(budget, 12)
        );
    }
    let mut files = Vec::new();
    emit(ctx, &mut files, "quantize.csv", "quantize", digest, &body)?;

    let mut txt = String::new();
    if let Some(pd) = &reduced_summary {
        for (k, v) in [
            ("omega_r", pd.omega_r),
            ("eps1", pd.eps1),
            ("eps2", pd.eps2),
            ("delta1", pd.delta1),
            ("delta2", pd.delta2),
            ("g1", pd.g1),
            ("g2", pd.g2),
        ] {
            let _ = writeln!(txt, "{k} = {}", fmt_sig(v, 12));
        }
        let _ = writeln!(txt, "assembled_vs_reduced_rel = {}", fmt_sig(assembled_rel, 3));
    } else {
        let _ = writeln!(txt, "reduced_model = unavailable (gapless loop)");
    }
    emit(ctx, &mut files, "quantize_reduced.txt", "quantize", digest, &txt)?;
    echo_config(ctx, &mut files, "quantize", digest, &res)?;

    let conv1 = drift1 < budget1;
    let conv2 = drift2 < budget2;
    let assembled_ok = assembled_rel < 0.05;
    let ok = conv1 && conv2 && assembled_ok;

    let mut summary = String::new();
    for (name, r, drift, budget, conv) in [
        ("qubit 1", &r1, drift1, budget1, conv1),
        ("qubit 2", &r2, drift2, budget2, conv2),
    ] {
        let _ = writeln!(
            summary,
            "{name}: delta = {:.4} GHz, eps = {:.4} GHz, g = {:.4} GHz (slope {:.1} GHz/flux)",
            r.delta, r.eps, r.g, r.slope
        );
        let _ = writeln!(
            summary,
            "  charge-cutoff drift {} GHz vs budget {} GHz -> {}",
            fmt_sig(drift, 3),
            fmt_sig(budget, 3),
            if conv { "PASS" } else { "FAIL (raise n_charge)" }
        );
    }
    if reduced_summary.is_some() {
        let _ = writeln!(
            summary,
            "two-level reduction vs multi-level assembly: max line deviation {:.2}% -> {}",
            assembled_rel * 100.0,
            if assembled_ok { "PASS" } else { "FAIL" }
        );
    } else {
        let _ = writeln!(summary, "two-level reduction unavailable (gapless loop)");
    }
    Ok(CmdReport { summary, files, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn ctx(dir: &Path) -> RunContext {
        RunContext {
            out_dir: dir.to_path_buf(),
            seed: None,
        }
    }

    const TINY_MODEL: &str = "\
[model]
n_cut = 4

[calibration]
a = 0
b_plus = 0
b_minus = 0
";

    #[test]
    fn unknown_keys_and_sections_are_hard_errors() {
        let cfg = RawConfig::parse("[model]\nomega = 5.0\n").unwrap();
        let dir = tempdir().unwrap();
        match cmd_sweep(&cfg, &ctx(dir.path())) {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("expected a line-2 config error, got {other:?}"),
        }
        let cfg = RawConfig::parse("[swee]\nn_levels = 3\n").unwrap();
        assert!(matches!(
            cmd_sweep(&cfg, &ctx(dir.path())),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn sweep_writes_deterministic_digest_stamped_csv() {
        // default n_cut here: the cutoff check must pass at device couplings
        let text = "\
[calibration]
a = 0
b_plus = 0
b_minus = 0

[grid]
points = 5

[sweep]
n_levels = 3
transitions = 1-2
";
        let cfg = RawConfig::parse(text).unwrap();
        let dir = tempdir().unwrap();
        let report = cmd_sweep(&cfg, &ctx(dir.path())).unwrap();
        assert!(report.ok, "cutoff check failed:\n{}", report.summary);
        assert!(report.summary.contains("g1/omega_r"));
        let csv_path = dir.path().join("sweep.csv");
        assert!(report.files.contains(&csv_path));
        let first = fs::read_to_string(&csv_path).unwrap();
        assert!(first.starts_with("# command = sweep\n# config_digest = 0x"));
        let header_line = first.lines().nth(2).unwrap();
        assert_eq!(
            header_line,
            "i_b_ma,eps1_ghz,omega_10_ghz,omega_20_ghz,omega_30_ghz,omega_12_ghz"
        );
        assert_eq!(first.lines().count(), 3 + 5);
        // no temp files left behind, and a re-run is byte-identical
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .path()
                    .to_string_lossy()
                    .ends_with(".tmp")
            })
            .collect();
        assert!(leftovers.is_empty());
        cmd_sweep(&cfg, &ctx(dir.path())).unwrap();
        let second = fs::read_to_string(&csv_path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn sweep_rejects_malformed_transitions() {
        for bad in ["transitions = 12", "transitions = 2-1", "transitions = 1-9"] {
            let text = format!("{TINY_MODEL}\n[grid]\npoints = 3\n\n[sweep]\nn_levels = 3\n{bad}\n");
            let cfg = RawConfig::parse(&text).unwrap();
            let dir = tempdir().unwrap();
            assert!(
                matches!(cmd_sweep(&cfg, &ctx(dir.path())), Err(Error::Config { .. })),
                "`{bad}` should be rejected"
            );
        }
    }

    #[test]
    fn sweep_echoes_resolved_defaults() {
        let cfg = RawConfig::parse(TINY_MODEL).unwrap();
        let dir = tempdir().unwrap();
        cmd_sweep(&cfg, &ctx(dir.path())).unwrap();
        let echo = fs::read_to_string(dir.path().join("sweep_config.txt")).unwrap();
        // filled defaults show up even though the config never set them
        assert!(echo.contains("n_levels = 8"));
        assert!(echo.contains("points = 97"));
        assert!(echo.contains("omega_r = 5.15"));
        // and the explicit settings are echoed back
        assert!(echo.contains("n_cut = 4"));
    }

    #[test]
    fn oracle_reports_pass_lines() {
        let text = "[model]\nn_cut = 40\n\n[oracle]\ng = 3.39\neps1_ghz = -2.1\n";
        let cfg = RawConfig::parse(text).unwrap();
        let dir = tempdir().unwrap();
        let report = cmd_oracle(&cfg, &ctx(dir.path())).unwrap();
        assert!(report.ok, "oracle checks failed:\n{}", report.summary);
        assert_eq!(report.summary.matches("PASS").count(), 2);
        let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3 + 4, "one row per spin sector");
    }

    #[test]
    fn fit_synthesizes_writes_and_converges_on_a_tiny_problem() {
        let text = "\
[model]
n_cut = 4

[fit]
n_cut = 4
noise_mhz = 0
biases = 5
start_perturb = 0.02
fatol = 1e-10
xatol = 1e-8
";
        let cfg = RawConfig::parse(text).unwrap();
        let dir = tempdir().unwrap();
        let report = cmd_fit(&cfg, &ctx(dir.path())).unwrap();
        assert!(report.ok, "fit did not converge:\n{}", report.summary);
        let result = fs::read_to_string(dir.path().join("fit_result.txt")).unwrap();
        assert!(result.contains("converged = true"));
        assert!(result.contains("rel_err_g1"));
        let data = fs::read_to_string(dir.path().join("fit_data.csv")).unwrap();
        // synthesized table: header lines + column row + 5 biases x 7 lines
        assert_eq!(data.lines().count(), 3 + 35);
        let row = fs::read_to_string(dir.path().join("fit_result.csv")).unwrap();
        let cols = row.lines().nth(3).unwrap().split(',').count();
        assert_eq!(cols, PARAM_NAMES.len() + 5);
        // the fitted table can be read back and refit from a file
        let reread = PeakData::from_csv(&data).unwrap();
        assert_eq!(reread.points.len(), 35);
    }

    #[test]
    fn quantize_reports_unconverged_cutoffs_honestly() {
        // at n_charge = 2 the charge basis is far from converged: the files
        // must still be written, with ok = false signalling the failure
        let text = "[quantize]\nn_charge = 2\nn_photons = 4\nn_cut = 6\n";
        let cfg = RawConfig::parse(text).unwrap();
        let dir = tempdir().unwrap();
        let report = cmd_quantize(&cfg, &ctx(dir.path())).unwrap();
        assert!(!report.ok, "n_charge = 2 must fail the drift budget");
        assert!(report.summary.contains("FAIL"));
        assert!(dir.path().join("quantize.csv").exists());
        assert!(dir.path().join("quantize_reduced.txt").exists());
        let echo = fs::read_to_string(dir.path().join("quantize_config.txt")).unwrap();
        assert!(echo.contains("q1_e_j = 45"));
        assert!(echo.contains("n_charge = 2"));
    }

    #[test]
    fn atomic_writes_replace_content() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert!(!dir.path().join("x.csv.tmp").exists());
    }
}
