//! Synthesize noisy transition-line data from known device parameters,
//! forget the parameters, and recover them with the staged simplex fit.
//! A scaled-down version of the full calibration workflow (a small Fock
//! cutoff and few bias points keep it fast); the bundled `configs/fit.conf`
//! runs the full-size problem.
//!
//! ```text
//! cargo run --release --example fit_roundtrip
//! ```

use fluxdicke::fit::{
    fit, perturb_device, synthesize_peaks, DeviceParams, FitSettings, PARAM_NAMES,
};
use fluxdicke::spectrum::linspace;

fn main() -> anyhow::Result<()> {
    let truth = DeviceParams::reference_device();
    let settings = FitSettings {
        n_cut: 6,
        ..FitSettings::default()
    };

    // seven lines at nine bias points, blurred by 0.5 MHz of seeded noise
    let biases = linspace(0.520, 0.580, 9)?;
    let data = synthesize_peaks(&truth, &biases, 0.5e-3, 7, settings.n_cut)?;
    println!(
        "synthesized {} peaks over {} bias points (0.5 MHz noise)",
        data.points.len(),
        biases.len()
    );

    // start every parameter 5% off, alternating direction
    let start = perturb_device(&truth, 0.05);
    let outcome = fit(&data, &start, &settings)?;
    println!(
        "fit: {} iterations, {} evaluations, converged = {}, rms = {:.3} MHz",
        outcome.iterations,
        outcome.evaluations,
        outcome.converged,
        outcome.rms * 1e3
    );
    println!();
    println!("{:>12} {:>12} {:>12} {:>10}", "parameter", "truth", "fitted", "rel err");
    let tv = truth.to_vec();
    let fv = outcome.device.to_vec();
    for ((name, t), f) in PARAM_NAMES.iter().zip(&tv).zip(&fv) {
        println!("{name:>12} {t:>12.6} {f:>12.6} {:>10.2e}", (f - t).abs() / t.abs());
    }
    Ok(())
}
