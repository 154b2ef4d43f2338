//! How far can a non-interacting picture go? Renormalize each qubit gap by
//! the photon-cloud overlap, delta -> delta * exp(-2 (g/omega_r)^2), and
//! compare the resulting independent lines against the full coupled
//! spectrum across the bias range.
//!
//! ```text
//! cargo run --release --example reference
//! ```

use fluxdicke::model::renormalized_gap;
use fluxdicke::spectrum::{
    linspace, masked_line_deviations, reference_sweep, sweep, SweepCalibration,
};
use fluxdicke::DickeParams;

fn main() -> anyhow::Result<()> {
    let base = DickeParams::reference_device();
    let cal = SweepCalibration::reference_device();

    for (name, delta, g) in [("qubit 1", base.delta1, base.g1), ("qubit 2", base.delta2, base.g2)] {
        println!(
            "{name}: bare gap {delta:.3} GHz -> renormalized {:.4} GHz (factor {:.4})",
            renormalized_gap(delta, g, base.omega_r),
            (-2.0 * (g / base.omega_r).powi(2)).exp()
        );
    }
    println!();

    let grid = linspace(-6.0, 6.0, 97)?;
    let full_t = sweep(&base, &cal, &grid, 6)?;
    let ref_t = reference_sweep(&base, &cal, &grid, 8)?;
    let full: Vec<Vec<f64>> = (1..6).map(|i| full_t.line(i)).collect();
    let refs: Vec<Vec<f64>> = (1..8).map(|i| ref_t.line(i)).collect();

    // compare only isolated points: near avoided crossings the full lines
    // hybridize and track no single independent line
    let isolation = 0.5;
    let devs = masked_line_deviations(&full, &refs, isolation);
    let worst = devs
        .iter()
        .max_by(|a, b| a.deviation.partial_cmp(&b.deviation).unwrap())
        .expect("grid produces comparisons");
    println!(
        "{} of {} (line, bias) points are isolated by more than {isolation} GHz",
        devs.len(),
        full.len() * grid.len()
    );
    println!(
        "worst deviation: {:.1} MHz on line {} at eps1 = {:+.3} GHz (full {:.4} vs reference {:.4} GHz)",
        worst.deviation * 1e3,
        worst.line_index + 1,
        grid[worst.grid_index],
        worst.full_value,
        worst.ref_value
    );
    println!(
        "that is {:.1}% of the resonator frequency: the renormalized free lines track",
        worst.deviation / base.omega_r * 100.0
    );
    println!("the interacting spectrum everywhere away from the crossings.");
    Ok(())
}
