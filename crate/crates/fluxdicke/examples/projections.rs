//! Decompose the low eigenstates over the bare product basis |q1 q2, n> on
//! both sides of the avoided crossing: the one-photon and two-excitation
//! characters swap branches as the bias sweeps through.
//!
//! ```text
//! cargo run --release --example projections
//! ```

use fluxdicke::spectrum::{complete_label_set, projections, SweepCalibration};
use fluxdicke::DickeParams;

fn main() -> anyhow::Result<()> {
    let base = DickeParams::reference_device();
    let cal = SweepCalibration::crosstalk_free();
    let n_states = 6;

    let labels = ["gg0", "gg1", "ee0", "ge0", "eg0"];
    let biases = [-2.4, -2.06, -1.8];
    let t = projections(&base, &cal, &biases, &labels, n_states)?;

    for (k, &eps1) in biases.iter().enumerate() {
        println!("eps1 = {eps1:+.2} GHz:");
        print!("{:>8}", "state");
        for l in labels {
            print!("  {l:>6}");
        }
        println!("   energy");
        for i in 0..n_states {
            print!("{i:>8}");
            for l in 0..labels.len() {
                print!("  {:>6.3}", t.weights[k][i][l]);
            }
            println!("   {:+.4} GHz", t.energies[k][i]);
        }
        println!();
    }

    println!("the gg1 and ee0 columns swap between states 3 and 4 across the");
    println!("crossing near eps1 = -2.06 GHz, and mix evenly on top of it.");

    // sanity: over the complete basis every eigenstate is fully accounted for
    let all = complete_label_set(base.n_cut);
    let refs: Vec<&str> = all.iter().map(String::as_str).collect();
    let full = projections(&base, &cal, &[-2.4], &refs, n_states)?;
    let worst = (0..n_states)
        .map(|i| (full.weights[0][i].iter().sum::<f64>() - 1.0).abs())
        .fold(0.0f64, f64::max);
    println!();
    println!("completeness over all {} bare states: max |1 - sum| = {worst:.2e}", all.len());
    Ok(())
}
