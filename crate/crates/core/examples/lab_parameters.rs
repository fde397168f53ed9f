//! Final fidelities for the three laboratory parameter sets, both schemes.
//! Each full run takes minutes; pass a set id to run just one.
//!
//! ```text
//! cargo run --release --example lab_parameters -- [tableV_a|tableV_b|tableV_c] [A|B]
//! ```

use lindbladlab::experiments::{lookup, run_experiment, Observable, LAB_FIDELITIES, LAB_PARAMETERS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    for (k, (id, label, kappa, gamma, _, _)) in LAB_PARAMETERS.iter().enumerate() {
        if args.first().is_some_and(|a| a != id) {
            continue;
        }
        println!("{id}: {label}  (kappa = {kappa:.5} g, gamma = {gamma:.5} g)");
        for (preset, reported) in [("A", LAB_FIDELITIES[k].0), ("B", LAB_FIDELITIES[k].1)] {
            if args.get(1).is_some_and(|a| a != preset) {
                continue;
            }
            let mut spec = lookup(id)?.spec;
            spec.set("preset", preset)?;
            spec.time.samples = 2;
            let out = run_experiment(&spec)?;
            let f = out.series.final_value(Observable::Fidelity).unwrap();
            println!("  scheme {preset}: fidelity {f:.4} (reported {reported:.4}), cutoff adequate {}", out.cutoff_adequate);
        }
    }
    Ok(())
}
