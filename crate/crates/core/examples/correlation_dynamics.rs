//! Concurrence, classical correlation and discord while the switched
//! effective dynamics carries |Ψ+⟩ to the target.

use lindbladlab::experiments::{lookup, run_experiment, Observable, Scheme, EffectiveOverride};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = lookup("fig4")?.spec;
    spec.scheme = Scheme::AEffective;
    spec.effective = EffectiveOverride { coupling: Some(0.01), kappa: Some(0.8) };
    spec.time.samples = 21;
    let out = run_experiment(&spec)?;
    println!("{:>8} {:>11} {:>9} {:>9}", "gt", "concurrence", "CC", "QD");
    for (k, t) in out.series.times.iter().enumerate() {
        let v = |o| out.series.get(o).unwrap()[k];
        println!("{t:8.0} {:11.6} {:9.6} {:9.6}", v(Observable::Concurrence), v(Observable::Cc), v(Observable::Qd));
    }
    Ok(())
}
