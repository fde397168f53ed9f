//! Full two-atom, single-cavity model under phase switching, solved in the
//! static frame with precomputed segment propagators.
//!
//! ```text
//! cargo run --release --example scheme_a_full -- [gt] [N]
//! ```
//! Defaults `gt = 2000`, `N = 50`; `8000 200` reproduces the long runs (about a minute).

use lindbladlab::experiments::{run_experiment, scheme_a_full_config, lookup, Observable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t_final: f64 = args.first().map_or(Ok(2000.0), |s| s.parse())?;
    let n: usize = args.get(1).map_or(Ok(50), |s| s.parse())?;

    let mut spec = lookup("fig3a")?.spec;
    spec.config = scheme_a_full_config(0.5, 100.0, 0.1, 0.0);
    spec.set("time.t_final", &t_final.to_string())?;
    spec.set("schedule.N", &n.to_string())?;
    spec.set("observables", "fidelity,pop_psi_plus,excited_population,top_fock")?;
    spec.time.samples = 11;

    let out = run_experiment(&spec)?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "gt", "fidelity", "P(Psi+)", "excited", "top Fock");
    for (k, t) in out.series.times.iter().enumerate() {
        let v = |o| out.series.get(o).unwrap()[k];
        println!("{t:8.1} {:10.6} {:10.6} {:10.2e} {:10.2e}", v(Observable::Fidelity),
            v(Observable::PopPsiPlus), v(Observable::ExcitedPopulation), v(Observable::TopFock));
    }
    if let Some(d) = out.diagnostics {
        println!("trace error {:.1e}, min eigenvalue {:.1e}, cutoff adequate: {}",
            d.trace_error, d.min_eigenvalue, out.cutoff_adequate);
    }
    Ok(())
}
