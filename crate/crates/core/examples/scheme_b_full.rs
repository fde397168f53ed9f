//! Coupled-cavity model without switching. The generator is periodic, so
//! the one-period propagator is built once and raised to powers.
//!
//! ```text
//! cargo run --release --example scheme_b_full -- [gt]
//! ```
//! Default `gt = 2000`; `10000` gives the long-horizon populations (a few minutes).

use lindbladlab::correlations::{qubit_block, super_fidelity};
use lindbladlab::dynamics::{evolve_periodic, evolve_propagator, PeriodicOptions};
use lindbladlab::experiments::{embed_qubit_state, named_initial_state, scheme_b_full_config};
use lindbladlab::models::{build_scheme_b_effective, build_scheme_b_rotating, target_state};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t_final: f64 = std::env::args().nth(1).map_or(Ok(2000.0), |s| s.parse())?;
    let cfg = scheme_b_full_config(0.2, 100.0, 0.1, 0.0);
    let model = build_scheme_b_rotating(&cfg)?;
    println!("model dimension {} on {}", model.dim(), model.layout());

    let rho_q = named_initial_state("ket00")?;
    let rho0 = embed_qubit_state(&rho_q, model.layout())?;
    let period = 2.0 * PI / cfg.hopping;
    let stride = ((t_final / period) as u64 / 10).max(1);
    let full = evolve_periodic(&model, &rho0, t_final, &PeriodicOptions::new(period, stride))?;

    let eff = build_scheme_b_effective(cfg.raman_coupling_b(), cfg.kappa)?;
    let target = target_state();
    println!("{:>9} {:>10} {:>10} {:>8} {:>8}", "gt", "full", "effective", "p00", "p11");
    for (t, s) in full.times.iter().zip(&full.states) {
        let q = qubit_block(s)?;
        let e = if *t == 0.0 {
            rho_q.clone()
        } else {
            evolve_propagator(&eff, &rho_q, *t, 1)?.final_state().unwrap().clone()
        };
        println!("{t:9.1} {:10.6} {:10.6} {:8.4} {:8.4}", super_fidelity(&q.state, &target)?,
            super_fidelity(&e, &target)?, q.state.get(0, 0).re, q.state.get(3, 3).re);
    }
    Ok(())
}
