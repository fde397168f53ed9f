//! Nullspace analysis: the symmetric-subspace model has a unique fixed point
//! unless the relative drive phase reaches ±π.

use lindbladlab::dynamics::steady_states;
use lindbladlab::models::{
    build_chi_model, build_combined_effective, build_subspace_model, symmetric_subspace_basis,
    PhaseMismatch,
};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = symmetric_subspace_basis();
    let avg = build_combined_effective(0.01, 0.8)?;
    let full = steady_states(&avg)?;
    let sym = steady_states(&avg.restrict_to_subspace(&v, "triplet")?)?;
    println!("averaged generator: nullspace dim {} on two qubits, {} on the triplet", full.dimension, sym.dimension);

    let chi = build_chi_model(1.0)?.restrict_to_subspace(&v, "triplet")?;
    let ss = steady_states(&chi)?;
    println!("chi variant on the triplet: nullspace dim {}, residual {:.1e}", ss.dimension, ss.residuals[0]);

    println!("\n delta/pi  dim  rho_11    rho_22    rho_33");
    for k in -10..=10 {
        let delta = k as f64 * 0.1 * PI;
        let pm = PhaseMismatch::new(delta.clamp(-PI, PI), 0.0, 0.0, 0.0)?;
        let ss = steady_states(&build_subspace_model(1.0, &pm)?)?;
        let s = &ss.states[0];
        println!("{:8.1} {:4} {:9.6} {:9.6} {:9.6}", k as f64 / 10.0, ss.dimension,
            s.get(0, 0).re, s.get(1, 1).re, s.get(2, 2).re);
    }
    Ok(())
}
