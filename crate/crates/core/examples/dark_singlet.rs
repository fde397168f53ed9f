//! The singlet is annihilated by every collective jump operator, so it never
//! reaches the target; every other initial state does.

use lindbladlab::correlations::super_fidelity;
use lindbladlab::dynamics::{dark_state_check, evolve_propagator};
use lindbladlab::experiments::named_initial_state;
use lindbladlab::models::{build_combined_effective, build_scheme_b_effective, target_state};
use lindbladlab::qlinalg::bell;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let models = [
        ("switched pair, averaged", build_combined_effective(0.01, 0.8)?),
        ("coupled cavities", build_scheme_b_effective(0.01, 0.8)?),
    ];
    let target = target_state();
    for (name, model) in &models {
        let r = dark_state_check(model, &bell::psi_minus())?;
        println!("{name}: singlet dark = {}", r.is_dark(1e-12));
        for state in ["psi_minus", "psi_plus", "phi_minus", "mix"] {
            let rho0 = named_initial_state(state)?;
            let traj = evolve_propagator(model, &rho0, 4000.0, 2)?;
            let f = super_fidelity(traj.final_state().unwrap(), &target)?;
            println!("  from {state:<10} fidelity at gt = 8000: {f:.6}");
        }
    }
    Ok(())
}
