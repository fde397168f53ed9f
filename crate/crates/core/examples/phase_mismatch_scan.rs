//! Drive-phase error scans on the effective models, as grids over the
//! registered sweep axes.

use lindbladlab::experiments::{lookup, run_sweep, Axis, Observable, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = lookup("fig9a")?;
    let grid = run_sweep(&a.sweep(Some(Observable::Fidelity)).unwrap())?;
    let d = a.axes[1].values.len();
    println!("scheme A, gamma_eff t = 3, rows dphi1, columns dphi2 (units of pi, -0.5..0.5)");
    for row in grid.values("fidelity").chunks(d) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("  {}", line.join(" "));
    }

    let mut base = lookup("fig9c")?.spec;
    base.time.samples = 2;
    let sweep = SweepSpec {
        base,
        axes: vec![Axis::linspace("config.mismatch.pair12", 0.0, 0.3, 7)],
        metric: Some(Observable::Fidelity),
    };
    println!("\nscheme B, gamma_eff t = 8, dphi1 = dphi2, dphi3 = dphi4 = 0");
    for r in run_sweep(&sweep)?.records {
        println!("  dphi = {:>5} pi   fidelity {:.5}", r.coords[0], r.value);
    }
    Ok(())
}
