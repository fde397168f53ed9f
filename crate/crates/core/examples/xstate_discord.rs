//! Closed-form X-state discord next to a direct minimization over
//! projective measurements on the second qubit.

use lindbladlab::correlations::{mutual_information, von_neumann_entropy, xstate_discord_cc};
use lindbladlab::qlinalg::{ComplexOperator, DensityMatrix, SubsystemLayout, C64};
use std::f64::consts::PI;

fn conditional_entropy_min(rho: &DensityMatrix) -> f64 {
    let mut best = f64::INFINITY;
    let steps = 180;
    for i in 0..=steps {
        let theta = PI * i as f64 / steps as f64;
        for j in 0..(2 * steps) {
            let phi = PI * j as f64 / steps as f64;
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let kets = [
                [C64::new(c, 0.0), C64::from_polar(s, phi)],
                [C64::new(-s, 0.0), C64::from_polar(c, phi)],
            ];
            let mut total = 0.0;
            for k in &kets {
                // (I ⊗ |k⟩⟨k|) ρ (I ⊗ |k⟩⟨k|), reduced to qubit A
                let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        for x in 0..2 {
                            for y in 0..2 {
                                m[a][b] += k[x].conj() * rho.get(2 * a + x, 2 * b + y) * k[y];
                            }
                        }
                    }
                }
                let p = (m[0][0] + m[1][1]).re;
                if p <= 1e-15 {
                    continue;
                }
                let op = ComplexOperator::from_fn(2, |(a, b)| m[a][b] / p);
                let st = DensityMatrix::new(op, SubsystemLayout::new(&[("a", 2)]).unwrap()).unwrap();
                total += p * von_neumann_entropy(&st).unwrap();
            }
            best = best.min(total);
        }
    }
    best
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = |p: [f64; 4], z: f64, w: f64| {
        let c = |x: f64| C64::new(x, 0.0);
        vec![
            vec![c(p[0]), c(0.0), c(0.0), c(w)],
            vec![c(0.0), c(p[1]), c(z), c(0.0)],
            vec![c(0.0), c(z), c(p[2]), c(0.0)],
            vec![c(w), c(0.0), c(0.0), c(p[3])],
        ]
    };
    for (p, z, w) in [([0.25; 4], 0.2, 0.1), ([0.4, 0.1, 0.2, 0.3], 0.1, -0.2), ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0], 0.0, 0.0)] {
        let rho = DensityMatrix::new(ComplexOperator::from_rows(&rows(p, z, w))?, SubsystemLayout::two_qubits())?;
        let closed = xstate_discord_cc(&rho)?.qd;
        let s_b = {
            let b = lindbladlab::qlinalg::partial_trace(&rho, &["q2"])?;
            von_neumann_entropy(&b)?
        };
        let brute = conditional_entropy_min(&rho) - (von_neumann_entropy(&rho)? - s_b);
        println!("closed form {closed:.6}   measurement scan {brute:.6}   I = {:.6}", mutual_information(&rho)?);
    }
    Ok(())
}
