//! Brute-force oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use lindbladlab::correlations::von_neumann_entropy;
use lindbladlab::qlinalg::{ComplexOperator, DensityMatrix, SubsystemLayout, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Entropy of a 2×2 Hermitian unit-trace matrix `[[a, b], [b*, d]]`.
pub fn qubit_entropy(a: f64, d: f64, b: C64) -> f64 {
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + r, mean - r]
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum()
}

/// `min` over projective measurements `{|u⟩, |u⊥⟩}` on qubit B of the
/// post-measurement conditional entropy of A, on a 0.5° grid of the Bloch sphere.
pub fn min_conditional_entropy(rho: &[[C64; 4]; 4]) -> f64 {
    let step = 0.5_f64.to_radians();
    let n_theta = (PI / step).round() as usize;
    let n_phi = (2.0 * PI / step).round() as usize;
    let mut best = f64::INFINITY;
    for it in 0..=n_theta {
        let theta = it as f64 * step;
        let (ct, st) = ((0.5 * theta).cos(), (0.5 * theta).sin());
        for ip in 0..n_phi {
            let phi = ip as f64 * step;
            let u = [c(ct), C64::from_polar(st, phi)];
            let v = [C64::from_polar(st, -phi) * -1.0, c(ct)];
            let mut total = 0.0;
            for k in [u, v] {
                let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        for x in 0..2 {
                            for y in 0..2 {
                                m[a][b] += k[x].conj() * rho[2 * a + x][2 * b + y] * k[y];
                            }
                        }
                    }
                }
                let p = m[0][0].re + m[1][1].re;
                if p > 1e-14 {
                    total += p * qubit_entropy(m[0][0].re / p, m[1][1].re / p, m[0][1] / p);
                }
            }
            best = best.min(total);
        }
    }
    best
}

pub fn random_rank3_xstate(rng: &mut ChaCha8Rng) -> [[C64; 4]; 4] {
    let mut p: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let outer_max = (p[0] * p[3]).sqrt();
    let inner_max = (p[1] * p[2]).sqrt();
    // one block at full coherence keeps the rank at most 3
    let (wr, zr) = if rng.gen_bool(0.5) {
        (outer_max, inner_max * rng.gen::<f64>())
    } else {
        (outer_max * rng.gen::<f64>(), inner_max)
    };
    let w = C64::from_polar(wr, rng.gen_range(0.0..2.0 * PI));
    let z = C64::from_polar(zr, rng.gen_range(0.0..2.0 * PI));
    let o = c(0.0);
    [
        [c(p[0]), o, o, w],
        [o, c(p[1]), z, o],
        [o, z.conj(), c(p[2]), o],
        [w.conj(), o, o, c(p[3])],
    ]
}

pub fn to_density(m: &[[C64; 4]; 4]) -> DensityMatrix {
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.to_vec()).collect();
    DensityMatrix::new(ComplexOperator::from_rows(&rows).unwrap(), SubsystemLayout::two_qubits()).unwrap()
}

/// Discord with measurement on qubit B: `S(B) − S(AB) + min Σ p_k S(A|k)`.
pub fn brute_force_discord(m: &[[C64; 4]; 4]) -> f64 {
    let rho = to_density(m);
    let s_b = qubit_entropy(m[0][0].re + m[2][2].re, m[1][1].re + m[3][3].re, m[0][1] + m[2][3]);
    let s_ab = von_neumann_entropy(&rho).unwrap();
    min_conditional_entropy(m) - (s_ab - s_b)
}

/// Entries of a two-qubit density matrix.
pub fn entries(rho: &DensityMatrix) -> [[C64; 4]; 4] {
    let mut m = [[c(0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rho.get(i, j);
        }
    }
    m
}
