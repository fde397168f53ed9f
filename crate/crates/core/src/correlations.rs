//! Two-qubit state measures: super-fidelity, entropies, concurrence and the
//! closed-form X-state discord and classical correlation.
//!
//! All entropies are in bits. Qubit A is the first tensor factor; the
//! classical correlation optimizes measurements on B.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::level;
use crate::qlinalg::{
    herm_eigen, partial_trace, partial_trace_operator, pauli, tensor, ComplexOperator,
    DensityMatrix, Ket, LinalgError, SubsystemLayout, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected a two-qubit state, got layout {0}")]
    NotTwoQubit(String),
    #[error("not an X-state: |rho[{row}][{col}]| = {magnitude:e}")]
    NotXState { row: usize, col: usize, magnitude: f64 },
    #[error("argument {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("eigenvalue {0:e} is too negative for an entropy")]
    NegativeEigenvalue(f64),
    #[error("no population left in the qubit block")]
    EmptyQubitBlock,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Eigenvalues above this (negative) bound are clipped to zero before taking logs.
pub const EIGEN_CLIP: f64 = -1e-10;
/// Largest off-X magnitude accepted by [`xstate_discord_cc`].
pub const XSTATE_TOL: f64 = 1e-9;

const ROUND: f64 = 1e-12;

/// `h[x] = −x log₂x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64, CorrelationError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CorrelationError::OutOfRange(x));
    }
    Ok(xlog(x) + xlog(1.0 - x))
}

fn binary_entropy_clamped(x: f64) -> Result<f64, CorrelationError> {
    if x < -ROUND || x > 1.0 + ROUND {
        return Err(CorrelationError::OutOfRange(x));
    }
    binary_entropy(x.clamp(0.0, 1.0))
}

/// `−x log₂ x` with `0 log 0 = 0`.
fn xlog(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

fn clipped(values: &[f64]) -> Result<Vec<f64>, CorrelationError> {
    values
        .iter()
        .map(|&v| {
            if v < EIGEN_CLIP {
                Err(CorrelationError::NegativeEigenvalue(v))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// `G(ρ, σ) = Tr ρσ + √((1 − Tr ρ²)(1 − Tr σ²))`.
pub fn super_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, CorrelationError> {
    super_fidelity_op(rho.op(), sigma.op())
}

pub fn super_fidelity_op(rho: &ComplexOperator, sigma: &ComplexOperator) -> Result<f64, CorrelationError> {
    if rho.dim() != sigma.dim() {
        return Err(CorrelationError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let overlap = rho.trace_product(sigma).re;
    let pr = rho.trace_product(rho).re;
    let ps = sigma.trace_product(sigma).re;
    // the product is symmetric, so G(ρ,σ) = G(σ,ρ) bitwise
    let mixed = ((1.0 - pr).max(0.0) * (1.0 - ps).max(0.0)).sqrt();
    Ok(overlap + mixed)
}

/// `S(ρ) = −Σ λ log₂ λ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64, CorrelationError> {
    entropy_of_op(rho.op())
}

fn entropy_of_op(op: &ComplexOperator) -> Result<f64, CorrelationError> {
    let eig = herm_eigen(&op.hermitian_part())?;
    Ok(clipped(&eig.values)?.into_iter().map(xlog).sum())
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<(), CorrelationError> {
    let dims = rho.layout().dims();
    if dims != [2, 2] {
        return Err(CorrelationError::NotTwoQubit(rho.layout().to_string()));
    }
    Ok(())
}

fn factor_labels(rho: &DensityMatrix) -> (String, String) {
    let l: Vec<&str> = rho.layout().labels().collect();
    (l[0].to_string(), l[1].to_string())
}

/// `I = S(ρ_A) + S(ρ_B) − S(ρ_AB)`.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64, CorrelationError> {
    check_two_qubit(rho)?;
    let (a, b) = factor_labels(rho);
    let ra = partial_trace(rho, &[a.as_str()])?;
    let rb = partial_trace(rho, &[b.as_str()])?;
    Ok(von_neumann_entropy(&ra)? + von_neumann_entropy(&rb)? - von_neumann_entropy(rho)?)
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64, CorrelationError> {
    if rho.dim() != 4 {
        return Err(CorrelationError::DimensionMismatch(rho.dim(), 4));
    }
    concurrence_op(rho.op())
}

fn concurrence_op(rho: &ComplexOperator) -> Result<f64, CorrelationError> {
    let h = rho.hermitian_part();
    let yy = tensor(&[&pauli::y(), &pauli::y()])?;
    let tilde = yy.matmul(&h.conj()).matmul(&yy);
    let sqrt_rho = herm_eigen(&h)?.reconstruct_with(|x| x.max(0.0).sqrt());
    let m = sqrt_rho.matmul(&tilde).matmul(&sqrt_rho);
    let mut lambdas: Vec<f64> = herm_eigen(&m.hermitian_part())?
        .values
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn population(rho: &DensityMatrix, psi: &Ket) -> Result<f64, CorrelationError> {
    if psi.len() != rho.dim() {
        return Err(CorrelationError::DimensionMismatch(rho.dim(), psi.len()));
    }
    Ok(rho.op().expectation(psi).re)
}

/// Closed-form X-state measures with their intermediates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub qd: f64,
    pub cc: f64,
    pub concurrence: f64,
    pub mutual_information: f64,
    /// Filled in by [`correlation_report`]; `NaN` from [`xstate_discord_cc`].
    pub super_fidelity_to_target: f64,
    pub q1: f64,
    pub q2: f64,
    pub cc1: f64,
    pub cc2: f64,
    pub d1: f64,
    pub d2: f64,
    pub tau: f64,
    pub eigenvalues: [f64; 4],
}

/// Position of the largest element outside the diagonal and anti-diagonal.
fn x_violation(rho: &ComplexOperator) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..4 {
        for j in 0..4 {
            if i == j || i + j == 3 {
                continue;
            }
            let m = rho.get(i, j).norm();
            if m > XSTATE_TOL && worst.map_or(true, |w| m > w.2) {
                worst = Some((i, j, m));
            }
        }
    }
    worst
}

/// `QD = min{Q₁, Q₂}` and `CC = max{CC₁, CC₂}` of a two-qubit X-state.
pub fn xstate_discord_cc(rho: &DensityMatrix) -> Result<CorrelationReport, CorrelationError> {
    check_two_qubit(rho)?;
    let op = rho.op();
    if let Some((row, col, magnitude)) = x_violation(op) {
        return Err(CorrelationError::NotXState { row, col, magnitude });
    }
    let p = |i: usize| op.get(i, i).re;
    let (r11, r22, r33, r44) = (p(0), p(1), p(2), p(3));
    let r14 = op.get(0, 3).norm();
    let r23 = op.get(1, 2).norm();
    let eig = herm_eigen(&op.hermitian_part())?;
    let lambdas = clipped(&eig.values)?;
    let sum_lambda_log: f64 = -lambdas.iter().map(|&l| xlog(l)).sum::<f64>();
    let h_b = binary_entropy_clamped(r11 + r33)?;
    let h_a = binary_entropy_clamped(r11 + r22)?;
    let tau = (1.0 + ((1.0 - 2.0 * (r33 + r44)).powi(2) + 4.0 * (r14 + r23).powi(2)).sqrt()) / 2.0;
    let d1 = binary_entropy_clamped(tau)?;
    let diag_entropy: f64 = [r11, r22, r33, r44].iter().map(|&x| xlog(x.max(0.0))).sum();
    let d2 = diag_entropy - h_b;
    let q1 = h_b + sum_lambda_log + d1;
    let q2 = h_b + sum_lambda_log + d2;
    let cc1 = h_a - d1;
    let cc2 = h_a - d2;
    let mi = mutual_information(rho)?;
    Ok(CorrelationReport {
        qd: q1.min(q2),
        cc: cc1.max(cc2),
        concurrence: concurrence_op(op)?,
        mutual_information: mi,
        super_fidelity_to_target: f64::NAN,
        q1,
        q2,
        cc1,
        cc2,
        d1,
        d2,
        tau,
        eigenvalues: [lambdas[0], lambdas[1], lambdas[2], lambdas[3]],
    })
}

/// [`xstate_discord_cc`] plus the super-fidelity to `target`.
pub fn correlation_report(
    rho: &DensityMatrix,
    target: &DensityMatrix,
) -> Result<CorrelationReport, CorrelationError> {
    let mut r = xstate_discord_cc(rho)?;
    r.super_fidelity_to_target = super_fidelity(rho, target)?;
    Ok(r)
}

/// Two-qubit state of the atoms carried by a full-model state.
#[derive(Clone, Debug)]
pub struct QubitBlock {
    /// Renormalized `{|0⟩,|1⟩}⊗{|0⟩,|1⟩}` block of the atomic reduced state.
    pub state: DensityMatrix,
    /// Population outside that block (excited atomic levels).
    pub excited_population: f64,
}

/// Traces out every factor except `atom1`, `atom2` and keeps the ground-level block.
/// Two-qubit inputs are returned unchanged.
pub fn qubit_block(rho: &DensityMatrix) -> Result<QubitBlock, CorrelationError> {
    if rho.layout().dims() == [2, 2] {
        return Ok(QubitBlock {
            state: rho.clone(),
            excited_population: 0.0,
        });
    }
    let (atoms, layout) = partial_trace_operator(rho.op(), rho.layout(), &["atom1", "atom2"])?;
    let dims = layout.dims();
    if dims.len() != 2 || dims[0] <= level::G1 || dims[1] <= level::G1 {
        return Err(CorrelationError::NotTwoQubit(rho.layout().to_string()));
    }
    let ground: Vec<usize> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a, b)| layout.flat_index(&[a, b]))
        .collect();
    let block = atoms.submatrix(&ground);
    let weight = block.trace().re;
    if weight <= 1e-12 {
        return Err(CorrelationError::EmptyQubitBlock);
    }
    let state = DensityMatrix::new(
        block.scale(C64::new(1.0 / weight, 0.0)).hermitian_part(),
        SubsystemLayout::two_qubits(),
    )
    .or_else(|_| {
        // long runs accumulate roundoff; accept it at the relaxed tolerances
        DensityMatrix::with_tolerances(
            block.scale(C64::new(1.0 / weight, 0.0)).hermitian_part(),
            SubsystemLayout::two_qubits(),
            crate::qlinalg::DensityTolerances::LONG_RUN,
        )
    })?;
    Ok(QubitBlock {
        state,
        excited_population: (1.0 - weight).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{mdms_family, target_state};
    use crate::qlinalg::{basis_ket, bell};

    fn dm(k: &Ket) -> DensityMatrix {
        DensityMatrix::from_pure(k, SubsystemLayout::two_qubits()).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.811278124459133).abs() < 1e-12);
        assert!(binary_entropy(1.2).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn super_fidelity_values() {
        let s = target_state();
        assert!((super_fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-14);
        let z0 = dm(&bell::ket00());
        let z1 = dm(&bell::ket11());
        assert!(super_fidelity(&z0, &z1).unwrap().abs() < 1e-15);
        let mix = DensityMatrix::maximally_mixed(SubsystemLayout::two_qubits());
        let g = super_fidelity(&s, &mix).unwrap();
        assert!((g - (0.25 + 0.5f64.sqrt())).abs() < 1e-14);
        assert!((g - 0.957107).abs() < 1e-6);
        assert_eq!(g, super_fidelity(&mix, &s).unwrap());
        let q = DensityMatrix::from_pure(&basis_ket(2, 0), SubsystemLayout::new(&[("q", 2)]).unwrap()).unwrap();
        assert!(super_fidelity(&q, &s).is_err());
    }

    #[test]
    fn entropies() {
        assert!(von_neumann_entropy(&dm(&bell::phi_plus())).unwrap().abs() < 1e-12);
        let half = DensityMatrix::maximally_mixed(SubsystemLayout::new(&[("q", 2)]).unwrap());
        assert!((von_neumann_entropy(&half).unwrap() - 1.0).abs() < 1e-14);
        assert!((von_neumann_entropy(&target_state()).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((mutual_information(&dm(&bell::phi_plus())).unwrap() - 2.0).abs() < 1e-12);
        assert!(mutual_information(&dm(&bell::ket00())).unwrap().abs() < 1e-12);
        assert!((mutual_information(&target_state()).unwrap() - (2.0 - 3f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn concurrence_values() {
        assert!((concurrence(&dm(&bell::phi_plus())).unwrap() - 1.0).abs() < 1e-7);
        assert!((concurrence(&dm(&bell::psi_minus())).unwrap() - 1.0).abs() < 1e-7);
        assert!(concurrence(&dm(&bell::ket00())).unwrap() < 1e-7);
        assert!(concurrence(&target_state()).unwrap() < 1e-12);
    }

    #[test]
    fn target_state_discord() {
        let r = xstate_discord_cc(&target_state()).unwrap();
        assert!((r.qd - 1.0 / 3.0).abs() < 1e-9);
        assert!((r.cc - (5.0 / 3.0 - 3f64.log2())).abs() < 1e-9);
        assert!((r.tau - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.q1 - r.q2).abs() < 1e-12);
        for j in [(r.q1, r.cc1), (r.q2, r.cc2)] {
            assert!((j.0 + j.1 - r.mutual_information).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_state_discord() {
        let r = xstate_discord_cc(&dm(&bell::ket00())).unwrap();
        assert!(r.qd.abs() < 1e-12 && r.cc.abs() < 1e-12);
        let r = xstate_discord_cc(&dm(&bell::phi_plus())).unwrap();
        assert!((r.qd - 1.0).abs() < 1e-9);
        assert!((r.cc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_x_state_rejected() {
        let plus = Ket::from(vec![C64::new(0.5, 0.0); 4]);
        match xstate_discord_cc(&dm(&plus)) {
            Err(CorrelationError::NotXState { row, col, magnitude }) => {
                assert!(row != col && row + col != 3);
                assert!((magnitude - 0.25).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mdms_anchor() {
        let r = xstate_discord_cc(&mdms_family(1.0 / 3.0, 0.5).unwrap()).unwrap();
        assert!((r.qd - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn qubit_block_of_full_state() {
        let layout = SubsystemLayout::new(&[("atom1", 4), ("atom2", 4), ("cav", 2)]).unwrap();
        let ground = layout.flat_index(&[0, 1, 1]);
        let excited = layout.flat_index(&[2, 0, 0]);
        let rho = DensityMatrix::mixture(
            &[(0.75, basis_ket(32, ground)), (0.25, basis_ket(32, excited))],
            layout,
        )
        .unwrap();
        let b = qubit_block(&rho).unwrap();
        assert!((b.excited_population - 0.25).abs() < 1e-14);
        assert!((b.state.get(1, 1).re - 1.0).abs() < 1e-14);
    }
}
