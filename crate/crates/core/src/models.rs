//! Hamiltonians and dissipators for both cavity-QED schemes.
//!
//! Atom-local basis order is `|0⟩, |1⟩, |e⟩, |r⟩`; composite spaces are
//! `atom1 ⊗ atom2 ⊗ cavity(s)`. Frequencies and rates are in units of the
//! atom–cavity coupling `g`.
//!
//! Full models come in two frames:
//! * a static frame in which the interaction-picture phases of scheme A turn
//!   into constant detunings on `|e⟩` and `|r⟩` (autonomous generator), and
//! * the interaction picture itself, with explicit `e^{iωt}` terms.
//!
//! Scheme B drives one transition with two lasers at `±Δ`, so no frame
//! removes its time dependence; its generator is `2π/Δ`-periodic.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qlinalg::{
    self, bell, embed, pauli, tensor, ComplexOperator, DensityMatrix, Ket, LinalgError,
    SubsystemLayout, C64, I, ONE, ZERO,
};

/// Atom-local level indices.
pub mod level {
    pub const G0: usize = 0;
    pub const G1: usize = 1;
    pub const E: usize = 2;
    pub const R: usize = 3;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("`{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("Fock cutoff n_max must be at least 1, got {0}")]
    CutoffTooSmall(usize),
    #[error("Hamiltonian is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("channel rate must be finite and non-negative, got {0}")]
    NegativeRate(f64),
    #[error("subspace basis is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which collective decay operator the scheme-A drive phases engineer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseMode {
    /// `Ω₁e^{iφ₁} = iΩ₁`, `Ω₂e^{iφ₂} = −iΩ₂`: collective `S_y`.
    Sy,
    /// `φ₁ = φ₂ = 0`: collective `S_x`.
    Sx,
}

impl PhaseMode {
    /// Nominal `(φ₁, φ₂)`.
    pub fn nominal_phases(self) -> (f64, f64) {
        match self {
            PhaseMode::Sy => (FRAC_PI_2, -FRAC_PI_2),
            PhaseMode::Sx => (0.0, 0.0),
        }
    }
}

/// Phase deviations `δφ₁…δφ₄` of the drives that engineer `S_y`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMismatch {
    pub dphi: [f64; 4],
}

impl PhaseMismatch {
    pub const NONE: Self = Self { dphi: [0.0; 4] };

    pub fn new(d1: f64, d2: f64, d3: f64, d4: f64) -> Result<Self, ModelError> {
        let pm = Self {
            dphi: [d1, d2, d3, d4],
        };
        pm.validate()?;
        Ok(pm)
    }

    /// Two-phase form used by scheme A (`δφ₃ = δφ₁`, `δφ₄ = δφ₂`).
    pub fn pair(d1: f64, d2: f64) -> Result<Self, ModelError> {
        Self::new(d1, d2, d1, d2)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (k, d) in self.dphi.iter().enumerate() {
            if !d.is_finite() || d.abs() > PI + 1e-12 {
                return Err(ModelError::InvalidConfig(format!(
                    "dphi{} = {d} outside [-pi, pi]",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// `δ = δφ₁ − δφ₂`.
    pub fn delta(&self) -> f64 {
        self.dphi[0] - self.dphi[1]
    }

    pub fn is_zero(&self) -> bool {
        self.dphi.iter().all(|d| *d == 0.0)
    }
}

/// Spontaneous-emission branching of `|e⟩` and `|r⟩` into `|0⟩` (the rest goes to `|1⟩`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branching {
    pub e_to_0: f64,
    pub r_to_0: f64,
}

impl Default for Branching {
    fn default() -> Self {
        Self {
            e_to_0: 0.5,
            r_to_0: 0.5,
        }
    }
}

/// Physical parameters, all in units of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Scheme B `Ω₁′`.
    pub omega1p: f64,
    /// Scheme B `Ω₂′`.
    pub omega2p: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Photon hopping `A` between the two cavities of scheme B.
    pub hopping: f64,
    pub n_max: usize,
    /// Keep only product states with at most this many excitations
    /// (excited atoms plus photons). `None` keeps the full product space.
    pub excitation_cap: Option<usize>,
    pub branching: Branching,
    /// Deviations from the nominal `S_y` drive phases.
    pub mismatch: PhaseMismatch,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            g: 1.0,
            omega1: 0.5,
            omega2: 0.5,
            omega1p: 0.5,
            omega2p: 0.5,
            delta1: 100.0,
            delta2: 100.0,
            kappa: 0.1,
            gamma: 0.0,
            hopping: 100.0,
            n_max: 2,
            excitation_cap: None,
            branching: Branching::default(),
            mismatch: PhaseMismatch::NONE,
        }
    }
}

impl SchemeConfig {
    /// Scheme-B resonant choice: all four Rabi frequencies `Ω`, `Δ₁ = Δ₂ = A = Δ`.
    pub fn scheme_b(omega: f64, delta: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            omega1: omega,
            omega2: omega,
            omega1p: omega,
            omega2p: omega,
            delta1: delta,
            delta2: delta,
            hopping: delta,
            kappa,
            gamma,
            ..Self::default()
        }
    }

    /// Scheme-A choice with equal Rabi frequencies and detunings.
    pub fn scheme_a(omega: f64, delta: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            omega1: omega,
            omega2: omega,
            delta1: delta,
            delta2: delta,
            kappa,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let nonneg = [
            ("g", self.g),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("omega1p", self.omega1p),
            ("omega2p", self.omega2p),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("hopping", self.hopping),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !self.delta1.is_finite() || !self.delta2.is_finite() {
            return Err(ModelError::InvalidConfig("detunings must be finite".into()));
        }
        if self.n_max < 1 {
            return Err(ModelError::CutoffTooSmall(self.n_max));
        }
        for (name, b) in [("e", self.branching.e_to_0), ("r", self.branching.r_to_0)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(ModelError::InvalidConfig(format!(
                    "branching fraction of |{name}> must lie in [0, 1], got {b}"
                )));
            }
        }
        self.mismatch.validate()
    }

    /// Scheme-A Raman coupling `G = gΩ₁/Δ₁`.
    pub fn raman_coupling_a(&self) -> f64 {
        self.g * self.omega1 / self.delta1
    }

    /// Scheme-B Raman coupling `G = gΩ/(√2 Δ)`.
    pub fn raman_coupling_b(&self) -> f64 {
        self.g * self.omega1 / (2f64.sqrt() * self.delta1)
    }

    /// Drive phases `(φ₁, φ₂)` used by scheme A in `mode`.
    pub fn drive_phases(&self, mode: PhaseMode) -> (f64, f64) {
        let (p1, p2) = mode.nominal_phases();
        match mode {
            PhaseMode::Sy => (p1 + self.mismatch.dphi[0], p2 + self.mismatch.dphi[1]),
            PhaseMode::Sx => (p1, p2),
        }
    }
}

/// The Hilbert space a model acts on: a product layout, optionally
/// restricted to a subset of its computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    layout: SubsystemLayout,
    kept: Option<Vec<usize>>,
}

impl StateSpace {
    pub fn full(layout: SubsystemLayout) -> Self {
        Self { layout, kept: None }
    }

    /// Basis states whose `weight(multi_index)` is at most `cap`.
    pub fn capped(
        layout: SubsystemLayout,
        cap: usize,
        weight: impl Fn(&[usize]) -> usize,
    ) -> Self {
        let kept: Vec<usize> = (0..layout.total_dim())
            .filter(|&i| weight(&layout.multi_index(i)) <= cap)
            .collect();
        if kept.len() == layout.total_dim() {
            Self::full(layout)
        } else {
            Self {
                layout,
                kept: Some(kept),
            }
        }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn kept(&self) -> Option<&[usize]> {
        self.kept.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.kept
            .as_ref()
            .map_or(self.layout.total_dim(), |k| k.len())
    }

    pub fn is_restricted(&self) -> bool {
        self.kept.is_some()
    }

    /// Operator on the product space → operator on this space.
    pub fn restrict(&self, full: &ComplexOperator) -> ComplexOperator {
        match &self.kept {
            None => full.clone(),
            Some(k) => full.submatrix(k),
        }
    }

    pub fn restrict_ket(&self, full: &Ket) -> Ket {
        match &self.kept {
            None => full.clone(),
            Some(k) => k.iter().map(|&i| full[i]).collect(),
        }
    }

    /// Embeds an operator on this space into the product space (zero padded).
    pub fn lift(&self, op: &ComplexOperator) -> ComplexOperator {
        match &self.kept {
            None => op.clone(),
            Some(k) => {
                let mut out = ComplexOperator::zeros(self.layout.total_dim());
                let e = out.entries_mut();
                for (a, &i) in k.iter().enumerate() {
                    for (b, &j) in k.iter().enumerate() {
                        e[[i, j]] = op.get(a, b);
                    }
                }
                out
            }
        }
    }

    /// Weight of a product-space operator on basis states outside this space.
    pub fn discarded_weight(&self, full: &ComplexOperator) -> f64 {
        match &self.kept {
            None => 0.0,
            Some(k) => {
                let mut mask = vec![false; self.layout.total_dim()];
                for &i in k {
                    mask[i] = true;
                }
                (0..mask.len())
                    .filter(|&i| !mask[i])
                    .map(|i| full.get(i, i).re.abs())
                    .sum()
            }
        }
    }
}

/// `amplitude · e^{iωt} · op + H.c.`
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatingTerm {
    pub op: ComplexOperator,
    pub amplitude: C64,
    pub frequency: f64,
}

/// Dissipator `rate · (c ρ c† − ½{c†c, ρ})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub label: String,
    pub rate: f64,
    pub op: ComplexOperator,
}

impl Channel {
    pub fn new(label: impl Into<String>, rate: f64, op: ComplexOperator) -> Self {
        Self {
            label: label.into(),
            rate,
            op,
        }
    }
}

/// A Lindblad master equation `ρ̇ = −i[H(t), ρ] + Σ_j κ_j 𝒟[c_j]ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    name: String,
    space: StateSpace,
    h_static: ComplexOperator,
    h_oscillating: Vec<OscillatingTerm>,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(
        name: impl Into<String>,
        space: StateSpace,
        h_static: ComplexOperator,
        h_oscillating: Vec<OscillatingTerm>,
        channels: Vec<Channel>,
    ) -> Result<Self, ModelError> {
        let dim = space.dim();
        let check_dim = |op: &ComplexOperator| -> Result<(), ModelError> {
            if op.dim() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                }
                .into());
            }
            Ok(())
        };
        check_dim(&h_static)?;
        let defect = h_static.hermiticity_defect();
        if defect > qlinalg::OPERATOR_HERMITIAN_TOL * h_static.max_abs().max(1.0) {
            return Err(ModelError::NotHermitian(defect));
        }
        for t in &h_oscillating {
            check_dim(&t.op)?;
            if !t.frequency.is_finite() || !t.amplitude.re.is_finite() || !t.amplitude.im.is_finite() {
                return Err(ModelError::InvalidConfig("non-finite oscillating term".into()));
            }
        }
        for c in &channels {
            check_dim(&c.op)?;
            if !c.rate.is_finite() || c.rate < 0.0 {
                return Err(ModelError::NegativeRate(c.rate));
            }
        }
        Ok(Self {
            name: name.into(),
            space,
            h_static,
            h_oscillating,
            channels,
        })
    }

    /// Model on the full product space of `layout`.
    pub fn on_layout(
        name: impl Into<String>,
        layout: SubsystemLayout,
        h_static: ComplexOperator,
        h_oscillating: Vec<OscillatingTerm>,
        channels: Vec<Channel>,
    ) -> Result<Self, ModelError> {
        Self::new(name, StateSpace::full(layout), h_static, h_oscillating, channels)
    }

    /// Purely dissipative two-qubit model.
    pub fn dissipative_two_qubit(
        name: impl Into<String>,
        channels: Vec<Channel>,
    ) -> Result<Self, ModelError> {
        Self::on_layout(
            name,
            SubsystemLayout::two_qubits(),
            ComplexOperator::zeros(4),
            Vec::new(),
            channels,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Product layout of the underlying Hilbert space.
    pub fn layout(&self) -> &SubsystemLayout {
        self.space.layout()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn h_static(&self) -> &ComplexOperator {
        &self.h_static
    }

    pub fn h_oscillating(&self) -> &[OscillatingTerm] {
        &self.h_oscillating
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn is_autonomous(&self) -> bool {
        self.h_oscillating
            .iter()
            .all(|t| t.amplitude == ZERO || t.op.max_abs() == 0.0)
    }

    /// `H(t)`.
    pub fn hamiltonian_at(&self, t: f64) -> ComplexOperator {
        let mut h = self.h_static.clone();
        for term in &self.h_oscillating {
            let c = term.amplitude * C64::from_polar(1.0, term.frequency * t);
            let x = term.op.scale(c);
            h += &x;
            h += &x.adjoint();
        }
        h
    }

    /// Smallest common period of the oscillating terms, if commensurate
    /// with `base` (all frequencies integer multiples of `base`).
    pub fn period_for_base(&self, base: f64) -> Option<f64> {
        if self.is_autonomous() || base <= 0.0 {
            return None;
        }
        let ok = self.h_oscillating.iter().all(|t| {
            let m = t.frequency / base;
            (m - m.round()).abs() < 1e-9
        });
        ok.then(|| 2.0 * PI / base)
    }

    /// Same model with every rate multiplied by `factor`.
    pub fn with_rates_scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let mut m = self.clone();
        for c in &mut m.channels {
            c.rate *= factor;
        }
        if !(factor >= 0.0) {
            return Err(ModelError::NegativeRate(factor));
        }
        m.name = format!("{}×{factor}", self.name);
        Ok(m)
    }

    /// Compresses the model onto the span of the orthonormal columns of
    /// `basis`. Only meaningful when that span is invariant under every
    /// operator of the model.
    pub fn restrict_to_subspace(
        &self,
        basis: &Array2<C64>,
        label: &str,
    ) -> Result<Self, ModelError> {
        let (rows, k) = basis.dim();
        if rows != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: rows,
            }
            .into());
        }
        let vdag = basis.t().mapv(|z| z.conj());
        let gram = vdag.dot(basis);
        let defect = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| (gram[[i, j]] - if i == j { ONE } else { ZERO }).norm())
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(ModelError::NotOrthonormal(defect));
        }
        let compress = |op: &ComplexOperator| {
            ComplexOperator::from_array(vdag.dot(op.entries()).dot(basis)).expect("square")
        };
        let layout = SubsystemLayout::new(&[(label, k)])?;
        Self::on_layout(
            format!("{}|{label}", self.name),
            layout,
            compress(&self.h_static).hermitian_part(),
            self.h_oscillating
                .iter()
                .map(|t| OscillatingTerm {
                    op: compress(&t.op),
                    amplitude: t.amplitude,
                    frequency: t.frequency,
                })
                .collect(),
            self.channels
                .iter()
                .map(|c| Channel::new(c.label.clone(), c.rate, compress(&c.op)))
                .collect(),
        )
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Bosonic annihilation operator truncated at `n_max` photons.
pub fn annihilation(n_max: usize) -> ComplexOperator {
    let mut a = ComplexOperator::zeros(n_max + 1);
    for n in 1..=n_max {
        a.entries_mut()[[n - 1, n]] = c((n as f64).sqrt());
    }
    a
}

/// `|to⟩⟨from|` on a four-level atom.
pub fn atom_transition(to: usize, from: usize) -> ComplexOperator {
    ComplexOperator::transition(4, to, from)
}

/// `S_x = σ_x¹ + σ_x²`.
pub fn collective_sx() -> ComplexOperator {
    collective(&pauli::x())
}

/// `S_y = σ_y¹ + σ_y²`.
pub fn collective_sy() -> ComplexOperator {
    collective(&pauli::y())
}

/// `A ⊗ I + I ⊗ A`.
pub fn collective(single: &ComplexOperator) -> ComplexOperator {
    let id = pauli::identity();
    &tensor(&[single, &id]).expect("nonempty") + &tensor(&[&id, single]).expect("nonempty")
}

/// `[[0, −i], [1, 0]]`, the single-qubit factor of `χ`.
pub fn chi_single() -> ComplexOperator {
    ComplexOperator::from_rows(&[vec![ZERO, -I], vec![ONE, ZERO]]).expect("2x2")
}

/// `χ = [[0,−i],[1,0]] ⊗ I + I ⊗ [[0,−i],[1,0]]`.
pub fn chi_operator() -> ComplexOperator {
    collective(&chi_single())
}

/// Deformed `S_y` of scheme A: `Σ_k −ie^{iδφ₁}|0⟩_k⟨1| + ie^{iδφ₂}|1⟩_k⟨0|`.
pub fn mismatch_a_operator(pm: &PhaseMismatch) -> ComplexOperator {
    let single = single_qubit_sy_like(pm.dphi[0], pm.dphi[1]);
    collective(&single)
}

/// `−ie^{iα}|0⟩⟨1| + ie^{iβ}|1⟩⟨0|`.
fn single_qubit_sy_like(alpha: f64, beta: f64) -> ComplexOperator {
    let mut m = ComplexOperator::zeros(2);
    m.entries_mut()[[0, 1]] = -I * C64::from_polar(1.0, alpha);
    m.entries_mut()[[1, 0]] = I * C64::from_polar(1.0, beta);
    m
}

/// Deformed `S_y` of scheme B:
/// `ie^{iδφ₁}|1⟩₁⟨0| − ie^{iδφ₂}|0⟩₁⟨1| + ie^{iδφ₃}|1⟩₂⟨0| − ie^{iδφ₄}|0⟩₂⟨1|`.
pub fn mismatch_b_operator(pm: &PhaseMismatch) -> ComplexOperator {
    let [d1, d2, d3, d4] = pm.dphi;
    let id = pauli::identity();
    let a1 = single_qubit_sy_like(d2, d1);
    let a2 = single_qubit_sy_like(d4, d3);
    &tensor(&[&a1, &id]).expect("nonempty") + &tensor(&[&id, &a2]).expect("nonempty")
}

/// Orthonormal basis `|00⟩, (|01⟩+|10⟩)/√2, |11⟩` of the triplet subspace, as columns.
pub fn symmetric_subspace_basis() -> Array2<C64> {
    let mut v = Array2::zeros((4, 3));
    v[[0, 0]] = ONE;
    v[[1, 1]] = c(FRAC_1_SQRT_2);
    v[[2, 1]] = c(FRAC_1_SQRT_2);
    v[[3, 2]] = ONE;
    v
}

/// Collective rate `4G²/κ` obtained by eliminating a lossy mode.
pub fn collective_rate(coupling: f64, kappa: f64) -> Result<f64, ModelError> {
    check_positive("coupling", coupling)?;
    check_positive("kappa", kappa)?;
    Ok(4.0 * coupling * coupling / kappa)
}

fn two_level_spaces(cfg: &SchemeConfig, cavities: &[&'static str]) -> Result<StateSpace, ModelError> {
    let nc = cfg.n_max + 1;
    let mut factors: Vec<(&str, usize)> = vec![("atom1", 4), ("atom2", 4)];
    for cav in cavities {
        factors.push((cav, nc));
    }
    let layout = SubsystemLayout::new(&factors)?;
    Ok(match cfg.excitation_cap {
        None => StateSpace::full(layout),
        Some(cap) => StateSpace::capped(layout, cap, excitation_number),
    })
}

/// Excited atoms plus photons for a multi-index `[atom1, atom2, n…]`.
pub fn excitation_number(multi: &[usize]) -> usize {
    let atoms = multi[..2].iter().filter(|&&l| l >= level::E).count();
    atoms + multi[2..].iter().sum::<usize>()
}

fn atomic_decay_channels(
    cfg: &SchemeConfig,
    layout: &SubsystemLayout,
    space: &StateSpace,
) -> Result<Vec<Channel>, ModelError> {
    let mut out = Vec::new();
    if cfg.gamma == 0.0 {
        return Ok(out);
    }
    for atom in ["atom1", "atom2"] {
        let routes = [
            (level::E, level::G0, cfg.branching.e_to_0, "e->0"),
            (level::E, level::G1, 1.0 - cfg.branching.e_to_0, "e->1"),
            (level::R, level::G0, cfg.branching.r_to_0, "r->0"),
            (level::R, level::G1, 1.0 - cfg.branching.r_to_0, "r->1"),
        ];
        for (from, to, frac, tag) in routes {
            if frac == 0.0 {
                continue;
            }
            let op = embed(&atom_transition(to, from), layout, atom)?;
            out.push(Channel::new(
                format!("{atom}:{tag}"),
                cfg.gamma * frac,
                space.restrict(&op),
            ));
        }
    }
    Ok(out)
}

/// Ground-state-coupling blocks of scheme A, one per atom:
/// `(g a|e⟩⟨0|, Ω₁e^{iφ₁}|e⟩⟨1|, g a|r⟩⟨1|, Ω₂e^{iφ₂}|r⟩⟨0|)` as
/// `(operator, amplitude, detuning)` triples.
fn scheme_a_couplings(
    cfg: &SchemeConfig,
    mode: PhaseMode,
    layout: &SubsystemLayout,
) -> Result<Vec<(ComplexOperator, C64, f64)>, ModelError> {
    let a = embed(&annihilation(cfg.n_max), layout, "cav")?;
    let (phi1, phi2) = cfg.drive_phases(mode);
    let mut out = Vec::new();
    for atom in ["atom1", "atom2"] {
        let t = |to, from| embed(&atom_transition(to, from), layout, atom);
        out.push((t(level::E, level::G0)?.matmul(&a), c(cfg.g), cfg.delta1));
        out.push((t(level::E, level::G1)?, C64::from_polar(cfg.omega1, phi1), cfg.delta1));
        out.push((t(level::R, level::G1)?.matmul(&a), c(cfg.g), cfg.delta2));
        out.push((t(level::R, level::G0)?, C64::from_polar(cfg.omega2, phi2), cfg.delta2));
    }
    Ok(out)
}

/// Scheme A (two atoms, one lossy cavity) in the static frame:
/// `H = Σ_k Δ₁|e⟩_k⟨e| + Δ₂|r⟩_k⟨r| + [couplings + H.c.]`.
pub fn build_scheme_a_full(cfg: &SchemeConfig, mode: PhaseMode) -> Result<LindbladModel, ModelError> {
    cfg.validate()?;
    let space = two_level_spaces(cfg, &["cav"])?;
    let layout = space.layout().clone();
    let mut h = ComplexOperator::zeros(layout.total_dim());
    for atom in ["atom1", "atom2"] {
        h += &embed(&atom_transition(level::E, level::E), &layout, atom)?.scale(c(cfg.delta1));
        h += &embed(&atom_transition(level::R, level::R), &layout, atom)?.scale(c(cfg.delta2));
    }
    for (op, amp, _) in scheme_a_couplings(cfg, mode, &layout)? {
        let x = op.scale(amp);
        h += &x;
        h += &x.adjoint();
    }
    let channels = scheme_a_channels(cfg, &layout, &space)?;
    let name = format!("scheme_a_full[{mode:?}]");
    LindbladModel::new(name, space.clone(), space.restrict(&h), Vec::new(), channels)
}

/// Scheme A in the interaction picture: each coupling carries `e^{iΔt}`.
pub fn build_scheme_a_full_time_dependent(
    cfg: &SchemeConfig,
    mode: PhaseMode,
) -> Result<LindbladModel, ModelError> {
    cfg.validate()?;
    let space = two_level_spaces(cfg, &["cav"])?;
    let layout = space.layout().clone();
    let terms = scheme_a_couplings(cfg, mode, &layout)?
        .into_iter()
        .map(|(op, amplitude, frequency)| OscillatingTerm {
            op: space.restrict(&op),
            amplitude,
            frequency,
        })
        .collect();
    let channels = scheme_a_channels(cfg, &layout, &space)?;
    LindbladModel::new(
        format!("scheme_a_interaction[{mode:?}]"),
        space.clone(),
        ComplexOperator::zeros(space.dim()),
        terms,
        channels,
    )
}

fn scheme_a_channels(
    cfg: &SchemeConfig,
    layout: &SubsystemLayout,
    space: &StateSpace,
) -> Result<Vec<Channel>, ModelError> {
    let mut channels = Vec::new();
    if cfg.kappa > 0.0 {
        let a = embed(&annihilation(cfg.n_max), layout, "cav")?;
        channels.push(Channel::new("cav", cfg.kappa, space.restrict(&a)));
    }
    channels.extend(atomic_decay_channels(cfg, layout, space)?);
    Ok(channels)
}

/// Effective scheme-A model on the ground states: one collective channel
/// `(4G²/κ, S_y)` or `(4G²/κ, S_x)`.
pub fn build_scheme_a_effective(
    mode: PhaseMode,
    coupling: f64,
    kappa: f64,
) -> Result<LindbladModel, ModelError> {
    let rate = collective_rate(coupling, kappa)?;
    let (label, op) = match mode {
        PhaseMode::Sy => ("S_y", collective_sy()),
        PhaseMode::Sx => ("S_x", collective_sx()),
    };
    LindbladModel::dissipative_two_qubit(
        format!("scheme_a_effective[{mode:?}]"),
        vec![Channel::new(label, rate, op)],
    )
}

/// Fast-switching limit of scheme A: `½ℒ[S_x] + ½ℒ[S_y]` at rate `4G²/κ`.
pub fn build_combined_effective(coupling: f64, kappa: f64) -> Result<LindbladModel, ModelError> {
    let rate = 0.5 * collective_rate(coupling, kappa)?;
    LindbladModel::dissipative_two_qubit(
        "combined_effective",
        vec![
            Channel::new("S_x", rate, collective_sx()),
            Channel::new("S_y", rate, collective_sy()),
        ],
    )
}

/// `(m₁, m₂) = ((a₁ − a₂)/√2, (a₁ + a₂)/√2)`.
pub fn delocalized_modes(
    a1: &ComplexOperator,
    a2: &ComplexOperator,
) -> Result<(ComplexOperator, ComplexOperator), ModelError> {
    if a1.dim() != a2.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        }
        .into());
    }
    let s = c(FRAC_1_SQRT_2);
    Ok(((a1 - a2).scale(s), (a1 + a2).scale(s)))
}

/// Scheme B (one atom per cavity, coupled cavities) in the frame where the
/// cavity coupling and hopping are static and the four drives per atom
/// oscillate at `±Δ`:
///
/// `H = A(a₁†a₂ + a₂†a₁) + Σ_k g(|e⟩_k⟨0| + |r⟩_k⟨1|)a_k
///    + iΩ₁(−1)^{k−1}e^{iΔ₁t}|e⟩_k⟨1| + iΩ₂(−1)^k e^{iΔ₂t}|r⟩_k⟨0|
///    + Ω₁′e^{−iΔ₁t}|e⟩_k⟨1| + Ω₂′e^{−iΔ₂t}|r⟩_k⟨0| + H.c.`
///
/// Phase deviations multiply the `±iΩ` drives: on atom `k` the `|r⟩⟨0|`
/// drive carries `e^{iδφ_{2k−1}}` and the `|e⟩⟨1|` drive `e^{iδφ_{2k}}`,
/// which reproduces the deformed jump operator of [`mismatch_b_operator`]
/// after elimination.
pub fn build_scheme_b_full(cfg: &SchemeConfig) -> Result<LindbladModel, ModelError> {
    cfg.validate()?;
    let space = two_level_spaces(cfg, &["cav1", "cav2"])?;
    let layout = space.layout().clone();
    let a = annihilation(cfg.n_max);
    let a1 = embed(&a, &layout, "cav1")?;
    let a2 = embed(&a, &layout, "cav2")?;
    let hop = a1.adjoint().matmul(&a2).scale(c(cfg.hopping));
    let mut h = &hop + &hop.adjoint();
    let mut terms = Vec::new();
    for (k, (atom, cav)) in [("atom1", &a1), ("atom2", &a2)].into_iter().enumerate() {
        let t = |to, from| embed(&atom_transition(to, from), &layout, atom);
        let cav_coupling = (&t(level::E, level::G0)? + &t(level::R, level::G1)?)
            .matmul(cav)
            .scale(c(cfg.g));
        h += &cav_coupling;
        h += &cav_coupling.adjoint();
        terms.extend(scheme_b_drives(cfg, &layout, &space, k)?);
    }
    let mut channels = Vec::new();
    if cfg.kappa > 0.0 {
        channels.push(Channel::new("cav1", cfg.kappa, space.restrict(&a1)));
        channels.push(Channel::new("cav2", cfg.kappa, space.restrict(&a2)));
    }
    channels.extend(atomic_decay_channels(cfg, &layout, &space)?);
    LindbladModel::new("scheme_b_full", space.clone(), space.restrict(&h), terms, channels)
}

fn scheme_b_drives(
    cfg: &SchemeConfig,
    layout: &SubsystemLayout,
    space: &StateSpace,
    k: usize,
) -> Result<Vec<OscillatingTerm>, ModelError> {
    let atom = ["atom1", "atom2"][k];
    let t = |to, from| -> Result<ComplexOperator, ModelError> {
        Ok(space.restrict(&embed(&atom_transition(to, from), layout, atom)?))
    };
    let sign = if k == 0 { 1.0 } else { -1.0 };
    let dphi_r = cfg.mismatch.dphi[2 * k];
    let dphi_e = cfg.mismatch.dphi[2 * k + 1];
    let e1 = t(level::E, level::G1)?;
    let r0 = t(level::R, level::G0)?;
    Ok(vec![
        OscillatingTerm {
            op: e1.clone(),
            amplitude: I * sign * C64::from_polar(cfg.omega1, dphi_e),
            frequency: cfg.delta1,
        },
        OscillatingTerm {
            op: r0.clone(),
            amplitude: -I * sign * C64::from_polar(cfg.omega2, dphi_r),
            frequency: cfg.delta2,
        },
        OscillatingTerm {
            op: e1,
            amplitude: c(cfg.omega1p),
            frequency: -cfg.delta1,
        },
        OscillatingTerm {
            op: r0,
            amplitude: c(cfg.omega2p),
            frequency: -cfg.delta2,
        },
    ])
}

/// Scheme B written in the delocalized modes `m₁, m₂` and in the
/// interaction picture of the hopping term `A(m₂†m₂ − m₁†m₁)`.
///
/// With an excitation cap this is unitarily equivalent to
/// [`build_scheme_b_full`]: the total photon number is the same in both mode
/// bases, and the frame change acts on the cavities only, so atomic reduced
/// states agree at all times. Without a cap the per-mode Fock cutoffs of the
/// two bases differ. All frequencies are `±A` and `±Δ`, so the generator
/// stays slow compared with the static hopping splitting.
pub fn build_scheme_b_rotating(cfg: &SchemeConfig) -> Result<LindbladModel, ModelError> {
    cfg.validate()?;
    let space = two_level_spaces(cfg, &["m1", "m2"])?;
    let layout = space.layout().clone();
    let a = annihilation(cfg.n_max);
    let m1 = embed(&a, &layout, "m1")?;
    let m2 = embed(&a, &layout, "m2")?;
    let amp = cfg.g * FRAC_1_SQRT_2;
    let mut terms = Vec::new();
    for k in 0..2 {
        let atom = ["atom1", "atom2"][k];
        let t = |to, from| embed(&atom_transition(to, from), &layout, atom);
        let lower = &t(level::E, level::G0)? + &t(level::R, level::G1)?;
        // a₁ = (m₁ + m₂)/√2, a₂ = (m₂ − m₁)/√2; m₁ ∝ e^{iAt}, m₂ ∝ e^{−iAt}
        let s1 = if k == 0 { 1.0 } else { -1.0 };
        terms.push(OscillatingTerm {
            op: space.restrict(&lower.matmul(&m1)),
            amplitude: c(amp * s1),
            frequency: cfg.hopping,
        });
        terms.push(OscillatingTerm {
            op: space.restrict(&lower.matmul(&m2)),
            amplitude: c(amp),
            frequency: -cfg.hopping,
        });
        terms.extend(scheme_b_drives(cfg, &layout, &space, k)?);
    }
    let mut channels = Vec::new();
    if cfg.kappa > 0.0 {
        channels.push(Channel::new("m1", cfg.kappa, space.restrict(&m1)));
        channels.push(Channel::new("m2", cfg.kappa, space.restrict(&m2)));
    }
    channels.extend(atomic_decay_channels(cfg, &layout, &space)?);
    LindbladModel::new(
        "scheme_b_rotating",
        space.clone(),
        ComplexOperator::zeros(space.dim()),
        terms,
        channels,
    )
}

/// Whether a layout factor is a bosonic mode of one of the full models.
pub fn is_mode_factor(label: &str) -> bool {
    label.starts_with("cav") || label == "m1" || label == "m2"
}

/// Effective scheme-B model: `ℒ[S_x] + ℒ[S_y]`, both at `4G²/κ`.
pub fn build_scheme_b_effective(coupling: f64, kappa: f64) -> Result<LindbladModel, ModelError> {
    let rate = collective_rate(coupling, kappa)?;
    LindbladModel::dissipative_two_qubit(
        "scheme_b_effective",
        vec![
            Channel::new("S_x", rate, collective_sx()),
            Channel::new("S_y", rate, collective_sy()),
        ],
    )
}

/// Scheme A with mismatched `S_y` phases: `½ℒ[O(δφ₁, δφ₂)] + ½ℒ[S_x]`.
pub fn build_mismatch_a(
    coupling: f64,
    kappa: f64,
    pm: &PhaseMismatch,
) -> Result<LindbladModel, ModelError> {
    pm.validate()?;
    let rate = 0.5 * collective_rate(coupling, kappa)?;
    LindbladModel::dissipative_two_qubit(
        "mismatch_a",
        vec![
            Channel::new("S_x", rate, collective_sx()),
            Channel::new("S_y~", rate, mismatch_a_operator(pm)),
        ],
    )
}

/// Scheme B with four independent `S_y` phases: `ℒ[O(δφ₁…δφ₄)] + ℒ[S_x]`.
pub fn build_mismatch_b(
    coupling: f64,
    kappa: f64,
    pm: &PhaseMismatch,
) -> Result<LindbladModel, ModelError> {
    pm.validate()?;
    let rate = collective_rate(coupling, kappa)?;
    LindbladModel::dissipative_two_qubit(
        "mismatch_b",
        vec![
            Channel::new("S_x", rate, collective_sx()),
            Channel::new("S_y~", rate, mismatch_b_operator(pm)),
        ],
    )
}

/// `ℒ_γ[S_x] + ℒ_γ[χ]`.
pub fn build_chi_model(rate: f64) -> Result<LindbladModel, ModelError> {
    check_positive("rate", rate)?;
    LindbladModel::dissipative_two_qubit(
        "chi",
        vec![
            Channel::new("S_x", rate, collective_sx()),
            Channel::new("chi", rate, chi_operator()),
        ],
    )
}

/// Scheme-A mismatch model written on the three-dimensional symmetric
/// subspace `|1⟩=|00⟩, |2⟩=(|01⟩+|10⟩)/√2, |3⟩=|11⟩`, each channel at `½·rate`:
///
/// * `(1/√2)(−ie^{iδφ₁}|1⟩⟨2| + ie^{iδφ₂}|2⟩⟨1| − ie^{iδφ₁}|2⟩⟨3| + ie^{iδφ₂}|3⟩⟨2|)`
/// * `(1/√2)(|1⟩⟨2| + |2⟩⟨3|) + H.c.`
///
/// The ladder factor `1/√2` (instead of the `√2` of a direct projection)
/// rescales both rates by the same constant and leaves steady states unchanged.
pub fn build_subspace_model(rate: f64, pm: &PhaseMismatch) -> Result<LindbladModel, ModelError> {
    check_positive("rate", rate)?;
    pm.validate()?;
    let s = FRAC_1_SQRT_2;
    let p1 = C64::from_polar(s, pm.dphi[0]);
    let p2 = C64::from_polar(s, pm.dphi[1]);
    let mut deformed = ComplexOperator::zeros(3);
    {
        let e = deformed.entries_mut();
        e[[0, 1]] = -I * p1;
        e[[1, 0]] = I * p2;
        e[[1, 2]] = -I * p1;
        e[[2, 1]] = I * p2;
    }
    let mut ladder = ComplexOperator::zeros(3);
    {
        let e = ladder.entries_mut();
        e[[0, 1]] = c(s);
        e[[1, 2]] = c(s);
        e[[1, 0]] = c(s);
        e[[2, 1]] = c(s);
    }
    let layout = SubsystemLayout::new(&[("sym", 3)])?;
    LindbladModel::on_layout(
        "subspace",
        layout,
        ComplexOperator::zeros(3),
        Vec::new(),
        vec![
            Channel::new("S_y~", 0.5 * rate, deformed),
            Channel::new("S_x", 0.5 * rate, ladder),
        ],
    )
}

/// `ε|Φ⁺⟩⟨Φ⁺| + (1−ε)[x|01⟩⟨01| + (1−x)|10⟩⟨10|]`.
pub fn mdms_family(eps: f64, x: f64) -> Result<DensityMatrix, ModelError> {
    for (name, v) in [("eps", eps), ("x", x)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::InvalidConfig(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let parts = [
        (eps, bell::phi_plus()),
        ((1.0 - eps) * x, qlinalg::basis_ket(4, 1)),
        ((1.0 - eps) * (1.0 - x), qlinalg::basis_ket(4, 2)),
    ];
    Ok(DensityMatrix::mixture(&parts, SubsystemLayout::two_qubits())?)
}

/// `σ = (|00⟩⟨00| + |11⟩⟨11| + |Ψ⁺⟩⟨Ψ⁺|)/3`.
pub fn target_state() -> DensityMatrix {
    let third = 1.0 / 3.0;
    DensityMatrix::mixture(
        &[
            (third, bell::ket00()),
            (third, bell::ket11()),
            (third, bell::psi_plus()),
        ],
        SubsystemLayout::two_qubits(),
    )
    .expect("target state is a valid density matrix")
}
