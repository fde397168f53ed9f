//! Named, parameterized scenarios and a generic sweep engine.
//!
//! Every registry entry is an [`ExperimentSpec`] plus optional sweep axes.
//! Parameters are addressed by string paths (see [`ExperimentSpec::set`]),
//! which is what the command line and sweep axes use. Angles given through
//! paths are in units of `π`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlations::{self, CorrelationError, CorrelationReport};
use crate::dynamics::{
    self, evolve_periodic, evolve_propagator, trotter_evolve, DynamicsError, OdeOptions,
    PeriodicOptions, StateDiagnostics, SwitchOrder, SwitchingSchedule, Trajectory,
};
use crate::models::{self, LindbladModel, ModelError, PhaseMode, SchemeConfig};
use crate::qlinalg::{bell, ComplexOperator, DensityMatrix, Ket, LinalgError, SubsystemLayout, C64};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),
    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),
    #[error("bad value `{value}` for `{path}`: {reason}")]
    BadValue {
        path: String,
        value: String,
        reason: String,
    },
    #[error("unknown initial state `{0}`")]
    UnknownState(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl ExperimentError {
    /// Whether the error comes from the input rather than from the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Self::UnknownExperiment(_)
                | Self::UnknownParameter(_)
                | Self::BadValue { .. }
                | Self::UnknownState(_)
                | Self::UnknownObservable(_)
                | Self::Invalid(_)
                | Self::Model(_)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    AFull,
    AEffective,
    BFull,
    BEffective,
    MismatchA,
    MismatchB,
    Chi,
    Subspace,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::AFull,
        Scheme::AEffective,
        Scheme::BFull,
        Scheme::BEffective,
        Scheme::MismatchA,
        Scheme::MismatchB,
        Scheme::Chi,
        Scheme::Subspace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::AFull => "A_full",
            Scheme::AEffective => "A_effective",
            Scheme::BFull => "B_full",
            Scheme::BEffective => "B_effective",
            Scheme::MismatchA => "mismatch_A",
            Scheme::MismatchB => "mismatch_B",
            Scheme::Chi => "chi",
            Scheme::Subspace => "subspace",
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, Scheme::AFull | Scheme::BFull)
    }

    /// Whether the scheme is built on the coupled-cavity design.
    pub fn is_coupled_cavity(self) -> bool {
        matches!(self, Scheme::BFull | Scheme::BEffective | Scheme::MismatchB)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|x| x.name()).collect();
                format!("expected one of {}", names.join(", "))
            })
    }
}

/// Frame used for the full models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Scheme A: static frame (autonomous). Scheme B: delocalized modes in
    /// the interaction picture of the hopping term.
    Rotating,
    /// Explicit time-dependent generators in the cavity basis.
    Lab,
}

impl FromStr for Frame {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rotating" | "static" => Ok(Frame::Rotating),
            "lab" | "interaction" | "time_dependent" => Ok(Frame::Lab),
            _ => Err("expected `rotating` or `lab`".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Observable {
    Fidelity,
    Pop00,
    Pop11,
    PopPsiPlus,
    PopPsiMinus,
    PopPhiPlus,
    Qd,
    Cc,
    Concurrence,
    MutualInformation,
    ExcitedPopulation,
    TopFock,
    Purity,
}

impl Observable {
    pub const ALL: [Observable; 13] = [
        Observable::Fidelity,
        Observable::Pop00,
        Observable::Pop11,
        Observable::PopPsiPlus,
        Observable::PopPsiMinus,
        Observable::PopPhiPlus,
        Observable::Qd,
        Observable::Cc,
        Observable::Concurrence,
        Observable::MutualInformation,
        Observable::ExcitedPopulation,
        Observable::TopFock,
        Observable::Purity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Fidelity => "fidelity",
            Observable::Pop00 => "pop_00",
            Observable::Pop11 => "pop_11",
            Observable::PopPsiPlus => "pop_psi_plus",
            Observable::PopPsiMinus => "pop_psi_minus",
            Observable::PopPhiPlus => "pop_phi_plus",
            Observable::Qd => "QD",
            Observable::Cc => "CC",
            Observable::Concurrence => "concurrence",
            Observable::MutualInformation => "mutual_information",
            Observable::ExcitedPopulation => "excited_population",
            Observable::TopFock => "top_fock",
            Observable::Purity => "purity",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, ExperimentError> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ExperimentError::UnknownObservable(s.to_string()))
    }
}

/// How `t_final` is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    /// `g t`.
    InverseG,
    /// `γ_eff t` with `γ_eff = 4G²/κ` of the scheme.
    EffectiveRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    /// Approximate number of sample points, including `t = 0`.
    pub samples: usize,
    pub unit: TimeUnit,
}

/// Periods of the phase switching; the total time comes from the time grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSpec {
    pub periods: usize,
    pub order: SwitchOrder,
}

/// Overrides of the effective coupling and cavity decay used by effective models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectiveOverride {
    pub coupling: Option<f64>,
    pub kappa: Option<f64>,
}

/// One runnable scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub scheme: Scheme,
    pub config: SchemeConfig,
    pub schedule: Option<SwitchingSpec>,
    pub initial_state: String,
    pub observables: Vec<Observable>,
    pub time: TimeGrid,
    pub frame: Frame,
    pub effective: EffectiveOverride,
    /// Named bundles of `(path, value)` overrides, selected with `preset=<name>`.
    pub presets: BTreeMap<String, Vec<(String, String)>>,
}

fn bad(path: &str, value: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::BadValue {
        path: path.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(path: &str, value: &str) -> Result<f64, ExperimentError> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| bad(path, value, "expected a number"))?;
    if !v.is_finite() {
        return Err(bad(path, value, "expected a finite number"));
    }
    Ok(v)
}

fn parse_usize(path: &str, value: &str) -> Result<usize, ExperimentError> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(path, value, "expected a non-negative integer"))
}

/// An angle given in units of π.
fn parse_angle(path: &str, value: &str) -> Result<f64, ExperimentError> {
    let v = parse_f64(path, value)?;
    if v.abs() > 1.0 + 1e-12 {
        return Err(bad(path, value, "angles are in units of pi and must lie in [-1, 1]"));
    }
    Ok(v.clamp(-1.0, 1.0) * PI)
}

/// Every path accepted by [`ExperimentSpec::set`].
pub const PARAMETER_PATHS: &[&str] = &[
    "scheme",
    "frame",
    "initial_state",
    "observables",
    "preset",
    "time.t_final",
    "time.samples",
    "time.unit",
    "schedule.N",
    "schedule.order",
    "schedule",
    "effective.coupling",
    "effective.kappa",
    "config.g",
    "config.omega",
    "config.omega1",
    "config.omega2",
    "config.omega1p",
    "config.omega2p",
    "config.delta",
    "config.delta1",
    "config.delta2",
    "config.kappa",
    "config.gamma",
    "config.hopping",
    "config.n_max",
    "config.excitation_cap",
    "config.branching.e_to_0",
    "config.branching.r_to_0",
    "config.mismatch.dphi1",
    "config.mismatch.dphi2",
    "config.mismatch.dphi3",
    "config.mismatch.dphi4",
    "config.mismatch.antisym",
    "config.mismatch.sym",
    "config.mismatch.pair12",
    "config.mismatch.pair34",
];

impl ExperimentSpec {
    /// Sets one parameter by path. The prefixes `config.` and `config.mismatch.`
    /// may be omitted; `phi1`..`phi4` are short for `config.mismatch.dphi1`..`dphi4`.
    ///
    /// Linked paths: `config.omega` sets all four Rabi frequencies,
    /// `config.delta` sets both detunings and the hopping, `mismatch.antisym`
    /// sets `δφ₁ = −δφ₂ = x` (and the same on `δφ₃, δφ₄`), `mismatch.sym`
    /// sets `δφ₁ = δφ₂ = δφ₃ = δφ₄ = x`, `mismatch.pair12` sets `δφ₁ = δφ₂`,
    /// `mismatch.pair34` sets `δφ₃ = δφ₄`.
    pub fn set(&mut self, path: &str, value: &str) -> Result<(), ExperimentError> {
        let key = path.trim();
        let alias = key
            .strip_prefix("config.")
            .unwrap_or(key)
            .trim_start_matches("mismatch.")
            .trim_start_matches('d');
        let alias = match alias {
            "phi1" | "phi2" | "phi3" | "phi4" => format!("config.mismatch.d{alias}"),
            _ => key.to_string(),
        };
        let key = alias.as_str();
        let key = ["config.", "config.mismatch."]
            .iter()
            .map(|pre| format!("{pre}{key}"))
            .find(|p| !key.starts_with("config.") && PARAMETER_PATHS.contains(&p.as_str()))
            .unwrap_or_else(|| key.to_string());
        let cfg = &mut self.config;
        let f = |v: &str| parse_f64(&key, v);
        match key.as_str() {
            "scheme" => {
                self.scheme = value.parse().map_err(|e: String| bad(&key, value, e))?;
                if !matches!(self.scheme, Scheme::AFull | Scheme::AEffective) {
                    self.schedule = None;
                }
            }
            "frame" => self.frame = value.parse().map_err(|e: String| bad(&key, value, e))?,
            "initial_state" => {
                named_initial_state(value)?;
                self.initial_state = value.to_string();
            }
            "observables" => {
                self.observables = value
                    .split(|c| c == ',' || c == ';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()?;
            }
            "preset" => {
                let overrides = self
                    .presets
                    .get(value)
                    .cloned()
                    .ok_or_else(|| bad(&key, value, "no such preset"))?;
                for (p, v) in overrides {
                    self.set(&p, &v)?;
                }
            }
            "time.t_final" => {
                let t = f(value)?;
                if t <= 0.0 {
                    return Err(bad(&key, value, "must be positive"));
                }
                self.time.t_final = t;
            }
            "time.samples" => {
                let n = parse_usize(&key, value)?;
                if n < 2 {
                    return Err(bad(&key, value, "need at least 2 samples"));
                }
                self.time.samples = n;
            }
            "time.unit" => {
                self.time.unit = match value {
                    "g" | "inverse_g" => TimeUnit::InverseG,
                    "gamma_eff" | "effective" => TimeUnit::EffectiveRate,
                    _ => return Err(bad(&key, value, "expected `g` or `gamma_eff`")),
                }
            }
            "schedule.N" => {
                let n = parse_usize(&key, value)?;
                if n == 0 {
                    self.schedule = None;
                } else {
                    let order = self.schedule.map_or(SwitchOrder::XY, |s| s.order);
                    self.schedule = Some(SwitchingSpec { periods: n, order });
                }
            }
            "schedule.order" => {
                let order = match value.to_ascii_uppercase().as_str() {
                    "XY" => SwitchOrder::XY,
                    "YX" => SwitchOrder::YX,
                    _ => return Err(bad(&key, value, "expected XY or YX")),
                };
                let periods = self
                    .schedule
                    .map(|s| s.periods)
                    .ok_or_else(|| bad(&key, value, "set schedule.N first"))?;
                self.schedule = Some(SwitchingSpec { periods, order });
            }
            "schedule" => {
                if value.eq_ignore_ascii_case("none") || value == "0" {
                    self.schedule = None;
                } else {
                    return self.set("schedule.N", value);
                }
            }
            "effective.coupling" => self.effective.coupling = Some(f(value)?),
            "effective.kappa" => self.effective.kappa = Some(f(value)?),
            "config.g" => cfg.g = f(value)?,
            "config.omega" => {
                let v = f(value)?;
                cfg.omega1 = v;
                cfg.omega2 = v;
                cfg.omega1p = v;
                cfg.omega2p = v;
            }
            "config.omega1" => cfg.omega1 = f(value)?,
            "config.omega2" => cfg.omega2 = f(value)?,
            "config.omega1p" => cfg.omega1p = f(value)?,
            "config.omega2p" => cfg.omega2p = f(value)?,
            "config.delta" => {
                let v = f(value)?;
                cfg.delta1 = v;
                cfg.delta2 = v;
                cfg.hopping = v;
            }
            "config.delta1" => cfg.delta1 = f(value)?,
            "config.delta2" => cfg.delta2 = f(value)?,
            "config.kappa" => cfg.kappa = f(value)?,
            "config.gamma" => cfg.gamma = f(value)?,
            "config.hopping" => cfg.hopping = f(value)?,
            "config.n_max" => cfg.n_max = parse_usize(&key, value)?,
            "config.excitation_cap" => {
                cfg.excitation_cap = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse_usize(&key, value)?)
                }
            }
            "config.branching.e_to_0" => cfg.branching.e_to_0 = f(value)?,
            "config.branching.r_to_0" => cfg.branching.r_to_0 = f(value)?,
            "config.mismatch.dphi1" => cfg.mismatch.dphi[0] = parse_angle(&key, value)?,
            "config.mismatch.dphi2" => cfg.mismatch.dphi[1] = parse_angle(&key, value)?,
            "config.mismatch.dphi3" => cfg.mismatch.dphi[2] = parse_angle(&key, value)?,
            "config.mismatch.dphi4" => cfg.mismatch.dphi[3] = parse_angle(&key, value)?,
            "config.mismatch.antisym" => {
                let a = parse_angle(&key, value)?;
                cfg.mismatch.dphi = [a, -a, a, -a];
            }
            "config.mismatch.sym" => {
                let a = parse_angle(&key, value)?;
                cfg.mismatch.dphi = [a; 4];
            }
            "config.mismatch.pair12" => {
                let a = parse_angle(&key, value)?;
                cfg.mismatch.dphi[0] = a;
                cfg.mismatch.dphi[1] = a;
            }
            "config.mismatch.pair34" => {
                let a = parse_angle(&key, value)?;
                cfg.mismatch.dphi[2] = a;
                cfg.mismatch.dphi[3] = a;
            }
            _ => return Err(ExperimentError::UnknownParameter(path.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.config.validate()?;
        named_initial_state(&self.initial_state)?;
        if self.observables.is_empty() {
            return Err(ExperimentError::Invalid("no observables requested".into()));
        }
        if !(self.time.t_final > 0.0) || self.time.samples < 2 {
            return Err(ExperimentError::Invalid("time grid needs t_final > 0 and samples >= 2".into()));
        }
        if self.schedule.is_some() && !matches!(self.scheme, Scheme::AFull | Scheme::AEffective) {
            return Err(ExperimentError::Invalid(format!(
                "phase switching applies to scheme A only, not {}",
                self.scheme
            )));
        }
        Ok(())
    }

    /// Effective coupling `G` of the scheme.
    pub fn effective_coupling(&self) -> f64 {
        self.effective.coupling.unwrap_or(if self.scheme.is_coupled_cavity() {
            self.config.raman_coupling_b()
        } else {
            self.config.raman_coupling_a()
        })
    }

    pub fn effective_kappa(&self) -> f64 {
        self.effective.kappa.unwrap_or(self.config.kappa)
    }

    /// `γ_eff = 4G²/κ`.
    pub fn effective_rate(&self) -> Result<f64, ExperimentError> {
        Ok(models::collective_rate(self.effective_coupling(), self.effective_kappa())?)
    }

    /// Final time in units of `1/g`.
    pub fn t_final(&self) -> Result<f64, ExperimentError> {
        Ok(match self.time.unit {
            TimeUnit::InverseG => self.time.t_final,
            TimeUnit::EffectiveRate => self.time.t_final / self.effective_rate()?,
        })
    }
}

/// A two-qubit state by name.
pub fn named_initial_state(name: &str) -> Result<DensityMatrix, ExperimentError> {
    let l = SubsystemLayout::two_qubits();
    let pure = |k: Ket| DensityMatrix::from_pure(&k, SubsystemLayout::two_qubits());
    let st = match name {
        "ket00" | "00" => pure(bell::ket00()),
        "ket11" | "11" => pure(bell::ket11()),
        "phi_plus" => pure(bell::phi_plus()),
        "phi_minus" => pure(bell::phi_minus()),
        "psi_plus" => pure(bell::psi_plus()),
        "psi_minus" => pure(bell::psi_minus()),
        "mix" => DensityMatrix::mixture(
            &[(0.1, bell::phi_plus()), (0.1, bell::phi_minus()), (0.8, bell::psi_plus())],
            l,
        ),
        "mix1" => DensityMatrix::mixture(
            &[(0.1, bell::ket00()), (0.1, bell::ket11()), (0.8, bell::psi_plus())],
            l,
        ),
        "mix2" => DensityMatrix::mixture(
            &[(0.2, bell::ket00()), (0.5, bell::ket11()), (0.3, bell::psi_plus())],
            l,
        ),
        "target" => return Ok(models::target_state()),
        _ => return Err(ExperimentError::UnknownState(name.to_string())),
    };
    Ok(st?)
}

pub const INITIAL_STATES: &[&str] = &[
    "ket00", "ket11", "phi_plus", "phi_minus", "psi_plus", "psi_minus", "mix", "mix1", "mix2",
    "target",
];

/// Places a two-qubit state on the ground levels of the atoms of `layout`,
/// with every other factor in its lowest level (cavity vacuum).
pub fn embed_qubit_state(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
) -> Result<DensityMatrix, ExperimentError> {
    if layout.dims() == [2, 2] {
        return Ok(DensityMatrix::new_unchecked(rho.op().clone(), layout.clone()));
    }
    let pos1 = layout.position("atom1")?;
    let pos2 = layout.position("atom2")?;
    let nf = layout.factors().len();
    let index = |q: usize| {
        let mut mi = vec![0usize; nf];
        mi[pos1] = q / 2;
        mi[pos2] = q % 2;
        layout.flat_index(&mi)
    };
    let d = layout.total_dim();
    let mut op = ComplexOperator::zeros(d);
    for a in 0..4 {
        for b in 0..4 {
            op.entries_mut()[[index(a), index(b)]] = rho.get(a, b);
        }
    }
    Ok(DensityMatrix::new(op, layout.clone())?)
}

/// Observable values along a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: BTreeMap<Observable, Vec<f64>>,
}

impl Series {
    pub fn get(&self, o: Observable) -> Option<&[f64]> {
        self.values.get(&o).map(|v| v.as_slice())
    }

    pub fn final_value(&self, o: Observable) -> Option<f64> {
        self.get(o).and_then(|v| v.last().copied())
    }
}

/// Output of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub trajectory: Trajectory,
    /// Two-qubit states on which the measures were evaluated.
    pub qubit_states: Vec<DensityMatrix>,
    /// Closed-form X-state report per sample; `None` where the state is not an X-state.
    pub reports: Vec<Option<CorrelationReport>>,
    pub series: Series,
    pub diagnostics: Option<StateDiagnostics>,
    /// Top Fock level stayed below `1e-4` (always true for effective models).
    pub cutoff_adequate: bool,
}

pub const CUTOFF_LIMIT: f64 = 1e-4;
const FAILURE_TRACE: f64 = 1e-6;
const FAILURE_POSITIVITY: f64 = -1e-6;

fn effective_pair(
    spec: &ExperimentSpec,
) -> Result<(LindbladModel, LindbladModel), ExperimentError> {
    let (g, k) = (spec.effective_coupling(), spec.effective_kappa());
    Ok((
        models::build_scheme_a_effective(PhaseMode::Sx, g, k)?,
        models::build_scheme_a_effective(PhaseMode::Sy, g, k)?,
    ))
}

fn thin(traj: Trajectory, samples: usize) -> Trajectory {
    let n = traj.len();
    if n <= samples || samples < 2 {
        return traj;
    }
    let step = (n - 1).div_ceil(samples - 1);
    let keep: Vec<usize> = (0..n).filter(|i| i % step == 0 || *i == n - 1).collect();
    Trajectory {
        times: keep.iter().map(|&i| traj.times[i]).collect(),
        states: keep.iter().map(|&i| traj.states[i].clone()).collect(),
        diagnostics: keep.iter().map(|&i| traj.diagnostics[i]).collect(),
    }
}

fn uniform_propagation(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    samples: usize,
) -> Result<Trajectory, ExperimentError> {
    let steps = samples.max(2) - 1;
    Ok(evolve_propagator(model, rho0, t_final / steps as f64, steps)?)
}

fn switched(
    x: &LindbladModel,
    y: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    sw: &SwitchingSpec,
) -> Result<Trajectory, ExperimentError> {
    let schedule = SwitchingSchedule::new(t_final, sw.periods, sw.order)?;
    Ok(trotter_evolve(x, y, rho0, &schedule)?)
}

/// The full-model generator(s) of a spec: `(S_x model, S_y model)` for
/// scheme A, the single periodic model for scheme B.
pub fn full_models(spec: &ExperimentSpec) -> Result<Vec<LindbladModel>, ExperimentError> {
    let cfg = &spec.config;
    Ok(match (spec.scheme, spec.frame) {
        (Scheme::AFull, Frame::Rotating) => vec![
            models::build_scheme_a_full(cfg, PhaseMode::Sx)?,
            models::build_scheme_a_full(cfg, PhaseMode::Sy)?,
        ],
        (Scheme::AFull, Frame::Lab) => vec![
            models::build_scheme_a_full_time_dependent(cfg, PhaseMode::Sx)?,
            models::build_scheme_a_full_time_dependent(cfg, PhaseMode::Sy)?,
        ],
        (Scheme::BFull, Frame::Rotating) => vec![models::build_scheme_b_rotating(cfg)?],
        (Scheme::BFull, Frame::Lab) => vec![models::build_scheme_b_full(cfg)?],
        (s, _) => return Err(ExperimentError::Invalid(format!("{s} is not a full model"))),
    })
}

/// Common period of the scheme-B drives and hopping.
fn scheme_b_period(cfg: &SchemeConfig) -> Result<f64, ExperimentError> {
    let freqs = [cfg.delta1, cfg.delta2, cfg.hopping];
    let base = freqs.iter().cloned().fold(f64::INFINITY, |a, b| if b > 0.0 { a.min(b) } else { a });
    if !base.is_finite() {
        return Err(ExperimentError::Invalid("scheme B needs positive detunings".into()));
    }
    for w in freqs {
        let m = w / base;
        if (m - m.round()).abs() > 1e-9 {
            return Err(ExperimentError::Invalid(format!(
                "detunings and hopping must be commensurate; {w} is not a multiple of {base}"
            )));
        }
    }
    Ok(2.0 * PI / base)
}

fn simulate(spec: &ExperimentSpec, t_final: f64) -> Result<Trajectory, ExperimentError> {
    let rho_q = named_initial_state(&spec.initial_state)?;
    let samples = spec.time.samples;
    let (g, kappa) = (spec.effective_coupling(), spec.effective_kappa());
    let pm = spec.config.mismatch;
    match spec.scheme {
        Scheme::AEffective => {
            if let Some(sw) = &spec.schedule {
                let (x, y) = effective_pair(spec)?;
                Ok(thin(switched(&x, &y, &rho_q, t_final, sw)?, samples))
            } else {
                let m = models::build_combined_effective(g, kappa)?;
                uniform_propagation(&m, &rho_q, t_final, samples)
            }
        }
        Scheme::BEffective => {
            let m = models::build_scheme_b_effective(g, kappa)?;
            uniform_propagation(&m, &rho_q, t_final, samples)
        }
        Scheme::MismatchA => {
            let m = models::build_mismatch_a(g, kappa, &pm)?;
            uniform_propagation(&m, &rho_q, t_final, samples)
        }
        Scheme::MismatchB => {
            let m = models::build_mismatch_b(g, kappa, &pm)?;
            uniform_propagation(&m, &rho_q, t_final, samples)
        }
        Scheme::Chi => {
            let m = models::build_chi_model(models::collective_rate(g, kappa)?)?;
            uniform_propagation(&m, &rho_q, t_final, samples)
        }
        Scheme::Subspace => {
            let m = models::build_subspace_model(models::collective_rate(g, kappa)?, &pm)?;
            let v = models::symmetric_subspace_basis();
            let vdag = v.t().mapv(|z| z.conj());
            let compressed = ComplexOperator::from_array(vdag.dot(rho_q.op().entries()).dot(&v))?;
            let rho_s = DensityMatrix::new(compressed, m.layout().clone())?;
            uniform_propagation(&m, &rho_s, t_final, samples)
        }
        Scheme::AFull => {
            let ms = full_models(spec)?;
            let rho0 = embed_qubit_state(&rho_q, ms[0].layout())?;
            match &spec.schedule {
                Some(sw) => Ok(thin(switched(&ms[0], &ms[1], &rho0, t_final, sw)?, samples)),
                None if ms[1].is_autonomous() => uniform_propagation(&ms[1], &rho0, t_final, samples),
                None => {
                    let steps = samples.max(2) - 1;
                    let times: Vec<f64> =
                        (0..=steps).map(|k| t_final * k as f64 / steps as f64).collect();
                    Ok(dynamics::evolve(&ms[1], &rho0, &times, &OdeOptions::default())?)
                }
            }
        }
        Scheme::BFull => {
            let ms = full_models(spec)?;
            let rho0 = embed_qubit_state(&rho_q, ms[0].layout())?;
            let period = scheme_b_period(&spec.config)?;
            let periods = (t_final / period).floor() as u64;
            let stride = (periods / (samples.max(2) as u64 - 1)).max(1);
            Ok(evolve_periodic(&ms[0], &rho0, t_final, &PeriodicOptions::new(period, stride))?)
        }
    }
}

/// Two-qubit state measured for a trajectory sample.
fn measured_state(spec: &ExperimentSpec, state: &DensityMatrix) -> Result<(DensityMatrix, f64), ExperimentError> {
    if spec.scheme == Scheme::Subspace {
        let v = models::symmetric_subspace_basis();
        let full = v.dot(state.op().entries()).dot(&v.t().mapv(|z| z.conj()));
        let op = ComplexOperator::from_array(full)?;
        return Ok((DensityMatrix::new_unchecked(op, SubsystemLayout::two_qubits()), 0.0));
    }
    let b = correlations::qubit_block(state)?;
    Ok((b.state, b.excited_population))
}

/// Runs one experiment and evaluates its observables on every sample.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, ExperimentError> {
    spec.validate()?;
    let t_final = spec.t_final()?;
    info!("running {} ({}) to t = {t_final}", spec.id, spec.scheme);
    let trajectory = simulate(spec, t_final)?;
    let diagnostics = trajectory.worst_diagnostics();
    if let Some(d) = diagnostics {
        if d.trace_error > FAILURE_TRACE || d.min_eigenvalue < FAILURE_POSITIVITY {
            return Err(ExperimentError::NumericalFailure(format!(
                "trace error {:.3e}, minimum eigenvalue {:.3e}",
                d.trace_error, d.min_eigenvalue
            )));
        }
    }
    let cutoff_adequate = !spec.scheme.is_full() || trajectory.cutoff_adequate(CUTOFF_LIMIT);
    if !cutoff_adequate {
        warn!("{}: top Fock level population reached {:e}", spec.id, diagnostics.map_or(f64::NAN, |d| d.top_fock_population));
    }
    let target = models::target_state();
    let mut values: BTreeMap<Observable, Vec<f64>> =
        spec.observables.iter().map(|o| (*o, Vec::new())).collect();
    let mut qubit_states = Vec::with_capacity(trajectory.len());
    let mut reports = Vec::with_capacity(trajectory.len());
    for (state, diag) in trajectory.states.iter().zip(&trajectory.diagnostics) {
        let (q, excited) = measured_state(spec, state)?;
        let report = match correlations::correlation_report(&q, &target) {
            Ok(r) => Some(r),
            Err(CorrelationError::NotXState { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        for (o, col) in values.iter_mut() {
            let v = match o {
                Observable::Fidelity => correlations::super_fidelity(&q, &target)?,
                Observable::Pop00 => correlations::population(&q, &bell::ket00())?,
                Observable::Pop11 => correlations::population(&q, &bell::ket11())?,
                Observable::PopPsiPlus => correlations::population(&q, &bell::psi_plus())?,
                Observable::PopPsiMinus => correlations::population(&q, &bell::psi_minus())?,
                Observable::PopPhiPlus => correlations::population(&q, &bell::phi_plus())?,
                Observable::Qd => report.as_ref().map_or(f64::NAN, |r| r.qd),
                Observable::Cc => report.as_ref().map_or(f64::NAN, |r| r.cc),
                Observable::Concurrence => correlations::concurrence(&q)?,
                Observable::MutualInformation => correlations::mutual_information(&q)?,
                Observable::ExcitedPopulation => excited,
                Observable::TopFock => diag.top_fock_population,
                Observable::Purity => q.purity(),
            };
            col.push(v);
        }
        qubit_states.push(q);
        reports.push(report);
    }
    let series = Series {
        times: trajectory.times.clone(),
        values,
    };
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        trajectory,
        qubit_states,
        reports,
        series,
        diagnostics,
        cutoff_adequate,
    })
}

/// One sweep dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub path: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn new(path: &str, values: &[&str]) -> Self {
        Self {
            path: path.to_string(),
            values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `n` evenly spaced values from `lo` to `hi`.
    pub fn linspace(path: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = (0..n)
            .map(|k| {
                let x = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
                format_number(x)
            })
            .collect();
        Self {
            path: path.to_string(),
            values,
        }
    }
}

fn format_number(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// A grid of experiments over the Cartesian product of the axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ExperimentSpec,
    pub axes: Vec<Axis>,
    /// Evaluate only this observable at the final time; `None` keeps every
    /// requested observable at every sample.
    pub metric: Option<Observable>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.axes.is_empty() {
            return Err(ExperimentError::Invalid("sweep needs at least one axis".into()));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(ExperimentError::Invalid(format!("axis `{}` has no values", axis.path)));
            }
            let mut probe = self.base.clone();
            for v in &axis.values {
                probe.set(&axis.path, v)?;
            }
        }
        Ok(())
    }

    /// Grid points in row-major axis order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// One dataset record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub coords: Vec<String>,
    #[serde(with = "float_token")]
    pub time: f64,
    pub observable: String,
    #[serde(with = "float_token")]
    pub value: f64,
}

/// JSON has no NaN or infinity; those travel as the strings `"NaN"`, `"inf"`, `"-inf"`.
mod float_token {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("NaN")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

/// Rows `(experiment, axis…, time, observable, value)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub axes: Vec<String>,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn from_outcome(outcome: &ExperimentOutcome, coords: &[String], axes: &[String], metric: Option<Observable>) -> Self {
        let mut records = Vec::new();
        let s = &outcome.series;
        match metric {
            Some(o) => {
                if let (Some(t), Some(v)) = (s.times.last(), s.final_value(o)) {
                    records.push(Record {
                        experiment: outcome.spec.id.clone(),
                        coords: coords.to_vec(),
                        time: *t,
                        observable: o.name().to_string(),
                        value: v,
                    });
                }
            }
            None => {
                for (k, t) in s.times.iter().enumerate() {
                    for (o, vals) in &s.values {
                        records.push(Record {
                            experiment: outcome.spec.id.clone(),
                            coords: coords.to_vec(),
                            time: *t,
                            observable: o.name().to_string(),
                            value: vals[k],
                        });
                    }
                }
            }
        }
        Self {
            axes: axes.to_vec(),
            records,
        }
    }

    pub fn extend(&mut self, other: Dataset) {
        if self.axes.is_empty() {
            self.axes = other.axes;
        }
        self.records.extend(other.records);
    }

    /// Values of `observable` in record order.
    pub fn values(&self, observable: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.observable == observable)
            .map(|r| r.value)
            .collect()
    }
}

/// Worker count for sweeps: `LINDBLADLAB_THREADS` if set, else rayon's default.
pub fn sweep_threads() -> usize {
    std::env::var("LINDBLADLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs every grid point (concurrently) and merges the rows in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Dataset, ExperimentError> {
    spec.validate()?;
    let points = spec.points();
    let axes: Vec<String> = spec.axes.iter().map(|a| a.path.clone()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let results: Vec<Result<Dataset, ExperimentError>> = pool.install(|| {
        points
            .par_iter()
            .map(|coords| {
                let mut exp = spec.base.clone();
                for (axis, v) in spec.axes.iter().zip(coords) {
                    exp.set(&axis.path, v)?;
                }
                let outcome = run_experiment(&exp)?;
                Ok(Dataset::from_outcome(&outcome, coords, &axes, spec.metric))
            })
            .collect()
    });
    let mut out = Dataset {
        axes,
        records: Vec::new(),
    };
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// A registry entry: a base experiment and the sweep that reproduces its figure.
#[derive(Clone, Debug)]
pub struct RegistryEntry {
    pub id: &'static str,
    pub citation: &'static str,
    pub spec: ExperimentSpec,
    pub axes: Vec<Axis>,
}

impl RegistryEntry {
    pub fn sweep(&self, metric: Option<Observable>) -> Option<SweepSpec> {
        (!self.axes.is_empty()).then(|| SweepSpec {
            base: self.spec.clone(),
            axes: self.axes.clone(),
            metric,
        })
    }

    /// Final time in `1/g`, or in `1/γ_eff` for effective-rate horizons.
    pub fn horizon_label(&self) -> String {
        match self.spec.time.unit {
            TimeUnit::InverseG => format!("gt={}", self.spec.time.t_final),
            TimeUnit::EffectiveRate => format!("gamma_eff t={}", self.spec.time.t_final),
        }
    }
}

fn base_spec(id: &str, scheme: Scheme, config: SchemeConfig, t_final: f64) -> ExperimentSpec {
    ExperimentSpec {
        id: id.to_string(),
        scheme,
        config,
        schedule: None,
        initial_state: "ket00".into(),
        observables: vec![Observable::Fidelity],
        time: TimeGrid {
            t_final,
            samples: 201,
            unit: TimeUnit::InverseG,
        },
        frame: Frame::Rotating,
        effective: EffectiveOverride::default(),
        presets: BTreeMap::new(),
    }
}

/// Scheme-A full-model defaults: `n_max = 3` with total excitations capped at 3.
pub fn scheme_a_full_config(omega: f64, delta: f64, kappa: f64, gamma: f64) -> SchemeConfig {
    SchemeConfig {
        n_max: 3,
        excitation_cap: Some(3),
        ..SchemeConfig::scheme_a(omega, delta, kappa, gamma)
    }
}

/// Scheme-B full-model defaults: `n_max = 2` with total excitations capped at 2.
pub fn scheme_b_full_config(omega: f64, delta: f64, kappa: f64, gamma: f64) -> SchemeConfig {
    SchemeConfig {
        n_max: 2,
        excitation_cap: Some(2),
        ..SchemeConfig::scheme_b(omega, delta, kappa, gamma)
    }
}

fn switching(periods: usize) -> Option<SwitchingSpec> {
    Some(SwitchingSpec {
        periods,
        order: SwitchOrder::XY,
    })
}

/// Laboratory parameter sets `(label, κ/g, γ/g, scheme-A (Ω, Δ), scheme-B (Ω, Δ))`.
pub const LAB_PARAMETERS: [(&str, &str, f64, f64, (f64, f64), (f64, f64)); 3] = [
    ("tableV_a", "87Rb Fabry-Perot cavity, (g, kappa, gamma) = 2pi x (14.4, 0.66, 3) MHz", 0.66 / 14.4, 3.0 / 14.4, (0.3, 76.0), (0.1, 50.0)),
    ("tableV_b", "projected Fabry-Perot limits, (g, kappa, gamma) = 2pi x (770, 21.7, 2.6) MHz", 21.7 / 770.0, 2.6 / 770.0, (0.2, 72.0), (0.12, 50.0)),
    ("tableV_c", "microresonator evanescent field, (g, kappa, gamma) = 2pi x (70, 5, 1) MHz", 5.0 / 70.0, 1.0 / 70.0, (0.3, 43.0), (0.1, 50.0)),
];

/// Reported fidelities `(scheme A, scheme B)` for each laboratory parameter set.
pub const LAB_FIDELITIES: [(f64, f64); 3] = [(0.9941, 0.9956), (0.9910, 0.9967), (0.9918, 0.9934)];

/// Every reproducible figure and parameter table.
pub fn registry() -> Vec<RegistryEntry> {
    let mut out = Vec::new();
    let fig2_effective = EffectiveOverride {
        coupling: Some(0.01),
        kappa: Some(0.8),
    };

    let mut s = base_spec("fig2", Scheme::AEffective, SchemeConfig::default(), 8000.0);
    s.effective = fig2_effective;
    s.observables = vec![Observable::PopPsiPlus, Observable::Fidelity];
    s.schedule = switching(200);
    out.push(RegistryEntry {
        id: "fig2",
        citation: "Fig. 2: |Psi+> population, effective pair under switching (N = 1, 10, 200) vs averaged generator; G = 0.01g, kappa = 80G",
        spec: s,
        axes: vec![Axis::new("schedule.N", &["1", "10", "200", "0"])],
    });

    let a_base = |id: &str| {
        let mut s = base_spec(id, Scheme::AFull, scheme_a_full_config(0.5, 100.0, 0.1, 0.0), 8000.0);
        s.schedule = switching(200);
        s
    };
    out.push(RegistryEntry {
        id: "fig3a",
        citation: "Fig. 3(a): full scheme A, fidelity vs gt for kappa = (0.01, 0.1, 1, 10)g; Delta = 100g, Omega = 0.5g, N = 200",
        spec: a_base("fig3a"),
        axes: vec![Axis::new("config.kappa", &["0.01", "0.1", "1", "10"])],
    });
    out.push(RegistryEntry {
        id: "fig3b",
        citation: "Fig. 3(b): full scheme A, spontaneous emission gamma = (0, 0.01, 0.1, 1)g at kappa = 0.1g",
        spec: a_base("fig3b"),
        axes: vec![Axis::new("config.gamma", &["0", "0.01", "0.1", "1"])],
    });
    let mut s = a_base("fig3c");
    s.config.gamma = 0.1;
    out.push(RegistryEntry {
        id: "fig3c",
        citation: "Fig. 3(c): full scheme A, Rabi frequency scan at gamma = kappa = 0.1g",
        spec: s,
        axes: vec![Axis::new("config.omega", &["0.1", "0.3", "0.5", "0.7", "1.0"])],
    });
    out.push(RegistryEntry {
        id: "fig3d",
        citation: "Fig. 3(d): full scheme A from |Phi+>, |Phi->, |Psi+>, rho_mix (and the singlet exception)",
        spec: a_base("fig3d"),
        axes: vec![Axis::new("initial_state", &["phi_plus", "phi_minus", "psi_plus", "mix", "psi_minus"])],
    });
    let mut s = a_base("fig4");
    s.initial_state = "psi_plus".into();
    s.observables = vec![Observable::Concurrence, Observable::Cc, Observable::Qd, Observable::Fidelity];
    out.push(RegistryEntry {
        id: "fig4",
        citation: "Fig. 4: concurrence, classical correlation and discord along the full scheme-A evolution from |Psi+>",
        spec: s,
        axes: vec![],
    });
    let mut s = base_spec("fig5", Scheme::AEffective, SchemeConfig::default(), 8000.0);
    s.effective = fig2_effective;
    s.schedule = switching(4);
    out.push(RegistryEntry {
        id: "fig5",
        citation: "Fig. 5: fidelity for switching numbers N = 4, 10, 50, 200 from |00>",
        spec: s,
        axes: vec![Axis::new("schedule.N", &["4", "10", "50", "200"])],
    });

    let b_base = |id: &str| {
        let mut s = base_spec(id, Scheme::BFull, scheme_b_full_config(0.2, 100.0, 0.1, 0.0), 10000.0);
        s.time.samples = 161;
        s
    };
    let mut s = b_base("fig7");
    s.observables = vec![
        Observable::Pop00,
        Observable::Pop11,
        Observable::PopPsiPlus,
        Observable::PopPsiMinus,
        Observable::Fidelity,
    ];
    out.push(RegistryEntry {
        id: "fig7",
        citation: "Fig. 7: scheme B populations and fidelity, full vs effective; kappa = 0.1g, Omega = 0.2g, Delta = 100g, gamma = 0",
        spec: s,
        axes: vec![Axis::new("scheme", &["B_full", "B_effective"])],
    });
    out.push(RegistryEntry {
        id: "fig8a",
        citation: "Fig. 8(a): full scheme B, cavity decay scan; Delta = 100g, Omega = 0.2g",
        spec: b_base("fig8a"),
        axes: vec![Axis::new("config.kappa", &["0.01", "0.1", "1", "10"])],
    });
    out.push(RegistryEntry {
        id: "fig8b",
        citation: "Fig. 8(b): full scheme B, Rabi frequency scan at kappa = 0.1g",
        spec: b_base("fig8b"),
        axes: vec![Axis::new("config.omega", &["0.1", "0.2", "0.3", "0.5"])],
    });
    out.push(RegistryEntry {
        id: "fig8c",
        citation: "Fig. 8(c): full scheme B from |Psi+>, rho_mix1, rho_mix2",
        spec: b_base("fig8c"),
        axes: vec![Axis::new("initial_state", &["psi_plus", "mix1", "mix2", "ket00"])],
    });
    out.push(RegistryEntry {
        id: "fig8d",
        citation: "Fig. 8(d): full scheme B, gamma = (0, 0.01, 0.1)g",
        spec: b_base("fig8d"),
        axes: vec![Axis::new("config.gamma", &["0", "0.01", "0.1"])],
    });

    let mut s = base_spec("fig9a", Scheme::MismatchA, SchemeConfig::default(), 3.0);
    s.time.unit = TimeUnit::EffectiveRate;
    s.effective = fig2_effective;
    out.push(RegistryEntry {
        id: "fig9a",
        citation: "Fig. 9(a): scheme-A effective model with drive phase errors (dphi1, dphi2) in [-pi/2, pi/2], gamma_eff t = 3",
        spec: s,
        axes: vec![
            Axis::linspace("config.mismatch.dphi1", -0.5, 0.5, 11),
            Axis::linspace("config.mismatch.dphi2", -0.5, 0.5, 11),
        ],
    });
    let mut s = base_spec("fig9b", Scheme::AFull, scheme_a_full_config(0.2, 100.0, 0.1, 0.0), 12000.0);
    s.schedule = switching(40);
    out.push(RegistryEntry {
        id: "fig9b",
        citation: "Fig. 9(b): full scheme A with dphi1 = -dphi2; Omega = 0.2g, Delta = 100g, N = 40, gt = 12000",
        spec: s,
        axes: vec![Axis::linspace("config.mismatch.antisym", -0.5, 0.5, 11)],
    });
    let mut s = base_spec("fig9c", Scheme::MismatchB, SchemeConfig::scheme_b(0.2, 100.0, 0.1, 0.0), 8.0);
    s.time.unit = TimeUnit::EffectiveRate;
    out.push(RegistryEntry {
        id: "fig9c",
        citation: "Fig. 9(c): scheme-B effective model with dphi1 = dphi2 and dphi3 = dphi4, gamma_eff t = 8",
        spec: s,
        axes: vec![
            Axis::linspace("config.mismatch.pair12", -0.5, 0.5, 21),
            Axis::linspace("config.mismatch.pair34", -0.5, 0.5, 21),
        ],
    });
    let mut s = base_spec("fig9d", Scheme::BFull, scheme_b_full_config(0.5, 100.0, 0.1, 0.0), 8000.0);
    s.time.samples = 81;
    out.push(RegistryEntry {
        id: "fig9d",
        citation: "Fig. 9(d): full scheme B with dphi1 = dphi2 (dphi3 = dphi4 = 0); Omega = 0.5g, Delta = 100g, gt = 8000",
        spec: s,
        axes: vec![Axis::new("config.mismatch.pair12", &["0", "0.05", "0.1", "0.2"])],
    });

    for (id, citation, kappa, gamma, (oa, da), (ob, db)) in LAB_PARAMETERS {
        let mut s = base_spec(id, Scheme::AFull, scheme_a_full_config(oa, da, kappa, gamma), 8000.0);
        s.schedule = switching(200);
        s.presets.insert(
            "A".into(),
            vec![
                ("scheme".into(), "A_full".into()),
                ("schedule.N".into(), "200".into()),
                ("config.omega".into(), oa.to_string()),
                ("config.delta".into(), da.to_string()),
                ("config.n_max".into(), "3".into()),
                ("config.excitation_cap".into(), "3".into()),
                ("time.t_final".into(), "8000".into()),
            ],
        );
        s.presets.insert(
            "B".into(),
            vec![
                ("scheme".into(), "B_full".into()),
                ("schedule".into(), "none".into()),
                ("config.omega".into(), ob.to_string()),
                ("config.delta".into(), db.to_string()),
                ("config.n_max".into(), "2".into()),
                ("config.excitation_cap".into(), "2".into()),
                ("time.t_final".into(), "10000".into()),
            ],
        );
        out.push(RegistryEntry {
            id,
            citation,
            spec: s,
            axes: vec![Axis::new("preset", &["A", "B"])],
        });
    }
    out
}

pub fn lookup(id: &str) -> Result<RegistryEntry, ExperimentError> {
    registry()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| ExperimentError::UnknownExperiment(id.to_string()))
}

/// Entry of a complex matrix flattened for output: `(row, col, re, im)`.
pub fn flatten_operator(op: &ComplexOperator) -> Vec<(usize, usize, C64)> {
    let d = op.dim();
    (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, op.get(i, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_unique_and_complete() {
        let reg = registry();
        let mut ids: Vec<&str> = reg.iter().map(|e| e.id).collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
        for id in [
            "fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5", "fig7", "fig8a", "fig8b",
            "fig8c", "fig8d", "fig9a", "fig9b", "fig9c", "fig9d", "tableV_a", "tableV_b", "tableV_c",
        ] {
            assert!(ids.contains(&id), "{id} missing");
        }
    }

    #[test]
    fn caption_grids_are_covered() {
        let axis_values = |id: &str| lookup(id).unwrap().axes[0].values.clone();
        assert_eq!(axis_values("fig3a"), ["0.01", "0.1", "1", "10"]);
        for g in ["0", "0.01", "0.1"] {
            assert!(axis_values("fig3b").contains(&g.to_string()));
            assert!(axis_values("fig8d").contains(&g.to_string()));
        }
        for s in ["phi_plus", "phi_minus", "psi_plus", "mix"] {
            assert!(axis_values("fig3d").contains(&s.to_string()));
        }
        for s in ["psi_plus", "mix1", "mix2"] {
            assert!(axis_values("fig8c").contains(&s.to_string()));
        }
        for n in ["1", "10", "200"] {
            assert!(axis_values("fig2").contains(&n.to_string()));
        }
        assert!(axis_values("fig5").contains(&"4".to_string()));
        let b = lookup("fig9b").unwrap();
        assert_eq!(b.spec.schedule.unwrap().periods, 40);
        assert_eq!(b.spec.time.t_final, 12000.0);
        assert_eq!(lookup("fig9a").unwrap().spec.time.t_final, 3.0);
        assert_eq!(lookup("fig9c").unwrap().spec.time.t_final, 8.0);
        for e in registry() {
            if let Some(sw) = e.sweep(None) {
                sw.validate().unwrap();
            }
        }
    }

    #[test]
    fn named_states() {
        let m2 = named_initial_state("mix2").unwrap();
        assert!((m2.get(0, 0).re - 0.2).abs() < 1e-15);
        assert!((m2.get(3, 3).re - 0.5).abs() < 1e-15);
        assert!((m2.get(1, 2).re - 0.15).abs() < 1e-15);
        let phi = named_initial_state("phi_plus").unwrap();
        assert!((phi.get(0, 3).re - 0.5).abs() < 1e-15);
        assert!(matches!(named_initial_state("nope"), Err(ExperimentError::UnknownState(_))));
        for s in INITIAL_STATES {
            named_initial_state(s).unwrap();
        }
    }

    #[test]
    fn embedding_places_state_on_vacuum() {
        let layout = SubsystemLayout::new(&[("atom1", 4), ("atom2", 4), ("cav", 3)]).unwrap();
        let rho = embed_qubit_state(&named_initial_state("psi_plus").unwrap(), &layout).unwrap();
        let i01 = layout.flat_index(&[0, 1, 0]);
        let i10 = layout.flat_index(&[1, 0, 0]);
        assert!((rho.get(i01, i10).re - 0.5).abs() < 1e-15);
        let back = correlations::qubit_block(&rho).unwrap();
        assert!(back.state.op().max_abs_diff(named_initial_state("psi_plus").unwrap().op()) < 1e-15);
    }

    #[test]
    fn parameter_paths() {
        let mut s = lookup("fig2").unwrap().spec;
        s.set("schedule.N", "10").unwrap();
        assert_eq!(s.schedule.unwrap().periods, 10);
        s.set("kappa", "0.3").unwrap();
        assert_eq!(s.config.kappa, 0.3);
        s.set("config.mismatch.antisym", "0.5").unwrap();
        assert!((s.config.mismatch.dphi[1] + PI / 2.0).abs() < 1e-15);
        s.set("config.omega", "0.25").unwrap();
        assert_eq!(s.config.omega2p, 0.25);
        match s.set("config.kappa", "abc") {
            Err(ExperimentError::BadValue { path, .. }) => assert_eq!(path, "config.kappa"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(s.set("config.nope", "1"), Err(ExperimentError::UnknownParameter(_))));
        assert!(s.set("config.mismatch.dphi1", "1.5").is_err());
        s.set("phi2", "0.25").unwrap();
        assert!((s.config.mismatch.dphi[1] - PI / 4.0).abs() < 1e-15);
        s.set("schedule", "none").unwrap();
        assert!(s.schedule.is_none());
        for p in PARAMETER_PATHS {
            assert!(!p.is_empty());
        }
    }

    #[test]
    fn fig2_effective_curves() {
        let mut s = lookup("fig2").unwrap().spec;
        s.schedule = None;
        s.time.samples = 41;
        let out = run_experiment(&s).unwrap();
        let p = out.series.final_value(Observable::PopPsiPlus).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 0.005);
        assert!(out.cutoff_adequate);
    }

    #[test]
    fn singlet_is_frozen_under_effective_models() {
        let mut s = lookup("fig2").unwrap().spec;
        s.schedule = None;
        s.initial_state = "psi_minus".into();
        s.time.samples = 11;
        let out = run_experiment(&s).unwrap();
        let g0 = correlations::super_fidelity(
            &named_initial_state("psi_minus").unwrap(),
            &models::target_state(),
        )
        .unwrap();
        for v in out.series.get(Observable::Fidelity).unwrap() {
            assert!((v - g0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_rows_in_grid_order() {
        let mut base = lookup("fig9c").unwrap().spec;
        base.time.samples = 3;
        let sweep = SweepSpec {
            base,
            axes: vec![
                Axis::new("config.mismatch.pair12", &["0", "0.1"]),
                Axis::new("config.mismatch.pair34", &["0", "0.1"]),
            ],
            metric: Some(Observable::Fidelity),
        };
        let ds = run_sweep(&sweep).unwrap();
        assert_eq!(ds.records.len(), 4);
        let coords: Vec<Vec<String>> = ds.records.iter().map(|r| r.coords.clone()).collect();
        assert_eq!(coords, sweep.points());
        let f = ds.values("fidelity");
        // only the relative phase between the atoms matters
        assert!((f[0] - f[3]).abs() < 1e-12);
        assert!(f[1] < f[0]);
        let again = run_sweep(&sweep).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn subspace_scheme_runs() {
        let mut s = base_spec("sub", Scheme::Subspace, SchemeConfig::default(), 20.0);
        s.time.unit = TimeUnit::EffectiveRate;
        s.time.samples = 5;
        s.effective = EffectiveOverride {
            coupling: Some(0.01),
            kappa: Some(0.8),
        };
        let out = run_experiment(&s).unwrap();
        assert!(out.series.final_value(Observable::Fidelity).unwrap() > 0.999);
    }

    #[test]
    fn switching_rejected_for_scheme_b() {
        let mut s = lookup("fig7").unwrap().spec;
        s.schedule = switching(4);
        assert!(matches!(run_experiment(&s), Err(ExperimentError::Invalid(_))));
    }
}
