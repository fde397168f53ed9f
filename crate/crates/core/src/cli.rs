//! Command-line front end.
//!
//! Config files are either JSON objects or flat `key = value` text:
//!
//! ```text
//! # comment
//! experiment = fig3a
//! config.kappa = 0.1
//! phi1 = 0.5          # angles in units of pi
//! ```
//!
//! Keys are the parameter paths of [`ExperimentSpec::set`] plus
//! `experiment`. Flags (`--experiment`, `--set`) override file values.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlations;
use crate::dynamics::{self, DynamicsError};
use crate::experiments::{
    self, Axis, Dataset, ExperimentError, ExperimentSpec, Observable, Record, Scheme, SweepSpec,
};
use crate::models;
use crate::qlinalg::{ComplexOperator, DensityMatrix, SubsystemLayout, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "lindbladlab", version, about = "Dissipative two-qubit state preparation: simulate, sweep, analyze")]
pub struct Cli {
    /// Log level (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one experiment and write its time series.
    Simulate(RunArgs),
    /// Run an experiment over a parameter grid.
    Sweep(SweepArgs),
    /// Nullspace analysis of an effective generator.
    Steady(SteadyArgs),
    /// Correlation measures of a two-qubit state.
    Measures(MeasuresArgs),
    /// List registered experiments.
    List(ListArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Registry id to start from.
    #[arg(long, short = 'e')]
    pub experiment: Option<String>,
    /// Config file (flat `key = value` text or JSON).
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Parameter override `path=value`, repeatable.
    #[arg(long = "set", short = 's', value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write a gnuplot script plotting the CSV output.
    #[arg(long)]
    pub gnuplot_script: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Axis `path=v1,v2,...`, repeatable; replaces the registry axes.
    #[arg(long = "axis", short = 'a', value_name = "PATH=V1,V2,...")]
    pub axes: Vec<String>,
    /// Observable reported at the final time.
    #[arg(long, default_value = "fidelity")]
    pub metric: String,
    /// Keep full time series of every observable instead of the final metric.
    #[arg(long)]
    pub series: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Relative singular-value threshold for the nullspace.
    #[arg(long, default_value_t = dynamics::STEADY_RANK_TOL)]
    pub rank_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MeasuresArgs {
    /// Named two-qubit state (see `list`).
    #[arg(long, conflicts_with_all = ["matrix", "mdms"])]
    pub state: Option<String>,
    /// JSON file with a 4×4 matrix: `[[..]]` of reals or `{"re": [[..]], "im": [[..]]}`.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Member `eps,x` of the maximally discordant family.
    #[arg(long, value_name = "EPS,X")]
    pub mdms: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ListArgs {
    /// Also list parameter paths, named states and observables.
    #[arg(long)]
    pub all: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandKind {
    Simulate,
    Sweep,
    Steady,
    Measures,
    List,
}

/// Fully resolved invocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub experiment: Option<String>,
    /// Ordered `(path, value)` overrides; later entries win.
    pub overrides: Vec<(String, String)>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// The experiment these settings describe.
    pub fn spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.experiment {
            Some(id) => experiments::lookup(id)?.spec,
            None => default_spec(),
        };
        for (path, value) in &self.overrides {
            spec.set(path, value)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Starting point for fully inline invocations.
pub fn default_spec() -> ExperimentSpec {
    let mut spec = experiments::lookup("fig2").expect("fig2 registered").spec;
    spec.id = "custom".into();
    spec
}

fn split_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected PATH=VALUE, got `{s}`")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(CliError::Config(format!("missing key in `{s}`")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Parses a config file into ordered `(key, value)` pairs.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| CliError::Config("JSON config must be an object".into()))?;
        let mut out = Vec::new();
        flatten_json("", obj, &mut out)?;
        return Ok(out);
    }
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let pair = split_assignment(line)
            .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        out.push(pair);
    }
    Ok(out)
}

fn flatten_json(
    prefix: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
    out: &mut Vec<(String, String)>,
) -> Result<(), CliError> {
    for (k, v) in obj {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            serde_json::Value::Object(inner) => flatten_json(&key, inner, out)?,
            serde_json::Value::String(s) => out.push((key, s.clone())),
            serde_json::Value::Number(x) => out.push((key, x.to_string())),
            serde_json::Value::Bool(b) => out.push((key, b.to_string())),
            serde_json::Value::Null => out.push((key, "none".into())),
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|x| match x {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.push((key, parts.join(",")));
            }
        }
    }
    Ok(())
}

/// Merges file values and flags: file first, then `--experiment`, then `--set` in order.
pub fn parse_config(
    command: CommandKind,
    overrides: &Overrides,
    output: &OutputArgs,
) -> Result<RunConfig, CliError> {
    let mut experiment = None;
    let mut pairs = Vec::new();
    if let Some(path) = &overrides.config {
        for (k, v) in read_config_file(path)? {
            if k == "experiment" {
                experiment = Some(v);
            } else {
                pairs.push((k, v));
            }
        }
    }
    if let Some(id) = &overrides.experiment {
        experiment = Some(id.clone());
    }
    for s in &overrides.set {
        pairs.push(split_assignment(s)?);
    }
    let cfg = RunConfig {
        command,
        experiment,
        overrides: pairs,
        output: output.out.clone(),
        format: output.format,
    };
    let spec = cfg.spec()?;
    info!(
        "resolved configuration: {}",
        serde_json::to_string(&spec).unwrap_or_else(|e| e.to_string())
    );
    Ok(cfg)
}

/// `%.12g`-style rendering.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// CSV with header `experiment,axis...,time,observable,value`.
pub fn write_csv<W: Write>(ds: &Dataset, w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["experiment".to_string()];
    header.extend(ds.axes.iter().cloned());
    header.extend(["time", "observable", "value"].map(String::from));
    wr.write_record(&header)?;
    for r in &ds.records {
        let mut row = vec![r.experiment.clone()];
        row.extend(r.coords.iter().cloned());
        row.push(format_value(r.time));
        row.push(r.observable.clone());
        row.push(format_value(r.value));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads back a CSV written by [`write_csv`].
pub fn read_csv<R: io::Read>(r: R) -> Result<Dataset, CliError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd
        .headers()
        .map_err(|e| CliError::Config(e.to_string()))?
        .clone();
    let n = header.len();
    if n < 4 || &header[0] != "experiment" {
        return Err(CliError::Config("not a dataset CSV".into()));
    }
    let axes: Vec<String> = header.iter().skip(1).take(n - 4).map(String::from).collect();
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| CliError::Config(e.to_string()))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number `{s}`")))
        };
        records.push(Record {
            experiment: row[0].to_string(),
            coords: (1..n - 3).map(|i| row[i].to_string()).collect(),
            time: num(&row[n - 3])?,
            observable: row[n - 2].to_string(),
            value: num(&row[n - 1])?,
        });
    }
    Ok(Dataset { axes, records })
}

pub fn dataset_to_json(ds: &Dataset) -> String {
    serde_json::to_string_pretty(ds).expect("dataset serializes")
}

pub fn dataset_from_json(text: &str) -> Result<Dataset, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid dataset JSON: {e}")))
}

/// Writes a dataset to `path`, or to standard output.
pub fn emit_dataset(ds: &Dataset, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(ds, &mut buf).map_err(|e| CliError::Io {
                path: path.map_or("<stdout>".into(), |p| p.display().to_string()),
                source: io::Error::other(e.to_string()),
            })?;
            buf
        }
        Format::Json => {
            let mut s = dataset_to_json(ds);
            s.push('\n');
            s.into_bytes()
        }
    };
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn awk_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\'', "")
}

/// Gnuplot commands plotting every `(grid point, observable)` series of a
/// CSV dataset; each series is selected from the CSV with an `awk` filter.
pub fn gnuplot_script(ds: &Dataset, csv_path: &Path) -> String {
    let naxes = ds.axes.len();
    let mut series: Vec<(Vec<String>, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in &ds.records {
        if seen.insert((r.coords.clone(), r.observable.clone())) {
            series.push((r.coords.clone(), r.observable.clone()));
        }
    }
    // one record per series: plot the metric against the last axis instead of time
    let against_axis = ds.records.len() == series.len() && naxes > 0;
    let fixed = if against_axis { naxes - 1 } else { naxes };
    let x_col = if against_axis { naxes + 1 } else { naxes + 2 };
    let file = csv_path.display().to_string().replace('\'', "");
    let mut s = String::from("set datafile separator ','\nset key outside right\n");
    s.push_str(&format!(
        "set xlabel '{}'\n",
        if against_axis { ds.axes[naxes - 1].replace('\'', "") } else { "time".into() }
    ));
    let style = if against_axis { "linespoints" } else { "lines" };
    let mut clauses = Vec::new();
    let mut seen_clause = BTreeSet::new();
    for (coords, obs) in &series {
        let mut cond = format!("${}==\"{}\"", naxes + 3, awk_literal(obs));
        for (i, c) in coords.iter().take(fixed).enumerate() {
            cond.push_str(&format!(" && ${}==\"{}\"", i + 2, awk_literal(c)));
        }
        let mut title: Vec<String> = coords.iter().take(fixed).cloned().collect();
        title.push(obs.clone());
        let clause = format!(
            "\"< awk -F, 'NR>1 && {cond}' '{file}'\" using {x_col}:{} with {style} title \"{}\"",
            naxes + 4,
            awk_literal(&title.join(" "))
        );
        if seen_clause.insert(clause.clone()) {
            clauses.push(clause);
        }
    }
    s.push_str("plot ");
    s.push_str(&clauses.join(", \\\n     "));
    s.push('\n');
    s
}

fn finish(ds: &Dataset, out: &OutputArgs) -> Result<(), CliError> {
    emit_dataset(ds, out.format, out.out.as_deref())?;
    if let Some(script) = &out.gnuplot_script {
        let csv_path = match (&out.out, out.format) {
            (Some(p), Format::Csv) => p.clone(),
            _ => {
                let p = script.with_extension("csv");
                emit_dataset(ds, Format::Csv, Some(&p))?;
                p
            }
        };
        fs::write(script, gnuplot_script(ds, &csv_path)).map_err(|e| CliError::io(script, e))?;
    }
    Ok(())
}

fn parse_axis(s: &str) -> Result<Axis, CliError> {
    let (path, values) = split_assignment(s)?;
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config(format!("axis `{path}` has no values")));
    }
    Ok(Axis::new(&path, &values))
}

pub fn simulate(args: &RunArgs) -> Result<Dataset, CliError> {
    let cfg = parse_config(CommandKind::Simulate, &args.overrides, &args.output)?;
    let spec = cfg.spec()?;
    let outcome = experiments::run_experiment(&spec)?;
    if !outcome.cutoff_adequate {
        log::warn!("{}: Fock cutoff inadequate, results flagged invalid", spec.id);
    }
    Ok(Dataset::from_outcome(&outcome, &[], &[], None))
}

pub fn sweep(args: &SweepArgs) -> Result<Dataset, CliError> {
    let cfg = parse_config(CommandKind::Sweep, &args.overrides, &args.output)?;
    let base = cfg.spec()?;
    let axes = if args.axes.is_empty() {
        match &cfg.experiment {
            Some(id) => experiments::lookup(id)?.axes,
            None => Vec::new(),
        }
    } else {
        args.axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?
    };
    if axes.is_empty() {
        return Err(CliError::Config("sweep needs --axis or an experiment with registry axes".into()));
    }
    let metric = if args.series {
        None
    } else {
        let m: Observable = args.metric.parse()?;
        Some(m)
    };
    let mut base = base;
    if let Some(m) = metric {
        if !base.observables.contains(&m) {
            base.observables.push(m);
        }
    }
    Ok(experiments::run_sweep(&SweepSpec { base, axes, metric })?)
}

/// The autonomous generator analyzed by `steady`.
pub fn steady_model(spec: &ExperimentSpec) -> Result<models::LindbladModel, CliError> {
    let (g, k) = (spec.effective_coupling(), spec.effective_kappa());
    let pm = spec.config.mismatch;
    let model = match spec.scheme {
        Scheme::AEffective => models::build_combined_effective(g, k),
        Scheme::BEffective => models::build_scheme_b_effective(g, k),
        Scheme::MismatchA => models::build_mismatch_a(g, k, &pm),
        Scheme::MismatchB => models::build_mismatch_b(g, k, &pm),
        Scheme::Chi => models::collective_rate(g, k).and_then(models::build_chi_model),
        Scheme::Subspace => models::collective_rate(g, k).and_then(|r| models::build_subspace_model(r, &pm)),
        s => {
            return Err(CliError::Config(format!(
                "steady needs an autonomous effective scheme; {s} is time-dependent or switched"
            )))
        }
    };
    model.map_err(|e| CliError::Config(e.to_string()))
}

pub fn steady(args: &SteadyArgs) -> Result<Dataset, CliError> {
    let cfg = parse_config(CommandKind::Steady, &args.overrides, &args.output)?;
    let spec = cfg.spec()?;
    if !(args.rank_tol > 0.0) {
        return Err(CliError::Config("--rank-tol must be positive".into()));
    }
    let model = steady_model(&spec)?;
    let ss = dynamics::steady_states_with_tol(&model, args.rank_tol)?;
    let id = format!("steady:{}", spec.scheme);
    let rec = |observable: String, value: f64| Record {
        experiment: id.clone(),
        coords: vec![],
        time: 0.0,
        observable,
        value,
    };
    let mut records = vec![rec("nullspace_dim".into(), ss.dimension as f64)];
    let mut sv = ss.singular_values.clone();
    sv.sort_by(|a, b| a.total_cmp(b));
    for (k, s) in sv.iter().take(ss.dimension + 1).enumerate() {
        records.push(rec(format!("singular_value[{k}]"), *s));
    }
    for (k, (st, res)) in ss.states.iter().zip(&ss.residuals).enumerate() {
        records.push(rec(format!("residual[{k}]"), *res));
        for (i, j, z) in experiments::flatten_operator(st.op()) {
            records.push(rec(format!("steady[{k}].re({i},{j})"), z.re));
            records.push(rec(format!("steady[{k}].im({i},{j})"), z.im));
        }
    }
    Ok(Dataset {
        axes: vec![],
        records,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Real(Vec<Vec<f64>>),
    Complex { re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>> },
}

fn read_matrix(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let m: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (re, im) = match m {
        MatrixFile::Real(re) => (re, None),
        MatrixFile::Complex { re, im } => (re, im),
    };
    let rows: Vec<Vec<C64>> = re
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let y = im.as_ref().and_then(|m| m.get(i)).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
                    C64::new(x, y)
                })
                .collect()
        })
        .collect();
    let op = ComplexOperator::from_rows(&rows).map_err(|e| CliError::Config(e.to_string()))?;
    if op.dim() != 4 {
        return Err(CliError::Config(format!("expected a 4x4 matrix, got {0}x{0}", op.dim())));
    }
    DensityMatrix::new(op, SubsystemLayout::two_qubits()).map_err(|e| CliError::Config(e.to_string()))
}

pub fn measures(args: &MeasuresArgs) -> Result<Dataset, CliError> {
    let (name, rho) = if let Some(path) = &args.matrix {
        (path.display().to_string(), read_matrix(path)?)
    } else if let Some(p) = &args.mdms {
        let parts: Vec<f64> = p
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("--mdms expects EPS,X numbers, got `{p}`")))?;
        if parts.len() != 2 {
            return Err(CliError::Config("--mdms expects exactly two numbers".into()));
        }
        let rho = models::mdms_family(parts[0], parts[1]).map_err(|e| CliError::Config(e.to_string()))?;
        (format!("mdms({},{})", parts[0], parts[1]), rho)
    } else {
        let name = args.state.clone().unwrap_or_else(|| "target".into());
        let rho = experiments::named_initial_state(&name)?;
        (name, rho)
    };
    let target = models::target_state();
    let id = format!("measures:{name}");
    let rec = |observable: &str, value: f64| Record {
        experiment: id.clone(),
        coords: vec![],
        time: 0.0,
        observable: observable.to_string(),
        value,
    };
    let num = |e: correlations::CorrelationError| CliError::Numerical(e.to_string());
    let mut records = Vec::new();
    match correlations::correlation_report(&rho, &target) {
        Ok(r) => {
            records.push(rec("QD", r.qd));
            records.push(rec("CC", r.cc));
            records.push(rec("Q1", r.q1));
            records.push(rec("Q2", r.q2));
            records.push(rec("CC1", r.cc1));
            records.push(rec("CC2", r.cc2));
        }
        Err(correlations::CorrelationError::NotXState { .. }) => {
            log::warn!("{name} is not an X-state; QD and CC omitted");
        }
        Err(e) => return Err(num(e)),
    }
    records.push(rec("concurrence", correlations::concurrence(&rho).map_err(num)?));
    records.push(rec("mutual_information", correlations::mutual_information(&rho).map_err(num)?));
    records.push(rec("super_fidelity", correlations::super_fidelity(&rho, &target).map_err(num)?));
    records.push(rec("purity", rho.purity()));
    Ok(Dataset {
        axes: vec![],
        records,
    })
}

/// Registry table: id, scheme, horizon, sweep axes, citation.
pub fn list_experiments() -> String {
    let mut s = String::new();
    s.push_str(&format!("{:<10} {:<12} {:<20} {:<40} {}\n", "id", "scheme", "horizon", "axes", "citation"));
    for e in experiments::registry() {
        let axes: Vec<String> = e
            .axes
            .iter()
            .map(|a| format!("{}={}", a.path, if a.values.len() > 6 { format!("[{} values]", a.values.len()) } else { a.values.join(",") }))
            .collect();
        s.push_str(&format!(
            "{:<10} {:<12} {:<20} {:<40} {}\n",
            e.id,
            e.spec.scheme.name(),
            e.horizon_label(),
            axes.join(" "),
            e.citation
        ));
    }
    s
}

fn list_all() -> String {
    let mut s = list_experiments();
    s.push_str("\nparameter paths:\n");
    for p in experiments::PARAMETER_PATHS {
        s.push_str(&format!("  {p}\n"));
    }
    s.push_str("\ninitial states:\n");
    for p in experiments::INITIAL_STATES {
        s.push_str(&format!("  {p}\n"));
    }
    s.push_str("\nobservables:\n");
    for o in Observable::ALL {
        s.push_str(&format!("  {o}\n"));
    }
    s
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => finish(&simulate(a)?, &a.output),
        Command::Sweep(a) => finish(&sweep(a)?, &a.output),
        Command::Steady(a) => finish(&steady(a)?, &a.output),
        Command::Measures(a) => finish(&measures(a)?, &a.output),
        Command::List(a) => {
            let text = if a.all { list_all() } else { list_experiments() };
            io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(8000.0), "8000");
        assert_eq!(format_value(-2.5e-7), "-2.5e-7");
        assert_eq!(format_value(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_value(f64::NAN), "NaN");
    }

    #[test]
    fn flat_and_json_configs_agree() {
        let flat = parse_config_text("# c\nexperiment = fig3a\nconfig.kappa = 0.1 # inline\nphi1=0.5\n").unwrap();
        let json = parse_config_text(r#"{"experiment": "fig3a", "config": {"kappa": 0.1}, "phi1": 0.5}"#).unwrap();
        let norm = |mut v: Vec<(String, String)>| {
            v.sort();
            v
        };
        assert_eq!(norm(flat), norm(json));
        assert!(parse_config_text("no equals sign").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(&p, "experiment = fig3a\nconfig.kappa = 1\n").unwrap();
        let ov = Overrides {
            experiment: None,
            config: Some(p),
            set: vec!["config.kappa=0.1".into(), "config.omega1=0.5".into()],
        };
        let cfg = parse_config(CommandKind::Simulate, &ov, &OutputArgs::default()).unwrap();
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.id, "fig3a");
        assert_eq!(spec.config.kappa, 0.1);
        assert_eq!(spec.config.omega1, 0.5);
    }

    #[test]
    fn config_errors_name_the_key() {
        let ov = Overrides {
            experiment: Some("fig2".into()),
            config: None,
            set: vec!["config.kappa=fast".into()],
        };
        let err = parse_config(CommandKind::Simulate, &ov, &OutputArgs::default()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains("config.kappa"));
    }

    #[test]
    fn list_contains_every_id() {
        let text = list_experiments();
        for e in experiments::registry() {
            assert!(text.contains(e.id));
        }
    }
}
