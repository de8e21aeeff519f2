//! The `coherence-lab` command line.
//!
//! Every command prints one JSON document `{"manifest": .., "result": ..}` on
//! stdout. Exit codes: 0 success, 1 a verification failed, 2 bad input,
//! 3 internal or optimizer fault.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::majorization::{compare, io_transformable, MajorizationVerdict};
use crate::pscm::{c_l1_mixed, evaluate, sum_of_squares, verify_conditions, verify_measure, ConditionReport, PscmId, PscmTag};
use crate::quantifiers::{
    c_p, convex_roof, convexity_gap, nonconvexity_search, GapReport, NonconvexityReport, OptimizerConfig,
    QuantifierReport, GAP_ORDER_TOL,
};
use crate::seeds::derive_seed;
use crate::states::{coherence_vector, random_density, random_pure, State, StateKind, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coherence-lab", version, about = "Coherence measures and quantifiers for finite-dimensional states")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "COHERENCE_LAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Validation tolerance for input states.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Timestamp recorded in the manifest (default: now, RFC 3339).
    #[arg(long, global = true)]
    pub timestamp: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct PscmArgs {
    /// Comma-separated measures.
    #[arg(long, value_delimiter = ',', default_values_t = PscmTag::ALL)]
    pub pscm: Vec<PscmTag>,
    /// Divide each measure by its value on the maximally coherent state.
    #[arg(long)]
    pub normalized: bool,
}

impl PscmArgs {
    fn ids(&self) -> Vec<PscmId> {
        self.pscm
            .iter()
            .map(|&tag| PscmId {
                tag,
                normalized: self.normalized,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Random isometries per restart.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    /// Refinement steps per restart.
    #[arg(long, default_value_t = 200)]
    pub refine: usize,
    /// Initial refinement step size, in (0, 1].
    #[arg(long, default_value_t = 0.25)]
    pub refine_scale: f64,
    /// Ensemble size (default: dimension + 1).
    #[arg(long)]
    pub ensemble: Option<usize>,
}

impl OptimizerArgs {
    fn config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            samples_per_restart: self.samples,
            refine_steps: self.refine,
            refine_scale: self.refine_scale,
            seed,
            ensemble_size: self.ensemble,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fixture {
    /// `sum_i mu_i^2`: convex, so it must fail the concavity condition.
    SumSquares,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate measures on a state file.
    Measure {
        state: PathBuf,
        #[command(flatten)]
        pscm: PscmArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the four measure conditions by sampling.
    Verify {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        pscm: PscmArgs,
        /// Verify a built-in test function instead of the selected measures.
        #[arg(long, value_enum)]
        fixture: Option<Fixture>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Estimate C_P.
    Cp(QuantifierArgs),
    /// Estimate the convex roof.
    Roof(QuantifierArgs),
    /// Estimate C_P minus the convex roof.
    Gap(QuantifierArgs),
    /// Search random states for a positive convexity gap.
    GapSearch {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        trials: usize,
        #[command(flatten)]
        pscm: PscmArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Decide whether one pure state converts into another by incoherent operations.
    Transformable {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Write random state files.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct QuantifierArgs {
    pub state: PathBuf,
    #[command(flatten)]
    pub pscm: PscmArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] crate::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_internal() => EXIT_INTERNAL,
            CliError::Output(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Provenance embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: Option<OptimizerConfig>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub pscm: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureOutput {
    pub dim: usize,
    pub kind: StateKind,
    /// `"pure"`, or `"dephased-populations"` when the values are evaluated on
    /// the diagonal of a mixed state.
    pub label: String,
    pub values: Vec<MeasureValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_l1_mixed: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub passed: bool,
    pub reports: Vec<ConditionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantifierOutput {
    pub reports: Vec<QuantifierReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapOutput {
    pub respects_order: bool,
    pub reports: Vec<GapReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSearchOutput {
    pub reports: Vec<NonconvexityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformableOutput {
    pub transformable: bool,
    pub source_vector: Vec<f64>,
    pub target_vector: Vec<f64>,
    pub verdict: MajorizationVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenOutput {
    pub files: Vec<String>,
}

/// Twelve significant digits.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn load_state(path: &Path, tol: &Tolerances) -> Result<State, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(State::from_json_str(&text, tol)?)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let to_io = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    w.write_record(header).map_err(to_io)?;
    for r in rows {
        w.write_record(r).map_err(to_io)?;
    }
    w.flush().map_err(io_err(path))
}

struct Run {
    seed: u64,
    tol: Tolerances,
    timestamp: String,
}

impl Run {
    fn manifest(&self, command: &str, inputs: &[&Path], config: Option<OptimizerConfig>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: self.timestamp.clone(),
        }
    }
}

/// Runs a parsed command, writing the JSON document to `out`. Returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let run = Run {
        seed: cli.seed,
        tol: Tolerances::uniform(cli.tol),
        timestamp: cli
            .timestamp
            .clone()
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    };
    let mut buf: Vec<u8> = Vec::new();
    let work = || dispatch(&run, cli.command, &mut buf);
    let code = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Output(e.to_string()))?
            .install(work),
        None => work(),
    }?;
    out.write_all(&buf).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(code)
}

fn emit<T: Serialize>(out: &mut dyn Write, manifest: RunManifest, result: T) -> Result<(), CliError> {
    let doc = Envelope { manifest, result };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Output(e.to_string()))
}

fn dispatch(run: &Run, command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Measure { state, pscm, csv } => {
            let s = load_state(&state, &run.tol)?;
            let (label, mu, mixed) = match &s {
                State::Pure(p) => ("pure", coherence_vector(p), None),
                State::Density(r) => ("dephased-populations", r.populations(), Some(c_l1_mixed(r))),
            };
            let values: Vec<MeasureValue> = pscm
                .ids()
                .into_iter()
                .map(|id| MeasureValue {
                    pscm: id.label(),
                    value: evaluate(id, &mu),
                })
                .collect();
            if let Some(path) = csv {
                let mut rows: Vec<Vec<String>> = values.iter().map(|v| vec![v.pscm.clone(), num(v.value)]).collect();
                if let Some(c) = mixed {
                    rows.push(vec!["l1-mixed".into(), num(c)]);
                }
                write_csv(&path, &["pscm", "value"], &rows)?;
            }
            let result = MeasureOutput {
                dim: s.dim(),
                kind: s.to_file().kind,
                label: label.to_string(),
                values,
                c_l1_mixed: mixed,
            };
            emit(out, run.manifest("measure", &[&state], None), result)?;
            Ok(EXIT_OK)
        }

        Command::Verify {
            dim,
            samples,
            pscm,
            fixture,
            csv,
        } => {
            if dim < 2 {
                return Err(CliError::Usage("--dim must be at least 2".into()));
            }
            if samples < 1 {
                return Err(CliError::Usage("--samples must be at least 1".into()));
            }
            let reports = match fixture {
                Some(Fixture::SumSquares) => vec![verify_measure("sum-squares", sum_of_squares, dim, samples, run.seed)?],
                None => pscm
                    .ids()
                    .into_iter()
                    .map(|id| verify_conditions(id, dim, samples, run.seed))
                    .collect::<crate::Result<Vec<_>>>()?,
            };
            let passed = reports.iter().all(ConditionReport::all_passed);
            if let Some(path) = csv {
                let rows: Vec<Vec<String>> = reports
                    .iter()
                    .flat_map(|r| {
                        r.outcomes().into_iter().enumerate().map(move |(k, c)| {
                            vec![
                                r.measure.clone(),
                                (k + 1).to_string(),
                                c.passed.to_string(),
                                num(c.witness.violation),
                                num(c.tolerance),
                            ]
                        })
                    })
                    .collect();
                write_csv(&path, &["pscm", "condition", "passed", "violation", "tolerance"], &rows)?;
            }
            emit(out, run.manifest("verify", &[], None), VerifyOutput { passed, reports })?;
            Ok(if passed { EXIT_OK } else { EXIT_FAILED })
        }

        Command::Cp(args) => quantifier(run, "cp", args, out),
        Command::Roof(args) => quantifier(run, "roof", args, out),
        Command::Gap(args) => quantifier(run, "gap", args, out),

        Command::GapSearch {
            dim,
            trials,
            pscm,
            optimizer,
            csv,
        } => {
            if dim < 2 {
                return Err(CliError::Usage("--dim must be at least 2".into()));
            }
            if trials < 1 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let cfg = optimizer.config(run.seed);
            let reports = pscm
                .ids()
                .into_iter()
                .map(|id| nonconvexity_search(dim, id, trials, &cfg))
                .collect::<crate::Result<Vec<_>>>()?;
            if let Some(path) = csv {
                let rows: Vec<Vec<String>> = reports
                    .iter()
                    .flat_map(|r| {
                        r.rows.iter().map(move |t| {
                            vec![
                                r.pscm.label(),
                                t.trial.to_string(),
                                t.state_seed.map(|s| s.to_string()).unwrap_or_default(),
                                num(t.c_p),
                                num(t.c_roof),
                                num(t.gap),
                                t.status.map(status_str).unwrap_or_default().to_string(),
                            ]
                        })
                    })
                    .collect();
                write_csv(
                    &path,
                    &["pscm", "trial", "state_seed", "c_p", "c_roof", "gap", "status"],
                    &rows,
                )?;
            }
            emit(out, run.manifest("gap-search", &[], Some(cfg)), GapSearchOutput { reports })?;
            Ok(EXIT_OK)
        }

        Command::Transformable { source, target } => {
            let pure = |path: &Path| -> Result<_, CliError> {
                match load_state(path, &run.tol)? {
                    State::Pure(p) => Ok(coherence_vector(&p)),
                    State::Density(_) => Err(CliError::Usage(format!(
                        "{}: transformability is decided for pure states only",
                        path.display()
                    ))),
                }
            };
            let (s, t) = (pure(&source)?, pure(&target)?);
            let transformable = io_transformable(&s, &t)?;
            let result = TransformableOutput {
                transformable,
                verdict: compare(&t, &s)?,
                source_vector: s.probs().to_vec(),
                target_vector: t.probs().to_vec(),
            };
            emit(out, run.manifest("transformable", &[&source, &target], None), result)?;
            Ok(if transformable { EXIT_OK } else { EXIT_FAILED })
        }

        Command::Gen { dim, rank, count, out: dir } => {
            if dim < 2 {
                return Err(CliError::Usage("--dim must be at least 2".into()));
            }
            if rank < 1 || rank > dim {
                return Err(CliError::Lib(crate::Error::RankOutOfBounds { rank, dim }));
            }
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let manifest = run.manifest("gen", &[], None);
            let mut files = Vec::with_capacity(count);
            for i in 0..count {
                let seed = derive_seed(run.seed, i as u64);
                let state = if rank == 1 {
                    State::Pure(random_pure(dim, seed)?)
                } else {
                    State::Density(random_density(dim, rank, seed)?)
                };
                let mut file = state.to_file();
                file.manifest = Some(serde_json::to_value(&manifest).map_err(|e| CliError::Output(e.to_string()))?);
                let path = dir.join(format!("state-{i:04}.json"));
                let text = serde_json::to_string_pretty(&file).map_err(|e| CliError::Output(e.to_string()))?;
                fs::write(&path, text + "\n").map_err(io_err(&path))?;
                files.push(path.display().to_string());
            }
            emit(out, manifest, GenOutput { files })?;
            Ok(EXIT_OK)
        }
    }
}

fn status_str(s: crate::quantifiers::SupremumStatus) -> &'static str {
    match s {
        crate::quantifiers::SupremumStatus::SupremumFound => "SUPREMUM_FOUND",
        crate::quantifiers::SupremumStatus::MaximalSetOnly => "MAXIMAL_SET_ONLY",
    }
}

fn quantifier(run: &Run, command: &str, args: QuantifierArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let rho = load_state(&args.state, &run.tol)?.density();
    let cfg = args.optimizer.config(run.seed);
    cfg.validate()?;
    let ids = args.pscm.ids();
    let manifest = run.manifest(command, &[&args.state], Some(cfg));
    if command == "gap" {
        let reports = ids
            .into_iter()
            .map(|id| convexity_gap(&rho, id, &cfg))
            .collect::<crate::Result<Vec<_>>>()?;
        let respects_order = reports.iter().all(|r| r.gap >= -GAP_ORDER_TOL);
        if let Some(path) = &args.csv {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| vec![r.c_p.pscm.label(), num(r.c_p.value), num(r.c_roof.value), num(r.gap)])
                .collect();
            write_csv(path, &["pscm", "c_p", "c_roof", "gap"], &rows)?;
        }
        emit(out, manifest, GapOutput { respects_order, reports })?;
        return Ok(if respects_order { EXIT_OK } else { EXIT_FAILED });
    }
    let reports = ids
        .into_iter()
        .map(|id| if command == "cp" { c_p(&rho, id, &cfg) } else { convex_roof(&rho, id, &cfg) })
        .collect::<crate::Result<Vec<_>>>()?;
    if let Some(path) = &args.csv {
        let rows: Vec<Vec<String>> = reports.iter().map(|r| vec![r.pscm.label(), num(r.value)]).collect();
        write_csv(path, &["pscm", "value"], &rows)?;
    }
    emit(out, manifest, QuantifierOutput { reports })?;
    Ok(EXIT_OK)
}

/// Parses `args`, runs the command against stdout and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
