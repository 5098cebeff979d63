//! `imdp-synth`: synthesis, verification, sweeps, benchmarks, and LP export
//! for interval MDPs.
//!
//! Exit codes: 0 success, 1 internal or verification failure, 2 usage error,
//! 3 strategy violates the spec (`verify`), 10 no robust multi-strategy
//! exists (`synth`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imdp_permissive::bench::{generate, nav3_model, run_suite, suite_csv, suite_table, Domain};
use imdp_permissive::io::{fmt_num, parse_model, parse_spec, parse_strategy, write_model, write_strategy};
use imdp_permissive::milp::{build_encoding, emit_lp, EncodeOptions};
use imdp_permissive::robust::check_robust_satisfaction;
use imdp_permissive::solve::{Backend, SolverConfig, SOLVER_CMD_ENV};
use imdp_permissive::synth::{epsilon_grid, sweep_csv, sweep_epsilon, synthesize, SynthConfig};
use imdp_permissive::{EncodingKind, ImdpModel, Spec};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VIOLATED: u8 = 3;
const EXIT_INFEASIBLE: u8 = 10;

#[derive(Parser)]
#[command(name = "imdp-synth", version, about = "Robust permissive controller synthesis for interval MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a maximally permissive robust multi-strategy.
    Synth(SynthArgs),
    /// Check a multi-strategy against a specification.
    Verify(VerifyArgs),
    /// Min/max reach probabilities of the initial actions over an epsilon grid (CSV).
    Sweep(SweepArgs),
    /// Generate a benchmark instance and synthesize it with each encoding.
    Bench(BenchArgs),
    /// Write the MILP encoding as an LP file.
    ExportLp(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Enc {
    Vertex,
    Dual,
}

impl From<Enc> for EncodingKind {
    fn from(e: Enc) -> Self {
        match e {
            Enc::Vertex => EncodingKind::Vertex,
            Enc::Dual => EncodingKind::Dual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Builtin,
    External,
}

#[derive(Args)]
struct ModelSpec {
    /// Model file.
    model: PathBuf,
    /// Specification, e.g. `P>=0.65 [F "goal"]`.
    #[arg(long)]
    spec: String,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "builtin")]
    backend: BackendKind,
    /// Command template for the external backend, with `{lp_file}` and
    /// `{sol_file}` placeholders. Defaults to $IMDP_SYNTH_SOLVER_CMD.
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long)]
    node_cap: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_cap: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    input: ModelSpec,
    #[arg(long, value_enum, default_value = "dual")]
    encoding: Enc,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write the text report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the strategy in the strategy-file format here.
    #[arg(long)]
    strategy_out: Option<PathBuf>,
    /// Skip the maximality checks.
    #[arg(long)]
    no_maximality: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: ModelSpec,
    /// One line per state: `<state>: <action> <action> ...`.
    #[arg(long)]
    strategy: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Model template; `nav3-template` is the only one.
    #[arg(long)]
    model: String,
    /// Grid as start:end:step.
    #[arg(long, default_value = "0:0.2:0.01")]
    eps: String,
    /// Comma-separated actions at the initial state (default: all).
    #[arg(long, value_delimiter = ',')]
    actions: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainKind {
    Nav3,
    Obs,
    Sav,
    Aca,
    Wh,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncChoice {
    Vertex,
    Dual,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    domain: DomainKind,
    /// Grid size (obs, sav).
    #[arg(long, default_value_t = 3)]
    grid: usize,
    /// Micro-steps per move (obs).
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Maximum successors per row (aca).
    #[arg(long, default_value_t = 2)]
    branch: usize,
    /// Steps per corridor segment (wh).
    #[arg(long, default_value_t = 1)]
    segment_steps: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    encoding: EncChoice,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Run the maximality checks too.
    #[arg(long)]
    maximality: bool,
    /// Write the generated model file here.
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: ModelSpec,
    #[arg(long, value_enum, default_value = "dual")]
    encoding: Enc,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn internal(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INTERNAL, message: message.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}

fn load(input: &ModelSpec) -> Result<(ImdpModel, Spec), Failure> {
    let path = &input.model;
    let model = parse_model(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let spec = parse_spec(&input.spec, &model).map_err(|e| usage(format!("spec: {e}")))?;
    Ok((model, spec))
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig, Failure> {
    let mut cfg = match args.backend {
        BackendKind::Builtin => SolverConfig::default(),
        BackendKind::External => {
            let template = args.solver_cmd.clone().or_else(|| std::env::var(SOLVER_CMD_ENV).ok());
            let template =
                template.ok_or_else(|| usage(format!("external backend needs --solver-cmd or ${SOLVER_CMD_ENV}")))?;
            SolverConfig { backend: Backend::External(template), ..SolverConfig::default() }
        }
    };
    if let Some(n) = args.node_cap {
        cfg.node_cap = n;
    }
    cfg.time_cap = args.time_cap;
    Ok(cfg)
}

fn cmd_synth(args: SynthArgs) -> Result<u8, Failure> {
    let (model, spec) = load(&args.input)?;
    let config = SynthConfig {
        solver: solver_config(&args.solver)?,
        check_maximality: !args.no_maximality,
        ..Default::default()
    };
    let report = synthesize(&model, &spec, args.encoding.into(), &config).map_err(internal)?;
    let text = report.to_string();
    print!("{text}");
    if let Some(path) = &args.out {
        write(path, &text)?;
    }
    if let Some(path) = &args.json {
        let doc = serde_json::to_string_pretty(&report).map_err(internal)?;
        write(path, &(doc + "\n"))?;
    }
    let Some(result) = &report.result else {
        return Ok(EXIT_INFEASIBLE);
    };
    if let Some(path) = &args.strategy_out {
        write(path, &write_strategy(&report.model, &result.strategy))?;
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let (model, spec) = load(&args.input)?;
    let path = &args.strategy;
    let theta = parse_strategy(&read(path)?, &model).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let verdict = check_robust_satisfaction(&model, &theta, &spec).map_err(internal)?;
    let status = if verdict.satisfied { "satisfied" } else { "violated" };
    println!("{status}: value at {} is {} for {spec}", model.state_display(model.initial()), fmt_num(verdict.witness));
    if verdict.almost_sure == Some(false) {
        println!("the initial state does not reach the target almost surely");
    }
    Ok(if verdict.satisfied { 0 } else { EXIT_VIOLATED })
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
    match nums[..] {
        [a, b, step] if nums.len() == parts.len() && step > 0.0 && a <= b && a >= 0.0 && b <= 1.0 => {
            Ok(epsilon_grid(a, b, step))
        }
        [a] if nums.len() == parts.len() && (0.0..=1.0).contains(&a) => Ok(vec![a]),
        _ => Err(usage(format!("bad epsilon grid `{text}` (expected start:end:step inside [0, 1])"))),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Failure> {
    if args.model != "nav3-template" {
        return Err(usage(format!("unknown model template `{}` (expected nav3-template)", args.model)));
    }
    let grid = parse_grid(&args.eps)?;
    let model = nav3_model(0.0);
    if let Some(list) = &args.actions {
        if let Some(a) = list.iter().find(|a| model.action_index(a).is_none()) {
            return Err(usage(format!("unknown action `{a}`")));
        }
    }
    let target = model.label("goal").expect("nav3 has a goal label").clone();
    let rows = sweep_epsilon(|e| Ok(nav3_model(e)), &target, args.actions.as_deref(), &grid).map_err(internal)?;
    let csv = sweep_csv(&rows);
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Failure> {
    let (eps, seed) = (args.eps, args.seed);
    let domain = match args.domain {
        DomainKind::Nav3 => Domain::Nav3 { eps },
        DomainKind::Obs => Domain::Obs { grid: args.grid, steps: args.steps, eps, seed },
        DomainKind::Sav => Domain::Sav { grid: args.grid, eps, seed },
        DomainKind::Aca => Domain::Aca { branch: args.branch, eps, seed },
        DomainKind::Wh => Domain::Wh { segment_steps: args.segment_steps, eps },
    };
    let inst = generate(&domain).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = &args.model_out {
        write(path, &write_model(&inst.model))?;
    }
    let encodings = match args.encoding {
        EncChoice::Vertex => vec![EncodingKind::Vertex],
        EncChoice::Dual => vec![EncodingKind::Dual],
        EncChoice::Both => vec![EncodingKind::Vertex, EncodingKind::Dual],
    };
    let config =
        SynthConfig { solver: solver_config(&args.solver)?, check_maximality: args.maximality, ..Default::default() };
    let rows = run_suite(&[domain], &encodings, &config);
    match args.format {
        Format::Csv => print!("{}", suite_csv(&rows)),
        Format::Table => print!("{}", suite_table(&rows)),
    }
    let mut code = 0;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("imdp-synth: {} encoding: {e}", r.encoding);
            code = EXIT_INTERNAL;
        }
    }
    Ok(code)
}

fn cmd_export(args: ExportArgs) -> Result<u8, Failure> {
    let (model, spec) = load(&args.input)?;
    let model = model.with_absorbing_targets(&spec.target).unwrap_or(model);
    let enc = build_encoding(&model, &spec, args.encoding.into(), &EncodeOptions::default()).map_err(internal)?;
    let lp = emit_lp(&enc.problem);
    match &args.out {
        Some(path) => write(path, &lp)?,
        None => print!("{lp}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ExportLp(a) => cmd_export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("imdp-synth: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
