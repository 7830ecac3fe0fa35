//! Command line: `solve`, the four sweeps, `reduce-is` and `serve`.
//!
//! Exit codes: 0 success, 1 infeasible, 2 usage or input error, 3 time
//! or node limit.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use carveopt_core::lab::{CsvOptions, SweepKind};
use carveopt_core::reductions::{parse_edge_list, reduce_is_moq, reduce_is_mpa};
use carveopt_core::solver::Status;
use carveopt_core::{solve, ModelError, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::document::{parse_instance, serialize_instance, InfeasibleDocument, ScenarioDefaults, SolutionDocument};
use crate::request::{MethodName, ScenarioParams};
use crate::service::{router, ServiceConfig, DEFAULT_MAX_CONCURRENT, DEFAULT_PORT};
use crate::sweep::{csv_text, run_sweep, SweepParams};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_LIMIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "carveopt", version, about = "Purchase and production planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and print the solution document.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "iterative")]
        method: MethodArg,
        /// Write the document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One row per weight set, with deterioration columns.
    SweepWeights {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Weight set w0,w1,w2,w3,w4; repeatable. Defaults to the presets.
        #[arg(long = "set", value_parser = parse_weights)]
        sets: Vec<[f64; 5]>,
        #[command(flatten)]
        output: CsvArgs,
    },
    /// One row per pinned level of a recipe.
    SweepHogs {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        recipe: String,
        /// Ascending levels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        #[command(flatten)]
        output: CsvArgs,
    },
    /// One row per uniform minimum order quantity.
    SweepMoq {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Also solve the complete model and add its objective.
        #[arg(long)]
        compare_global: bool,
        #[command(flatten)]
        output: CsvArgs,
    },
    /// Calibrates demands, then solves with growing numbers of them.
    SweepDemand {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: CsvArgs,
    },
    /// Writes the instance that encodes an independent-set question.
    ReduceIs {
        /// Edge list: "n m" on the first line, then one 1-based edge per line.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "moq")]
        variant: Variant,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the HTTP service.
    Serve {
        /// Ignored when CARVEOPT_PORT is set.
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static assets served under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_CONCURRENT)]
        max_concurrent: usize,
        /// Seconds a request waits before answering with a job id.
        #[arg(long, default_value_t = 10.0)]
        sync_wait: f64,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// w0,w1,w2,w3,w4
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 5]>,
    /// Uniform minimum order quantity for all purchasable materials.
    #[arg(long)]
    pub moq: Option<f64>,
    #[arg(long)]
    pub mpa_ratio: Option<f64>,
    /// ID=LEVEL; repeatable.
    #[arg(long = "fix-recipe", value_parser = parse_fixed)]
    pub fix_recipe: Vec<(String, f64)>,
    /// Seconds per solve.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// CSV destination; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Adds a wall-clock column.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Iterative,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    Moq,
    Mpa,
}

fn parse_weights(s: &str) -> Result<[f64; 5], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let values: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
        .collect::<Result<_, _>>()?;
    values.try_into().map_err(|v: Vec<f64>| format!("expected 5 weights, got {}", v.len()))
}

fn parse_fixed(s: &str) -> Result<(String, f64), String> {
    let (id, level) = s.split_once('=').ok_or("expected ID=LEVEL")?;
    let level = level.trim().parse::<f64>().map_err(|_| format!("'{level}' is not a number"))?;
    Ok((id.trim().to_string(), level))
}

/// Failure that ends the process with a given exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::ReferenceFailed { status, .. } | ModelError::CalibrationFailed(status) => status_code(*status),
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Optimal => EXIT_OK,
        Status::Infeasible | Status::Unbounded => EXIT_INFEASIBLE,
        Status::TimeLimit | Status::NodeLimit => EXIT_LIMIT,
    }
}

impl ScenarioArgs {
    fn load(&self, method: Option<MethodName>) -> Result<Scenario, Failure> {
        let bytes = fs::read(&self.instance)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", self.instance.display())))?;
        let (instance, defaults) =
            parse_instance(&bytes).map_err(|e| Failure::usage(format!("{}: {e}", self.instance.display())))?;
        let params = ScenarioParams {
            weights: self.weights,
            moq: self.moq,
            mpa_ratio: self.mpa_ratio,
            fixed_recipe_levels: self.fix_recipe.iter().cloned().collect::<BTreeMap<_, _>>(),
            method,
            time_limit: self.time_limit,
        };
        Ok(params.scenario(Arc::new(instance), &defaults)?)
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}"))),
    }
}

fn run_solve(scenario: &ScenarioArgs, method: MethodArg, out: Option<&Path>) -> Result<u8, Failure> {
    let method = match method {
        MethodArg::Iterative => MethodName::Iterative,
        MethodArg::Global => MethodName::Global,
    };
    let s = scenario.load(Some(method))?;
    let report = solve(&s, method.into())?;
    let text = match report.status {
        Status::Infeasible | Status::Unbounded => {
            let doc = InfeasibleDocument::new(&s, &report);
            eprintln!("{}", doc.message);
            serde_json::to_string_pretty(&doc)
        }
        _ => serde_json::to_string_pretty(&SolutionDocument::new(&s, &report)),
    }
    .expect("documents always serialize");
    write_output(out, &(text + "\n"))?;
    Ok(status_code(report.status))
}

fn run_sweep_command(kind: SweepKind, scenario: &ScenarioArgs, params: SweepParams, output: &CsvArgs) -> Result<u8, Failure> {
    let s = scenario.load(None)?;
    let rows = run_sweep(kind, &s, &params)?;
    write_output(output.out.as_deref(), &csv_text(&rows, CsvOptions { timing: output.timing }))?;
    Ok(EXIT_OK)
}

fn run_reduce(graph: &Path, k: usize, variant: Variant, out: Option<&Path>) -> Result<u8, Failure> {
    let text = fs::read_to_string(graph).map_err(|e| Failure::usage(format!("cannot read {}: {e}", graph.display())))?;
    let g = parse_edge_list(&text)?;
    let (scenario, target) = match variant {
        Variant::Moq => reduce_is_moq(&g, k)?,
        Variant::Mpa => reduce_is_mpa(&g, k)?,
    };
    let doc = serialize_instance(&scenario.instance, &ScenarioDefaults::of(&scenario));
    write_output(out, &(doc + "\n"))?;
    eprintln!("target objective {target}: reached exactly when {k} independent vertices exist");
    Ok(EXIT_OK)
}

pub const PORT_VAR: &str = "CARVEOPT_PORT";

/// The environment wins over the flag.
pub fn effective_port(flag: u16, env: Option<&str>) -> Result<u16, Failure> {
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{PORT_VAR}='{v}' is not a port number"))),
        None => Ok(flag),
    }
}

fn run_serve(host: &str, port: u16, config: ServiceConfig) -> Result<u8, Failure> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| Failure::usage(format!("bad address {host}:{port}: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::usage)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::usage(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, router(config))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(Failure::usage)?;
        Ok(EXIT_OK)
    })
}

pub fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve { scenario, method, out } => run_solve(&scenario, method, out.as_deref()),
        Command::SweepWeights { scenario, sets, output } => {
            let params = SweepParams {
                weight_sets: (!sets.is_empty()).then_some(sets),
                ..Default::default()
            };
            run_sweep_command(SweepKind::Weights, &scenario, params, &output)
        }
        Command::SweepHogs {
            scenario,
            recipe,
            levels,
            output,
        } => {
            let params = SweepParams {
                recipe: Some(recipe),
                levels: Some(levels),
                ..Default::default()
            };
            run_sweep_command(SweepKind::Hogs, &scenario, params, &output)
        }
        Command::SweepMoq {
            scenario,
            values,
            compare_global,
            output,
        } => {
            let params = SweepParams {
                moq_values: Some(values),
                compare_global,
                ..Default::default()
            };
            run_sweep_command(SweepKind::Moq, &scenario, params, &output)
        }
        Command::SweepDemand {
            scenario,
            counts,
            seed,
            output,
        } => {
            let params = SweepParams {
                counts: Some(counts),
                seed: Some(seed),
                ..Default::default()
            };
            run_sweep_command(SweepKind::Demand, &scenario, params, &output)
        }
        Command::ReduceIs { graph, k, variant, out } => run_reduce(&graph, k, variant, out.as_deref()),
        Command::Serve {
            port,
            host,
            static_dir,
            max_concurrent,
            sync_wait,
        } => {
            if !(sync_wait.is_finite() && sync_wait >= 0.0) {
                return Err(Failure::usage("--sync-wait must be non-negative"));
            }
            let config = ServiceConfig {
                max_concurrent,
                sync_wait: std::time::Duration::from_secs_f64(sync_wait),
                static_dir,
            };
            let port = effective_port(port, std::env::var(PORT_VAR).ok().as_deref())?;
            run_serve(&host, port, config)
        }
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
