//! `loopwalk`: state transfer analysis for loop-weighted quantum walks.
//!
//! Exit codes: 0 success, 1 certificate failure, 2 usage or validation
//! error, 3 numerical failure, 4 not-applicable regime.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loopwalk::certify::{self, CheckStatus};
use loopwalk::dynamics::{self, CurveOptions, SearchOptions, TMaxPolicy};
use loopwalk::graph::{parse_edge_list_capped, DEFAULT_MAX_VERTICES};
use loopwalk::pipeline::{self, AnalyzeOptions};
use loopwalk::report;
use loopwalk::walks::WalkTable;
use loopwalk::{Error, ErrorKind, Graph, Precision, VertexPair};

const MAX_N_VAR: &str = "LOOPWALK_MAX_N";
const DEFAULT_REL_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "loopwalk", version, about = "State transfer between two vertices under H = A + Q (e_u e_u^T + e_v e_v^T)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum, readout time, transfer strength and fidelity search at one Q.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Loop weight on u and v.
        #[arg(short = 'Q', long = "loop-weight", value_parser = finite)]
        q: f64,
        /// Search horizon; defaults to 1.1 * 2 pi (Q + m)^(d-1).
        #[arg(long, value_parser = positive)]
        t_max: Option<f64>,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// One fidelity search per loop weight; CSV by default.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Comma-separated loop weights, e.g. 10,40,160.
        #[arg(long = "q-list", short = 'q', value_delimiter = ',', required = true, num_args = 1.., value_parser = finite)]
        q_list: Vec<f64>,
        #[arg(long, value_parser = positive)]
        t_max: Option<f64>,
        /// Worker threads; output order is unaffected.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Checks the fidelity, ratio, mass and readout bounds at the threshold loop weight.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Target infidelity, in (0, 1).
        #[arg(short = 'e', long, value_parser = unit_open)]
        epsilon: f64,
        /// Readout window half-width, in [0, 1).
        #[arg(long, value_parser = unit_half_open)]
        delta: Option<f64>,
        #[arg(long, default_value = "auto")]
        precision: Precision,
    },
    /// Exact {u,v}-avoiding walk counts between the endpoints.
    Walks {
        #[command(flatten)]
        common: Common,
        /// Maximum walk length.
        #[arg(short = 'K', long = "max-len", value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
    },
    /// Loop weight placing eigenvalue lambda, and the eigenvector extended from (mu, nu).
    Extend {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = finite)]
        lambda: f64,
        /// Endpoint entries; default is the same-sign eigenvector of the 2x2 Z matrix.
        #[arg(long, requires = "nu", value_parser = finite)]
        mu: Option<f64>,
        #[arg(long, requires = "mu", value_parser = finite)]
        nu: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_REL_TOL, value_parser = positive)]
        rel_tol: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Edge list: one `a b` pair per line, `#` starts a comment.
    #[arg(short = 'g', long)]
    graph: PathBuf,
    #[arg(short = 'u')]
    u: usize,
    #[arg(short = 'v')]
    v: usize,
    /// Output file; stdout when omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct Numeric {
    #[arg(long, default_value = "auto")]
    precision: Precision,
    /// Amplitude evaluations allowed in the grid phase of the fidelity search.
    #[arg(long, default_value_t = SearchOptions::default().budget)]
    budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() { Ok(x) } else { Err(format!("{s} is not finite")) }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 { Ok(x) } else { Err(format!("{s} must be positive")) }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 && x < 1.0 { Ok(x) } else { Err(format!("{s} must lie in (0, 1)")) }
}

fn unit_half_open(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if (0.0..1.0).contains(&x) { Ok(x) } else { Err(format!("{s} must lie in [0, 1)")) }
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::NotApplicable => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message }
}

fn vertex_cap() -> Result<usize, Failure> {
    match std::env::var(MAX_N_VAR) {
        Ok(s) => s.trim().parse().map_err(|_| usage(format!("{MAX_N_VAR} must be a positive integer, got '{s}'"))),
        Err(_) => Ok(DEFAULT_MAX_VERTICES),
    }
}

fn load(common: &Common) -> Result<(Graph, VertexPair), Failure> {
    let text = fs::read_to_string(&common.graph).map_err(|e| usage(format!("cannot read {}: {e}", common.graph.display())))?;
    let g = parse_edge_list_capped(&text, vertex_cap()?).map_err(|e| Failure::from(e).prefixed(&common.graph))?;
    let pair = VertexPair::new(&g, common.u, common.v)?;
    Ok((g, pair))
}

impl Failure {
    fn prefixed(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

fn json_only(common: &Common) -> Result<(), Failure> {
    match common.format {
        Some(Format::Csv) => Err(usage("this command only produces JSON".into())),
        _ => Ok(()),
    }
}

/// Runs a command; returns the document to emit and the exit code.
fn run(cli: Cli) -> Result<(String, Option<PathBuf>, u8), Failure> {
    match cli.command {
        Command::Analyze { common, q, t_max, numeric } => {
            json_only(&common)?;
            let (g, pair) = load(&common)?;
            let opts = AnalyzeOptions {
                precision: numeric.precision,
                t_max: t_max.map_or(TMaxPolicy::default(), TMaxPolicy::Fixed),
                search: SearchOptions { budget: numeric.budget, ..SearchOptions::default() },
            };
            let analysis = pipeline::analyze(&g, &pair, q, &opts)?;
            Ok((report::to_json_string(&analysis)?, common.output, 0))
        }
        Command::Curve { common, q_list, t_max, jobs, numeric } => {
            let (g, pair) = load(&common)?;
            let opts = CurveOptions {
                precision: numeric.precision,
                search: SearchOptions { budget: numeric.budget, ..SearchOptions::default() },
                jobs: jobs as usize,
            };
            let policy = t_max.map_or(TMaxPolicy::default(), TMaxPolicy::Fixed);
            let curve = dynamics::fidelity_curve(&g, &pair, &q_list, policy, &opts)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => curve.to_csv(),
                Format::Json => report::to_json_string(&curve)?,
            };
            Ok((text, common.output, 0))
        }
        Command::Certify { common, epsilon, delta, precision } => {
            json_only(&common)?;
            let (g, pair) = load(&common)?;
            let cert = certify::certify(&g, &pair, epsilon, delta, precision)?;
            let code = match cert.status {
                CheckStatus::Pass | CheckStatus::Skipped => 0,
                CheckStatus::Fail => 1,
                CheckStatus::Inconclusive => 3,
            };
            for check in cert.checks.iter().filter(|c| matches!(c.status, CheckStatus::Fail | CheckStatus::Inconclusive)) {
                eprintln!("loopwalk: check {} {:?}: {} (lhs {}, rhs {})", check.name, check.status, check.anchor, check.lhs, check.rhs);
            }
            Ok((report::to_json_string(&cert)?, common.output, code))
        }
        Command::Walks { common, k } => {
            json_only(&common)?;
            let (g, pair) = load(&common)?;
            let table = WalkTable::endpoints(&g, &pair, k as usize)?;
            Ok((report::to_json_string(&table.to_json())?, common.output, 0))
        }
        Command::Extend { common, lambda, mu, nu, rel_tol } => {
            json_only(&common)?;
            let (g, pair) = load(&common)?;
            let construction = certify::construct_q_for_lambda(&g, &pair, lambda, rel_tol)?;
            let (mu, nu) = match (mu, nu) {
                (Some(mu), Some(nu)) => (mu, nu),
                _ => (construction.default.mu, construction.default.nu),
            };
            let extension = certify::extend_eigenvector(&g, &pair, lambda, mu, nu, rel_tol)?;
            let doc = serde_json::json!({
                "pair": [pair.u, pair.v],
                "mu": mu,
                "nu": nu,
                "extension": extension,
                "construction": construction,
            });
            Ok((report::to_json_string(&doc)?, common.output, 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, output, code)) => {
            if let Some(path) = output {
                if let Err(e) = fs::write(&path, text) {
                    eprintln!("loopwalk: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("loopwalk: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
