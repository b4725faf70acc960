//! `hamjet`: Hamiltonian operator checks, momenta, operator families,
//! changes of variables and momentum ODEs from the command line.
//!
//! Exit codes: 0 property holds, 1 refuted, 2 usage/parse/precondition
//! error, 3 inconclusive.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hamjet::expr::{DEFAULT_SEED, DEFAULT_TOL, DEFAULT_TRIALS};

#[derive(Parser, Debug)]
#[command(name = "hamjet", version, about = "Hamiltonian differential operators on the jet space")]
pub struct Cli {
    /// Sample points for probabilistic zero tests.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Relative tolerance of the zero tests.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Master seed (decimal or 0x-prefixed hex).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    pub seed: u64,
    /// Print one JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Highest jet order before an overflow error.
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed '{s}': {e}"))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Skew-adjointness, Jacobi identity, translation invariance, order and level.
    Check { file: PathBuf },
    /// Verify a momentum density or decide whether a momentum exists.
    Momentum {
        file: PathBuf,
        /// Candidate density T; checks D(δT/δu) = u_1.
        #[arg(long, conflicts_with = "auto", required_unless_present = "auto", allow_hyphen_values = true)]
        density: Option<String>,
        /// Decide existence and report the ODE or the contradiction.
        #[arg(long)]
        auto: bool,
    },
    /// Write the operator file of a family member.
    Catalog(CatalogArgs),
    /// Push an operator forward along a point or special contact substitution.
    Transform {
        op_file: PathBuf,
        sub_file: PathBuf,
        /// Where to write the transformed operator file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a momentum ODE and optionally solve it as a power series.
    Ode(OdeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyName {
    /// ±(D^3 + 2AuD + Au_1) with constant A > 0.
    ThirdLinear,
    /// ±(D^3 + AD) with constant A.
    ThirdConstant,
    /// ±u_1^{-1}(D^3 + 2SD + D(S))u_1^{-1} + fD + Df with S the Schwarzian and f(u).
    ThirdConjugated,
    /// Fifth order with leading coefficient ±1.
    FifthUnit,
    /// Fifth order with leading coefficient ±1/u_1^4.
    FifthInverseQuartic,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    #[arg(value_enum)]
    pub family: FamilyName,
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub sign: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Parametrize the fifth-order unit family by ρ instead of γ.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    /// Fifth-order unit family with quasiconstant b(x), c(x).
    #[arg(long)]
    pub quasiconstant: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long = "a", visible_alias = "A", allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OdeFamily {
    Fifth,
    Third,
}

#[derive(Args, Debug)]
pub struct OdeArgs {
    #[arg(long, value_enum)]
    pub family: OdeFamily,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub beta: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub sign: String,
    /// Degree of the Taylor polynomial.
    #[arg(long)]
    pub solve: Option<usize>,
    /// Initial values y(u0), y'(u0), …, comma separated; zeros by default.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// Expansion point.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub at: String,
    /// Compare with a Runge–Kutta solution on [u0 − r, u0 + r].
    #[arg(long)]
    pub interval: Option<f64>,
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match commands::run(&cli, argv) {
        Ok(report) => {
            let text = if cli.json {
                format!("{}\n", report.to_json())
            } else if let Command::Catalog(CatalogArgs { output: None, .. }) = &cli.command {
                // plain operator file so that the output can be redirected
                report.result["file"].as_str().unwrap_or_default().to_string()
            } else {
                report.to_text()
            };
            // a closed pipe is not an error worth reporting
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(report.exit_code)
        }
        Err(e) => {
            if cli.json {
                let doc = serde_json::json!({ "error": e.message, "exit_code": e.code });
                let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            }
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
