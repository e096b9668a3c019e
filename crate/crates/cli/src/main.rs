//! Command-line front end: declarative problem specs in, solution and
//! verification artifacts out.
//!
//! Exit codes: 0 solved (and verified, when verification is configured),
//! 2 hypothesis rejection, 3 numerical or verification failure, 4 spec
//! error. Set `RUST_LOG` for progress logging.

mod artifacts;
mod pipeline;
mod spec;

use clap::{Args, Parser, Subcommand};
use pipeline::{run_spec, Overrides, EXIT_SPEC};
use serde::Serialize;
use spec::ProblemSpec;

#[derive(Parser)]
#[command(
    name = "pdereduce",
    about = "Reduce first-order PDEs on semi-Riemannian manifolds along transnormal functions, solve, lift and verify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct ScalarOverrides {
    /// Override the integration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the sampling RNG seed.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Override the verification sample count.
    #[arg(long)]
    count: Option<usize>,
}

impl From<ScalarOverrides> for Overrides {
    fn from(o: ScalarOverrides) -> Overrides {
        Overrides {
            tol: o.tol,
            rng_seed: o.rng_seed,
            count: o.count,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a spec file and emit artifacts.
    Run {
        /// Path to the TOML problem spec.
        spec: String,
        #[command(flatten)]
        overrides: ScalarOverrides,
    },
    /// Solve and verify; exit 0 only if every configured check passes.
    Verify {
        /// Path to the TOML problem spec.
        spec: String,
        #[command(flatten)]
        overrides: ScalarOverrides,
    },
    /// List the built-in transnormal catalog as JSON.
    Catalog,
}

#[derive(Serialize)]
struct CatalogListing {
    transnormal: Vec<pdereduce::transnormal::CatalogEntry>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { spec, overrides } => execute(&spec, overrides.into(), false),
        Command::Verify { spec, overrides } => execute(&spec, overrides.into(), true),
        Command::Catalog => {
            let listing = CatalogListing {
                transnormal: pdereduce::transnormal::builtin_catalog()
                    .iter()
                    .map(|f| f.catalog_entry())
                    .collect(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&listing).expect("serializable")
            );
            0
        }
    };
    std::process::exit(code);
}

fn execute(path: &str, overrides: Overrides, force_verification: bool) -> i32 {
    let spec = match ProblemSpec::load(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("spec error: {e}");
            return EXIT_SPEC;
        }
    };
    match run_spec(&spec, path, overrides, force_verification) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("serializable")
            );
            if outcome.exit_code != 0 {
                let detail = outcome
                    .summary
                    .error
                    .clone()
                    .unwrap_or_else(|| outcome.summary.violated.join("; "));
                eprintln!("{}: {}", outcome.summary.status, detail);
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("spec error: {e}");
            EXIT_SPEC
        }
    }
}
