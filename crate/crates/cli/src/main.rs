use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cstar_cli::commands::{self, Direction, Output, Source, SystemSource};
use cstar_core::ToleranceConfig;
use serde_json::Value;

/// Quasi-bases, indices, basic constructions and Rohlin-type checks for
/// inclusions of finite-dimensional C*-algebras.
#[derive(Parser)]
#[command(name = "cstar", version)]
struct Cli {
    /// Equality tolerance for identity defects.
    #[arg(long, global = true, env = "CSTAR_TOL", default_value_t = 1e-9)]
    tol: f64,
    /// Singular-value cutoff for rank decisions.
    #[arg(long, global = true, env = "CSTAR_RANK_TOL", default_value_t = 1e-10)]
    rank_tol: f64,
    #[arg(long, global = true, env = "CSTAR_SEED", default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true, env = "CSTAR_JSON")]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Catalog entry to use as input.
    #[arg(long, env = "CSTAR_ENTRY")]
    entry: Option<String>,
    /// Inclusion (or action) JSON file.
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-basis and index of E.
    Index(Input),
    /// Basic construction, dual expectation and dual index.
    Basic(Input),
    /// Iterated basic constructions.
    Tower {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 256)]
        dim_cap: usize,
    },
    /// Tunnel construction from a projection e with E(e) = (Index E)^-1.
    Tunnel {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Rohlin projection check for E.
    RohlinCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Approximate representability witness check for E.
    ApproxRepCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Rohlin property / approximate representability duality.
    Duality {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "roundtrip")]
        direction: Direction,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Fixed-point algebra and averaging expectation of an action.
    FixedPoint(Input),
    /// Rohlin partition criterion for a group action.
    RohlinActionCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Fixed-point inclusion for a subgroup.
    SubgroupInclusion {
        #[command(flatten)]
        input: Input,
        /// Subgroup elements, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        subgroup: Vec<usize>,
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Stage-wise Rohlin defects of an inductive system.
    DefectCurve {
        /// System JSON file.
        system: Option<PathBuf>,
        /// Built-in Ad diag(1,-1) system with this many stages.
        #[arg(long, conflicts_with = "system")]
        inner_z2: Option<usize>,
    },
    /// Built-in examples.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Run the declared checks of every entry whose name contains --entry.
    Run {
        #[arg(long, env = "CSTAR_ENTRY")]
        entry: Option<String>,
    },
    List,
    /// Print an entry as an inclusion file.
    Export {
        #[arg(long, env = "CSTAR_ENTRY")]
        entry: String,
    },
}

fn source(i: Input) -> cstar_cli::io::Result<Source> {
    Source::new(i.entry, i.input)
}

fn run(cli: Cli, tol: &ToleranceConfig) -> cstar_cli::io::Result<Output> {
    match cli.command {
        Command::Index(i) => commands::index(&source(i)?, tol),
        Command::Basic(i) => commands::basic(&source(i)?, tol),
        Command::Tower { input, levels, dim_cap } => commands::tower(&source(input)?, levels, dim_cap, tol),
        Command::Tunnel { input, projection } => commands::tunnel(&source(input)?, projection.as_deref(), tol),
        Command::RohlinCheck { input, projection } => commands::rohlin(&source(input)?, projection.as_deref(), tol),
        Command::ApproxRepCheck { input, projection } => {
            commands::approx_rep(&source(input)?, projection.as_deref(), tol)
        }
        Command::Duality { input, direction, projection } => {
            commands::duality(&source(input)?, direction, projection.as_deref(), tol)
        }
        Command::FixedPoint(i) => commands::fixed_point(&source(i)?, tol),
        Command::RohlinActionCheck { input, projection } => {
            commands::rohlin_action(&source(input)?, projection.as_deref(), tol)
        }
        Command::SubgroupInclusion { input, subgroup, projection } => {
            commands::subgroup(&source(input)?, &subgroup, projection.as_deref(), tol)
        }
        Command::DefectCurve { system, inner_z2 } => {
            let src = match (system, inner_z2) {
                (Some(p), _) => SystemSource::File(p),
                (None, Some(stages)) => SystemSource::InnerZ2 { stages },
                (None, None) => SystemSource::InnerZ2 { stages: 3 },
            };
            commands::curve(&src, tol)
        }
        Command::Catalog(CatalogCommand::Run { entry }) => commands::catalog_run(entry.as_deref(), tol),
        Command::Catalog(CatalogCommand::List) => commands::catalog_list(),
        Command::Catalog(CatalogCommand::Export { entry }) => commands::catalog_export(&entry, tol),
    }
}

fn print_text(prefix: &str, v: &Value) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                print_text(&p, x);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in xs.iter().enumerate() {
                print_text(&format!("{prefix}[{i}]"), x);
            }
        }
        _ => println!("{prefix} = {v}"),
    }
}

fn print_catalog(v: &Value) {
    for entry in v.as_array().into_iter().flatten() {
        let name = entry["entry"].as_str().unwrap_or("?");
        for c in entry["checks"].as_array().into_iter().flatten() {
            let pass = c["pass"].as_bool().unwrap_or(false);
            let d = c["max_defect"].as_f64().map_or("-".to_string(), |d| format!("{d:.3e}"));
            println!(
                "{name:<16} {:<26} {} {d:>10} ({})",
                c["name"].as_str().unwrap_or("?"),
                if pass { "PASS" } else { "FAIL" },
                c["origin"].as_str().unwrap_or("?")
            );
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match ToleranceConfig::new(cli.tol, cli.rank_tol, ToleranceConfig::default().sample_count) {
        Ok(t) => t.with_seed(cli.seed),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let json = cli.json;
    let is_catalog_run = matches!(cli.command, Command::Catalog(CatalogCommand::Run { .. }));
    match run(cli, &tol) {
        Ok(o) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&o.report).expect("reports serialize"));
            } else if is_catalog_run {
                print_catalog(&o.report);
                println!("{}", if o.pass { "all checks passed" } else { "some checks FAILED" });
            } else {
                print_text("", &o.report);
                println!("pass = {}", o.pass);
            }
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
