use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quetron_cli::config::{parse_sizes, Command, Dumps, ExperimentConfig, Grid};
use quetron_cli::{exit, experiments, CliError};
use quetron_core::FamilyKind;

#[derive(Parser)]
#[command(name = "quetron", version, about = "Quantum transport networks and their kinetic reductions")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Assemble one network, report relaxation metrics and optionally dump matrices.
    Simulate(Common),
    /// Transfer efficiency of the FMO complex over a dephasing sweep.
    FmoSweep(Common),
    /// Relaxation-error scaling for highly connected networks.
    IdealNetwork(Common),
    /// Relaxation-error scaling for circular chains.
    Chain(Common),
    /// Kinetic relaxation error against network size.
    DimScan(Common),
    /// Check the error bounds for one network or a randomized batch.
    BoundsReport(Common),
}

#[derive(Args)]
struct Common {
    /// Network description in TOML.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// highly-ideal, highly-random, chain-ideal or chain-random.
    #[arg(long)]
    family: Option<FamilyKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Coupling scale.
    #[arg(long)]
    theta: Option<f64>,
    /// Dephasing rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Site-energy offset for chain-ideal.
    #[arg(long)]
    e: Option<f64>,
    /// Log-spaced grid: LO HI COUNT.
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "COUNT"])]
    grid: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Network sizes, e.g. 4..16, 6..40:2 or 4,8,12.
    #[arg(long)]
    sizes: Option<String>,
    /// Number of random networks for bounds-report.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    dump_m: bool,
    #[arg(long)]
    dump_n: bool,
    #[arg(long)]
    dump_n0: bool,
    /// Dump the k-th series term N_k.
    #[arg(long, value_name = "K")]
    dump_nk: Option<usize>,
}

fn build(command: Command, c: Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(command, c.out);
    cfg.spec_path = c.spec;
    cfg.family = c.family;
    cfg.n = c.n;
    cfg.theta = c.theta;
    cfg.gamma = c.gamma;
    cfg.e = c.e;
    cfg.seed = c.seed;
    cfg.draws = c.draws;
    cfg.sizes = c.sizes.as_deref().map(parse_sizes).transpose()?;
    cfg.grid = match c.grid {
        Some(g) => {
            let num = |s: &str| s.parse::<f64>().map_err(|_| CliError::Usage(format!("bad grid value '{s}'")));
            let count = g[2]
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad grid count '{}'", g[2])))?;
            Some(Grid::new(num(&g[0])?, num(&g[1])?, count)?)
        }
        None => None,
    };
    cfg.dumps = Dumps {
        m: c.dump_m,
        n: c.dump_n,
        n0: c.dump_n0,
        nk: c.dump_nk,
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::FmoSweep(c) => (Command::FmoSweep, c),
        Sub::IdealNetwork(c) => (Command::IdealNetwork, c),
        Sub::Chain(c) => (Command::Chain, c),
        Sub::DimScan(c) => (Command::DimScan, c),
        Sub::BoundsReport(c) => (Command::BoundsReport, c),
    };
    let result = build(command, common).and_then(|cfg| experiments::run(&cfg));
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.bound_failure {
                eprintln!("error: at least one bound was violated");
                ExitCode::from(exit::BOUND_VIOLATION as u8)
            } else {
                ExitCode::from(exit::OK as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
