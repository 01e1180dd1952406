use std::path::PathBuf;
use std::process::ExitCode;

use cetm::cli::{run_dayahead, run_gen, run_limited, run_longterm, run_realtime, CliError, Scenario};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cetm", version, about = "Cost-efficient mobile data scheduling and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule the day-ahead profile and compare against the baselines.
    Dayahead(Common),
    /// Simulate seeded real-time days, managed and unmanaged.
    Realtime(Common),
    /// Bundle-plan CE curves and monthly estimates.
    Longterm(Common),
    /// Schedule only a subset of apps under both exclusion strategies.
    Limited {
        #[command(flatten)]
        common: Common,
        /// Number of apps to schedule; all sizes when omitted.
        #[arg(long)]
        max_apps: Option<usize>,
    },
    /// Write a generated week of history and a day of events.
    Gen(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; defaults apply to every missing field.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Drop the per-app maximum constraints from the scheduling problem.
    #[arg(long)]
    strict_paper_matrix: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario, CliError> {
        let mut sc = match &self.config {
            Some(path) => Scenario::load(path)?,
            None => Scenario::default(),
        };
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        if let Some(runs) = self.runs {
            sc.runs = runs;
        }
        if let Some(kappa) = self.kappa {
            sc.kappa = kappa;
        }
        if self.strict_paper_matrix {
            sc.strict_paper_matrix = true;
        }
        if let Some(out) = &self.out {
            sc.out = out.clone();
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let report = match cli.command {
        Command::Dayahead(c) => run_dayahead(&c.scenario()?)?,
        Command::Realtime(c) => run_realtime(&c.scenario()?)?,
        Command::Longterm(c) => run_longterm(&c.scenario()?)?,
        Command::Limited { common, max_apps } => run_limited(&common.scenario()?, max_apps)?,
        Command::Gen(c) => run_gen(&c.scenario()?)?,
    };
    for row in &report.rows {
        println!(
            "{:<20} volume {:>10.4} MB  benefit {:>10.4}  payment {:>10.4} c  CE {:.4}",
            row.profile, row.volume_mb, row.benefit, row.payment_cents, row.ce
        );
    }
    if let Some(rt) = &report.realtime {
        println!(
            "runs {}  kappa {}  fraction CE ratio > 1: {:.4}  mean ratio {:.4}",
            rt.runs, rt.kappa, rt.fraction_ratio_above_one, rt.mean_ratio
        );
    }
    for row in &report.limited {
        println!("{:<17} max_apps {:>3}  CE {:.4}", row.strategy, row.max_apps, row.ce);
    }
    for p in &report.peaks {
        match p.peak_volume_mb {
            Some(v) => println!("plan {:<6} peak at {v} MB", p.plan),
            None => println!("plan {:<6} has no peak at its cap", p.plan),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
