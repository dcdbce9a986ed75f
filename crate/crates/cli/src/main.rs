use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dataplan::runner::{self, with_threads};
use dataplan::{load_scenario, Market, Scenario, SolverSpec};

#[derive(Parser)]
#[command(name = "dataplan", version, about = "Period-price menus for data plans")]
struct Cli {
    /// Worker threads for the solver (1 keeps runs bit-reproducible).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Overrides the scenario's solver seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write solution, comparison and certificate files.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a continuous scenario for several group counts.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        groups: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a written solution against the incentive constraints.
    Verify {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Compare the solver with an exhaustive grid search.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// Largest period on the grid.
        #[arg(long, default_value_t = 10.0)]
        period_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the unimodality condition of a continuous type distribution.
    CheckDist {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<Scenario> {
    let mut s = load_scenario(path).with_context(|| format!("loading {}", path.display()))?;
    if let (Some(new), SolverSpec::Continuous { seed, .. }) = (seed, &mut s.solver) {
        *seed = new;
    }
    Ok(s)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let threads = cli.threads;
    match cli.command {
        Command::Solve { scenario, out } => {
            let s = load(&scenario, cli.seed)?;
            let art = with_threads(threads, || runner::run(&s, &out))??;
            println!("{}: profit {:.6}", s.name, art.solved.total_profit());
            for (label, u) in art.comparison.uplift_percent() {
                println!("  uplift vs {label}: {u:.2}%");
            }
            println!("  surplus ratio: {:.4}", art.comparison.social.ratio);
            if art.verified {
                println!("  verified: yes");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("  verified: NO (see {}/certificate.json)", out.display());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Sweep { scenario, groups, out } => {
            let s = load(&scenario, cli.seed)?;
            let rows = with_threads(threads, || runner::sweep_groups(&s, &groups, &out))??;
            for r in &rows {
                println!("K={} profit {:.6} iterations {} converged {}", r.groups, r.profit, r.iterations, r.converged);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { solution, scenario } => {
            let s = load(&scenario, cli.seed)?;
            let cert = runner::verify_solution_file(&s, &solution)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
            Ok(if cert.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Oracle { scenario, grid_step, period_max, out } => {
            let s = load(&scenario, cli.seed)?;
            let report = with_threads(threads, || runner::oracle_report(&s, grid_step, period_max))??;
            if let Some(dir) = out {
                runner::write_oracle_report(&report, dir)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckDist { scenario, points } => {
            let s = load(&scenario, cli.seed)?;
            let Market::Continuous(m) = &s.market else {
                bail!("check-dist needs a continuous market");
            };
            let r = m.verify_unimodality(points)?;
            println!(
                "{}: condition {} (min slack {:.3e} at sigma = {:.4}, {} points)",
                s.name,
                if r.holds { "holds" } else { "FAILS" },
                r.min_slack,
                r.argmin,
                r.grid_points
            );
            Ok(if r.holds { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
