use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ovdx::config::{Algorithm, ExperimentConfig};
use ovdx::heatmap::{export_heatmap, VisitGrid};
use ovdx::runner::{run_experiment, summary_path};
use ovdx::summary::{seed_files, summarize_dir};

#[derive(Parser)]
#[command(
    name = "ovdx",
    version,
    about = "Train and analyse optimistic distributional SAC agents on GridChaos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write metrics, visit grids and a summary.
    Train {
        /// TOML config file; standard settings when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated seeds, replacing `seeds` from the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out_dir: PathBuf,
        /// ovde_g, ovde_q, ovde_m, dsac or sac_scalar.
        #[arg(long)]
        algo: Option<Algorithm>,
        /// Override any config key, e.g. `--set agent.gamma=0.95`. Repeatable.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Seeds trained concurrently.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Recompute the summary from the per-seed metrics files.
    Summarize {
        #[arg(long)]
        in_dir: PathBuf,
    },
    /// Render every visit grid as a PGM image plus a numeric grid.
    Heatmap {
        #[arg(long)]
        in_dir: PathBuf,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seeds,
            out_dir,
            algo,
            mut overrides,
            jobs,
        } => {
            if let Some(a) = algo {
                overrides.push(format!("algorithm=\"{a}\""));
            }
            if let Some(s) = seeds {
                let list: Vec<String> = s.iter().map(u64::to_string).collect();
                overrides.push(format!("seeds=[{}]", list.join(",")));
            }
            let config = ExperimentConfig::load(config.as_deref(), &overrides)?;
            let (summary, _) = run_experiment(&config, &out_dir, jobs)?;
            for s in &summary.seeds {
                println!(
                    "seed {}: final return {} frg {}",
                    s.seed, s.final_return, s.frg
                );
            }
            println!(
                "{}: final return {} ± {}",
                config.algorithm, summary.final_return_mean, summary.final_return_std
            );
        }
        Command::Summarize { in_dir } => {
            let summary = summarize_dir(&in_dir)?;
            let path = summary_path(&in_dir);
            std::fs::write(&path, summary.to_toml())
                .with_context(|| format!("writing {}", path.display()))?;
            print!("{}", summary.to_toml());
        }
        Command::Heatmap { in_dir } => {
            let files = seed_files(&in_dir, "visits_seed", ".csv")?;
            if files.is_empty() {
                bail!("no visits_seed*.csv files in {}", in_dir.display());
            }
            for (seed, path) in files {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let grid = VisitGrid::from_csv(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                export_heatmap(&grid, &in_dir, &format!("heatmap_seed{seed}"))?;
                println!("seed {seed}: {} visits", grid.total());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
