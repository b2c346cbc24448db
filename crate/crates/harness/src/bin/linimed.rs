//! Command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use linimed::envs::movielens::{synthetic_ratings, write_ratings_dat};
use linimed_harness::config::RunOptions;
use linimed_harness::verify_suite::{run_suite, Suite};
use linimed_harness::{emit_plot, read_csv, run_to_dir, Error, Metric, Result};

#[derive(Parser)]
#[command(name = "linimed", version, about = "Linear bandit experiments: LinIMED, SupLinIMED, LinUCB, LinTS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write curves.csv, sweep.csv, plot.png and manifest
    Run {
        #[command(flatten)]
        opts: Box<RunOptions>,
        /// TOML file with the same keys as the flags
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check the library against its oracles; exits nonzero on failure
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for verify.json
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render a curves.csv as a PNG
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Label the y axis as CTR instead of regret
        #[arg(long)]
        ctr: bool,
    },
    /// Write a synthetic ratings file in the ratings.dat layout
    GenRatings {
        #[arg(long, default_value_t = 400)]
        users: usize,
        #[arg(long, default_value_t = 60)]
        movies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { opts, config } => {
            let opts = match config {
                Some(path) => (*opts).overlay(RunOptions::from_toml_file(&path)?),
                None => *opts,
            };
            let spec = opts.to_spec()?;
            let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let result = run_to_dir(&spec, &out, opts.threads)?;
            for (b, finals) in result.table.best.iter().zip(&result.finals) {
                println!(
                    "{:<11} alpha={:<5} final {} = {:.4} (n={})",
                    b.policy,
                    b.alpha,
                    spec.metric.label(),
                    b.final_mean,
                    finals.len()
                );
            }
            println!("wrote {}", out.display());
            Ok(true)
        }
        Command::Verify {
            suite,
            trials,
            seed,
            out,
        } => {
            let report = run_suite(suite, trials, seed)?;
            std::fs::create_dir_all(&out).map_err(io(&out))?;
            report.write_json(&out.join("verify.json"))?;
            for (k, v) in &report.entries {
                println!("{k} = {v}");
            }
            println!("{}", if report.passed { "PASS" } else { "FAIL" });
            Ok(report.passed)
        }
        Command::Plot { csv, out, ctr } => {
            let curves = read_csv(&csv)?;
            let metric = if ctr { Metric::Ctr } else { Metric::CumulativeRegret };
            emit_plot(&curves, metric, &out)?;
            Ok(true)
        }
        Command::GenRatings {
            users,
            movies,
            seed,
            out,
        } => {
            let ratings = synthetic_ratings(users, movies, seed);
            let file = std::fs::File::create(&out).map_err(io(&out))?;
            let mut w = std::io::BufWriter::new(file);
            write_ratings_dat(&mut w, &ratings).map_err(io(&out))?;
            println!("wrote {} ratings to {}", ratings.len(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
