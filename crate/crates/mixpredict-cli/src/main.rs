use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixpredict::mixmodel::{fit, FitConfig, MixedFit};
use mixpredict::simulate::{format_report_tables, reports_to_csv, run_study, SimConfig};
use mixpredict_cli::ingest::ingest;
use mixpredict_cli::protocol::{
    cross_validate, filter_date_range, phase_range, tau_grid, tau_sweep, to_mixed_dataset,
};
use mixpredict_cli::report::{beta_curve_csv, coefficient_report, render_cv, sweep_csv, sweep_summary};
use mixpredict_cli::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "mixpredict",
    version,
    about = "Binary classification from scalar, compositional, and curve predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo study and print its summary tables.
    Simulate {
        /// Sample sizes, one study cell per value.
        #[arg(long = "n", num_args = 1.., value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
        n: Vec<usize>,
        /// Noise levels, crossed with every sample size.
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.2f64, 0.6])]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the study as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the classifier to a market CSV and save the model as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Variance fraction kept by the curve basis truncation.
        #[arg(long, default_value_t = 0.99)]
        lambda: f64,
        /// Restrict to one of the three dated market phases.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
        phase: Option<u64>,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        intercept: bool,
        /// Write the model here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated direction accuracy on a market CSV.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy as a function of the move-magnitude threshold.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "tau-max", default_value_t = 0.01)]
        tau_max: f64,
        #[arg(long = "tau-step", default_value_t = 0.0005)]
        tau_step: f64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved model as a text summary and a coefficient-curve CSV.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            sigma,
            replicates,
            seed,
            out,
        } => {
            if n.is_empty() || sigma.is_empty() {
                return Err(CliError::BadRequest(
                    "need at least one sample size and one noise level".to_string(),
                ));
            }
            let mut configs = Vec::new();
            for &s in &sigma {
                for &size in &n {
                    let mut config = SimConfig::new(size, s);
                    config.replicates = replicates;
                    config.seed = seed;
                    configs.push(config);
                }
            }
            let reports = run_study(&configs)?;
            print!("{}", format_report_tables(&reports));
            if let Some(path) = out {
                fs::write(path, reports_to_csv(&reports))?;
            }
            Ok(())
        }
        Command::Fit {
            data,
            lambda,
            phase,
            intercept,
            out,
        } => {
            let mut records = ingest(&data)?;
            if let Some(p) = phase {
                let (from, to) = phase_range(p as usize)?;
                records = filter_date_range(&records, from, to)?;
            }
            let dataset = to_mixed_dataset(&records)?;
            let config = FitConfig {
                include_intercept: intercept,
                ..FitConfig::new(lambda)
            };
            let model = fit(&dataset, &config)?;
            let mut json = model.to_json();
            json.push('\n');
            emit(&json, out.as_ref())
        }
        Command::Cv {
            data,
            k,
            seed,
            lambda,
            out,
        } => {
            let records = ingest(&data)?;
            let report = cross_validate(&records, k, lambda, seed)?;
            emit(&render_cv(&report), out.as_ref())
        }
        Command::Sweep {
            data,
            tau_max,
            tau_step,
            k,
            seed,
            lambda,
            out,
        } => {
            let records = ingest(&data)?;
            let taus = tau_grid(tau_max, tau_step)?;
            let sweep = tau_sweep(&records, &taus, k, lambda, seed)?;
            let csv = sweep_csv(&sweep);
            match out {
                Some(path) => {
                    fs::write(path, &csv)?;
                    if let Some(line) = sweep_summary(&sweep) {
                        println!("{line}");
                    }
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Report { model, out_dir } => {
            let json = fs::read_to_string(&model)?;
            let loaded = MixedFit::from_json(&json)?;
            fs::create_dir_all(&out_dir)?;
            let text_path = out_dir.join("coefficients.txt");
            let curve_path = out_dir.join("beta_curve.csv");
            fs::write(&text_path, coefficient_report(&loaded))?;
            fs::write(&curve_path, beta_curve_csv(&loaded))?;
            println!("wrote {}", text_path.display());
            println!("wrote {}", curve_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
