use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use funcoord::experiments::{Experiment, ExperimentConfig, ExperimentReport};
use funcoord::formats::{validate_document, write_json};

#[derive(Parser)]
#[command(name = "funcoord", version, about = "Run coordinate-invariance experiments and check JSON documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// δ-norm in the smoothed chart against the closed form, and L2 divergence.
    DeltaNorm(RunArgs),
    /// Derivative operator transported by the Fourier chart.
    EigenCovariance(RunArgs),
    /// Pairing, metric, adjoint, tangent-metric and tensor invariants.
    Invariants(RunArgs),
    /// Every experiment at its default size.
    All(RunArgs),
    /// Parse and rebuild space, vector, transform, atlas, eigen or report documents.
    Validate { paths: Vec<PathBuf> },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Grid size (default depends on the experiment).
    #[arg(long)]
    n: Option<usize>,
    /// Half-width of the domain [−L, L].
    #[arg(long = "L", default_value_t = funcoord::experiments::DEFAULT_HALF_WIDTH)]
    half_width: f64,
    /// Scale applied to every pinned tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Experiments to run concurrently with `all`.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunArgs {
    fn config(&self, experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig::new(experiment)
            .with_n(self.n.unwrap_or(experiment.default_n()))
            .with_half_width(self.half_width)
            .with_tol(self.tol)
            .with_seed(self.seed)
    }
}

fn run_all(experiments: &[Experiment], args: &RunArgs) -> Result<Vec<ExperimentReport>, String> {
    let configs: Vec<ExperimentConfig> = experiments.iter().map(|&e| args.config(e)).collect();
    for c in &configs {
        c.validate().map_err(|e| e.to_string())?;
    }
    let jobs = args.jobs.max(1);
    let mut reports = Vec::with_capacity(configs.len());
    for chunk in configs.chunks(jobs) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|c| s.spawn(move || c.experiment.run(c))).collect();
            handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
        });
        for r in results {
            reports.push(r.map_err(|e| e.to_string())?);
        }
    }
    Ok(reports)
}

fn emit(reports: &[ExperimentReport], json: Option<&PathBuf>) -> Result<(), String> {
    let to_stdout = json.is_some_and(|p| p.as_os_str() == "-");
    if !to_stdout {
        let mut out = std::io::stdout().lock();
        for r in reports {
            let _ = write!(out, "{}", r.render());
        }
    }
    let Some(path) = json else { return Ok(()) };
    let value = if reports.len() == 1 {
        serde_json::to_value(&reports[0])
    } else {
        serde_json::to_value(reports)
    }
    .map_err(|e| e.to_string())?;
    if to_stdout {
        let text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
        println!("{text}");
        Ok(())
    } else {
        write_json(path, &value).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn exit_with(failures: usize) -> ExitCode {
    ExitCode::from(failures.min(255) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiments, args) = match cli.command {
        Command::DeltaNorm(a) => (vec![Experiment::DeltaNorm], a),
        Command::EigenCovariance(a) => (vec![Experiment::EigenCovariance], a),
        Command::Invariants(a) => (vec![Experiment::Invariants], a),
        Command::All(a) => {
            if a.n.is_some() {
                eprintln!("error: `all` runs each experiment at its own default n");
                return ExitCode::from(2);
            }
            (Experiment::ALL.to_vec(), a)
        }
        Command::Validate { paths } => {
            let mut failures = 0;
            for p in &paths {
                let outcome = std::fs::read_to_string(p)
                    .map_err(|e| e.to_string())
                    .and_then(|t| validate_document(&t).map_err(|e| e.to_string()));
                match outcome {
                    Ok(desc) => println!("ok    {}: {desc}", p.display()),
                    Err(e) => {
                        println!("error {}: {e}", p.display());
                        failures += 1;
                    }
                }
            }
            return exit_with(failures);
        }
    };
    let reports = match run_all(&experiments, &args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&reports, args.json.as_ref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    exit_with(reports.iter().map(ExperimentReport::failures).sum())
}
