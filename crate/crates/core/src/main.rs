use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcvd::runner::{self, config::parse_assignment, ConfigFile, Experiment, Params, RunRequest, Severity};
use mcvd::Error;

#[derive(Parser)]
#[command(
    name = "mcvd",
    version,
    about = "Molecular communication via diffusion with degrading messengers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its CSV files and manifest.
    Run {
        experiment: String,
        /// Override a parameter (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory [default: out/<experiment>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Flat key = value file applied before --set.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
    /// List experiments and their default parameters.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("MCVD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mcvd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> mcvd::Result<ExitCode> {
    match command {
        Command::Run {
            experiment,
            set,
            out,
            seed,
            config,
        } => {
            let mut overrides = Vec::new();
            let mut experiment_name = Some(experiment);
            if let Some(path) = config {
                let file = ConfigFile::parse(&std::fs::read_to_string(&path)?)?;
                if let (Some(named), Some(given)) = (file.experiment, experiment_name.as_deref()) {
                    if named.name() != given {
                        return Err(Error::Config(format!(
                            "{} names experiment {named}, but {given} was requested",
                            path.display()
                        )));
                    }
                }
                overrides.extend(file.overrides);
                experiment_name = experiment_name.or(file.experiment.map(|e| e.name().to_string()));
            }
            let experiment: Experiment = experiment_name.unwrap_or_default().parse()?;
            for pair in &set {
                let (k, v) = parse_assignment(pair)
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{pair}`")))?;
                overrides.push((k.to_string(), v.to_string()));
            }
            if let Some(s) = seed {
                overrides.push(("seed".into(), s.to_string()));
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
            let request = RunRequest {
                experiment,
                overrides,
                out_dir,
            };
            let manifest = runner::run(&request)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for o in &manifest.outputs {
                println!(
                    "{}  {} ({} rows)",
                    o.sha256,
                    request.out_dir.join(&o.file).display(),
                    o.rows
                );
            }
            println!("{:.3} s", manifest.wall_time_s);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let (experiment, diags) = runner::validate_file(&config)?;
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Ok(ExitCode::from(2));
            }
            println!("{experiment}: ok");
            Ok(ExitCode::SUCCESS)
        }
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<24} {}", e.name(), e.description());
                for (k, v) in Params::defaults(e).entries() {
                    let v = if v.len() > 60 { format!("{}...", &v[..57]) } else { v };
                    println!("    {k:<20} {v}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
