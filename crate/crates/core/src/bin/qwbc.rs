use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qwbc::experiment::{emit_summary, run_all, ExperimentConfig, ExperimentError, MassLevel, ScenarioKind, Selection};

#[derive(Parser)]
#[command(name = "qwbc", version, about = "Whole-body impedance control scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario family; unset selectors expand to every value.
    Run {
        /// stand-step-base-inertia, stand-step-arm-inertia, stand-chirp or trot
        scenario: String,
        /// Apparent-mass level of the varied body (low, nominal, high)
        #[arg(long)]
        mass: Option<MassLevel>,
        /// Trot gait pattern 1..=4
        #[arg(long)]
        gp: Option<usize>,
        /// Trot end-effector apparent mass (low, high)
        #[arg(long)]
        ee_inertia: Option<MassLevel>,
        /// Directory for per-run CSV logs and summary.csv
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// TOML file overriding the defaults
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the registered scenario families.
    List,
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::List => {
            for k in ScenarioKind::ALL {
                println!("{k}");
            }
            Ok(())
        }
        Command::DefaultConfig => {
            let text = toml::to_string(&ExperimentConfig::default()).map_err(|e| ExperimentError::Config(e.to_string()))?;
            print!("{text}");
            Ok(())
        }
        Command::Run {
            scenario,
            mass,
            gp,
            ee_inertia,
            out,
            config,
        } => {
            let cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            let kind: ScenarioKind = scenario.parse()?;
            let scenarios = cfg.scenarios(kind, &Selection { mass, gp, ee_inertia })?;
            let results = run_all(&cfg, &scenarios, Some(&out))?;
            let path = out.join("summary.csv");
            let file = File::create(&path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
            emit_summary(BufWriter::new(file), &results)?;
            emit_summary(std::io::stdout().lock(), &results)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
