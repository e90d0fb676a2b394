use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scenegen_cli::{
    cmd_generate, cmd_info, cmd_render, cmd_serve, ActionSourceSpec, BatchConfig, CliError, Layer,
};

#[derive(Parser)]
#[command(name = "scenegen", about = "Scenario-driven synthetic driving data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile scenarios, run seeded simulations, and write a dataset.
    Generate {
        /// JSON batch config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario file(s); may be given multiple times.
        #[arg(long = "scenario")]
        scenarios: Vec<PathBuf>,
        /// World file overriding the scenarios' own references.
        #[arg(long)]
        world: Option<PathBuf>,
        /// Simulated seconds per run.
        #[arg(long)]
        duration: Option<f64>,
        /// Runs per scenario.
        #[arg(long)]
        runs: Option<u32>,
        /// Base seed; per-run seeds derive from it and the program hash.
        #[arg(long)]
        seed: Option<u64>,
        /// Dataset output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Capture sensors every N simulation steps.
        #[arg(long = "capture-every")]
        capture_every: Option<u32>,
        /// Drive behaviors over the step protocol: tcp://host:port.
        #[arg(long = "action-source")]
        action_source: Option<String>,
    },
    /// Render stored frame layers to PPM images.
    Render {
        /// Run directory.
        #[arg(long)]
        run: PathBuf,
        /// Frame index.
        #[arg(long)]
        frame: u32,
        /// Layer(s): boxes2d, boxes3d, depth, semseg, lidar-bev.
        #[arg(long = "layer", required = true)]
        layers: Vec<Layer>,
        /// Output file (single layer) or directory (multiple layers).
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a dataset: runs, frames, per-class point and box counts.
    Info {
        dataset: PathBuf,
    },
    /// Serve one behavior session over the step protocol.
    Serve {
        /// Listen address, host:port.
        #[arg(long)]
        listen: String,
        scenario: PathBuf,
        #[arg(long)]
        world: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            config,
            scenarios,
            world,
            duration,
            runs,
            seed,
            out,
            capture_every,
            action_source,
        } => {
            let mut cfg = match config {
                Some(path) => BatchConfig::load(&path)?,
                None => BatchConfig::default(),
            };
            if !scenarios.is_empty() {
                cfg.scenarios = scenarios;
            }
            if world.is_some() {
                cfg.world = world;
            }
            if let Some(d) = duration {
                cfg.duration = d;
            }
            if let Some(r) = runs {
                cfg.runs_per_scenario = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(c) = capture_every {
                cfg.capture_every_n_steps = c;
            }
            let source = ActionSourceSpec::parse(action_source.as_deref())?;
            let summary = cmd_generate(&cfg, &source)?;
            println!("{}", summary.line());
            Ok(if summary.failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Render {
            run,
            frame,
            mut layers,
            out,
        } => {
            layers.sort();
            layers.dedup();
            cmd_render(&run, frame, &layers, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Info { dataset } => {
            print!("{}", cmd_info(&dataset)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            listen,
            scenario,
            world,
        } => {
            let summary = cmd_serve(&listen, &scenario, world.as_deref())?;
            eprintln!("session ended after {} steps ({})", summary.steps, summary.reason);
            Ok(ExitCode::SUCCESS)
        }
    }
}
