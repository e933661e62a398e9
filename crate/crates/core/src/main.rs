use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bundle_extra::experiment::{cmd_run, cmd_sweep, ExperimentSpec, SNAPSHOT_FILE, SWEEP_FILE};

#[derive(Parser)]
#[command(version, about = "Run EXTRA and bundle EXTRA on a simulated agent network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every arm at one step size and write a trajectory CSV per arm.
    Run(Common),
    /// Run every arm over the step-size list and write sweep.csv.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` experiment file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self) -> bundle_extra::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(out) = &self.out {
            spec.output = out.clone();
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if self.threads.is_some() {
            spec.threads = self.threads;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => c.spec().and_then(|spec| {
            for arm in cmd_run(&spec)? {
                let last = arm.output.final_metrics();
                println!(
                    "{}: k={} rel_error={:e}{} -> {}",
                    arm.algorithm.label(),
                    last.k,
                    last.rel_error,
                    if arm.output.diverged { " (diverged)" } else { "" },
                    arm.path.display()
                );
            }
            println!("snapshot -> {}", spec.output.join(SNAPSHOT_FILE).display());
            Ok(())
        }),
        Command::Sweep(c) => c.spec().and_then(|spec| {
            let rows = cmd_sweep(&spec)?;
            let reached = rows.iter().filter(|r| r.iters_to_tol.is_some()).count();
            println!(
                "{reached}/{} points reached tol -> {}",
                rows.len(),
                spec.output.join(SWEEP_FILE).display()
            );
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
