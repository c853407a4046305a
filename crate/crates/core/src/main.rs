use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gvf::cli::{default_out_dir, load_scenario, reproduce, run_file, scan_file, sweep_file, CliError, Reproduction};

#[derive(Parser)]
#[command(name = "gvf", version, about = "Guiding vector field path-following simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv, report.json and plots.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also run the scenario's `sweep` section.
        #[arg(long)]
        sweep: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a built-in experiment: trefoil, lissajous3d, circle-impossibility, figure8-scan.
    Reproduce {
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Locate singular points of the scenario's field inside its `scan` box.
    Scan {
        scenario: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario from every start of its `sweep` section.
    Sweep {
        scenario: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn stem(path: &std::path::Path) -> String {
    path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            sweep,
            threads,
        } => {
            let file = load_scenario(&scenario)?;
            let out = out.unwrap_or_else(|| default_out_dir(&stem(&scenario)));
            let report = run_file(&file, &out)?;
            let mut msg = format!(
                "{}: termination {}, final |e| = {:.3e}, wrote {}",
                report.scenario,
                report.termination.as_str(),
                report.final_error,
                out.display()
            );
            if sweep {
                let s = sweep_file(&file, Some(&out.join("sweep")), threads)?;
                msg.push_str(&format!("\nsweep: {}/{} converged", s.converged, s.count));
            }
            Ok(msg)
        }
        Command::Reproduce { name, out, threads } => {
            let out = out.unwrap_or_else(|| default_out_dir(&name));
            let msg = match reproduce(&name, &out, threads)? {
                Reproduction::Run(r) => format!(
                    "{name}: termination {}, final |e| = {:.3e}",
                    r.termination.as_str(),
                    r.final_error
                ),
                Reproduction::Scan(r) => format!("{name}: {} singular points {:?}", r.singular_points.len(), r.singular_points),
                Reproduction::Impossibility(r) => format!(
                    "{name}: origin stationary = {}, {}/{} random starts converged",
                    r.origin_stationary, r.converged, r.starts
                ),
            };
            Ok(format!("{msg}, wrote {}", out.display()))
        }
        Command::Scan { scenario, out } => {
            let file = load_scenario(&scenario)?;
            let out = out.unwrap_or_else(|| default_out_dir(&stem(&scenario)));
            let r = scan_file(&file, &out)?;
            Ok(format!("{} singular points {:?}, wrote {}", r.singular_points.len(), r.singular_points, out.display()))
        }
        Command::Sweep { scenario, out, threads } => {
            let file = load_scenario(&scenario)?;
            let out = out.unwrap_or_else(|| default_out_dir(&stem(&scenario)));
            let r = sweep_file(&file, Some(&out), threads)?;
            Ok(format!("{}/{} converged, wrote {}", r.converged, r.count, out.display()))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gvf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
