use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quiltfloer::par::Strategy;
use quiltfloer::runner::{self, RunOptions, TwistReading};
use quiltfloer::scenario;

#[derive(Parser)]
#[command(
    name = "quiltfloer",
    version,
    about = "Floer complexes of curves on square-tiled surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario and print its report.
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one SVG per complex into this directory.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Validate a scenario without enumerating discs.
    Check {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// List the bundled scenarios.
    List,
}

#[derive(Args)]
struct Common {
    /// Bound on the universal-cover search.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Search for discs even on curves without an embedded-lift certificate.
    #[arg(long)]
    allow_unverified_admissibility: bool,
    /// How twist maps are read: `shear` or `reglue`.
    #[arg(long, default_value = "shear", value_parser = parse_twist)]
    twist_reading: TwistReading,
    /// Evaluate sequentially.
    #[arg(long)]
    sequential: bool,
}

fn parse_twist(s: &str) -> Result<TwistReading, String> {
    TwistReading::parse(s).ok_or_else(|| format!("expected `shear` or `reglue`, got `{s}`"))
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            depth: self.depth,
            allow_unverified: self.allow_unverified_admissibility,
            twist: self.twist_reading,
            strategy: if self.sequential {
                Strategy::Sequential
            } else {
                Strategy::Parallel
            },
            svg: false,
        }
    }
}

fn load(arg: &str) -> Result<String, String> {
    let path = Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"));
    }
    scenario::bundled(arg)
        .map(str::to_string)
        .ok_or_else(|| format!("{arg}: no such file or bundled scenario"))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out, svg_dir) = match &cli.command {
        Command::List => {
            for name in scenario::BUNDLED {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run {
            scenario,
            common,
            out,
            svg,
        } => {
            let text = match load(scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions {
                svg: svg.is_some(),
                ..common.options()
            };
            (runner::run(&text, &opts), out.clone(), svg.clone())
        }
        Command::Check { scenario, common } => {
            let text = match load(scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            (runner::check(&text, &common.options()), None, None)
        }
    };
    let written = (|| {
        match &out {
            Some(p) => write(p, &outcome.report)?,
            None => print!("{}", outcome.report),
        }
        if let Some(dir) = svg_dir {
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for (name, body) in &outcome.svgs {
                write(&dir.join(name), body)?;
            }
        }
        Ok::<(), String>(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status.exit_code() as u8)
}
