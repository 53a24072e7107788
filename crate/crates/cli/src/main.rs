use std::path::PathBuf;
use std::process::ExitCode;

use bubblelab_cli::{run, Command, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bubblelab", version, about = "Energy and curvature diagnostics for harmonic spheres")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Density field of a single map: density.csv plus summary statistics.
    Density(Common),
    /// Pointwise identities, Bochner refinement, conformal invariance,
    /// ramification bound and energy bounds of a single map.
    Verify(Common),
    /// Bubble tree of a map family: tree JSON plus partition.csv.
    Bubble(Common),
    /// Potential estimates on the unit disk.
    Riesz(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Grid resolution. density: samples per chart axis (default 64);
    /// verify, bubble: radial quadrature nodes per chart (defaults 512, 128);
    /// riesz: radial cells of the disk grid (default 64).
    #[arg(long)]
    grid: Option<usize>,
    /// Comma separated family indices (default 4,8,16,32,64).
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<usize>>,
    /// Output directory (default: the scenario's output.dir, else ./out).
    #[arg(long)]
    out: Option<String>,
    /// Add the wall-clock runtime to the JSON report.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.command {
        Cmd::Density(c) => (Command::Density, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Bubble(c) => (Command::Bubble, c),
        Cmd::Riesz(c) => (Command::Riesz, c),
    };
    let ov = Overrides {
        grid: c.grid,
        schedule: c.schedule,
        out: c.out,
    };
    match run(cmd, &c.scenario, &ov, c.timing) {
        Ok((code, text)) => {
            print!("{text}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
