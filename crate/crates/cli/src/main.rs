mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "meit",
    version,
    about = "Shunt-model EIT simulation and monotonicity-based inclusion detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mesh as node, triangle and boundary-edge tables.
    Mesh(Common),
    /// Write DC, AC and modulated DC measurement matrices.
    Simulate(Common),
    /// Run the regularized definiteness test for the configured regions.
    Test {
        #[command(flatten)]
        common: Common,
        /// Only test the region with this name.
        #[arg(long)]
        region: Option<String>,
    },
    /// Sweep test balls over the domain.
    Scan(Common),
    /// Run the invariant suite and print one line per property.
    Verify(Common),
}

#[derive(Args, Clone)]
pub struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Refinement level, overriding `geometry.level`.
    #[arg(long)]
    mesh_level: Option<usize>,
    /// A number or `auto`.
    #[arg(long)]
    delta: Option<String>,
    /// A number or `max`.
    #[arg(long)]
    beta: Option<String>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Average R with its transpose before further use.
    #[arg(long)]
    symmetrize: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mesh(c) => commands::run(&c, |ctx| ctx.mesh_cmd()),
        Command::Simulate(c) => commands::run(&c, |ctx| ctx.simulate()),
        Command::Test { common, region } => {
            commands::run(&common, |ctx| ctx.test(region.as_deref()))
        }
        Command::Scan(c) => commands::run(&c, |ctx| ctx.scan()),
        Command::Verify(c) => commands::run(&c, |ctx| ctx.verify()),
    };
    if let Err(e) = result {
        let msg = format!("{e:#}").replace('\n', " ");
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
