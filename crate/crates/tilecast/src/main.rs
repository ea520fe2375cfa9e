use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tilecast::cli::{self, CliError};

/// Access-pattern analysis, dataflow design resolution, IR emission, and
/// functional simulation for a modeled NPU tile array.
#[derive(Parser)]
#[command(name = "tilecast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a design manifest and print its textual IR.
    Emit {
        /// Manifest path or built-in design name.
        design: String,
        /// `sequential` or `none` (fully manual placement).
        #[arg(long, default_value = "sequential")]
        placer: String,
        /// Device preset (npu1col1..npu1col4) or @profile.json.
        #[arg(long)]
        device: Option<String>,
    },
    /// Resolve and simulate a design against host buffers.
    Run {
        design: String,
        #[arg(long, default_value = "sequential")]
        placer: String,
        #[arg(long)]
        device: Option<String>,
        /// Input file (.bin little-endian or .csv) per fill buffer, in
        /// ascending buffer order.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        /// Directory for output buffers (buf<k>.bin).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Use a seeded random actor schedule instead of round-robin.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render the access order/count map of a tap, tase, or tiler spec.
    Viz {
        /// Tap or tase spec JSON (omit when using --tiler).
        tap: Option<PathBuf>,
        /// Tiler spec JSON to generate the pattern sequence from.
        #[arg(long)]
        tiler: Option<PathBuf>,
        #[arg(long, default_value = "count")]
        kind: String,
        /// `ansi`, `csv`, or `pgm`.
        #[arg(long, default_value = "ansi")]
        format: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare two access patterns (JSON specs) or two .tir designs.
    Equiv { a: PathBuf, b: PathBuf },
    /// Resolve a design and print the placement grid and assignments.
    Place {
        design: String,
        #[arg(long, default_value = "sequential")]
        placer: String,
        #[arg(long)]
        device: Option<String>,
    },
    /// List or show the built-in design corpus.
    Designs {
        #[command(subcommand)]
        action: DesignsAction,
    },
}

#[derive(Subcommand)]
enum DesignsAction {
    /// List built-in design names.
    List,
    /// Print a built-in design manifest.
    Show { name: String },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Emit {
            design,
            placer,
            device,
        } => cli::cmd_emit(&mut out, &design, &placer, device.as_deref()),
        Command::Run {
            design,
            placer,
            device,
            inputs,
            out: out_dir,
            seed,
        } => cli::cmd_run(
            &mut out,
            &design,
            &placer,
            device.as_deref(),
            &inputs,
            &out_dir,
            seed,
        ),
        Command::Viz {
            tap,
            tiler,
            kind,
            format,
            output,
        } => cli::cmd_viz(
            &mut out,
            tap.as_deref(),
            tiler.as_deref(),
            &kind,
            &format,
            output.as_deref(),
        ),
        Command::Equiv { a, b } => cli::cmd_equiv(&mut out, &a, &b),
        Command::Place {
            design,
            placer,
            device,
        } => cli::cmd_place(&mut out, &design, &placer, device.as_deref()),
        Command::Designs { action } => match action {
            DesignsAction::List => cli::cmd_designs_list(&mut out),
            DesignsAction::Show { name } => cli::cmd_designs_show(&mut out, &name),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(cli::EXIT_OK as u8),
        Err(err) => {
            eprintln!("error[{}]: {}", err.code, err.message);
            ExitCode::from(err.exit as u8)
        }
    }
}
