use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qstructure::numerics::Tolerances;
use qstructure_cli::examples::{self, ExampleParams};
use qstructure_cli::report::{self, Suite};
use qstructure_cli::{Failure, Options, text};

#[derive(Parser)]
#[command(name = "qstructure", version, about = "Structure analysis of finite-dimensional quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// Equality tolerance; the rank and peripheral thresholds scale with it.
    #[arg(long, default_value_t = Tolerances::default().eq_tol)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest power in the table of fixed-point dimensions.
    #[arg(long, default_value_t = Options::default().max_power)]
    max_power: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            tol: Tolerances::default().scaled(self.tol),
            seed: self.seed,
            max_power: self.max_power,
            ..Options::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a channel or OQRW file.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every property suite against one input; exit 0 iff all pass.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a named example as channel or OQRW JSON.
    Example {
        /// One of: pauli, clocked-pauli, cyclic-shift, nn-cycle, random-oqrw, identity, unitary-mixture.
        name: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of vertices (nn-cycle, random-oqrw).
        #[arg(long)]
        n: Option<usize>,
        /// Local dimension (cyclic-shift) or its maximum (random-oqrw).
        #[arg(long)]
        h: Option<usize>,
        /// Clock length of the clocked Pauli walk.
        #[arg(long)]
        clock: Option<usize>,
        /// Number of unitaries in a unitary mixture.
        #[arg(long)]
        k: Option<usize>,
        /// nn-cycle preset: special-basis or generic.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => qstructure_cli::write_atomic(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_report(input: &PathBuf, common: &Common, suite: Suite) -> Result<i32, Failure> {
    let opts = common.options();
    let text_in = std::fs::read_to_string(input).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let parsed = match suite {
        Suite::Core => qstructure_cli::load_text(&text_in, &opts.tol)?,
        Suite::Full => report::load_lenient(&text_in, &opts.tol)?,
    };
    let r = report::analyze(&parsed, &opts, suite)?;
    let body = match (common.format, suite) {
        (Format::Json, _) => serde_json::to_string_pretty(&r).map_err(|e| Failure::Input(e.to_string()))? + "\n",
        (Format::Text, Suite::Core) => text::render(&r),
        (Format::Text, Suite::Full) => text::ledger(&r),
    };
    emit(&body, common.output.as_ref())?;
    Ok(qstructure_cli::report_exit_code(&r))
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Analyze { input, common } => run_report(&input, &common, Suite::Core),
        Command::Verify { input, common } => run_report(&input, &common, Suite::Full),
        Command::Example { name, d, alpha, n, h, clock, k, preset, seed, output } => {
            let params = ExampleParams { d, alpha, n, h, clock, k, preset, seed };
            let json = examples::build(&name, &params, &Tolerances::default())?;
            emit(&(json + "\n"), output.as_ref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qstructure: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
