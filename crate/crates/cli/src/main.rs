use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdwlab_cli::{run, CliError, Command, RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "vdwlab", version, about = "Van der Waals asymptotics of pseudo-relativistic model atoms")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct CommandArgs {
    /// Flat JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single remainder order, shorthand for `--orders k`.
    #[arg(long, conflicts_with = "orders")]
    k: Option<usize>,
    #[command(flatten)]
    raw: RawConfig,
}

#[derive(Subcommand)]
enum Sub {
    /// Low-lying spectrum of one atom in a symmetry sector.
    AtomSolve(CommandArgs),
    /// Two-atom dispersion coefficient a₁ (C6).
    VdwC6(CommandArgs),
    /// Two-atom coefficients a₁ and a₂ (C6, C8).
    VdwC8(CommandArgs),
    /// Three-body coefficient a₃ (C9) of an equilateral triangle.
    VdwC9(CommandArgs),
    /// Dimer interaction energy over a range of separations with power fits.
    DimerScan(CommandArgs),
    /// Fourier form of the kinetic energy against its singular-kernel form.
    VerifyKernel(CommandArgs),
    /// Localization error of the kinetic energy under a smooth partition.
    VerifyLocalization(CommandArgs),
    /// Multipole identities and remainder decay.
    VerifyMultipole(CommandArgs),
    /// Inner products that must vanish in the dispersion calculation.
    VerifyOrthogonality(CommandArgs),
    /// Exponential decay of bound states.
    VerifyDecay(CommandArgs),
    /// Binding ladder and Weyl-sequence probe of a two-electron atom.
    VerifyIonization(CommandArgs),
}

impl Sub {
    fn split(self) -> (Command, CommandArgs) {
        match self {
            Sub::AtomSolve(a) => (Command::AtomSolve, a),
            Sub::VdwC6(a) => (Command::VdwC6, a),
            Sub::VdwC8(a) => (Command::VdwC8, a),
            Sub::VdwC9(a) => (Command::VdwC9, a),
            Sub::DimerScan(a) => (Command::DimerScan, a),
            Sub::VerifyKernel(a) => (Command::VerifyKernel, a),
            Sub::VerifyLocalization(a) => (Command::VerifyLocalization, a),
            Sub::VerifyMultipole(a) => (Command::VerifyMultipole, a),
            Sub::VerifyOrthogonality(a) => (Command::VerifyOrthogonality, a),
            Sub::VerifyDecay(a) => (Command::VerifyDecay, a),
            Sub::VerifyIonization(a) => (Command::VerifyIonization, a),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("VDWLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("VDWLAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Computation(e.to_string()))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let (command, args) = cli.command.split();
    let mut flags = args.raw;
    if let Some(k) = args.k {
        flags.orders = Some(vec![k]);
    }
    let raw = match &args.config {
        Some(path) => RawConfig::from_file(path)?.overlaid(flags),
        None => flags,
    };
    let config = RunConfig::resolve(command, raw)?;
    let out = run(&config)?;
    println!("{}", out.summary_path.display());
    Ok(out.exit_code(command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let report = serde_json::json!({"error": {"category": e.category(), "message": e.to_string()}});
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
