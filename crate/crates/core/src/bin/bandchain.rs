use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bandchain::cli::{run, run_reproduction_suite, Mode, Overrides, Preset, RunConfig, RunOutcome};
use bandchain::Error;

#[derive(Parser)]
#[command(name = "bandchain", version, about = "Band reduction and dynamics of multi-atom, multimode Dicke systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce the coupling matrix to band form and validate it.
    Transform(RunArgs),
    /// Exact RK4 evolution in the truncated Fock space.
    Exact(RunArgs),
    /// TEBD evolution of the band Hamiltonian.
    Mps(RunArgs),
    /// Diff two sub-runs of the same config.
    Compare(RunArgs),
    /// Reproduce a figure: fig4, fig5, fig7-psi1, fig7-psi2, fig7-psi3.
    Repro {
        preset: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nf: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    chi_max: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            fock_cutoff: self.nf,
            dt: self.dt,
            steps: self.steps,
            chi_max: self.chi_max,
            cutoff: self.cutoff,
            seed: self.seed,
            output_dir: self.out.clone(),
        }
    }
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::DimensionTooLarge { .. } | Error::GateTooLarge { .. } => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn configured(args: &RunArgs, mode: Mode) -> Result<bool, Error> {
    let mut config = RunConfig::from_path(&args.config)?;
    config.mode = mode;
    args.common.overrides().apply(&mut config);
    let resolved = config.resolve()?;
    let outcome = run(&resolved, args.common.quiet)?;
    if !args.common.quiet {
        match &outcome {
            RunOutcome::Transform(t) => println!("{}", serde_json::to_string_pretty(&t.summary)?),
            RunOutcome::Compare(r) => print!("{}", r.summary()),
            RunOutcome::Exact(t) => println!("{} samples written to {}", t.len(), resolved.output_dir().display()),
            RunOutcome::Mps(m) => {
                println!("{} samples written to {}", m.series.len(), resolved.output_dir().display())
            }
        }
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Transform(a) => configured(a, Mode::Transform),
        Command::Exact(a) => configured(a, Mode::Exact),
        Command::Mps(a) => configured(a, Mode::Mps),
        Command::Compare(a) => configured(a, Mode::Compare),
        Command::Repro { preset, common } => preset.parse::<Preset>().and_then(|p| {
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out").join(p.name()));
            let report = run_reproduction_suite(&p, &common.overrides(), &out, common.quiet)?;
            if !common.quiet {
                print!("{}", report.summary());
            }
            Ok(report.pass)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
