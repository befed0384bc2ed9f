use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use regge_core::harness::{self, Interpolant, Mode, RunConfig};
use regge_core::hhj::SolverKind;

#[derive(Parser)]
#[command(name = "regge-curv", about = "Convergence studies for the distributional scalar curvature of Regge metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a refinement sweep and write the rows as CSV.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpArg {
    Average,
    Canonical,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Curvature,
    Critical,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Direct,
    Minres,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    dim: usize,
    /// Polynomial degree r of the Regge interpolant.
    #[arg(long)]
    degree: usize,
    #[arg(long, value_enum, default_value = "average")]
    interp: InterpArg,
    #[arg(long)]
    kmin: u32,
    #[arg(long)]
    kmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "curvature")]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Extra exactness of the metric-dependent quadrature.
    #[arg(long, default_value_t = 0)]
    quad_bump: usize,
    #[arg(long, value_enum, default_value = "direct")]
    solver: SolverArg,
    /// Regge DOF count above which a level triggers a warning.
    #[arg(long, default_value_t = 2_000_000)]
    dof_budget: usize,
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let mut config = RunConfig::new(
        args.dim,
        args.degree,
        match args.interp {
            InterpArg::Average => Interpolant::Average,
            InterpArg::Canonical => Interpolant::Canonical,
        },
        args.kmin,
        args.kmax,
    );
    config.seed = args.seed;
    config.mode = match args.mode {
        ModeArg::Curvature => Mode::Curvature,
        ModeArg::Critical => Mode::Critical,
    };
    config.quad_bump = args.quad_bump;
    config.solver = match args.solver {
        SolverArg::Direct => SolverKind::Direct,
        SolverArg::Minres => SolverKind::Minres,
    };
    config.dof_budget = args.dof_budget;

    let sweep = harness::run(&config);
    for w in &sweep.warnings {
        eprintln!("warning: {w}");
    }
    // completed rows are written even when a later level fails
    if let Err(e) = harness::emit_csv(&sweep.rows, &args.out) {
        eprintln!("error: writing {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }
    for r in &sweep.rows {
        let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
        println!("k={:<2} h={:.3e} ndof={:<9} error={:.3e} order={order}", r.k, r.h, r.ndof, r.error);
    }
    match sweep.failure {
        None => ExitCode::SUCCESS,
        Some((k, e)) => {
            eprintln!("error: level {k}: {e}");
            ExitCode::FAILURE
        }
    }
}
