//! `popdyn` — projection runs, verification suites, convergence studies and
//! comparison reports for the two-sex age-structured population solver.

mod convergence;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use popdyn::analysis::error_norms;
use popdyn::dataio::{export_results, load_population, ScenarioConfig};
use popdyn::pipeline::run_scenario;
use popdyn::{Error, Sex, SexPair};

#[derive(Parser)]
#[command(name = "popdyn", version, about = "Two-sex age-structured population projection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full projection described by a scenario file and export CSVs.
    Project {
        /// Scenario file (INI-style key = value).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scheme parameter theta in [0, 1].
        #[arg(long)]
        theta: Option<f64>,
        /// Override the time step (years).
        #[arg(long)]
        tau: Option<f64>,
        /// Override the age step (years).
        #[arg(long)]
        h: Option<f64>,
    },
    /// Run the offline property suites (summation by parts, operator
    /// equivalence, dissipativity, energy decay) and print a pass/fail table.
    Verify,
    /// Self-convergence study on a smooth manufactured scenario.
    Convergence {
        /// Number of refinement levels (>= 2).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Scheme parameter; 1 = implicit Euler, 0.5 = Crank-Nicolson.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Refine the time step only, keeping the age grid fixed fine.
        #[arg(long)]
        tau_only: bool,
    },
    /// Compare a simulated population CSV against a reported one.
    Compare {
        #[arg(long)]
        simulated: PathBuf,
        #[arg(long)]
        reported: PathBuf,
    },
}

/// 1 = input/config error, 2 = numerical failure, 3 = verification failure.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::FactorizationFailed { .. } => 2,
        _ => 1,
    }
}

fn project(
    config: &PathBuf,
    out: Option<PathBuf>,
    theta: Option<f64>,
    tau: Option<f64>,
    h: Option<f64>,
) -> Result<(), Error> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(theta) = theta {
        cfg.theta = theta;
    }
    if let Some(tau) = tau {
        cfg.tau = tau;
    }
    if let Some(h) = h {
        cfg.h = h;
    }
    if let Some(out) = out {
        cfg.out_dir = Some(out);
    }
    let out_dir = cfg.out_dir.clone().ok_or_else(|| {
        Error::invalid_argument("no output directory: set `out_dir` in the config or pass --out")
    })?;

    let run = run_scenario(&cfg)?;
    let s = run.stability;
    match s.tau_bar {
        Some(tau_bar) => {
            println!("omega0 = {}, tau_bar = {}", s.omega0, tau_bar);
            if !s.satisfied {
                eprintln!(
                    "warning: tau = {} exceeds tau_bar = {tau_bar}; the sufficient stability \
                     bound does not apply (proceeding)",
                    s.tau
                );
            }
        }
        None => {
            println!("omega0 = {}", s.omega0);
            eprintln!(
                "warning: theta = {} < 1/2 has no sufficient stability bound (proceeding)",
                cfg.theta
            );
        }
    }

    let files = export_results(&run.bundle, &out_dir)?;
    println!("wrote {} files to {}", files.len(), out_dir.display());
    for (year, series) in &run.bundle.years {
        println!(
            "{year}: male {:.0}, female {:.0}",
            series.male.total(),
            series.female.total()
        );
    }
    Ok(())
}

fn compare(simulated: &PathBuf, reported: &PathBuf) -> Result<(), Error> {
    let sim = load_population(simulated)?;
    let rep = load_population(reported)?;
    let sim_vals = SexPair::new(sim.male.values.clone(), sim.female.values.clone());
    let rep_vals = SexPair::new(rep.male.values.clone(), rep.female.values.clone());
    let report = error_norms(&sim_vals, &rep_vals)?;

    println!("totals (reported vs simulated):");
    for sex in Sex::BOTH {
        let r = rep.get(sex).total();
        let s = sim.get(sex).total();
        let rel = if r != 0.0 { (s - r).abs() / r } else { 0.0 };
        println!("  {sex}: {r:.0} vs {s:.0} ({:.2}%)", 100.0 * rel);
    }
    println!("errors per norm (absolute / relative):");
    println!("  sex       L1                L2                Linf");
    for sex in Sex::BOTH {
        let e = report.per_sex.get(sex);
        println!(
            "  {sex}   {:.6e} / {:.4}%   {:.6e} / {:.4}%   {:.6e} / {:.4}%",
            e.l1_abs,
            100.0 * e.l1_rel,
            e.l2_abs,
            100.0 * e.l2_rel,
            e.linf_abs,
            100.0 * e.linf_rel
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<u8, Error> = match &cli.command {
        Command::Project {
            config,
            out,
            theta,
            tau,
            h,
        } => project(config, out.clone(), *theta, *tau, *h).map(|_| 0),
        Command::Verify => Ok(if verify::run_all() { 0 } else { 3 }),
        Command::Convergence {
            levels,
            theta,
            tau_only,
        } => {
            if *levels < 2 {
                eprintln!("error: --levels must be at least 2");
                return ExitCode::from(1);
            }
            convergence::run(*levels, *theta, *tau_only).map(|_| 0)
        }
        Command::Compare {
            simulated,
            reported,
        } => compare(simulated, reported).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
