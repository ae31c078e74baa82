use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gpadams::{build_basis, coeffs, verify_propositions, Family};
use labcli::converge::{run_convergence, ConvergenceParams};
use labcli::ensemble::{run_ensemble, EnsembleParams};
use labcli::models;

#[derive(Parser)]
#[command(
    name = "labcli",
    version,
    about = "Derivation certification and experiment harness for the gpadams integrators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the scheme derivations against the classical tables.
    Derive {
        /// Run the certification (required; there is nothing else to do).
        #[arg(long)]
        check: bool,
        /// Largest explicit step count to certify (the implicit family is
        /// checked one order higher).
        #[arg(long, default_value_t = 5)]
        max_steps: usize,
    },
    /// Print a scheme's exact coefficients and truncation constant.
    Coeffs {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        steps: usize,
    },
    /// Dump a basis set as exact fractions (debugging aid).
    Basis {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        augmented: bool,
    },
    /// Run a seeded Monte Carlo ensemble and write trajectory/summary CSVs.
    Ensemble {
        #[arg(long)]
        model: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        probabilistic: Toggle,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a convergence study over step sizes and write report CSVs.
    Converge {
        #[arg(long)]
        model: String,
        #[arg(long = "steps-list", value_delimiter = ',', required = true)]
        steps_list: Vec<usize>,
        #[arg(long = "h-list", value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "probe-t")]
        probe_t: f64,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        probabilistic: Toggle,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Ab,
    Am,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Ab => Family::Ab,
            FamilyArg::Am => Family::Am,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn is_on(self) -> bool {
        self == Toggle::On
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's help/version paths are successes, everything else is usage
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let diverged = err
                .downcast_ref::<gpadams::Error>()
                .is_some_and(|e| matches!(
                    e,
                    gpadams::Error::Divergence { .. } | gpadams::Error::StepDiverged { .. }
                ));
            ExitCode::from(if diverged { EXIT_DIVERGED } else { EXIT_USAGE })
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Derive { check, max_steps } => {
            if !check {
                bail!("nothing to do: pass --check to run the certification");
            }
            let report = verify_propositions(max_steps)?;
            print!("{}", report.to_csv());
            if report.all_passed() {
                println!("all {} rows pass", report.rows.len());
                Ok(0)
            } else {
                println!("certification FAILED");
                Ok(EXIT_CHECK_FAILED)
            }
        }
        Command::Coeffs { family, steps } => {
            let family = Family::from(family);
            let betas = match family {
                Family::Ab => coeffs::ab_coefficients(steps)?,
                Family::Am => coeffs::am_coefficients(steps)?,
            };
            for beta in &betas {
                println!("{beta}");
            }
            println!(
                "truncation_constant: {}",
                coeffs::truncation_constant(family, steps)?
            );
            Ok(0)
        }
        Command::Basis {
            family,
            steps,
            augmented,
        } => {
            let basis = build_basis(Family::from(family), steps, augmented)?;
            println!(
                "{} steps={} augmented={} scale_exponent={}",
                basis.family, basis.steps, basis.augmented, basis.alpha_exponent
            );
            for (i, p) in basis.phi.iter().enumerate() {
                println!("phi[{i}] = {p}");
            }
            for (i, p) in basis.phi_integral.iter().enumerate() {
                println!("Phi[{i}] = {p}");
            }
            Ok(0)
        }
        Command::Ensemble {
            model,
            steps,
            h,
            n,
            seed,
            t_end,
            probabilistic,
            out,
        } => {
            let spec = models::lookup(&model)?;
            let params = EnsembleParams {
                steps,
                h,
                n,
                seed,
                t0: 0.0,
                t_end,
                probabilistic: probabilistic.is_on(),
            };
            let record = run_ensemble(&spec, &params)?;
            record.write_outputs(&out)?;
            let diverged = record
                .replicates
                .iter()
                .filter(|r| r.status != labcli::ensemble::ReplicateStatus::Completed)
                .count();
            let mean_ms = record
                .wall_clock
                .iter()
                .map(|d| d.as_secs_f64() * 1e3)
                .sum::<f64>()
                / record.wall_clock.len().max(1) as f64;
            println!(
                "{model}: {} replicates ({diverged} diverged), mean {mean_ms:.2} ms each, CSVs in {}",
                record.replicates.len(),
                out.display()
            );
            Ok(0)
        }
        Command::Converge {
            model,
            steps_list,
            h_list,
            n,
            seed,
            probe_t,
            probabilistic,
            out,
        } => {
            let spec = models::lookup(&model)?;
            let params = ConvergenceParams {
                steps_list,
                h_list,
                n,
                seed,
                probe_t,
                probabilistic: probabilistic.is_on(),
            };
            let report = run_convergence(&spec, &params)?;
            report.write_outputs(&out)?;
            for fit in &report.slopes {
                println!(
                    "steps={}: slope {:.3} (stderr {:.3}){}",
                    fit.steps,
                    fit.slope,
                    fit.stderr,
                    if fit.floor_limited { " [floor-limited]" } else { "" }
                );
            }
            println!("CSVs in {}", out.display());
            Ok(0)
        }
    }
}
