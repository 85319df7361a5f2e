use bdflow::constitutive::FluidModel;
use bdflow::formulations::identity_residuals;
use bdflow::runner::{check, execute, parse_config};
use bdflow::selftest::all_criteria;
use bdflow::spectral_grid::make_grid;
use clap::{Parser, Subcommand};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

/// Pseudo-spectral solver and analysis certificates for barotropic
/// compressible flow with density-dependent viscosity.
#[derive(Parser)]
#[command(name = "bdflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config and write artifacts.
    Run { config: PathBuf },
    /// Recompute the estimate certificates for a completed run.
    Check { config: PathBuf },
    /// Print the structural identity residuals on reference states.
    Identities,
    /// Run the full acceptance suite.
    Selftest,
}

fn load_config(path: &PathBuf) -> Result<bdflow::runner::RunConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return Err(ExitCode::from(1));
        }
    };
    match parse_config(&text) {
        Ok(cfg) => Ok(cfg),
        Err(errors) => {
            for e in errors {
                eprintln!("config error: {e}");
            }
            Err(ExitCode::from(1))
        }
    }
}

fn identities() -> ExitCode {
    let mut worst: f64 = 0.0;
    println!("{:<4} {:>12} {:>12} {:>12} {:>14}", "dim", "mass", "divergence", "curl", "reconstruction");
    for (dim, n) in [(2usize, 64usize), (3, 32)] {
        let grid = make_grid(dim, n, 2.0 * PI).expect("valid reference grid");
        let model = FluidModel::new(0.8, 2.0, 2.0, 1.0, dim).expect("valid reference model");
        let state = bdflow::runner::scenario_init(
            &bdflow::runner::ScenarioSpec {
                name: "manufactured".into(),
                amplitude: 0.05,
                seed: 0,
            },
            &grid,
            &model,
        )
        .expect("reference state");
        match identity_residuals(&model, &state) {
            Ok(res) => {
                println!(
                    "{:<4} {:>12.3e} {:>12.3e} {:>12.3e} {:>14.3e}",
                    dim, res.mass, res.divergence, res.curl, res.reconstruction
                );
                worst = worst.max(res.max());
            }
            Err(e) => {
                eprintln!("identity computation failed in dimension {dim}: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if worst < 1e-8 {
        println!("all residuals below 1e-8");
        ExitCode::SUCCESS
    } else {
        println!("residuals exceed 1e-8");
        ExitCode::from(2)
    }
}

fn selftest() -> ExitCode {
    let results = all_criteria();
    let mut all_pass = true;
    for r in &results {
        println!("{}", r.line());
        all_pass &= r.passed;
    }
    if all_pass {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("some criteria failed");
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match execute(&cfg) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Check { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match check(&cfg) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("check failed: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Identities => identities(),
        Command::Selftest => selftest(),
    }
}
