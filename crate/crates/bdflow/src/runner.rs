//! Configuration, scenario construction and run orchestration.
//!
//! Configs are TOML documents with sections `[model]`, `[grid]`,
//! `[control]`, `[scenario]`, `[outputs]` and `[checks]`; see the
//! repository README for the full grammar. Runs emit snapshots, a time
//! series CSV and certificate JSONs into the configured directory.

use crate::constitutive::{FluidModel, ModelError, RHO_MIN};
use crate::diagnostics::{
    entropy_monotone_check, estimate_certificate, mass_drift, mass_total, smoothing_certificate,
    timeseries_csv, transport_contrast_certificate, CertificateKind, DiagnosticsError,
};
use crate::evolution::{run as evolve, StepControl, Trajectory};
use crate::formulations::{hybrid_to_effective, to_hybrid, EffectiveState, FormulationError};
use crate::littlewood_paley::{random_band_limited, Exponent};
use crate::spectral_grid::io::write_snapshot;
use crate::spectral_grid::{make_grid, Grid, ScalarField, VectorField};
use rand::SeedableRng;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{0}`: {1}")]
    BadValue(String, String),
    #[error("model invalid: {0}")]
    ModelInvalid(ModelError),
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario amplitude drives density to {0:.3e}, below the vacuum floor")]
    Vacuum(f64),
    #[error("dt {dt:.3e} violates the acoustic CFL bound {bound:.3e} at t = 0")]
    CflViolation { dt: f64, bound: f64 },
    #[error("{0}")]
    Formulation(#[from] FormulationError),
    #[error("{0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing run artifacts in {0}; run before check")]
    MissingArtifacts(PathBuf),
}

/// Scenario selector and parameters.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub amplitude: f64,
    pub seed: u64,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: FluidModel,
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    pub control: StepControl,
    pub scenario: ScenarioSpec,
    pub output_dir: PathBuf,
    pub snapshots: bool,
    pub checks: Vec<String>,
}

fn get_f64(
    table: &toml::Table,
    section: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<f64> {
    let path = format!("{section}.{key}");
    match table.get(section).and_then(|s| s.get(key)) {
        None => {
            errors.push(ConfigError::MissingKey(path));
            None
        }
        Some(v) => match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
            Some(x) => Some(x),
            None => {
                errors.push(ConfigError::BadValue(path, format!("expected number, got {v}")));
                None
            }
        },
    }
}

fn get_f64_or(table: &toml::Table, section: &str, key: &str, default: f64, errors: &mut Vec<ConfigError>) -> f64 {
    let path = format!("{section}.{key}");
    match table.get(section).and_then(|s| s.get(key)) {
        None => default,
        Some(v) => match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
            Some(x) => x,
            None => {
                errors.push(ConfigError::BadValue(path, format!("expected number, got {v}")));
                default
            }
        },
    }
}

fn get_usize(
    table: &toml::Table,
    section: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<usize> {
    let path = format!("{section}.{key}");
    match table.get(section).and_then(|s| s.get(key)) {
        None => {
            errors.push(ConfigError::MissingKey(path));
            None
        }
        Some(v) => match v.as_integer().filter(|&i| i >= 0) {
            Some(x) => Some(x as usize),
            None => {
                errors.push(ConfigError::BadValue(
                    path,
                    format!("expected non-negative integer, got {v}"),
                ));
                None
            }
        },
    }
}

fn get_str(
    table: &toml::Table,
    section: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<String> {
    let path = format!("{section}.{key}");
    match table.get(section).and_then(|s| s.get(key)) {
        None => {
            errors.push(ConfigError::MissingKey(path));
            None
        }
        Some(v) => match v.as_str() {
            Some(x) => Some(x.to_string()),
            None => {
                errors.push(ConfigError::BadValue(path, format!("expected string, got {v}")));
                None
            }
        },
    }
}

const KNOWN_SCENARIOS: [&str; 4] = ["v0_zero", "small_data", "large_data", "manufactured"];

fn default_amplitude(name: &str) -> f64 {
    match name {
        "v0_zero" => 0.1,
        "small_data" => 1e-3,
        "large_data" => 0.3,
        _ => 0.05,
    }
}

/// Parse and validate a TOML config, collecting every error rather than
/// stopping at the first.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(vec![ConfigError::BadValue("<document>".into(), e.to_string())]),
    };
    let mut errors = Vec::new();

    let mu = get_f64(&table, "model", "mu", &mut errors);
    let alpha = get_f64(&table, "model", "alpha", &mut errors);
    let gamma = get_f64(&table, "model", "gamma", &mut errors);
    let rho_ref = get_f64_or(&table, "model", "rho_ref", 1.0, &mut errors);

    let dim = get_usize(&table, "grid", "dim", &mut errors);
    let points = get_usize(&table, "grid", "points", &mut errors);
    let length = get_f64_or(&table, "grid", "length", 2.0 * std::f64::consts::PI, &mut errors);

    let dt = get_f64(&table, "control", "dt", &mut errors);
    let t_end = get_f64(&table, "control", "t_end", &mut errors);
    let record_every = match table.get("control").and_then(|s| s.get("record_every")) {
        None => 10,
        Some(v) => match v.as_integer().filter(|&i| i >= 1) {
            Some(x) => x as usize,
            None => {
                errors.push(ConfigError::BadValue(
                    "control.record_every".into(),
                    format!("expected positive integer, got {v}"),
                ));
                10
            }
        },
    };

    let scenario_name = get_str(&table, "scenario", "name", &mut errors);
    if let Some(name) = &scenario_name {
        if !KNOWN_SCENARIOS.contains(&name.as_str()) {
            errors.push(ConfigError::BadValue(
                "scenario.name".into(),
                format!("unknown scenario `{name}`"),
            ));
        }
    }
    let amplitude = get_f64_or(
        &table,
        "scenario",
        "amplitude",
        scenario_name.as_deref().map(default_amplitude).unwrap_or(0.0),
        &mut errors,
    );
    let seed = match table.get("scenario").and_then(|s| s.get("seed")) {
        None => 0,
        Some(v) => match v.as_integer().filter(|&i| i >= 0) {
            Some(x) => x as u64,
            None => {
                errors.push(ConfigError::BadValue(
                    "scenario.seed".into(),
                    format!("expected non-negative integer, got {v}"),
                ));
                0
            }
        },
    };

    let directory = get_str(&table, "outputs", "directory", &mut errors);
    let snapshots = table
        .get("outputs")
        .and_then(|s| s.get("snapshots"))
        .and_then(|v| v.as_bool())
        .unwrap_or(true);
    let checks: Vec<String> = table
        .get("checks")
        .and_then(|s| s.get("certificates"))
        .and_then(|v| v.as_array())
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_else(|| vec!["entropy".into(), "mass".into()]);

    // cross-field validation once the pieces exist
    let model = match (mu, alpha, gamma, dim) {
        (Some(mu), Some(alpha), Some(gamma), Some(dim)) => {
            match FluidModel::new(mu, alpha, gamma, rho_ref, dim) {
                Ok(m) => Some(m),
                Err(e) => {
                    errors.push(ConfigError::ModelInvalid(e));
                    None
                }
            }
        }
        _ => None,
    };
    if let (Some(dim), Some(points)) = (dim, points) {
        if let Err(e) = make_grid(dim, points, length) {
            errors.push(ConfigError::BadValue("grid".into(), e.to_string()));
        }
    }
    if let Some(dt) = dt {
        if dt <= 0.0 {
            errors.push(ConfigError::BadValue("control.dt".into(), "must be positive".into()));
        }
    }
    if let Some(t_end) = t_end {
        if t_end <= 0.0 {
            errors.push(ConfigError::BadValue(
                "control.t_end".into(),
                "must be positive".into(),
            ));
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(RunConfig {
        model: model.unwrap(),
        dim: dim.unwrap(),
        points: points.unwrap(),
        length,
        control: StepControl {
            dt: dt.unwrap(),
            t_end: t_end.unwrap(),
            record_every,
        },
        scenario: ScenarioSpec {
            name: scenario_name.unwrap(),
            amplitude,
            seed,
        },
        output_dir: PathBuf::from(directory.unwrap()),
        snapshots,
        checks,
    })
}

/// Build the initial state for a named scenario.
pub fn scenario_init(
    spec: &ScenarioSpec,
    grid: &Arc<Grid>,
    model: &FluidModel,
) -> Result<EffectiveState, RunnerError> {
    let a = spec.amplitude;
    let state = match spec.name.as_str() {
        // quasi-solution regime: rho perturbed, v identically zero
        "v0_zero" => EffectiveState {
            rho: ScalarField::from_fn(grid, |x| model.rho_ref + a * x[0].sin()),
            v: VectorField::zeros(grid),
        },
        "small_data" => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
            let q = random_band_limited(grid, 4, a, &mut rng);
            let comps = (0..grid.dim())
                .map(|_| random_band_limited(grid, 4, a, &mut rng))
                .collect();
            EffectiveState {
                rho: q.map(|x| model.rho_ref + x),
                v: VectorField::new(comps),
            }
        }
        // order-one data with one axis mode per dyadic level, so every
        // low block carries energy for the smoothing fits
        "large_data" => {
            let levels = 5; // radii 1, 2, 4, 8, 16
            let per = a / levels as f64;
            let rho = ScalarField::from_fn(grid, |x| {
                let mut s = model.rho_ref;
                for l in 0..levels {
                    let k = (1u64 << l) as f64;
                    s += per * (k * x[0] + 0.7 * l as f64).sin();
                }
                s
            });
            let v = VectorField::new(
                (0..grid.dim())
                    .map(|c| {
                        ScalarField::from_fn(grid, |x| {
                            let mut s = 0.0;
                            for l in 0..levels {
                                let k = (1u64 << l) as f64;
                                // a rotational part plus a divergence-carrying
                                // part, so both div v and curl v start with
                                // energy in every level
                                s += 2.0 * per * (k * x[(c + 1) % x.len()] + 0.3 * (l + c) as f64).cos();
                                s += 2.0 * per * (k * x[c] + 0.45 * (l + 2 * c) as f64).sin();
                            }
                            s
                        })
                    })
                    .collect(),
            );
            EffectiveState { rho, v }
        }
        "manufactured" => EffectiveState {
            rho: ScalarField::from_fn(grid, |x| {
                model.rho_ref + a * (x[0].sin() + 0.6 * (2.0 * x[1]).cos())
            }),
            v: VectorField::new(
                (0..grid.dim())
                    .map(|c| {
                        ScalarField::from_fn(grid, |x| {
                            a * ((x[(c + 1) % x.len()]).cos()
                                + 0.5 * (2.0 * x[0] + c as f64).sin())
                        })
                    })
                    .collect(),
            ),
        },
        other => return Err(RunnerError::UnknownScenario(other.to_string())),
    };
    let rho_min = state.rho.min();
    if rho_min <= RHO_MIN {
        return Err(RunnerError::Vacuum(rho_min));
    }
    Ok(state)
}

/// Acoustic CFL bound at t = 0: `dt (|v|_max + sqrt(P'(rho_ref))) k_max <= 1`.
pub fn cfl_check(
    config: &RunConfig,
    state: &EffectiveState,
) -> Result<(), RunnerError> {
    let k_max = std::f64::consts::PI * config.points as f64 / config.length;
    let speed = state.v.max_abs() + config.model.pressure_deriv(config.model.rho_ref).sqrt();
    let bound = 1.0 / (speed * k_max).max(1e-300);
    if config.control.dt > bound {
        return Err(RunnerError::CflViolation {
            dt: config.control.dt,
            bound,
        });
    }
    Ok(())
}

/// Outcome of `execute`: process exit code plus a human-readable summary.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> std::io::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("serializable"))
}

#[derive(serde::Serialize)]
struct ErrorDoc {
    code: String,
    message: String,
}

fn fail(dir: &Path, exit_code: i32, code: &str, message: String) -> RunOutcome {
    let _ = std::fs::create_dir_all(dir);
    let _ = write_json(
        &dir.join("error.json"),
        &ErrorDoc {
            code: code.to_string(),
            message: message.clone(),
        },
    );
    RunOutcome { exit_code, summary: message }
}

fn certificate_pass(
    config: &RunConfig,
    traj: &Trajectory,
    dt: f64,
    name: &str,
    dir: &Path,
) -> Result<bool, RunnerError> {
    let model = &config.model;
    let grid = traj.states[0].q.grid().clone();
    Ok(match name {
        "mass" => {
            let drift = mass_drift(traj, model);
            let mass0 = mass_total(&hybrid_to_effective(model, &traj.states[0])?.rho);
            let per_unit = drift / config.control.t_end.max(1e-300);
            write_json(
                &dir.join("mass.json"),
                &serde_json::json!({"drift": drift, "per_unit_time": per_unit, "mass0": mass0}),
            )?;
            per_unit < 1e-12 * mass0
        }
        "entropy" => {
            let rep = entropy_monotone_check(traj, model, dt)?;
            write_json(&dir.join("entropy.json"), &rep)?;
            rep.passed
        }
        "smoothing" => {
            let cert = smoothing_certificate(traj, model, Exponent::Finite(2.0))?;
            write_json(&dir.join("smoothing.json"), &cert)?;
            cert.l1_besov_budget.is_finite()
        }
        "transport_contrast" => {
            let rep = transport_contrast_certificate(traj)?;
            write_json(&dir.join("transport_contrast.json"), &rep)?;
            rep.bounded
        }
        "heat24" | "tdiff25" | "tdiff26" | "transport27" => {
            let kind = match name {
                "heat24" => CertificateKind::Heat24,
                "tdiff25" => CertificateKind::Tdiff25,
                "tdiff26" => CertificateKind::Tdiff26,
                _ => CertificateKind::Transport27,
            };
            let shear = if kind == CertificateKind::Transport27 { 0.0 } else { 0.4 };
            let rep = estimate_certificate(kind, &grid, model.mu, shear)?;
            write_json(&dir.join(format!("{name}.json")), &rep)?;
            rep.empirical_c.is_finite()
        }
        other => {
            write_json(
                &dir.join("error.json"),
                &ErrorDoc {
                    code: "UnknownCheck".into(),
                    message: format!("unknown certificate `{other}`"),
                },
            )?;
            false
        }
    })
}

/// Run the configured scenario end to end and emit all artifacts.
///
/// Exit code 0: run completed and every requested hard check passed.
/// Exit code 2: physics abort (vacuum, CFL violation, blow-up).
/// (Config errors are caught by `parse_config` and map to exit code 1.)
pub fn execute(config: &RunConfig) -> Result<RunOutcome, RunnerError> {
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let grid = make_grid(config.dim, config.points, config.length)
        .expect("grid validated at parse time");

    let initial = match scenario_init(&config.scenario, &grid, &config.model) {
        Ok(s) => s,
        Err(e) => {
            let code = match &e {
                RunnerError::Vacuum(_) => "Vacuum",
                _ => "Scenario",
            };
            return Ok(fail(dir, 2, code, e.to_string()));
        }
    };
    if let Err(e) = cfl_check(config, &initial) {
        return Ok(fail(dir, 2, "CflViolation", e.to_string()));
    }

    let hybrid0 = to_hybrid(&config.model, &initial);
    if config.snapshots {
        write_snapshot(&dir.join("q_initial.bin"), &hybrid0.q, "q", 0.0)
            .map_err(|e| RunnerError::Io(std::io::Error::other(e.to_string())))?;
    }
    let traj = evolve(&config.model, hybrid0, &config.control)
        .map_err(|e| RunnerError::Io(std::io::Error::other(e.to_string())))?;
    if let Some(abort) = &traj.aborted {
        let _ = write_json(&dir.join("abort.json"), abort);
        return Ok(fail(
            dir,
            2,
            "PhysicsAbort",
            format!("aborted at t = {}: {}", abort.time, abort.reason),
        ));
    }

    std::fs::write(
        dir.join("timeseries.csv"),
        timeseries_csv(&traj, &config.model)?,
    )?;
    if config.snapshots {
        let last = traj.last();
        write_snapshot(
            &dir.join("q_final.bin"),
            &last.q,
            "q",
            *traj.times.last().unwrap(),
        )
        .map_err(|e| RunnerError::Io(std::io::Error::other(e.to_string())))?;
    }

    let mut failed = Vec::new();
    for check in &config.checks {
        if !certificate_pass(config, &traj, config.control.dt, check, dir)? {
            failed.push(check.clone());
        }
    }
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "scenario": config.scenario,
            "t_end": config.control.t_end,
            "samples": traj.times.len(),
            "failed_checks": failed,
        }),
    )?;
    if failed.is_empty() {
        Ok(RunOutcome {
            exit_code: 0,
            summary: format!("run completed, {} checks passed", config.checks.len()),
        })
    } else {
        Ok(RunOutcome {
            exit_code: 2,
            summary: format!("run completed but checks failed: {}", failed.join(", ")),
        })
    }
}

/// Re-run the grid-level certificates against an existing run directory.
pub fn check(config: &RunConfig) -> Result<RunOutcome, RunnerError> {
    let dir = &config.output_dir;
    if !dir.join("timeseries.csv").exists() {
        return Err(RunnerError::MissingArtifacts(dir.clone()));
    }
    let grid = make_grid(config.dim, config.points, config.length)
        .expect("grid validated at parse time");
    let mut all_finite = true;
    for kind in [
        CertificateKind::Heat24,
        CertificateKind::Tdiff25,
        CertificateKind::Tdiff26,
        CertificateKind::Transport27,
    ] {
        let shear = if kind == CertificateKind::Transport27 { 0.0 } else { 0.4 };
        let rep = estimate_certificate(kind, &grid, config.model.mu, shear)?;
        write_json(&dir.join(format!("{}.json", kind.name())), &rep)?;
        all_finite &= rep.empirical_c.is_finite();
    }
    Ok(RunOutcome {
        exit_code: if all_finite { 0 } else { 2 },
        summary: "estimate certificates recomputed".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(dir: &Path) -> String {
        format!(
            r#"
[model]
mu = 1.0
alpha = 1.0
gamma = 2.0

[grid]
dim = 2
points = 32

[control]
dt = 1e-3
t_end = 0.02
record_every = 5

[scenario]
name = "small_data"
amplitude = 1e-3
seed = 7

[outputs]
directory = "{}"

[checks]
certificates = ["mass", "entropy"]
"#,
            dir.display()
        )
    }

    #[test]
    fn parse_valid_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&base_config(dir.path())).unwrap();
        assert_eq!(cfg.points, 32);
        assert_eq!(cfg.scenario.name, "small_data");
        assert_eq!(cfg.scenario.seed, 7);
        assert!((cfg.length - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cfg.checks, vec!["mass".to_string(), "entropy".to_string()]);
    }

    #[test]
    fn parse_error_collection() {
        let text = r#"
[model]
mu = 1.0
alpha = 0.4
gamma = 2.0

[grid]
dim = 2
points = 32

[control]
dt = 1e-3

[scenario]
name = "nope"

[outputs]
directory = "x"
"#;
        let errors = parse_config(text).unwrap_err();
        assert!(errors
            .iter()
            .any(|e| matches!(e, ConfigError::MissingKey(k) if k == "control.t_end")));
        assert!(errors
            .iter()
            .any(|e| matches!(e, ConfigError::ModelInvalid(ModelError::LameViolation { .. }))));
        assert!(errors
            .iter()
            .any(|e| matches!(e, ConfigError::BadValue(k, _) if k == "scenario.name")));
    }

    #[test]
    fn scenario_contracts() {
        let g = make_grid(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let m = FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        let v0 = scenario_init(
            &ScenarioSpec {
                name: "v0_zero".into(),
                amplitude: 0.1,
                seed: 0,
            },
            &g,
            &m,
        )
        .unwrap();
        assert!(v0.v.max_abs() == 0.0);
        let expect = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * x[0].sin());
        assert!(v0.rho.sub(&expect).max_abs() < 1e-14);

        assert!(matches!(
            scenario_init(
                &ScenarioSpec {
                    name: "v0_zero".into(),
                    amplitude: 1.5,
                    seed: 0
                },
                &g,
                &m
            ),
            Err(RunnerError::Vacuum(_))
        ));

        let eq = scenario_init(
            &ScenarioSpec {
                name: "small_data".into(),
                amplitude: 0.0,
                seed: 0,
            },
            &g,
            &m,
        )
        .unwrap();
        assert!(eq.rho.sub(&ScalarField::constant(&g, 1.0)).max_abs() < 1e-14);
        assert!(eq.v.max_abs() == 0.0);

        assert!(matches!(
            scenario_init(
                &ScenarioSpec {
                    name: "bogus".into(),
                    amplitude: 0.1,
                    seed: 0
                },
                &g,
                &m
            ),
            Err(RunnerError::UnknownScenario(_))
        ));

        // identical seed, identical fields
        let s1 = scenario_init(
            &ScenarioSpec {
                name: "small_data".into(),
                amplitude: 1e-3,
                seed: 11,
            },
            &g,
            &m,
        )
        .unwrap();
        let s2 = scenario_init(
            &ScenarioSpec {
                name: "small_data".into(),
                amplitude: 1e-3,
                seed: 11,
            },
            &g,
            &m,
        )
        .unwrap();
        assert_eq!(s1.rho.values(), s2.rho.values());
    }

    #[test]
    fn execute_small_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&base_config(dir.path())).unwrap();
        let outcome = execute(&cfg).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        assert!(dir.path().join("timeseries.csv").exists());
        assert!(dir.path().join("mass.json").exists());
        assert!(dir.path().join("entropy.json").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("q_initial.bin").exists());
        assert!(dir.path().join("q_final.bin").exists());

        // check verb works against the artifacts
        let outcome = check(&cfg).unwrap();
        assert_eq!(outcome.exit_code, 0);
        assert!(dir.path().join("heat24.json").exists());
    }

    #[test]
    fn execute_cfl_guard() {
        let dir = tempfile::tempdir().unwrap();
        let text = base_config(dir.path()).replace("dt = 1e-3", "dt = 0.5");
        let cfg = parse_config(&text).unwrap();
        let outcome = execute(&cfg).unwrap();
        assert_eq!(outcome.exit_code, 2);
        assert!(dir.path().join("error.json").exists());
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("error.json")).unwrap())
                .unwrap();
        assert_eq!(doc["code"], "CflViolation");
    }

    #[test]
    fn check_without_artifacts_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&base_config(&dir.path().join("empty"))).unwrap();
        assert!(matches!(check(&cfg), Err(RunnerError::MissingArtifacts(_))));
    }

    #[test]
    fn deterministic_timeseries() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let c1 = parse_config(&base_config(d1.path())).unwrap();
        let c2 = parse_config(&base_config(d2.path())).unwrap();
        execute(&c1).unwrap();
        execute(&c2).unwrap();
        let a = std::fs::read(d1.path().join("timeseries.csv")).unwrap();
        let b = std::fs::read(d2.path().join("timeseries.csv")).unwrap();
        assert_eq!(a, b);
    }
}
