//! Time integration of the decomposed system.
//!
//! The density perturbation and the matrix curl carry stiff diffusion;
//! both are advanced by a two-stage exponential integrator (ETDRK2) with
//! the diffusion coefficient frozen at the reference density. The
//! divergence and the mean velocity have no stiff linear part and the
//! same formulas degenerate to Heun's method for them.

use crate::constitutive::FluidModel;
use crate::formulations::{rhs_decomposed, DecomposedRate, FormulationError, HybridState};
use crate::spectral_grid::{laplacian, CurlField, ScalarField};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("{0}")]
    Formulation(#[from] FormulationError),
    #[error("step size and horizon must be positive")]
    BadControl,
}

/// Fixed-step control parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct StepControl {
    pub dt: f64,
    pub t_end: f64,
    /// record every this many steps (the initial and final states are
    /// always recorded)
    pub record_every: usize,
}

/// Frozen implicit diffusion coefficients at the reference density:
/// `2 mu'(rho_ref)` for the density block, `mu(rho_ref) / rho_ref` for
/// the curl block.
pub fn implicit_coefficients(model: &FluidModel) -> (f64, f64) {
    (
        2.0 * model.viscosity_deriv(model.rho_ref),
        model.viscosity(model.rho_ref) / model.rho_ref,
    )
}

/// `phi1(z) = (e^z - 1)/z`, continuous at 0.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `phi2(z) = (e^z - 1 - z)/z^2`, continuous at 0.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 + z / 6.0 + z * z / 24.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// ETDRK2 stage: `f1_hat = e^z f_hat + dt phi1(z) n0_hat`, `z = -a k^2 dt`.
pub(crate) fn etdrk2_stage(f: &ScalarField, n0: &ScalarField, a: f64, dt: f64) -> ScalarField {
    let grid = f.grid().clone();
    let f_hat = f.to_spectral();
    let n0_hat = n0.to_spectral();
    let mut out = f_hat.clone();
    for (flat, c) in out.coeffs_mut().iter_mut().enumerate() {
        let z = -a * grid.k_sq(flat) * dt;
        *c = *c * z.exp() + n0_hat.coeffs()[flat] * (dt * phi1(z));
    }
    out.to_physical()
}

/// ETDRK2 correction: `f_next_hat = f1_hat + dt phi2(z) (n1_hat - n0_hat)`.
pub(crate) fn etdrk2_correct(
    f1: &ScalarField,
    n0: &ScalarField,
    n1: &ScalarField,
    a: f64,
    dt: f64,
) -> ScalarField {
    let grid = f1.grid().clone();
    let mut out = f1.to_spectral();
    let n0_hat = n0.to_spectral();
    let n1_hat = n1.to_spectral();
    for (flat, c) in out.coeffs_mut().iter_mut().enumerate() {
        let z = -a * grid.k_sq(flat) * dt;
        *c += (n1_hat.coeffs()[flat] - n0_hat.coeffs()[flat]) * (dt * phi2(z));
    }
    out.to_physical()
}

/// Rate with the frozen linear diffusion removed.
fn nonlinear_rate(
    model: &FluidModel,
    state: &HybridState,
) -> Result<DecomposedRate, FormulationError> {
    let (a_q, a_w) = implicit_coefficients(model);
    let full = rhs_decomposed(model, state)?;
    Ok(DecomposedRate {
        dq: full.dq.sub(&laplacian(&state.q).scale(a_q)),
        ddivv: full.ddivv,
        dcurlv: full
            .dcurlv
            .sub(&state.curlv.map(|w| laplacian(w).scale(a_w))),
        dmean_v: full.dmean_v,
    })
}

fn apply_stage(state: &HybridState, n: &DecomposedRate, a_q: f64, a_w: f64, dt: f64) -> HybridState {
    HybridState {
        q: etdrk2_stage(&state.q, &n.dq, a_q, dt),
        divv: etdrk2_stage(&state.divv, &n.ddivv, 0.0, dt),
        curlv: CurlField::from_upper(
            state.q.grid(),
            state
                .curlv
                .upper()
                .iter()
                .zip(n.dcurlv.upper())
                .map(|(w, nw)| etdrk2_stage(w, nw, a_w, dt))
                .collect(),
        ),
        mean_v: state
            .mean_v
            .iter()
            .zip(&n.dmean_v)
            .map(|(m, d)| m + dt * d)
            .collect(),
    }
}

fn apply_correction(
    stage: &HybridState,
    n0: &DecomposedRate,
    n1: &DecomposedRate,
    a_q: f64,
    a_w: f64,
    dt: f64,
) -> HybridState {
    HybridState {
        q: etdrk2_correct(&stage.q, &n0.dq, &n1.dq, a_q, dt),
        divv: etdrk2_correct(&stage.divv, &n0.ddivv, &n1.ddivv, 0.0, dt),
        curlv: CurlField::from_upper(
            stage.q.grid(),
            stage
                .curlv
                .upper()
                .iter()
                .zip(n0.dcurlv.upper().iter().zip(n1.dcurlv.upper()))
                .map(|(w, (a, b))| etdrk2_correct(w, a, b, a_w, dt))
                .collect(),
        ),
        mean_v: stage
            .mean_v
            .iter()
            .zip(n0.dmean_v.iter().zip(&n1.dmean_v))
            .map(|(m, (a, b))| m + 0.5 * dt * (b - a))
            .collect(),
    }
}

/// One IMEX step of size `dt`.
pub fn imex_step(
    model: &FluidModel,
    state: &HybridState,
    dt: f64,
) -> Result<HybridState, FormulationError> {
    let (a_q, a_w) = implicit_coefficients(model);
    let n0 = nonlinear_rate(model, state)?;
    let stage = apply_stage(state, &n0, a_q, a_w, dt);
    let n1 = nonlinear_rate(model, &stage)?;
    Ok(apply_correction(&stage, &n0, &n1, a_q, a_w, dt))
}

/// One IMEX step with the nonlinear sources switched off; reduces the
/// scheme to its implicit linear part.
pub fn sourceless_step(model: &FluidModel, state: &HybridState, dt: f64) -> HybridState {
    let (a_q, a_w) = implicit_coefficients(model);
    let zero = DecomposedRate {
        dq: ScalarField::zeros(state.q.grid()),
        ddivv: ScalarField::zeros(state.q.grid()),
        dcurlv: CurlField::zeros(state.q.grid()),
        dmean_v: vec![0.0; state.mean_v.len()],
    };
    let stage = apply_stage(state, &zero, a_q, a_w, dt);
    apply_correction(&stage, &zero, &zero, a_q, a_w, dt)
}

/// Exact propagator of the frozen linear diffusion alone: the density
/// block decays at rate `2 mu'(rho_ref) k^2`, the curl block at
/// `(mu(rho_ref)/rho_ref) k^2`; divergence and mean are untouched.
pub fn heat_propagate(model: &FluidModel, state: &HybridState, t: f64) -> HybridState {
    let (a_q, a_w) = implicit_coefficients(model);
    let grid = state.q.grid().clone();
    let decay = |f: &ScalarField, a: f64| -> ScalarField {
        let g = grid.clone();
        f.to_spectral()
            .multiply(move |flat| (-a * g.k_sq(flat) * t).exp())
            .to_physical()
    };
    HybridState {
        q: decay(&state.q, a_q),
        divv: state.divv.clone(),
        curlv: state.curlv.map(|w| decay(w, a_w)),
        mean_v: state.mean_v.clone(),
    }
}

/// Closed-form solution at time `t` of the linearized density-divergence
/// pair at one wavenumber:
/// `q' = -2 mu ksq q - d`, `d' = ksq q`,
/// by the exponential of the 2x2 coefficient matrix.
pub fn linear_hybrid_oracle(
    q0: Complex64,
    d0: Complex64,
    ksq: f64,
    mu: f64,
    t: f64,
) -> (Complex64, Complex64) {
    // A = [[-2 mu ksq, -1], [ksq, 0]]; m = tr/2, delta^2 = m^2 - det
    let m = Complex64::new(-mu * ksq, 0.0);
    let det = Complex64::new(ksq, 0.0);
    let delta = (m * m - det).sqrt();
    let (ch, sh_over) = if delta.norm() < 1e-14 {
        (Complex64::new(1.0, 0.0), Complex64::new(t, 0.0))
    } else {
        let dt_ = delta * t;
        ((dt_.cosh()), dt_.sinh() / delta)
    };
    let e = (m * t).exp();
    // (A - m I) applied to (q0, d0)
    let a11 = Complex64::new(-2.0 * mu * ksq, 0.0) - m;
    let a22 = -m;
    let bq = a11 * q0 - d0;
    let bd = det * q0 + a22 * d0;
    (e * (ch * q0 + sh_over * bq), e * (ch * d0 + sh_over * bd))
}

/// Why a run ended early.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AbortInfo {
    pub time: f64,
    pub reason: String,
}

/// Recorded evolution history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<HybridState>,
    pub aborted: Option<AbortInfo>,
}

impl Trajectory {
    pub fn last(&self) -> &HybridState {
        self.states.last().expect("non-empty trajectory")
    }
}

fn state_is_finite(state: &HybridState) -> bool {
    state.q.values().iter().all(|v| v.is_finite())
        && state.divv.values().iter().all(|v| v.is_finite())
        && state
            .curlv
            .upper()
            .iter()
            .all(|w| w.values().iter().all(|v| v.is_finite()))
        && state.mean_v.iter().all(|v| v.is_finite())
}

/// Advance `initial` to `t_end` with fixed steps, recording snapshots.
///
/// A non-finite state or a density collapse below the vacuum floor stops
/// the run; the trajectory keeps everything recorded up to that point and
/// carries the abort reason.
pub fn run(
    model: &FluidModel,
    initial: HybridState,
    control: &StepControl,
) -> Result<Trajectory, EvolutionError> {
    if !(control.dt > 0.0) || !(control.t_end > 0.0) {
        return Err(EvolutionError::BadControl);
    }
    let n_steps = (control.t_end / control.dt).round().max(1.0) as usize;
    let every = control.record_every.max(1);
    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    let mut current = initial;
    let mut aborted = None;
    for step in 1..=n_steps {
        let t = step as f64 * control.dt;
        match imex_step(model, &current, control.dt) {
            Ok(next) => {
                if !state_is_finite(&next) {
                    aborted = Some(AbortInfo {
                        time: t,
                        reason: "state became non-finite".to_string(),
                    });
                    break;
                }
                let rho_min = next.q.min() + model.rho_ref;
                if rho_min < crate::constitutive::RHO_MIN {
                    aborted = Some(AbortInfo {
                        time: t,
                        reason: format!("density reached the vacuum floor (min {rho_min:.3e})"),
                    });
                    break;
                }
                current = next;
            }
            Err(e) => {
                aborted = Some(AbortInfo {
                    time: t,
                    reason: format!("step failed: {e}"),
                });
                break;
            }
        }
        if step % every == 0 || step == n_steps {
            times.push(t);
            states.push(current.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        aborted,
    })
}
