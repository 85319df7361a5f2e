//! The three equivalent forms of the flow equations and the maps between
//! them.
//!
//! * classical: density `rho` and fluid velocity `u`;
//! * effective: density `rho` and effective velocity `v = u + grad phi(rho)`,
//!   whose momentum equation is driven by the matrix curl `omega = curl v`
//!   alone;
//! * decomposed (hybrid): density perturbation `q = rho - rho_ref`,
//!   `div v`, `curl v` and the spatial mean of `v`.
//!
//! All right-hand sides are assembled pointwise from spectral derivatives
//! and dealiased once at the end, so that the three forms agree to
//! rounding on band-limited data.

use crate::constitutive::{big_f_field, grad_phi, phi_field, viscosity_field, FluidModel};
use crate::spectral_grid::{
    curl_matrix, dealias, dealias_vector, derivative, divergence, div_of_curl, gradient,
    inverse_laplacian, laplacian, upper_pairs, CurlField, GridError, ScalarField, VectorField,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("curl data violates the cyclic compatibility identity (residual {0:.3e})")]
    IncompatibleCurl(f64),
    #[error("{0}")]
    Grid(#[from] GridError),
    #[error("reconstruction failed the round-trip check (residual {0:.3e})")]
    ReconstructionMismatch(f64),
}

/// Classical variables (rho, u).
#[derive(Debug, Clone)]
pub struct ClassicalState {
    pub rho: ScalarField,
    pub u: VectorField,
}

/// Effective variables (rho, v) with `v = u + grad phi(rho)`.
#[derive(Debug, Clone)]
pub struct EffectiveState {
    pub rho: ScalarField,
    pub v: VectorField,
}

/// Decomposed variables (q, div v, curl v, mean v).
#[derive(Debug, Clone)]
pub struct HybridState {
    pub q: ScalarField,
    pub divv: ScalarField,
    pub curlv: CurlField,
    pub mean_v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClassicalRate {
    pub drho: ScalarField,
    pub du: VectorField,
}

#[derive(Debug, Clone)]
pub struct EffectiveRate {
    pub drho: ScalarField,
    pub dv: VectorField,
}

#[derive(Debug, Clone)]
pub struct DecomposedRate {
    pub dq: ScalarField,
    pub ddivv: ScalarField,
    pub dcurlv: CurlField,
    pub dmean_v: Vec<f64>,
}

pub fn to_effective(model: &FluidModel, state: &ClassicalState) -> EffectiveState {
    EffectiveState {
        rho: state.rho.clone(),
        v: state.u.add(&grad_phi(model, &state.rho)),
    }
}

pub fn from_effective(model: &FluidModel, state: &EffectiveState) -> ClassicalState {
    ClassicalState {
        rho: state.rho.clone(),
        u: state.v.sub(&grad_phi(model, &state.rho)),
    }
}

pub fn to_hybrid(model: &FluidModel, state: &EffectiveState) -> HybridState {
    HybridState {
        q: state.rho.map(|r| r - model.rho_ref),
        divv: divergence(&state.v),
        curlv: curl_matrix(&state.v),
        mean_v: state.v.components().iter().map(|c| c.mean()).collect(),
    }
}

/// Rebuild `v` from its divergence, matrix curl and mean:
/// `Delta v_j = d_j (div v) + (div omega)_j` inverted mode-wise.
pub fn reconstruct_v(state: &HybridState) -> Result<VectorField, FormulationError> {
    let compat = state.curlv.compatibility_residual().max_abs();
    if compat > 1e-6 {
        return Err(FormulationError::IncompatibleCurl(compat));
    }
    let grad_d = gradient(&state.divv);
    let dc = div_of_curl(&state.curlv);
    let mut components = Vec::new();
    for j in 0..state.q.grid().dim() {
        let rhs = grad_d.component(j).add(dc.component(j));
        let mean_free = inverse_laplacian(&rhs)?;
        components.push(mean_free.map(|x| x + state.mean_v[j]));
    }
    let v = VectorField::new(components);
    // round-trip check against the supplied data
    let scale = state.divv.max_abs().max(state.curlv.frobenius_sq().max_abs().sqrt()).max(1.0);
    let res_d = divergence(&v).sub(&state.divv).max_abs();
    let res_w = curl_matrix(&v)
        .sub(&state.curlv)
        .frobenius_sq()
        .max_abs()
        .sqrt();
    let res = res_d.max(res_w);
    if res > 1e-8 * scale {
        return Err(FormulationError::ReconstructionMismatch(res));
    }
    Ok(v)
}

pub fn hybrid_to_effective(
    model: &FluidModel,
    state: &HybridState,
) -> Result<EffectiveState, FormulationError> {
    Ok(EffectiveState {
        rho: state.q.map(|q| q + model.rho_ref),
        v: reconstruct_v(state)?,
    })
}

/// Pointwise advection `(w . grad) f`.
fn advect_scalar(w: &VectorField, f: &ScalarField) -> ScalarField {
    let grad = gradient(f);
    let mut acc = ScalarField::zeros(f.grid());
    for (wk, gk) in w.components().iter().zip(grad.components()) {
        acc = acc.add(&wk.zip(gk, |a, b| a * b));
    }
    acc
}

/// Classical right-hand side:
/// `d rho = -div(rho u)`,
/// `d u = -(u.grad)u + (1/rho)[div(2 mu(rho) D(u)) + grad(lambda(rho) div u)] - grad F(rho)`.
pub fn rhs_original(model: &FluidModel, state: &ClassicalState) -> ClassicalRate {
    let rho = &state.rho;
    let u = &state.u;
    let dim = rho.grid().dim();
    let mu = viscosity_field(model, rho);
    let lam = rho.map(|r| model.lambda_of(r));
    let inv_rho = rho.map(|r| 1.0 / r.max(crate::constitutive::RHO_MIN));

    let drho = divergence(&u.map(|c| c.zip(rho, |a, b| a * b))).scale(-1.0);

    let grads: Vec<VectorField> = u.components().iter().map(gradient).collect();
    let div_u = divergence(u);
    let grad_f = gradient(&big_f_field(model, rho));
    let lam_divu = lam.zip(&div_u, |a, b| a * b);
    let grad_lam_divu = gradient(&lam_divu);

    let mut du = Vec::new();
    for j in 0..dim {
        // sum_i d_i( mu (d_i u_j + d_j u_i) )
        let mut visc = ScalarField::zeros(rho.grid());
        for i in 0..dim {
            let strain = grads[j].component(i).add(grads[i].component(j));
            visc = visc.add(&derivative(&mu.zip(&strain, |a, b| a * b), i));
        }
        let stress = visc.add(grad_lam_divu.component(j));
        let c = advect_scalar(u, u.component(j))
            .scale(-1.0)
            .add(&inv_rho.zip(&stress, |a, b| a * b))
            .sub(grad_f.component(j));
        du.push(c);
    }
    ClassicalRate {
        drho: dealias(&drho),
        du: dealias_vector(&VectorField::new(du)),
    }
}

/// Effective right-hand side:
/// `d rho = 2 Lap mu(rho) - div(rho v)`,
/// `d v_j = -(u.grad)v_j + (mu/rho)(div omega)_j + (1/2)(grad phi . omega)_j - d_j F`,
/// with `u = v - grad phi(rho)`, `omega = curl v` and the contraction
/// `(a . omega)_j = sum_i a_i omega_ij`.
pub fn rhs_effective(model: &FluidModel, state: &EffectiveState) -> EffectiveRate {
    let rho = &state.rho;
    let v = &state.v;
    let dim = rho.grid().dim();
    let gp = grad_phi(model, rho);
    let u = v.sub(&gp);
    let omega = curl_matrix(v);
    let mu_over_rho = rho.map(|r| model.viscosity(r) / r.max(crate::constitutive::RHO_MIN));
    let div_omega = div_of_curl(&omega);
    let grad_f = gradient(&big_f_field(model, rho));

    let mu = viscosity_field(model, rho);
    let drho = laplacian(&mu)
        .scale(2.0)
        .sub(&divergence(&v.map(|c| c.zip(rho, |a, b| a * b))));

    let mut dv = Vec::new();
    for j in 0..dim {
        let mut contraction = ScalarField::zeros(rho.grid());
        for i in 0..dim {
            contraction = contraction.add(&gp.component(i).zip(&omega.entry(i, j), |a, b| a * b));
        }
        let c = advect_scalar(&u, v.component(j))
            .scale(-1.0)
            .add(&mu_over_rho.zip(div_omega.component(j), |a, b| a * b))
            .add(&contraction.scale(0.5))
            .sub(grad_f.component(j));
        dv.push(c);
    }
    EffectiveRate {
        drho: dealias(&drho),
        dv: dealias_vector(&VectorField::new(dv)),
    }
}

/// Divergence-equation remainder
/// `R = -(1/2) sum_ij d_i phi d_j omega_ij`.
#[allow(non_snake_case)]
pub fn remainder_R(model: &FluidModel, rho: &ScalarField, omega: &CurlField) -> ScalarField {
    let gp = grad_phi(model, rho);
    let dim = rho.grid().dim();
    let mut acc = ScalarField::zeros(rho.grid());
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let dwn = derivative(&omega.entry(i, j), j);
            acc = acc.add(&gp.component(i).zip(&dwn, |a, b| a * b));
        }
    }
    dealias(&acc.scale(-0.5))
}

/// Curl-equation remainder
/// `R1_ij = sum_k (d_i u_k d_k v_j - d_j u_k d_k v_i)
///        - (1/2)(lambda/rho^2) sum_k (d_i rho d_k omega_kj - d_j rho d_k omega_ki)
///        - (1/2) sum_k (d_ki phi omega_kj - d_kj phi omega_ki)`.
#[allow(non_snake_case)]
pub fn remainder_R1(
    model: &FluidModel,
    rho: &ScalarField,
    v: &VectorField,
    omega: &CurlField,
) -> CurlField {
    let grid = rho.grid().clone();
    let dim = grid.dim();
    let gp = grad_phi(model, rho);
    let u = v.sub(&gp);
    let grad_rho = gradient(rho);
    let lam_over_rho2 = rho.map(|r| {
        let rc = r.max(crate::constitutive::RHO_MIN);
        model.lambda_of(rc) / (rc * rc)
    });
    let grads_u: Vec<VectorField> = u.components().iter().map(gradient).collect();
    let grads_v: Vec<VectorField> = v.components().iter().map(gradient).collect();
    let div_omega = div_of_curl(&omega);
    let phi = phi_field(model, rho);
    // hessian of phi
    let hess: Vec<Vec<ScalarField>> = (0..dim)
        .map(|a| (0..dim).map(|b| derivative(&derivative(&phi, a), b)).collect())
        .collect();

    let upper = upper_pairs(dim)
        .iter()
        .map(|&(i, j)| {
            let mut term = ScalarField::zeros(&grid);
            for k in 0..dim {
                // sum_k d_i u_k d_k v_j - d_j u_k d_k v_i
                let a = grads_u[k]
                    .component(i)
                    .zip(grads_v[j].component(k), |x, y| x * y);
                let b = grads_u[k]
                    .component(j)
                    .zip(grads_v[i].component(k), |x, y| x * y);
                term = term.add(&a.sub(&b));
                // -(1/2) hess_ki phi omega_kj + (1/2) hess_kj phi omega_ki
                let c = hess[k][i].zip(&omega.entry(k, j), |x, y| x * y);
                let d = hess[k][j].zip(&omega.entry(k, i), |x, y| x * y);
                term = term.sub(&c.sub(&d).scale(0.5));
            }
            // -(1/2)(lambda/rho^2)(d_i rho (div omega)_j - d_j rho (div omega)_i)
            let e = grad_rho
                .component(i)
                .zip(div_omega.component(j), |x, y| x * y);
            let f = grad_rho
                .component(j)
                .zip(div_omega.component(i), |x, y| x * y);
            let g = lam_over_rho2.zip(&e.sub(&f), |x, y| x * y);
            dealias(&term.sub(&g.scale(0.5)))
        })
        .collect();
    CurlField::from_upper(&grid, upper)
}

/// Decomposed right-hand side:
/// `d q = 2 Lap mu(rho) - div(rho v)`,
/// `d (div v) = -(u.grad)div v - sum_ij d_i u_j d_j v_i
///            + (1/2)(lambda/rho^2) grad rho . div omega - R - Lap F`,
/// `d omega = -((u - (1/2) grad phi).grad) omega + (mu/rho) Lap omega - R1`,
/// `d mean v_j = mean of the nonlinear effective momentum terms`.
pub fn rhs_decomposed(
    model: &FluidModel,
    state: &HybridState,
) -> Result<DecomposedRate, FormulationError> {
    let eff = hybrid_to_effective(model, state)?;
    let rho = &eff.rho;
    let v = &eff.v;
    let grid = rho.grid().clone();
    let dim = grid.dim();
    let gp = grad_phi(model, rho);
    let u = v.sub(&gp);
    let omega = &state.curlv;

    let mu = viscosity_field(model, rho);
    let dq = dealias(
        &laplacian(&mu)
            .scale(2.0)
            .sub(&divergence(&v.map(|c| c.zip(rho, |a, b| a * b)))),
    );

    let grads_u: Vec<VectorField> = u.components().iter().map(gradient).collect();
    let grads_v: Vec<VectorField> = v.components().iter().map(gradient).collect();
    let div_omega = div_of_curl(omega);
    let grad_rho = gradient(rho);
    let lam_over_rho2 = rho.map(|r| {
        let rc = r.max(crate::constitutive::RHO_MIN);
        model.lambda_of(rc) / (rc * rc)
    });

    // -(u.grad) div v - sum_ij d_i u_j d_j v_i
    let mut trace = ScalarField::zeros(&grid);
    for i in 0..dim {
        for j in 0..dim {
            trace = trace.add(
                &grads_u[j]
                    .component(i)
                    .zip(grads_v[i].component(j), |x, y| x * y),
            );
        }
    }
    let mut lam_term = ScalarField::zeros(&grid);
    for i in 0..dim {
        lam_term = lam_term.add(
            &grad_rho
                .component(i)
                .zip(div_omega.component(i), |x, y| x * y),
        );
    }
    lam_term = lam_over_rho2.zip(&lam_term, |x, y| x * y).scale(0.5);
    let r = remainder_R(model, rho, omega);
    let lap_f = laplacian(&big_f_field(model, rho));
    let ddivv = dealias(
        &advect_scalar(&u, &state.divv)
            .scale(-1.0)
            .sub(&trace)
            .add(&lam_term)
            .sub(&r)
            .sub(&lap_f),
    );

    // curl block
    let r1 = remainder_R1(model, rho, v, omega);
    let transport_vel = u.sub(&gp.scale(0.5));
    let mu_over_rho = rho.map(|r| model.viscosity(r) / r.max(crate::constitutive::RHO_MIN));
    let dcurl_upper: Vec<ScalarField> = upper_pairs(dim)
        .iter()
        .enumerate()
        .map(|(slot, &(i, j))| {
            let w = omega.entry(i, j);
            dealias(
                &advect_scalar(&transport_vel, &w)
                    .scale(-1.0)
                    .add(&mu_over_rho.zip(&laplacian(&w), |x, y| x * y))
                    .sub(&r1.upper()[slot]),
            )
        })
        .collect();
    let dcurlv = CurlField::from_upper(&grid, dcurl_upper);

    // mean of the effective momentum rate: gradient terms integrate to
    // zero, the rest generally do not
    let div_omega_full = div_of_curl(&curl_matrix(v));
    let mut dmean_v = Vec::new();
    for j in 0..dim {
        let mut contraction = ScalarField::zeros(&grid);
        for i in 0..dim {
            contraction =
                contraction.add(&gp.component(i).zip(&omega.entry(i, j), |a, b| a * b));
        }
        let term = advect_scalar(&u, v.component(j))
            .scale(-1.0)
            .add(&mu_over_rho.zip(div_omega_full.component(j), |a, b| a * b))
            .add(&contraction.scale(0.5));
        dmean_v.push(term.mean());
    }

    Ok(DecomposedRate {
        dq,
        ddivv,
        dcurlv,
        dmean_v,
    })
}

/// Residuals between the effective rate and the decomposed rate of the
/// same state, plus the reconstruction round trip.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityResiduals {
    pub mass: f64,
    pub divergence: f64,
    pub curl: f64,
    pub reconstruction: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.mass
            .max(self.divergence)
            .max(self.curl)
            .max(self.reconstruction)
    }
}

pub fn identity_residuals(
    model: &FluidModel,
    state: &EffectiveState,
) -> Result<IdentityResiduals, FormulationError> {
    let eff_rate = rhs_effective(model, state);
    let hybrid = to_hybrid(model, state);
    let dec = rhs_decomposed(model, &hybrid)?;
    let v_rec = reconstruct_v(&hybrid)?;
    Ok(IdentityResiduals {
        mass: eff_rate.drho.sub(&dec.dq).max_abs(),
        divergence: divergence(&eff_rate.dv).sub(&dec.ddivv).max_abs(),
        curl: curl_matrix(&eff_rate.dv)
            .sub(&dec.dcurlv)
            .frobenius_sq()
            .max_abs()
            .sqrt(),
        reconstruction: v_rec.sub(&state.v).max_abs(),
    })
}

/// Residuals between the classical rate and the effective rate mapped
/// back through the chain rule `d(grad phi) = grad(phi'(rho) d rho)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EquivalenceResiduals {
    pub mass: f64,
    pub velocity: f64,
}

impl EquivalenceResiduals {
    pub fn max(&self) -> f64 {
        self.mass.max(self.velocity)
    }
}

pub fn equivalence_residual(model: &FluidModel, state: &ClassicalState) -> EquivalenceResiduals {
    let cls_rate = rhs_original(model, state);
    let eff = to_effective(model, state);
    let eff_rate = rhs_effective(model, &eff);
    // rho phi'(rho) = 2 mu'(rho)
    let phi_prime = state.rho.map(|r| {
        let rc = r.max(crate::constitutive::RHO_MIN);
        2.0 * model.viscosity_deriv(rc) / rc
    });
    let chain = gradient(&dealias(&phi_prime.zip(&cls_rate.drho, |a, b| a * b)));
    EquivalenceResiduals {
        mass: cls_rate.drho.sub(&eff_rate.drho).max_abs(),
        velocity: eff_rate.dv.sub(&cls_rate.du).sub(&chain).max_abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_grid::make_grid;
    use rand::SeedableRng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn model_poly() -> FluidModel {
        // polynomial compositions: every nonlinearity keeps band-limited
        // data band-limited
        FluidModel::new(0.8, 2.0, 2.0, 1.0, 2).unwrap()
    }

    fn band_limited_state(
        grid: &Arc<crate::spectral_grid::Grid>,
        amp: f64,
        seed: u64,
    ) -> EffectiveState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k_cap = 3;
        let q = crate::littlewood_paley::random_band_limited(grid, k_cap, amp, &mut rng);
        let rho = q.map(|x| 1.0 + x);
        let comps = (0..grid.dim())
            .map(|_| {
                crate::littlewood_paley::random_band_limited(grid, k_cap, amp, &mut rng)
                    .map(|x| x + 0.05)
            })
            .collect();
        EffectiveState {
            rho,
            v: VectorField::new(comps),
        }
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let m = FluidModel::new(1.0, 1.0, 1.4, 1.0, 2).unwrap();
        let state = EffectiveState {
            rho: ScalarField::constant(&g, 1.0),
            v: VectorField::zeros(&g),
        };
        let rate = rhs_effective(&m, &state);
        assert!(rate.drho.max_abs() < 1e-13);
        assert!(rate.dv.max_abs() < 1e-13);
        let cls = ClassicalState {
            rho: ScalarField::constant(&g, 1.0),
            u: VectorField::zeros(&g),
        };
        let crate_ = rhs_original(&m, &cls);
        assert!(crate_.drho.max_abs() < 1e-13);
        assert!(crate_.du.max_abs() < 1e-13);
    }

    #[test]
    fn effective_map_round_trip() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.2, 1);
        let cls = from_effective(&m, &state);
        let back = to_effective(&m, &cls);
        assert!(back.v.sub(&state.v).max_abs() < 1e-13);
        assert!(back.rho.sub(&state.rho).max_abs() < 1e-15);
        // u differs from v exactly by grad phi
        let gp = grad_phi(&m, &state.rho);
        assert!(state.v.sub(&cls.u).sub(&gp).max_abs() < 1e-13);
    }

    #[test]
    fn linearized_rest_state_rates() {
        // rho = 1 + eps sin x1, v = 0, alpha = 1, gamma = 2:
        // d rho = 2 mu Lap rho = -2 mu eps sin x1
        // d v = -grad F = -2 eps cos x1 e1 (to leading order in eps)
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let mu = 0.7;
        let m = FluidModel::new(mu, 1.0, 2.0, 1.0, 2).unwrap();
        let eps = 1e-6;
        let state = EffectiveState {
            rho: ScalarField::from_fn(&g, |x| 1.0 + eps * x[0].sin()),
            v: VectorField::zeros(&g),
        };
        let rate = rhs_effective(&m, &state);
        let expect_drho = ScalarField::from_fn(&g, |x| -2.0 * mu * eps * x[0].sin());
        assert!(rate.drho.sub(&expect_drho).max_abs() < 1e-12);
        let expect_dv0 = ScalarField::from_fn(&g, |x| -2.0 * eps * x[0].cos());
        assert!(rate.dv.component(0).sub(&expect_dv0).max_abs() < 1e-11);
        assert!(rate.dv.component(1).max_abs() < 1e-11);
    }

    #[test]
    fn mass_rate_has_zero_mean() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.25, 5);
        let rate = rhs_effective(&m, &state);
        assert!(rate.drho.mean().abs() < 1e-14);
        let hybrid = to_hybrid(&m, &state);
        let dec = rhs_decomposed(&m, &hybrid).unwrap();
        assert!(dec.dq.mean().abs() < 1e-14);
    }

    #[test]
    fn reconstruction_round_trip_and_errors() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.3, 2);
        let hybrid = to_hybrid(&m, &state);
        let v = reconstruct_v(&hybrid).unwrap();
        assert!(v.sub(&state.v).max_abs() < 1e-11);

        // 3d incompatible curl is rejected
        let g3 = make_grid(3, 16, 2.0 * PI).unwrap();
        let bad = HybridState {
            q: ScalarField::zeros(&g3),
            divv: ScalarField::zeros(&g3),
            curlv: CurlField::from_upper(
                &g3,
                vec![
                    ScalarField::from_fn(&g3, |x| x[2].sin()),
                    ScalarField::zeros(&g3),
                    ScalarField::zeros(&g3),
                ],
            ),
            mean_v: vec![0.0; 3],
        };
        assert!(matches!(
            reconstruct_v(&bad),
            Err(FormulationError::IncompatibleCurl(_))
        ));

        // 3d compatible round trip
        let w = VectorField::new(vec![
            ScalarField::from_fn(&g3, |x| (x[1] + x[2]).sin()),
            ScalarField::from_fn(&g3, |x| (2.0 * x[0]).cos() * x[2].sin()),
            ScalarField::from_fn(&g3, |x| x[0].sin() * x[1].cos() + 0.3),
        ]);
        let h3 = HybridState {
            q: ScalarField::zeros(&g3),
            divv: divergence(&w),
            curlv: curl_matrix(&w),
            mean_v: w.components().iter().map(|c| c.mean()).collect(),
        };
        let w_rec = reconstruct_v(&h3).unwrap();
        assert!(w_rec.sub(&w).max_abs() < 1e-10);
    }

    #[test]
    fn hessian_contraction_with_curl_vanishes() {
        // symmetric : antisymmetric contraction sum_ij d_ij phi omega_ij = 0
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.3, 3);
        let phi = phi_field(&m, &state.rho);
        let omega = curl_matrix(&state.v);
        let mut acc = ScalarField::zeros(&g);
        for i in 0..2 {
            for j in 0..2 {
                let h = derivative(&derivative(&phi, i), j);
                acc = acc.add(&h.zip(&omega.entry(i, j), |a, b| a * b));
            }
        }
        assert!(acc.max_abs() < 1e-10);
    }

    #[test]
    fn remainders_vanish_for_uniform_density() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.3, 4);
        let rho1 = ScalarField::constant(&g, 1.0);
        let omega = curl_matrix(&state.v);
        let r = remainder_R(&m, &rho1, &omega);
        assert!(r.max_abs() < 1e-12);
        // R1 keeps only the velocity-gradient commutator when rho is
        // constant (u = v there)
        let r1 = remainder_R1(&m, &rho1, &state.v, &omega);
        let grads: Vec<VectorField> = state.v.components().iter().map(gradient).collect();
        let expect = grads[0]
            .component(0)
            .zip(grads[1].component(0), |a, b| a * b)
            .add(
                &grads[1]
                    .component(0)
                    .zip(grads[1].component(1), |a, b| a * b),
            )
            .sub(
                &grads[0]
                    .component(1)
                    .zip(grads[0].component(0), |a, b| a * b),
            )
            .sub(
                &grads[1]
                    .component(1)
                    .zip(grads[0].component(1), |a, b| a * b),
            );
        assert!(r1.upper()[0].sub(&dealias(&expect)).max_abs() < 1e-11);
    }

    #[test]
    fn identity_residuals_small_2d() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let m = model_poly();
        let state = band_limited_state(&g, 0.25, 6);
        let res = identity_residuals(&m, &state).unwrap();
        assert!(res.mass < 1e-12, "mass {res:?}");
        assert!(res.divergence < 1e-10, "div {res:?}");
        assert!(res.curl < 1e-10, "curl {res:?}");
        assert!(res.reconstruction < 1e-10, "rec {res:?}");
    }

    #[test]
    fn identity_residuals_small_3d() {
        let g = make_grid(3, 32, 2.0 * PI).unwrap();
        let m = FluidModel::new(0.8, 2.0, 2.0, 1.0, 3).unwrap();
        let state = band_limited_state(&g, 0.15, 7);
        let res = identity_residuals(&m, &state).unwrap();
        assert!(res.max() < 1e-10, "{res:?}");
    }

    #[test]
    fn equivalence_residuals_across_models() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        for (alpha, gamma) in [(1.0, 1.4), (1.0, 2.0), (2.0, 1.4), (2.0, 2.0)] {
            let m = FluidModel::new(0.9, alpha, gamma, 1.0, 2).unwrap();
            let cls = from_effective(&m, &band_limited_state(&g, 0.02, 8));
            let res = equivalence_residual(&m, &cls);
            assert!(res.max() < 1e-8, "alpha {alpha} gamma {gamma}: {res:?}");
        }
    }
}
