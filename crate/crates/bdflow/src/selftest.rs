//! The acceptance suite: one function per criterion, shared between the
//! `acceptance` test target and the CLI `selftest` verb.

use crate::constitutive::FluidModel;
use crate::diagnostics::{
    entropy_monotone_check, estimate_certificate, smoothing_certificate,
    transport_contrast_certificate, CertificateKind,
};
use crate::evolution::{
    heat_propagate, linear_hybrid_oracle, run, sourceless_step, StepControl, Trajectory,
};
use crate::formulations::{
    equivalence_residual, from_effective, identity_residuals, to_hybrid, EffectiveState,
    HybridState,
};
use crate::littlewood_paley::{
    bony_decompose, build_cutoffs, dyadic_block, random_band_limited, Exponent,
};
use crate::runner::{execute, parse_config, scenario_init, ScenarioSpec};
use crate::spectral_grid::{make_grid, CurlField, Grid, ScalarField, VectorField};
use num_complex::Complex64;
use rand::SeedableRng;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {:<24} {} ({})",
            self.index,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn grid64() -> Arc<Grid> {
    make_grid(2, 64, 2.0 * PI).unwrap()
}

/// 1: the dyadic partition sums to one at every nonzero lattice radius.
pub fn criterion_partition_of_unity() -> CriterionResult {
    let g = grid64();
    let fam = build_cutoffs(&g);
    let mut worst: f64 = 0.0;
    for flat in 0..g.len() {
        let r = g.k_sq(flat).sqrt();
        if r > 0.0 {
            worst = worst.max((fam.partition_sum(r) - 1.0).abs());
        }
    }
    CriterionResult {
        index: 1,
        name: "partition-of-unity",
        passed: worst < 1e-12,
        detail: format!("max deviation {worst:.2e}"),
    }
}

fn corpus(g: &Arc<Grid>, count: usize, k_cap: i64, seed: u64) -> Vec<ScalarField> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_band_limited(g, k_cap, 1.0, &mut rng))
        .collect()
}

/// 2: summing all blocks reconstructs each field.
pub fn criterion_reconstruction() -> CriterionResult {
    let g = grid64();
    let fam = build_cutoffs(&g);
    let mut worst: f64 = 0.0;
    for f in corpus(&g, 20, 20, 101) {
        let mut sum = ScalarField::zeros(&g);
        for l in fam.blocks() {
            sum = sum.add(&dyadic_block(&f, &fam, l).unwrap());
        }
        worst = worst.max(sum.sub(&f).max_abs() / f.max_abs());
    }
    CriterionResult {
        index: 2,
        name: "block-reconstruction",
        passed: worst < 1e-12,
        detail: format!("max relative error {worst:.2e}"),
    }
}

/// 3: the three Bony pieces sum to the dealiased product.
pub fn criterion_bony_exactness() -> CriterionResult {
    let g = grid64();
    let fam = build_cutoffs(&g);
    // cap 10 keeps every pairwise product below the dealias cut, so the
    // physical-space product is alias-free and the identity is exact
    let fields = corpus(&g, 40, 10, 202);
    let mut worst: f64 = 0.0;
    for pair in fields.chunks(2) {
        let (f, h) = (&pair[0], &pair[1]);
        let (t1, t2, r) = bony_decompose(f, h, &fam);
        let product = f.mul_dealias(h);
        let scale = product.max_abs().max(1e-300);
        worst = worst.max(t1.add(&t2).add(&r).sub(&product).max_abs() / scale);
    }
    CriterionResult {
        index: 3,
        name: "bony-exactness",
        passed: worst < 1e-11,
        detail: format!("max relative error {worst:.2e}"),
    }
}

fn random_state(g: &Arc<Grid>, amp: f64, rng: &mut impl rand::Rng) -> EffectiveState {
    let q = random_band_limited(g, 3, amp, rng);
    let comps = (0..g.dim())
        .map(|_| random_band_limited(g, 3, amp, rng).map(|x| x + 0.02))
        .collect();
    EffectiveState {
        rho: q.map(|x| 1.0 + x),
        v: VectorField::new(comps),
    }
}

/// 4: the decomposed rates agree with the divergence/curl of the
/// effective rate, and reconstruction round-trips.
pub fn criterion_identity_suite() -> CriterionResult {
    let mut worst: f64 = 0.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(303);
    let g = grid64();
    let m = FluidModel::new(0.8, 2.0, 2.0, 1.0, 2).unwrap();
    for _ in 0..20 {
        let state = random_state(&g, 0.25, &mut rng);
        debug_assert!(state.rho.min() > 0.5);
        let res = identity_residuals(&m, &state).unwrap();
        let rate = crate::formulations::rhs_effective(&m, &state);
        let scale = rate.dv.max_abs().max(rate.drho.max_abs()).max(1.0);
        worst = worst.max(res.max() / scale);
    }
    let g3 = make_grid(3, 32, 2.0 * PI).unwrap();
    let m3 = FluidModel::new(0.8, 2.0, 2.0, 1.0, 3).unwrap();
    let state3 = random_state(&g3, 0.15, &mut rng);
    let res3 = identity_residuals(&m3, &state3).unwrap();
    let rate3 = crate::formulations::rhs_effective(&m3, &state3);
    let scale3 = rate3.dv.max_abs().max(rate3.drho.max_abs()).max(1.0);
    worst = worst.max(res3.max() / scale3);
    CriterionResult {
        index: 4,
        name: "identity-suite",
        passed: worst < 1e-10,
        detail: format!("max relative residual {worst:.2e}"),
    }
}

/// 5: classical and effective formulations produce the same dynamics.
pub fn criterion_equivalence() -> CriterionResult {
    let g = grid64();
    let mut worst: f64 = 0.0;
    for (alpha, gamma) in [(1.0, 1.4), (1.0, 2.0), (2.0, 1.4), (2.0, 2.0)] {
        let m = FluidModel::new(0.9, alpha, gamma, 1.0, 2).unwrap();
        let state = scenario_init(
            &ScenarioSpec {
                name: "manufactured".into(),
                amplitude: 0.05,
                seed: 0,
            },
            &g,
            &m,
        )
        .unwrap();
        let cls = from_effective(&m, &state);
        let res = equivalence_residual(&m, &cls);
        let rate = crate::formulations::rhs_original(&m, &cls);
        let scale = rate.du.max_abs().max(rate.drho.max_abs()).max(1.0);
        worst = worst.max(res.max() / scale);
    }
    CriterionResult {
        index: 5,
        name: "formulation-equivalence",
        passed: worst < 1e-8,
        detail: format!("max relative residual {worst:.2e}"),
    }
}

fn mode_coefficient(f: &ScalarField, target: &[i64]) -> Complex64 {
    let g = f.grid().clone();
    let spec = f.to_spectral();
    for flat in 0..g.len() {
        let idx = g.axis_indices(flat);
        if idx
            .iter()
            .zip(target)
            .all(|(&i, &t)| g.int_wavenumber(i) == t)
        {
            return spec.coeffs()[flat];
        }
    }
    Complex64::new(0.0, 0.0)
}

/// 6: heat propagator, sourceless IMEX step and the mode oracle.
pub fn criterion_linear_references() -> CriterionResult {
    let g = make_grid(2, 32, 2.0 * PI).unwrap();
    let mu = 0.5;
    let gamma = 2.0;
    let m = FluidModel::new(mu, 1.0, gamma, 1.0, 2).unwrap();

    // heat_propagate against the single-mode closed form
    let q = ScalarField::from_fn(&g, |x| (3.0 * x[0]).cos());
    let w = ScalarField::from_fn(&g, |x| (2.0 * x[1]).sin());
    let state = HybridState {
        q: q.clone(),
        divv: ScalarField::zeros(&g),
        curlv: CurlField::from_upper(&g, vec![w.clone()]),
        mean_v: vec![0.0, 0.0],
    };
    let t = 0.2;
    let out = heat_propagate(&m, &state, t);
    let mut worst = out
        .q
        .sub(&q.scale((-2.0 * mu * 9.0 * t).exp()))
        .max_abs()
        .max(
            out.curlv.upper()[0]
                .sub(&w.scale((-mu * 4.0 * t).exp()))
                .max_abs(),
        );
    let heat_ok = worst < 1e-12;

    // sourceless IMEX step equals the propagator step by step
    let mut imex_err: f64 = 0.0;
    let mut s = state.clone();
    let dt = 0.01;
    for step in 1..=10 {
        s = sourceless_step(&m, &s, dt);
        let exact = heat_propagate(&m, &state, step as f64 * dt);
        imex_err = imex_err.max(s.q.sub(&exact.q).max_abs()).max(
            s.curlv.upper()[0]
                .sub(&exact.curlv.upper()[0])
                .max_abs(),
        );
    }
    let imex_ok = imex_err < 1e-12;

    // small-amplitude nonlinear run against the coupled mode oracle
    let amp = 1e-4;
    let initial = HybridState {
        q: ScalarField::from_fn(&g, |x| amp * x[0].cos()),
        divv: ScalarField::from_fn(&g, |x| amp * x[0].cos()),
        curlv: CurlField::zeros(&g),
        mean_v: vec![0.0, 0.0],
    };
    let traj = run(
        &m,
        initial.clone(),
        &StepControl {
            dt: 1e-3,
            t_end: 1.0,
            record_every: 100,
        },
    )
    .unwrap();
    let mut oracle_err: f64 = 0.0;
    if traj.aborted.is_some() {
        oracle_err = f64::INFINITY;
    } else {
        let q0 = mode_coefficient(&initial.q, &[1, 0]);
        let d0 = mode_coefficient(&initial.divv, &[1, 0]);
        let sg = gamma.sqrt();
        for (time, s) in traj.times.iter().zip(&traj.states) {
            // the pressure coupling carries gamma; rescaling
            // (q, d/sqrt(gamma)) on the sped-up clock removes it
            let (oq, od) =
                linear_hybrid_oracle(q0, d0 / sg, 1.0, mu / sg, sg * time);
            let qm = mode_coefficient(&s.q, &[1, 0]);
            let dm = mode_coefficient(&s.divv, &[1, 0]);
            oracle_err = oracle_err.max((qm - oq).norm()).max((dm - sg * od).norm());
        }
    }
    let oracle_ok = oracle_err < 1e-6;

    worst = worst.max(imex_err);
    CriterionResult {
        index: 6,
        name: "linear-references",
        passed: heat_ok && imex_ok && oracle_ok,
        detail: format!(
            "heat/imex error {worst:.2e}, oracle tracking error {oracle_err:.2e}"
        ),
    }
}

fn small_data_run(t_end: f64, dt: f64, record_every: usize) -> (FluidModel, Trajectory) {
    let g = grid64();
    let m = FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
    let state = scenario_init(
        &ScenarioSpec {
            name: "small_data".into(),
            amplitude: 1e-3,
            seed: 42,
        },
        &g,
        &m,
    )
    .unwrap();
    let traj = run(
        &m,
        to_hybrid(&m, &state),
        &StepControl {
            dt,
            t_end,
            record_every,
        },
    )
    .unwrap();
    (m, traj)
}

fn large_data_run(t_end: f64, dt: f64, record_every: usize) -> (FluidModel, Trajectory) {
    let g = grid64();
    let m = FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
    let state = scenario_init(
        &ScenarioSpec {
            name: "large_data".into(),
            amplitude: 0.3,
            seed: 0,
        },
        &g,
        &m,
    )
    .unwrap();
    let traj = run(
        &m,
        to_hybrid(&m, &state),
        &StepControl {
            dt,
            t_end,
            record_every,
        },
    )
    .unwrap();
    (m, traj)
}

/// 7: total mass is conserved on the suite's runs.
pub fn criterion_mass_conservation() -> CriterionResult {
    let mut worst: f64 = 0.0;
    let mut aborted = false;
    for (m, traj, t_end) in [
        {
            let (m, t) = small_data_run(0.2, 1e-3, 20);
            (m, t, 0.2)
        },
        {
            let (m, t) = large_data_run(0.05, 5e-4, 10);
            (m, t, 0.05)
        },
    ] {
        aborted |= traj.aborted.is_some();
        let volume =
            traj.states[0].q.grid().cell_volume() * traj.states[0].q.grid().len() as f64;
        let mass0 = traj.states[0].q.integral() + m.rho_ref * volume;
        let drift = crate::diagnostics::mass_drift(&traj, &m);
        worst = worst.max(drift / t_end / mass0);
    }
    CriterionResult {
        index: 7,
        name: "mass-conservation",
        passed: !aborted && worst < 1e-12,
        detail: format!("max drift {worst:.2e} of mass(0) per unit time"),
    }
}

/// 8: the discrete entropy total never rises above the step tolerance.
pub fn criterion_entropy_surrogate() -> CriterionResult {
    let dt = 2e-3;
    let (m, traj) = small_data_run(1.0, dt, 1);
    if traj.aborted.is_some() {
        return CriterionResult {
            index: 8,
            name: "entropy-surrogate",
            passed: false,
            detail: "run aborted".into(),
        };
    }
    let rep = entropy_monotone_check(&traj, &m, dt).unwrap();
    CriterionResult {
        index: 8,
        name: "entropy-surrogate",
        passed: rep.passed,
        detail: format!(
            "max increase {:.2e}, tolerance {:.2e}",
            rep.max_increase_per_step, rep.tolerance
        ),
    }
}

/// 9: density blocks decay at heat rates while the divergence only stays
/// bounded.
pub fn criterion_density_smoothing() -> CriterionResult {
    let (m, traj) = large_data_run(0.2, 5e-4, 1);
    if traj.aborted.is_some() {
        return CriterionResult {
            index: 9,
            name: "density-smoothing",
            passed: false,
            detail: "run aborted".into(),
        };
    }
    let cert = smoothing_certificate(&traj, &m, Exponent::Finite(2.0)).unwrap();
    let mut worst_ratio_dev: f64 = 0.0;
    let mut judged = 0;
    for br in cert.block_rates.iter().filter(|b| b.level >= 2) {
        judged += 1;
        worst_ratio_dev = worst_ratio_dev.max((br.ratio - 1.0).abs());
    }
    let rates_ok = judged >= 3 && worst_ratio_dev <= 0.5;
    let budget_ok = cert.l1_besov_budget.is_finite() && cert.l1_besov_budget > 0.0;
    let contrast = transport_contrast_certificate(&traj).unwrap();
    CriterionResult {
        index: 9,
        name: "density-smoothing",
        passed: rates_ok && budget_ok && contrast.bounded,
        detail: format!(
            "{judged} blocks judged, worst rate ratio deviation {worst_ratio_dev:.2}, budget {:.3e}, div v growth {:.2}",
            cert.l1_besov_budget, contrast.max_growth
        ),
    }
}

/// 10: halving the step divides the error by at least 3.5.
pub fn criterion_imex_order() -> CriterionResult {
    let g = make_grid(2, 32, 2.0 * PI).unwrap();
    let m = FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
    let state = to_hybrid(
        &m,
        &scenario_init(
            &ScenarioSpec {
                name: "manufactured".into(),
                amplitude: 0.05,
                seed: 0,
            },
            &g,
            &m,
        )
        .unwrap(),
    );
    let solve = |dt: f64| {
        let traj = run(
            &m,
            state.clone(),
            &StepControl {
                dt,
                t_end: 1.0,
                record_every: 1_000_000,
            },
        )
        .unwrap();
        assert!(traj.aborted.is_none());
        traj.last().clone()
    };
    let reference = solve(0.00125);
    let err = |a: &HybridState| {
        a.q.sub(&reference.q)
            .max_abs()
            .max(a.divv.sub(&reference.divv).max_abs())
    };
    let e1 = err(&solve(0.02));
    let e2 = err(&solve(0.01));
    let e3 = err(&solve(0.005));
    let r1 = e1 / e2;
    let r2 = e2 / e3;
    CriterionResult {
        index: 10,
        name: "imex-order",
        passed: r1 >= 3.5 && r2 >= 3.5,
        detail: format!("error ratios {r1:.2}, {r2:.2} per dt halving"),
    }
}

/// 11: the estimate certificates are finite, sharp where closed forms
/// exist, and refinement-stable.
pub fn criterion_estimate_certificates() -> CriterionResult {
    let mu = 0.4;
    let mut detail = String::new();
    let mut ok = true;
    let g64 = grid64();
    let g128 = make_grid(2, 128, 2.0 * PI).unwrap();
    for kind in [
        CertificateKind::Heat24,
        CertificateKind::Tdiff25,
        CertificateKind::Tdiff26,
        CertificateKind::Transport27,
    ] {
        let shear = if kind == CertificateKind::Transport27 { 0.0 } else { 0.4 };
        let c64 = estimate_certificate(kind, &g64, mu, shear).unwrap();
        let c128 = estimate_certificate(kind, &g128, mu, shear).unwrap();
        let stable = (c64.empirical_c - c128.empirical_c).abs()
            <= 0.2 * c64.empirical_c.abs().max(1e-300);
        ok &= c64.empirical_c.is_finite() && c128.empirical_c.is_finite() && stable;
        match kind {
            CertificateKind::Heat24 => ok &= c64.empirical_c <= 7.2 / mu,
            CertificateKind::Transport27 => ok &= c64.empirical_c == 1.0,
            _ => {}
        }
        detail.push_str(&format!("{}={:.3} ", kind.name(), c64.empirical_c));
    }
    CriterionResult {
        index: 11,
        name: "estimate-certificates",
        passed: ok,
        detail: detail.trim_end().to_string(),
    }
}

/// 12: two executions of the same seeded config give bit-identical CSVs.
pub fn criterion_determinism() -> CriterionResult {
    let make = |dir: &std::path::Path| {
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
t_end = 0.05
record_every = 10

[scenario]
name = "small_data"
amplitude = 1e-3
seed = 9

[outputs]
directory = "{}"

[checks]
certificates = ["mass"]
"#,
            dir.display()
        )
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let c1 = parse_config(&make(d1.path())).unwrap();
    let c2 = parse_config(&make(d2.path())).unwrap();
    let o1 = execute(&c1).unwrap();
    let o2 = execute(&c2).unwrap();
    let a = std::fs::read(d1.path().join("timeseries.csv")).unwrap_or_default();
    let b = std::fs::read(d2.path().join("timeseries.csv")).unwrap_or_default();
    let identical = !a.is_empty() && a == b;
    CriterionResult {
        index: 12,
        name: "determinism",
        passed: o1.exit_code == 0 && o2.exit_code == 0 && identical,
        detail: format!(
            "exit codes {}/{}, csv bytes {} {}",
            o1.exit_code,
            o2.exit_code,
            a.len(),
            if identical { "identical" } else { "DIFFER" }
        ),
    }
}

/// Run the whole suite in order.
pub fn all_criteria() -> Vec<CriterionResult> {
    vec![
        criterion_partition_of_unity(),
        criterion_reconstruction(),
        criterion_bony_exactness(),
        criterion_identity_suite(),
        criterion_equivalence(),
        criterion_linear_references(),
        criterion_mass_conservation(),
        criterion_entropy_surrogate(),
        criterion_density_smoothing(),
        criterion_imex_order(),
        criterion_estimate_certificates(),
        criterion_determinism(),
    ]
}
