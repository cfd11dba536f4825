use approx::assert_abs_diff_eq;
use hermite_galerkin::assembly::{
    assemble_a1, assemble_a3, assemble_a4, assemble_linear, nonlinear_rhs, nonlinear_rhs_nodal, source_coeffs,
};
use hermite_galerkin::basis::{eval_ghf_all, BasisParams, ParamSchedule, Schedule};
use hermite_galerkin::problems::{burgers_problem, heat_problem, kdvb_problem, ProblemSpec};
use hermite_galerkin::quadrature::{gauss_hermite, projection_nodes, triple_product_nodes, triple_product_tensor};
use hermite_galerkin::spectral::{project, SpectralState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn diffusion_matrix_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [0usize, 1, 2, 7, 16, 33, 64] {
        let alpha = rng.gen_range(0.1..5.0);
        let a3 = assemble_a3(n, alpha).unwrap().to_dense();
        assert_eq!((&a3 - a3.transpose()).abs().max(), 0.0);
        assert!(a3.symmetric_eigenvalues().min() >= -1e-12);
    }
}

#[test]
fn drift_and_dispersion_matrices_are_skew() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let n = rng.gen_range(3..50);
        let p = BasisParams::new(rng.gen_range(0.2..3.0), 0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0)).unwrap();
        let a1 = assemble_a1(n, &p).unwrap().to_dense();
        let a4 = assemble_a4(n, p.alpha).unwrap().to_dense();
        assert!((&a1 + a1.transpose()).abs().max() <= 1e-12);
        assert!((&a4 + a4.transpose()).abs().max() <= 1e-12);
    }
}

#[test]
fn operator_bandwidths() {
    let heat = heat_problem();
    let p = heat.default_schedule.at(0.5).unwrap();
    assert_eq!(assemble_linear(20, &p, heat.a2, heat.a3).unwrap().half_bandwidth(), 2);
    let kdvb = kdvb_problem();
    let p = kdvb.default_schedule.at(0.5).unwrap();
    assert_eq!(assemble_linear(20, &p, kdvb.a2, kdvb.a3).unwrap().half_bandwidth(), 3);
}

#[test]
fn static_energy_identity() {
    // With a static basis, u.(A u) = a2 u.(A3 u): the dispersive part is neutral.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = BasisParams::fixed(2.0, 0.4).unwrap();
    let n = 30;
    let a = assemble_linear(n, &p, 0.7, -0.3).unwrap();
    let a3 = assemble_a3(n, p.alpha).unwrap();
    for _ in 0..10 {
        let u: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dot = |m: &hermite_galerkin::banded::BandedMatrix| m.mul_vec(&u).iter().zip(&u).map(|(x, y)| x * y).sum::<f64>();
        assert_abs_diff_eq!(dot(&a), 0.7 * dot(&a3), epsilon = 1e-11);
        assert!(dot(&a) >= 0.0);
    }
}

#[test]
fn convection_is_energy_neutral() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.gen_range(1..=40);
        let p = BasisParams::fixed(rng.gen_range(0.2..4.0), rng.gen_range(-3.0..3.0)).unwrap();
        let s = SpectralState::new((0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(), 0.0, p).unwrap();
        let b = nonlinear_rhs(&s, &triple_product_tensor(n + 1).unwrap(), 1.0).unwrap();
        let dot: f64 = b.iter().zip(s.coeffs()).map(|(x, y)| x * y).sum();
        assert!(dot.abs() <= 1e-10, "n={n}: {dot}");
    }
}

#[test]
fn convection_matches_pointwise_quadrature() {
    // Oracle: B_m = int u u_x H_m dx with u_x from the closed-form derivative.
    let n = 12;
    let p = BasisParams::fixed(1.3, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = SpectralState::new((0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(), 0.0, p).unwrap();
    let tensor = triple_product_tensor(n + 1).unwrap();
    let b = nonlinear_rhs(&s, &tensor, 1.0).unwrap();

    let (lo, hi, m) = (p.beta - 12.0 / p.alpha, p.beta + 12.0 / p.alpha, 6000);
    let h = (hi - lo) / m as f64;
    let mut oracle = vec![0.0; n + 1];
    for k in 0..=m {
        let x = lo + k as f64 * h;
        let w = if k == 0 || k == m { 0.5 * h } else { h };
        let v = eval_ghf_all(n, x, &p).unwrap();
        let z = p.to_reference(x);
        let u: f64 = s.coeffs().iter().zip(&v).map(|(c, hv)| c * hv).sum();
        let ux: f64 = (0..=n)
            .map(|j| {
                let lower = if j > 0 { (2.0 * j as f64).sqrt() * v[j - 1] } else { 0.0 };
                s.coeffs()[j] * p.alpha * (lower - z * v[j])
            })
            .sum();
        for (o, hv) in oracle.iter_mut().zip(&v) {
            *o += w * u * ux * hv;
        }
    }
    for (got, want) in b.iter().zip(&oracle) {
        assert_abs_diff_eq!(*got, *want, epsilon = 1e-11);
    }

    let nodal_rule = gauss_hermite(triple_product_nodes(n + 1)).unwrap();
    let nodal = nonlinear_rhs_nodal(&s, |u| 0.5 * u * u, 1.0, &nodal_rule).unwrap();
    for (got, want) in nodal.iter().zip(&b) {
        assert_abs_diff_eq!(*got, *want, epsilon = 1e-12);
    }
}

/// Max-norm residual of `du/dt + A u + B(u) - f` for the projected exact
/// solution, with `du/dt` from fourth-order differences in time. Rows within
/// the operator bandwidth of `N` see the dropped `H_{N+1..}` couplings and
/// are skipped.
fn semi_discrete_residual(problem: &ProblemSpec, schedule: &ParamSchedule, n: usize, t: f64) -> f64 {
    let exact = problem.exact.clone().unwrap();
    let rule = gauss_hermite(projection_nodes(n)).unwrap();
    let coeffs = |s: f64| -> Vec<f64> {
        let p = schedule.at(s).unwrap();
        project(|x| exact(x, s), n, &p, &rule).unwrap().into_coeffs()
    };
    let h = 1e-3;
    let (m2, m1, p1, p2) = (coeffs(t - 2.0 * h), coeffs(t - h), coeffs(t + h), coeffs(t + 2.0 * h));
    let p = schedule.at(t).unwrap();
    let state = SpectralState::new(coeffs(t), t, p).unwrap();
    let a = assemble_linear(n, &p, problem.a2, problem.a3).unwrap();
    let au = a.mul_vec(state.coeffs());
    let b = nonlinear_rhs(&state, &triple_product_tensor(n + 1).unwrap(), problem.a1).unwrap();
    let f = source_coeffs(|x, s| problem.source_at(x, s), t, n, &p, &rule).unwrap();
    (0..=n - 3)
        .map(|k| {
            let du = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h);
            (du + au[k] + b[k] - f[k]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn projected_exact_solutions_satisfy_the_galerkin_system() {
    let heat = heat_problem();
    assert!(semi_discrete_residual(&heat, &heat.default_schedule, 40, 0.5) < 1e-8);

    let burgers = burgers_problem();
    assert!(semi_discrete_residual(&burgers, &burgers.default_schedule, 40, 0.5) < 1e-8);

    let kdvb = kdvb_problem();
    let moving = ParamSchedule::new(Schedule::Constant(kdvb.default_schedule.at(0.0).unwrap().alpha), Schedule::LinearDrift { offset: 0.0, rate: -1.0 });
    let r_fixed = semi_discrete_residual(&kdvb, &kdvb.default_schedule, 80, 0.5);
    let r_moving = semi_discrete_residual(&kdvb, &moving, 80, 0.5);
    assert!(r_fixed < 1e-6, "{r_fixed}");
    assert!(r_moving < 1e-6, "{r_moving}");
}
