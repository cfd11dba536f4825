use approx::assert_abs_diff_eq;
use hermite_galerkin::assembly::assemble_a3;
use hermite_galerkin::basis::{dt_coupling, dx_operator, eval_ghf_all, index_scale, BasisParams, ParamSchedule, Schedule};
use hermite_galerkin::quadrature::{gauss_hermite, integrate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn orthonormal_under_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 40;
    let rule = gauss_hermite(n + 2).unwrap();
    for _ in 0..5 {
        let p = BasisParams::fixed(rng.gen_range(0.3..4.0), rng.gen_range(-3.0..3.0)).unwrap();
        for i in (0..=n).step_by(3) {
            for j in i..=n {
                let g = integrate(
                    |x| {
                        let h = eval_ghf_all(n, x, &p).unwrap();
                        h[i] * h[j]
                    },
                    &rule,
                    &p,
                )
                .unwrap();
                assert_abs_diff_eq!(g, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn three_term_recurrence_holds_at_nodes() {
    let p = BasisParams::fixed(1.7, 0.6).unwrap();
    let n = 60;
    let rule = gauss_hermite(80).unwrap();
    for &z in rule.nodes() {
        let x = p.to_physical(z);
        let h = eval_ghf_all(n + 1, x, &p).unwrap();
        for k in 1..=n {
            let terms = [
                p.alpha * (x - p.beta) * h[k],
                index_scale(k + 1) * h[k + 1],
                index_scale(k) * h[k - 1],
            ];
            let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
            let residual = terms[0] - terms[1] - terms[2];
            assert!(residual.abs() <= 1e-12 * scale.max(1e-300), "k={k} z={z}: {residual}");
        }
    }
}

/// `d/dx H_k = alpha (sqrt(2k) H_{k-1} - z H_k)`, evaluated pointwise.
fn pointwise_derivatives(n: usize, x: f64, p: &BasisParams) -> Vec<f64> {
    let h = eval_ghf_all(n, x, p).unwrap();
    let z = p.to_reference(x);
    (0..=n)
        .map(|k| {
            let lower = if k > 0 { (2.0 * k as f64).sqrt() * h[k - 1] } else { 0.0 };
            p.alpha * (lower - z * h[k])
        })
        .collect()
}

#[test]
fn derivative_gram_matrix_two_ways() {
    let p = BasisParams::fixed(1.4, -0.8).unwrap();
    let n = 20;
    let a3 = assemble_a3(n, p.alpha).unwrap();

    // Through the coefficient operator, keeping the H_{N+1} component.
    let d = dx_operator(n + 1, p.alpha).unwrap();
    let columns: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let mut e = vec![0.0; n + 2];
            e[k] = 1.0;
            d.mul_vec(&e)
        })
        .collect();

    // By quadrature of pointwise derivatives.
    let rule = gauss_hermite(n + 4).unwrap();
    for i in 0..=n {
        for j in 0..=n {
            let via_operator: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            let via_quadrature = integrate(
                |x| {
                    let dh = pointwise_derivatives(n, x, &p);
                    dh[i] * dh[j]
                },
                &rule,
                &p,
            )
            .unwrap();
            let d2 = |k: usize| index_scale(k) * index_scale(k);
            let formula = if i == j {
                p.alpha * p.alpha * (d2(i + 1) + d2(i))
            } else if i + 2 == j {
                -p.alpha * p.alpha * index_scale(i + 1) * index_scale(i + 2)
            } else if j + 2 == i {
                -p.alpha * p.alpha * index_scale(j + 1) * index_scale(j + 2)
            } else {
                0.0
            };
            assert_abs_diff_eq!(via_operator, formula, epsilon = 1e-10);
            assert_abs_diff_eq!(via_quadrature, formula, epsilon = 1e-10);
            assert_abs_diff_eq!(a3.get(i, j), formula, epsilon = 1e-12);
        }
    }
}

#[test]
fn bernstein_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=60);
        let alpha = rng.gen_range(0.3..4.0);
        let mut u: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        u.push(0.0);
        let du = dx_operator(n + 1, alpha).unwrap().mul_vec(&u);
        let dnorm = du.iter().map(|c| c * c).sum::<f64>().sqrt();
        worst = worst.max(dnorm / (alpha * (n as f64).sqrt() * norm));
    }
    assert!(worst <= 2.0, "fitted constant {worst}");
}

#[test]
fn time_derivative_scales_like_n() {
    // alpha(t) = 1/sqrt(2(t+1)), beta = 0: d/dt H_N has norm ~ |alpha'/alpha| N.
    let sched = ParamSchedule::new(Schedule::InverseSqrtShift, Schedule::Constant(0.0));
    let t = 0.3;
    let h = 1e-4;
    let p = sched.at(t).unwrap();
    let ratio = p.alpha_dot / p.alpha;
    let mut constants = Vec::new();
    for n in [16usize, 32, 64] {
        let rule = gauss_hermite(n + 40).unwrap();
        let pm = sched.at(t - h).unwrap();
        let pp = sched.at(t + h).unwrap();
        let sq = integrate(
            |x| {
                let a = eval_ghf_all(n, x, &pp).unwrap()[n];
                let b = eval_ghf_all(n, x, &pm).unwrap()[n];
                ((a - b) / (2.0 * h)).powi(2)
            },
            &rule,
            &BasisParams::fixed(p.alpha * 0.9, 0.0).unwrap(),
        )
        .unwrap();
        constants.push(sq / (ratio * ratio * (n * n) as f64));
    }
    for c in &constants {
        assert!(*c <= 1.0, "{constants:?}");
    }
    let spread = constants.iter().cloned().fold(f64::MIN, f64::max) / constants.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 2.0, "{constants:?}");
}

#[test]
fn dt_coupling_matches_time_differences() {
    let sched = ParamSchedule::new(Schedule::InverseSqrtShift, Schedule::LinearDrift { offset: 0.2, rate: -1.0 });
    let t = 0.5;
    let h = 1e-4;
    let n = 12;
    let p = sched.at(t).unwrap();
    let (pm, pp) = (sched.at(t - h).unwrap(), sched.at(t + h).unwrap());
    let m = dt_coupling(n, &p).unwrap();
    let rule = gauss_hermite(3 * n).unwrap();
    for row in 0..=n {
        for col in 0..=n {
            let fd = integrate(
                |x| {
                    let dt = (eval_ghf_all(n, x, &pp).unwrap()[col] - eval_ghf_all(n, x, &pm).unwrap()[col]) / (2.0 * h);
                    dt * eval_ghf_all(n, x, &p).unwrap()[row]
                },
                &rule,
                &BasisParams::fixed(p.alpha * 0.9, p.beta).unwrap(),
            )
            .unwrap();
            assert_abs_diff_eq!(m.get(row, col), fd, epsilon = 1e-6);
        }
    }
}
