//! Property tests over the public API.

use proptest::prelude::*;
use crate::dd::DD;
use crate::geometry::{center_sigma, eval_p, eval_p_prime, EndpointConfig};
use crate::hilbert::build_matrix;
use crate::inversion::{transform_config, verify_kbar_identities};
use crate::quadrature::compute_constants;
use crate::sturm::{apply_l, sign_changes, SampledFunction};
use crate::svd::{match_indices, split_spectrum, Direction};

const TOL: f64 = 1e-12;

fn config() -> impl Strategy<Value = EndpointConfig> {
    (-5.0..5.0f64, 0.2..5.0f64, 0.2..5.0f64, 0.2..5.0f64)
        .prop_map(|(a1, d1, d2, d3)| EndpointConfig::new(a1, a1 + d1, a1 + d1 + d2, a1 + d1 + d2 + d3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn k_identity_holds(cfg in config()) {
        let k = compute_constants(&cfg, TOL).unwrap();
        prop_assert!((k.k_minus - k.k_minus_right).abs() + 2.0 * TOL <= 1e-9 * k.k_minus);
    }

    #[test]
    fn k_scales_inversely_and_ignores_translation(cfg in config(), c in 0.25..4.0f64, t in -10.0..10.0f64) {
        let k = compute_constants(&cfg, TOL).unwrap();
        let ks = compute_constants(&cfg.scaled(c).unwrap(), TOL).unwrap();
        let kt = compute_constants(&cfg.translated(t).unwrap(), TOL).unwrap();
        prop_assert!((ks.k_minus * c / k.k_minus - 1.0).abs() < 1e-9);
        prop_assert!((ks.k_plus * c / k.k_plus - 1.0).abs() < 1e-9);
        prop_assert!((kt.k_minus / k.k_minus - 1.0).abs() < 1e-9);
        prop_assert!((kt.k_plus / k.k_plus - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transform_round_trip(cfg in config()) {
        let t = transform_config(&cfg).unwrap();
        let o = t.original.as_array();
        prop_assert!(o[0] < 0.0 && o[1] > 0.0);
        let e = t.eta.as_array();
        prop_assert!(e[0] < 0.0 && e[1] > 0.0);
        let back = t.inverse().unwrap();
        for (x, y) in back.as_array().iter().zip(cfg.as_array()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn kbar_identities(cfg in config()) {
        let k = verify_kbar_identities(&cfg, TOL).unwrap();
        prop_assert!(k.rel_err_plus < 1e-8 && k.rel_err_minus < 1e-8, "{k:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dd_products_are_error_free(a in -1e10..1e10f64, b in -1e10..1e10f64) {
        let p = DD::from(a) * DD::from(b);
        prop_assert_eq!(p.hi, a * b);
        prop_assert_eq!(p.lo, a.mul_add(b, -(a * b)));
    }

    #[test]
    fn dd_sums_are_error_free(a in -1e10..1e10f64, b in -1e-5..1e-5f64) {
        let s = DD::from(a) + DD::from(b);
        prop_assert_eq!(s.hi, a + b);
        // two-sum: the tail recovers exactly what rounding dropped
        let bv = s.hi - a;
        let err = (a - (s.hi - bv)) + (b - bv);
        prop_assert_eq!(s.lo, err);
    }

    #[test]
    fn split_buckets_partition(values in prop::collection::vec(0.0..1.0f64, 0..60), lo in 0.01..0.5f64, hi in 0.5..0.99f64) {
        let s = split_spectrum(&values, lo, hi);
        let mut all: Vec<usize> = s.near_zero.iter().chain(&s.transition).chain(&s.near_one).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..values.len()).collect::<Vec<_>>());
        prop_assert!(s.near_zero.iter().all(|&i| values[i] < lo));
        prop_assert!(s.near_one.iter().all(|&i| values[i] > hi));
    }

    #[test]
    fn planted_offset_is_recovered(m in 0usize..40, noise in prop::collection::vec(-0.1..0.1f64, 80)) {
        let law = |n: usize| 0.7 - 3.7 * n as f64;
        let mut logs: Vec<f64> = (0..80).map(|i| 0.9 * noise[i] - 0.01 * i as f64).collect();
        for n in 1..=12 {
            logs[m + n] = law(n) + noise[m + n];
        }
        let got = match_indices(&logs, &law, 1, 12, Direction::Ascending, 0.0).unwrap();
        prop_assert_eq!(got, m);
    }

    #[test]
    fn sign_changes_of_sines(k in 1usize..12) {
        let v: Vec<f64> = (0..2001).map(|i| (k as f64 * std::f64::consts::PI * (i as f64 + 0.5) / 2001.0).sin()).collect();
        prop_assert_eq!(sign_changes(&v), k - 1);
    }
}

fn interior(cfg: &EndpointConfig) -> (f64, f64) {
    let m = 0.1 * (cfg.a3() - cfg.a1());
    (cfg.a1() + m, cfg.a3() - m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // summation by parts: for sequences vanishing at both ends the flux
    // form is symmetric
    #[test]
    fn discrete_l_is_self_adjoint(cfg in config(), p in 1.0..6.0f64, q in 1.0..6.0f64) {
        let (lo, hi) = interior(&cfg);
        let bump = |k: f64| move |x: f64| ((x - lo) * (hi - x)) * (k * (x - lo)).cos();
        let f = SampledFunction::from_fn(lo, hi, 401, bump(p)).unwrap();
        let g = SampledFunction::from_fn(lo, hi, 401, bump(q)).unwrap();
        let lf = apply_l(&cfg, &f).unwrap();
        let lg = apply_l(&cfg, &g).unwrap();
        let inner = |a: &[f64], b: &[f64]| (1..a.len() - 1).map(|i| a[i] * b[i]).sum::<f64>();
        let fg = inner(&f.values, &lg.values);
        let gf = inner(&g.values, &lf.values);
        let scale = inner(&f.values, &lf.values).abs() + inner(&g.values, &lg.values).abs();
        prop_assert!((fg - gf).abs() <= 1e-10 * scale, "{fg} vs {gf}");
    }

    #[test]
    fn discrete_l_converges_at_second_order(cfg in config(), k in 0.5..3.0f64) {
        let (lo, hi) = interior(&cfg);
        let sigma = center_sigma(&cfg);
        let exact = |x: f64| {
            let (s, c) = (k * x).sin_cos();
            eval_p_prime(&cfg, x) * k * c - eval_p(&cfg, x) * k * k * s + 2.0 * (x - sigma).powi(2) * s
        };
        let err = |count: usize| {
            let f = SampledFunction::from_fn(lo, hi, count, |x| (k * x).sin()).unwrap();
            let lf = apply_l(&cfg, &f).unwrap();
            (1..count - 1).map(|i| (lf.values[i] - exact(lf.grid[i])).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(101), err(201));
        let order = (e1 / e2).log2();
        prop_assert!(order > 1.8 && order < 2.2, "order {order} ({e1} -> {e2})");
    }

    #[test]
    fn constants_are_multiplied_by_the_weight(cfg in config(), c in -3.0..3.0f64) {
        let (lo, hi) = interior(&cfg);
        let f = SampledFunction::from_fn(lo, hi, 101, |_| c).unwrap();
        let lf = apply_l(&cfg, &f).unwrap();
        let sigma = center_sigma(&cfg);
        for i in 1..100 {
            let want = 2.0 * (lf.grid[i] - sigma).powi(2) * c;
            prop_assert!((lf.values[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn matrix_entries_follow_the_kernel_sign() {
    let cfg = EndpointConfig::default_config();
    let m = build_matrix(&cfg, 61, 91).unwrap();
    let xs = m.target_grid.points();
    let ys = m.source_grid.points();
    for i in (0..61).step_by(7) {
        for j in (0..91).step_by(11) {
            let e = m.entries[(i, j)];
            assert_eq!(e.signum(), (ys[j] - xs[i]).signum());
            let want = m.source_grid.step / (std::f64::consts::PI * (ys[j] - xs[i]));
            assert!((e / want - 1.0).abs() < 1e-13);
        }
    }
}

