//! Property tests over randomly drawn models and parameters.

mod common;

use meinardus::asymptotics::{self, EstimateVariant};
use meinardus::models::{builtin, model_from_json, model_to_json};
use meinardus::nllt::CharFn;
use meinardus::saddle;
use meinardus::series::{self, LambdaSequence, PowerSeriesReal};
use meinardus::{InnerSeriesSpec, PrecisionContext, SequenceSpec, TailRule, WeightedModel};
use proptest::prelude::*;
use rug::Float;

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

fn polynomial_model(d: Vec<f64>, weights: Vec<f64>) -> WeightedModel {
    let inner = InnerSeriesSpec::explicit(d, TailRule::Zero, Vec::new()).unwrap();
    WeightedModel::new(
        "random",
        inner,
        SequenceSpec::Table {
            values: weights,
            tail: 1.0,
        },
        SequenceSpec::Constant(1.0),
        None,
    )
    .unwrap()
}

fn inner_coeffs() -> impl Strategy<Value = Vec<f64>> {
    // explicit inner series must satisfy d_j^(1/j) <= 1
    (0.25f64..=1.0, prop::collection::vec(0.0f64..=1.0, 0..5)).prop_map(|(d1, tail)| {
        let mut d = vec![1.0, d1];
        d.extend(tail);
        d
    })
}

const BUILTINS: [&str; 7] = [
    "partitions",
    "distinct",
    "prime-powers",
    "example3",
    "ratio-kernel(3)",
    "q4-indicator",
    "gcd2",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn log_then_exp_recovers_series(tail in prop::collection::vec(0.0f64..5.0, 1..=64)) {
        // log coefficients grow like the inverse radius to the j-th power, so
        // carry enough bits that the cancellation in exp stays below 1e-30
        let prec = 512;
        let mut d = vec![1.0];
        d.extend(tail);
        let deg = d.len() - 1;
        let s = PowerSeriesReal::from_f64(&d, prec).unwrap();
        let xi = series::log_series(&s).unwrap();
        let lambda = LambdaSequence::new((1..=deg).map(|j| xi.get(j).clone()).collect()).unwrap();
        let back = series::exp_series(&lambda, deg).unwrap();
        for (j, dj) in d.iter().enumerate() {
            let err = Float::with_val(prec, back.get(j) - *dj).abs().to_f64();
            prop_assert!(err <= 1e-30 * dj.max(1.0), "j = {}: err {:e}", j, err);
        }
    }

    #[test]
    fn recurrence_matches_factor_product(
        d in inner_coeffs(),
        weights in prop::collection::vec(0.0f64..2.5, 1..20),
        n in 1usize..=200,
    ) {
        let model = polynomial_model(d, weights);
        let a = series::enumerate_exact(&model, n, &ctx()).unwrap();
        let b = series::direct_factor_oracle(&model, n, &ctx()).unwrap();
        for i in 0..=n {
            let x = a.coeff(i).to_f64();
            let y = b.coeff(i).to_f64();
            prop_assert!((x - y).abs() <= 1e-20 * x.abs().max(y.abs()).max(1e-300) + 1e-280,
                "c_{} = {} vs {}", i, x, y);
        }
    }

    #[test]
    fn integer_models_match_big_integer_product(
        d in prop::collection::vec(0i64..=1, 0..5),
        weights in prop::collection::vec(0u64..4, 1..12),
        n in 1usize..=500,
    ) {
        let mut di = vec![1i64, 1];
        di.extend(d);
        let b = |k: usize| weights.get(k - 1).copied().unwrap_or(1);
        let model = polynomial_model(
            di.iter().map(|&x| x as f64).collect(),
            weights.iter().map(|&x| x as f64).collect(),
        );
        let exact = series::enumerate_exact(&model, n, &ctx()).unwrap();
        let oracle = common::integer_product(&di, b, n);
        for (i, expected) in oracle.iter().enumerate() {
            prop_assert_eq!(common::rounded(exact.coeff(i)), expected.to_string(), "index {}", i);
            prop_assert!(common::distance_to_integer(exact.coeff(i)) < 0.25);
        }
    }

    #[test]
    fn indicator_weights_force_zero_coefficients(m in 2u64..7, n in 1usize..=200) {
        let model = WeightedModel::new(
            "indicator",
            InnerSeriesSpec::geometric_pole(),
            SequenceSpec::IndicatorModulus(m),
            SequenceSpec::Constant(1.0),
            None,
        )
        .unwrap();
        let c = series::enumerate_exact(&model, n, &ctx()).unwrap();
        for i in 1..=n {
            prop_assert_eq!(c.coeff(i).is_zero(), !(i as u64).is_multiple_of(m), "index {}", i);
        }
    }

    #[test]
    fn saddle_point_decreases_in_n(name_idx in 0usize..3, n in 10u64..50_000, step in 1u64..5_000) {
        let model = builtin(["partitions", "distinct", "prime-powers"][name_idx]).unwrap();
        let a = saddle::solve_khintchine(&model, n, &ctx()).unwrap();
        let b = saddle::solve_khintchine(&model, n + step, &ctx()).unwrap();
        prop_assert!(b.delta < a.delta);
        prop_assert!(a.residual.abs() <= 1e-9 * n as f64);
        prop_assert!(b.residual.abs() <= 1e-9 * (n + step) as f64);
    }

    #[test]
    fn moment_paths_agree(name_idx in 0usize..2, delta in 0.05f64..0.5) {
        let model = builtin(["partitions", "distinct"][name_idx]).unwrap();
        let k = (60.0 / delta).ceil() as usize;
        let a = saddle::tilted_moments(&model, delta, k, &ctx()).unwrap();
        let b = saddle::y_path_moments(&model, delta, k).unwrap();
        for (x, y) in [(a.mean, b.mean), (a.variance, b.variance), (a.third, b.third)] {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs(), "{} vs {}", x, y);
        }
        prop_assert!(a.variance > 0.0);
    }

    #[test]
    fn char_fn_is_bounded_and_hermitian(name_idx in 0usize..BUILTINS.len(), alpha in 0.0f64..0.5) {
        let model = builtin(BUILTINS[name_idx]).unwrap();
        let cf = CharFn::new(&model, 200, 0.1, &ctx()).unwrap();
        let plus = cf.sample(alpha).unwrap().value;
        let minus = cf.sample(-alpha).unwrap().value;
        prop_assert!(plus.norm() <= 1.0 + 1e-12);
        prop_assert!((plus - minus.conj()).norm() <= 1e-12);
        let zero = cf.sample(0.0).unwrap().value;
        prop_assert!((zero.re - 1.0).abs() < 1e-12 && zero.im.abs() < 1e-12);
    }

    #[test]
    fn u_sum_controls_char_fn_modulus(alpha in 0.01f64..0.5) {
        // -2 log |phi| = sum_k b_k U(k), each term nonnegative
        let model = builtin("partitions").unwrap();
        let cf = CharFn::new(&model, 300, 0.07, &ctx()).unwrap();
        let s = cf.sample(alpha).unwrap();
        let u = cf.weighted_u_sum(alpha).unwrap();
        prop_assert!(u >= 0.0);
        prop_assert!((2.0 * s.log_abs + u).abs() <= 1e-9 * u.max(1.0), "{} vs {}", s.log_abs, -u / 2.0);
    }

    #[test]
    fn estimate_components_sum_and_chernoff_bound(n in 50u64..1500) {
        let model = builtin("partitions").unwrap();
        let r = asymptotics::estimate_cn(&model, n, EstimateVariant::SemiExact, &ctx()).unwrap();
        let c = &r.components;
        prop_assert!((c.n_delta + c.log_gen_fn + c.gaussian - r.log_cn_estimate).abs() <= 1e-9 * r.log_cn_estimate.abs());
        let exact = r.log_cn_exact.unwrap();
        prop_assert!(exact < c.n_delta + c.log_gen_fn);
        prop_assert!(exact < n as f64);
        prop_assert!(c.gaussian < 0.0);
    }

    #[test]
    fn residue_expansion_tracks_direct_sum(delta in 0.05f64..0.3) {
        for name in ["partitions", "distinct"] {
            let model = builtin(name).unwrap();
            let profile = model.profile().unwrap();
            let direct = asymptotics::log_gen_fn_default(&model, delta, &ctx()).unwrap();
            let residue = asymptotics::log_gen_fn_residue(profile, delta, profile.depth()).unwrap();
            prop_assert!((direct - residue).abs() <= 1e-10, "{}: {} vs {}", name, direct, residue);
        }
    }

    #[test]
    fn explicit_models_survive_json(d in inner_coeffs(), weights in prop::collection::vec(0.0f64..2.5, 1..20)) {
        let model = polynomial_model(d, weights);
        let text = model_to_json(&model).unwrap();
        prop_assert_eq!(model_from_json(&text).unwrap(), model);
    }
}

#[test]
fn builtins_survive_json() {
    for name in BUILTINS {
        let model = builtin(name).unwrap();
        let text = model_to_json(&model).unwrap();
        assert_eq!(model_from_json(&text).unwrap(), model, "{name}");
    }
}

#[test]
fn semi_exact_estimate_improves_with_n() {
    let model = builtin("partitions").unwrap();
    let grid = [250, 500, 1000, 2000];
    let reports =
        asymptotics::estimate_grid(&model, &grid, EstimateVariant::SemiExact, &ctx(), true)
            .unwrap();
    let gaps: Vec<f64> = reports
        .iter()
        .map(|r| (r.ratio.unwrap() - 1.0).abs())
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "{gaps:?}");
    }
}
