use proptest::prelude::*;

use embedcheck::covering::{build_cover, guaranteed_overlap_bound, measure_overlap, DoublingModel, GreedyOrder};
use embedcheck::criteria::{critical_exponents, dimension_decision, theta_scan, EmbeddingQuery};
use embedcheck::numerics::log_grid;
use embedcheck::poincare::{
    bump_certificate, check_pi, hajlasz_check, hajlasz_integral_check, truncate, DiscreteField, Grid,
};
use embedcheck::space::{BallSpec, EstimateOptions, Metric, Point, SpaceModel};

fn lebesgue(dim: usize) -> SpaceModel {
    SpaceModel::from_json_str(&format!(r#"{{"dim":{dim},"measures":[{{"id":"m","kind":"lebesgue"}}]}}"#)).unwrap()
}

fn points_2d(max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| vec![x, y]), 1..max)
}

/// Knot values of a piecewise-linear function on [0, 1] with equal spacing.
fn knots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2..8)
}

fn pl(ys: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        let s = x[0].clamp(0.0, 1.0) * (ys.len() - 1) as f64;
        let i = (s.floor() as usize).min(ys.len() - 2);
        let t = s - i as f64;
        ys[i] * (1.0 - t) + ys[i + 1] * t
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cover_is_separated_and_covers(pts in points_2d(300), r in 0.02..0.5f64) {
        let cover = build_cover(&pts, r, Metric::Euclidean, GreedyOrder::Lexicographic).unwrap();
        prop_assert!(cover.min_separation() >= r);
        prop_assert!(cover.covers(&pts));
        let bound = guaranteed_overlap_bound(DoublingModel::Lebesgue { dim: 2 }, 2.0).unwrap();
        prop_assert!(measure_overlap(&cover, 2.0, &pts).unwrap().max_overlap <= bound);
    }

    #[test]
    fn theta_is_monotone_and_dominates_profile(theta in 0.0..0.9f64, q in 1.1..3.0f64) {
        let sp = SpaceModel::from_json_str(&format!(
            r#"{{"dim":2,"measures":[{{"id":"m","kind":"lebesgue"}},
                {{"id":"h","kind":"hyperplane-weight","params":{{"theta":{theta},"axis":0}}}}]}}"#
        ))
        .unwrap();
        let query = EmbeddingQuery {
            p: 1.0,
            q,
            alpha: 1.0,
            lambda: 1.0,
            mu: "m".into(),
            nu: "h".into(),
            truncation_supported: true,
            measure_density: true,
        };
        let e = vec![vec![0.0, 0.0], vec![0.0, 0.3]];
        let scan = theta_scan(&sp, &query, &e, &log_grid(0.2, 1e-3, 8), &EstimateOptions::default()).unwrap();
        // radii decrease, so Theta must not increase along the scan
        prop_assert!(scan.theta_values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(scan.theta_values.iter().zip(&scan.profile).all(|(t, p)| t >= p));
    }

    #[test]
    fn critical_exponent_splits_decisions(s in 1.0..4.0f64, ds in 0.05..1.0f64, p in 1.0..3.0f64) {
        let sigma = s - ds;
        let alpha = 1.0;
        prop_assume!(p * alpha < s);
        let qc = critical_exponents(s, sigma, alpha, p).unwrap().q_compact_sup.unwrap();
        let below = dimension_decision(s, sigma, alpha, p, 0.9 * qc).unwrap();
        let above = dimension_decision(s, sigma, alpha, p, 1.1 * qc).unwrap();
        prop_assert!(below.compact && below.bounded);
        prop_assert!(!above.compact && !above.bounded);
    }

    #[test]
    fn truncation_clamps_and_is_idempotent(ys in knots(), l in -1.0..0.0f64, w in 0.01..1.0f64) {
        let k = l + w;
        let f = DiscreteField::from_fn(Grid::interval(0.0, 1.0, 200).unwrap(), pl(&ys)).unwrap();
        let t = truncate(&f, l, k).unwrap();
        for i in 0..t.u.len() {
            prop_assert!(t.u[i] >= l && t.u[i] <= k);
            if !(l < f.u[i] && f.u[i] < k) {
                prop_assert_eq!(t.g[i], 0.0);
            } else {
                prop_assert_eq!(t.g[i], f.g[i]);
            }
        }
        let tt = truncate(&t, l, k).unwrap();
        prop_assert_eq!(&tt.u, &t.u);
    }

    #[test]
    fn pointwise_hajlasz_implies_integral_bound(ys in knots(), c in 0.3..0.7f64, r in 0.05..0.5f64, p in 1.0..3.0f64) {
        let lip = ys.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) * (ys.len() - 1) as f64;
        let grid = Grid::interval(0.0, 1.0, 120).unwrap();
        let f = DiscreteField::from_fn(grid, pl(&ys)).unwrap().with_gradient(vec![lip / 2.0 + 1e-12; 120]).unwrap();
        prop_assert!(hajlasz_check(&f, Metric::Euclidean, 1.0, u64::MAX, 0).unwrap() <= 1e-12);
        let rep = hajlasz_integral_check(&f, &lebesgue(1), &BallSpec::new(vec![c], r), "m", p, 1.0).unwrap();
        prop_assert!(rep.ratio <= 1.0 + 1e-12, "ratio {}", rep.ratio);
    }

    #[test]
    fn poincare_ratio_is_affine_invariant(ys in knots(), a in 0.1..10.0f64, b in -5.0..5.0f64) {
        let grid = Grid::interval(0.0, 1.0, 400).unwrap();
        let sp = lebesgue(1);
        let ball = BallSpec::new(vec![0.5], 0.3);
        let f = DiscreteField::from_fn(grid.clone(), pl(&ys)).unwrap();
        let g = DiscreteField::from_fn(grid, |x| a * pl(&ys)(x) + b).unwrap();
        let r1 = check_pi(&f, &sp, &ball, "m", 2.0, 1.0, 1.5).unwrap().ratio;
        let r2 = check_pi(&g, &sp, &ball, "m", 2.0, 1.0, 1.5).unwrap().ratio;
        if r1.is_finite() {
            prop_assert!((r1 - r2).abs() <= 1e-9 * r1.max(1.0));
        } else {
            prop_assert!(r2.is_infinite());
        }
    }

    #[test]
    fn bump_is_admissible(x in 0.2..0.8f64, r in 0.01..0.2f64, lambda in 1.1..3.0f64, p in 1.0..3.0f64) {
        let sp = lebesgue(1);
        let ball = BallSpec::new(vec![x], r);
        let cert = bump_certificate(&sp, "m", &ball, lambda, p, 0, &EstimateOptions::default()).unwrap();
        prop_assert!((cert.g_norm_p - 1.0).abs() < 1e-12);
        prop_assert!((cert.value_at(Metric::Euclidean, &[x + 0.5 * r]) - cert.a).abs() < 1e-12);
        prop_assert_eq!(cert.value_at(Metric::Euclidean, &[x + 1.01 * lambda * r]), 0.0);
        let mid = cert.value_at(Metric::Euclidean, &[x + 0.5 * (1.0 + lambda) * r]);
        prop_assert!(mid > 0.0 && mid < cert.a);
    }

    #[test]
    fn field_csv_round_trip(ys in knots(), n in 2usize..60) {
        let f = DiscreteField::from_fn(Grid::interval(-1.0, 2.0, n).unwrap(), pl(&ys)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = DiscreteField::from_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.grid.shape, &f.grid.shape);
        prop_assert!((back.grid.h - f.grid.h).abs() < 1e-12);
        prop_assert!((back.grid.lo[0] - f.grid.lo[0]).abs() < 1e-12);
        prop_assert_eq!(&back.u, &f.u);
        prop_assert_eq!(&back.g, &f.g);
    }
}

#[test]
fn poincare_quadrature_converges_at_first_order() {
    // u = x^2 on B(1/2, 1/4): the continuum ratio is a fixed number and the
    // discrete error should roughly halve with h
    let sp = lebesgue(1);
    let ball = BallSpec::new(vec![0.5], 0.25);
    let ratio = |n: usize| {
        let f = DiscreteField::from_fn(Grid::interval(0.0, 1.0, n).unwrap(), |x| x[0] * x[0]).unwrap();
        check_pi(&f, &sp, &ball, "m", 2.0, 1.0, 1.0).unwrap().ratio
    };
    let (a, b, c) = (ratio(250), ratio(500), ratio(1000));
    let (e1, e2) = ((a - b).abs(), (b - c).abs());
    assert!(e2 <= 0.75 * e1 || e1 < 1e-12, "{a} {b} {c}");
}
