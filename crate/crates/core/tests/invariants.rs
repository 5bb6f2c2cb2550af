use std::f64::consts::PI;

use lpbound::averages::{check_deriv1, check_deriv2};
use lpbound::constants::{kappa, kappa_max_closed};
use lpbound::counterexamples::CombSet;
use lpbound::fields::{
    laplacian, random_heat_field, random_laplace_field, random_smooth_field, random_temperature, BumpFunction,
    LinearOperator, ScalarField,
};
use lpbound::geometry::{sample_heatball_unit, AxisBox, Region};
use lpbound::quadrature::pmean;
use lpbound::rng::substream;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng as _;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn box_volume_is_product_of_widths(lo in prop::collection::vec(-5.0..5.0f64, 1..4), w in 0.01..3.0f64) {
        let hi: Vec<f64> = lo.iter().enumerate().map(|(i, l)| l + w * (i + 1) as f64).collect();
        let b = AxisBox::new(lo.clone(), hi).unwrap();
        let expected: f64 = (0..lo.len()).map(|i| w * (i + 1) as f64).product();
        prop_assert!(b.volume() > 0.0);
        prop_assert!((b.volume() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn heatball_samples_satisfy_membership(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = substream(seed, 0);
        for _ in 0..64 {
            let (y, s) = sample_heatball_unit(&mut rng, n, n as f64);
            let y2: f64 = y.iter().map(|v| v * v).sum();
            prop_assert!(s > 0.0 && s <= 1.0 / (4.0 * PI));
            prop_assert!(y2 <= 2.0 * n as f64 * s * (1.0 / (4.0 * PI * s)).ln() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kappa_never_exceeds_its_maximum(seed in any::<u64>(), m in 3usize..7, n in 1usize..4) {
        let mut rng = substream(seed, 0);
        let max = kappa_max_closed(m, n).unwrap();
        for _ in 0..64 {
            let (y, s) = sample_heatball_unit(&mut rng, n, (m + n) as f64);
            let k = kappa(m, n, &y, s).unwrap();
            prop_assert!(k >= 0.0 && k <= max * (1.0 + 1e-9), "{k} > {max}");
        }
    }

    #[test]
    fn adjoint_is_an_involution(terms in prop::collection::vec((prop::collection::vec(0u32..3, 2), -2.0..2.0f64), 1..5)) {
        let op = LinearOperator::new(2, terms).unwrap();
        prop_assert_eq!(op.adjoint().adjoint(), op);
    }

    #[test]
    fn bump_is_nonnegative_and_supported_in_its_ball(x in prop::collection::vec(-2.0..2.0f64, 2), r in 0.1..1.5f64) {
        let b = BumpFunction::new(vec![0.0, 0.0], r).unwrap();
        let v = b.value(&x);
        prop_assert!(v >= 0.0);
        if x[0].hypot(x[1]) >= r {
            prop_assert_eq!(v, 0.0);
        } else {
            prop_assert!((v - (-1.0 / (1.0 - (x[0] * x[0] + x[1] * x[1]) / (r * r))).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn comb_measure_matches_formula(k in 4i64..65) {
        let comb = CombSet::from_rational(BigRational::new(BigInt::from(1), BigInt::from(k)));
        prop_assert_eq!(comb.measure_exact(), comb.measure_formula());
        prop_assert!(comb.exceeds_lower_bound());
        prop_assert!(comb.inside_unit_square());
    }

    #[test]
    fn laplace_fields_have_unit_laplacian(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = substream(seed, 0);
        let u = random_laplace_field(&mut rng, d, &vec![0.0; d]);
        for _ in 0..16 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assert!((laplacian(&u, &x) - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pmean_is_monotone_in_p(seed in any::<u64>(), a in 0.1..2.0f64) {
        let region = AxisBox::unit(2);
        let f = |x: &[f64]| a + x[0] * x[0] + x[1];
        let grid = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let reps: Vec<_> = grid.iter().map(|&p| pmean(f, &region, p, 20_000, seed).unwrap()).collect();
        for w in reps.windows(2) {
            let slack = 3.0 * w[0].std_error.hypot(w[1].std_error) + 1e-12;
            prop_assert!(w[1].value >= w[0].value - slack, "{:?} then {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn ball_average_derivative_formula_holds(seed in any::<u64>(), d in 2usize..4, r in 0.1..1.0f64) {
        let mut rng = substream(seed, 0);
        let x = vec![0.1; d];
        for u in [random_laplace_field(&mut rng, d, &x), random_smooth_field(&mut rng, d)] {
            let c = check_deriv1(&u, &x, r, 1000, seed).unwrap();
            prop_assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn heatball_average_derivative_formula_holds(seed in any::<u64>(), n in 1usize..4, r in 0.1..1.0f64) {
        let mut rng = substream(seed, 0);
        let mut center = vec![0.1; n];
        center.push(1.0);
        for u in [random_heat_field(&mut rng, n, -0.5), random_temperature(&mut rng, n, -0.5)] {
            let c = check_deriv2(&u, &center, r, 1000, seed).unwrap();
            prop_assert!(c.pass, "{c:?}");
        }
    }
}

#[test]
fn unit_box_is_a_region() {
    let b = AxisBox::unit(3);
    assert_eq!(b.dim(), 3);
    assert!(b.contains(&[0.5, 0.5, 0.5]));
    assert_eq!(b.exact_volume(), Some(1.0));
}
