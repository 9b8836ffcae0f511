use chlab_core::flows::{geodesic_flow, horocycle_flow};
use chlab_core::fup::{discrete_norm, frobenius_bound, grid_porosity, DiscreteSet, PorousSet};
use chlab_core::minkowski::{bracket, membership_residual, LieAlgebraElement};
use chlab_core::symplectic::{chart_to_point, point_to_chart, ChartCoords, CotangentPoint};
use chlab_core::words::{classify_long, count_sets, enumerate_counts, split_word, LongClass, Threshold};
use chlab_core::{Sign, SpaceDim, SphereBundlePoint, Word};
use proptest::prelude::*;

fn algebra_element(n: usize) -> impl Strategy<Value = LieAlgebraElement> {
    let dim = SpaceDim::new(n).unwrap();
    prop::collection::vec(-1.0..1.0f64, dim.algebra_dim())
        .prop_map(move |c| LieAlgebraElement::from_coefficients(dim, &c).unwrap())
}

fn mask(len: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), len)
}

fn word(len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1u8..=2, len).prop_map(|d| Word::new(d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brackets_stay_in_the_algebra(a in algebra_element(3), b in algebra_element(3), c in algebra_element(3)) {
        let ab = bracket(&a, &b).unwrap();
        prop_assert!(membership_residual(ab.matrix()) < 1e-12);
        let ba = bracket(&b, &a).unwrap();
        prop_assert!((ab.matrix() + ba.matrix()).iter().all(|z| z.norm() < 1e-13));
        let jacobi = bracket(&a, &bracket(&b, &c).unwrap()).unwrap().matrix()
            + bracket(&b, &bracket(&c, &a).unwrap()).unwrap().matrix()
            + bracket(&c, &bracket(&a, &b).unwrap()).unwrap().matrix();
        prop_assert!(jacobi.iter().all(|z| z.norm() < 1e-11));
    }

    #[test]
    fn exponentials_are_isometries(a in algebra_element(2)) {
        let g = a.scale(0.7).exp();
        prop_assert!(g.residual() < 1e-10);
        let q = SphereBundlePoint::from_lift(g);
        prop_assert!(q.invariant_residual() < 1e-10);
    }

    #[test]
    fn flows_compose(a in algebra_element(2), t in -2.0..2.0f64, s in -2.0..2.0f64) {
        let q = SphereBundlePoint::from_lift(a.scale(0.5).exp());
        let twice = geodesic_flow(&geodesic_flow(&q, t), s);
        let once = geodesic_flow(&q, t + s);
        let diff = (twice.lift().matrix() - once.lift().matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(diff < 1e-10);
        let back = horocycle_flow(&horocycle_flow(&q, s, Sign::Plus), -s, Sign::Plus);
        let diff = (back.lift().matrix() - q.lift().matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(diff < 1e-10);
    }

    #[test]
    fn chart_round_trip(raw in prop::collection::vec(-0.05..0.05f64, 8)) {
        let base = CotangentPoint::base_point(SpaceDim::new(2).unwrap());
        let c = ChartCoords::from_slice(&raw);
        let p = chart_to_point(&base, &c).unwrap();
        let back = point_to_chart(&base, &p).unwrap();
        for (x, y) in c.to_vec().iter().zip(back.to_vec()) {
            prop_assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn norm_is_monotone_under_inclusion(minus in mask(48), plus in mask(48), drop in mask(48)) {
        let big_minus = DiscreteSet::new(minus.clone()).unwrap();
        let small: Vec<bool> = minus.iter().zip(&drop).map(|(a, d)| *a && *d).collect();
        let small_minus = DiscreteSet::new(small).unwrap();
        let plus = DiscreteSet::new(plus).unwrap();
        let big = discrete_norm(&big_minus, &plus).unwrap().value;
        let sub = discrete_norm(&small_minus, &plus).unwrap().value;
        prop_assert!(sub <= big + 1e-10);
        prop_assert!(big <= 1.0 + 1e-10);
        prop_assert!(big <= frobenius_bound(&big_minus, &plus) + 1e-10);
    }

    #[test]
    fn norm_is_symmetric(minus in mask(40), plus in mask(40)) {
        let (a, b) = (DiscreteSet::new(minus).unwrap(), DiscreteSet::new(plus).unwrap());
        let ab = discrete_norm(&a, &b).unwrap().value;
        let ba = discrete_norm(&b, &a).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-10);
    }

    #[test]
    fn thickening_grows_the_set(starts in prop::collection::vec(0u32..90, 1..5), radius in 0.0..0.05f64) {
        let set = PorousSet::from_unsorted(starts.iter().map(|&s| (s as f64 / 100.0, (s + 3) as f64 / 100.0)).collect()).unwrap();
        let thick = set.thicken(radius).unwrap();
        prop_assert!(thick.measure() >= set.measure() - 1e-15);
        for &(a, b) in set.intervals() {
            prop_assert!(thick.contains(0.5 * (a + b)));
        }
    }

    #[test]
    fn counts_match_enumeration(n0 in 1u32..=4, num in 0u64..=20) {
        let alpha = Threshold::new(num, 20);
        prop_assert_eq!(count_sets(n0, alpha).unwrap(), enumerate_counts(n0, alpha).unwrap());
    }

    #[test]
    fn long_words_in_x_have_sparse_blocks(w in word(12), num in 1u64..20) {
        let alpha = Threshold::new(num, 20);
        let class = classify_long(&w, alpha, 3).unwrap();
        let sparse = w.blocks(3).unwrap().iter().all(|b| b.density() < alpha);
        prop_assert_eq!(class == LongClass::X, sparse);
    }

    #[test]
    fn split_then_concat(w in word(10)) {
        let (plus, minus) = split_word(&w).unwrap();
        prop_assert_eq!(plus.len(), minus.len());
        prop_assert_eq!(plus.concat(&minus), w.clone());
        prop_assert_eq!(plus.plus_digit(1), w.digits().get(4).copied());
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_porosity_matches_grid(starts in prop::collection::vec(0u32..=96, 1..5), lens in prop::collection::vec(1u32..=4, 5)) {
        let set = PorousSet::from_unsorted(
            starts.iter().zip(&lens).map(|(&s, &l)| (s as f64 / 100.0, (s + l) as f64 / 100.0)).collect(),
        )
        .unwrap();
        for nu in [0.1, 0.25] {
            let exact = set.is_porous(nu, 0.1, 0.3).unwrap();
            let grid = grid_porosity(&set, nu, 0.1, 0.3, 1e-4).unwrap().is_none();
            prop_assert_eq!(exact, grid);
        }
    }
}

#[test]
fn serde_round_trips() {
    let q = SphereBundlePoint::base_point(SpaceDim::new(2).unwrap());
    let json = serde_json::to_string(&q).unwrap();
    assert_eq!(serde_json::from_str::<SphereBundlePoint>(&json).unwrap(), q);

    let w: Word = "1212".parse().unwrap();
    assert_eq!(serde_json::to_string(&w).unwrap(), "\"1212\"");
    assert_eq!(serde_json::from_str::<Word>("\"1212\"").unwrap(), w);
    assert!(serde_json::from_str::<Word>("\"1232\"").is_err());

    let set = PorousSet::cantor_iterate(3, &[0, 2], 2).unwrap();
    let json = serde_json::to_string(&set).unwrap();
    assert_eq!(serde_json::from_str::<PorousSet>(&json).unwrap(), set);
}
