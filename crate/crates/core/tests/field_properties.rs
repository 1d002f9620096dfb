mod common;

use common::{bits, field, field_on, periodic_grid, translation};
use mblab::field::{compare, sup_distance, Order, ScalarField, TranslationVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn translations_compose_exactly(
        (u, j, k) in field().prop_flat_map(|u| {
            let n = u.dimension();
            (Just(u), translation(n), translation(n))
        })
    ) {
        let twice = u.translate(&j).unwrap().translate(&k).unwrap();
        let once = u.translate(&j.add(&k)).unwrap();
        prop_assert_eq!(bits(&twice), bits(&once));
        let back = u.translate(&k).unwrap().translate(&k.neg()).unwrap();
        prop_assert_eq!(bits(&back), bits(&u));
    }

    #[test]
    fn translation_preserves_order_and_margin(
        (u, offsets, k) in field().prop_flat_map(|u| {
            let n = u.dimension();
            let len = u.len();
            (Just(u), prop::collection::vec(0.0f64..0.3, len), translation(n))
        })
    ) {
        let shift: Vec<f64> = offsets.iter().enumerate().map(|(i, o)| if i == 0 { 0.5 } else { *o }).collect();
        let v = u.perturbed(&shift).unwrap();
        let before = compare(&u, &v, 1e-8).unwrap();
        prop_assert_eq!(before.order, Order::Less);
        let after = compare(&u.translate(&k).unwrap(), &v.translate(&k).unwrap(), 1e-8).unwrap();
        prop_assert_eq!(after.order, Order::Less);
        prop_assert_eq!(after.margin.to_bits(), before.margin.to_bits());
    }

    #[test]
    fn lifting_by_one_is_above(u in field()) {
        let n = u.dimension();
        let up = u.translate(&TranslationVector::new(&vec![0; n], 1)).unwrap();
        prop_assert_eq!(compare(&u, &up, 1e-8).unwrap().order, Order::Less);
        prop_assert_eq!(compare(&up, &u, 1e-8).unwrap().order, Order::Greater);
    }

    #[test]
    fn sup_distance_is_a_metric(
        (u, v, w) in periodic_grid().prop_flat_map(|g| (field_on(g.clone()), field_on(g.clone()), field_on(g)))
    ) {
        let duv = sup_distance(&u, &v).unwrap();
        prop_assert_eq!(duv, sup_distance(&v, &u).unwrap());
        prop_assert_eq!(sup_distance(&u, &u).unwrap(), 0.0);
        let bound = duv + sup_distance(&v, &w).unwrap();
        prop_assert!(sup_distance(&u, &w).unwrap() <= bound * (1.0 + 1e-15));
    }

    #[test]
    fn compare_is_antisymmetric(
        (u, v) in periodic_grid().prop_flat_map(|g| (field_on(g.clone()), field_on(g)))
    ) {
        let a = compare(&u, &v, 1e-8).unwrap().order;
        let b = compare(&v, &u, 1e-8).unwrap().order;
        prop_assert_eq!(a.reversed(), b);
    }
}

#[test]
fn slope_mismatch_is_rejected() {
    use mblab::field::{Grid, GridAxis};
    let a = ScalarField::constant(Grid::new(vec![GridAxis::periodic(2, 1, 4).unwrap()]).unwrap(), 0.0).unwrap();
    let b = ScalarField::constant(Grid::new(vec![GridAxis::periodic(2, 0, 4).unwrap()]).unwrap(), 0.0).unwrap();
    assert!(compare(&a, &b, 1e-8).is_err());
}
