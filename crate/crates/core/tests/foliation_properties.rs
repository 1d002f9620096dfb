mod common;

use std::sync::Arc;

use common::slab;
use mblab::field::{compare, Order};
use mblab::foliation::{
    asymptotic_limit, build_family, rigidity_check, BuildOptions, FoliationFamily, LimitClass, RigidityOptions,
};
use mblab::heteroclinic::Logistic;
use mblab::integrand::AllenCahn;
use mblab::minimize::{relax, RelaxOptions};
use proptest::prelude::*;

fn family(m: usize, count: usize) -> FoliationFamily {
    build_family(&[1, 0], -5.0, 5.0, count, &slab(m), Arc::new(Logistic), &BuildOptions::default())
        .unwrap()
        .0
}

#[test]
fn consecutive_members_decrease_strictly() {
    let fam = family(5, 41);
    for (i, w) in fam.members.windows(2).enumerate() {
        let rel = compare(&w[1], &w[0], 1e-8).unwrap();
        assert_eq!(rel.order, Order::Less, "pair {i}");
        assert!((0..w[0].len()).all(|j| w[0].difference(&w[1], j) > 0.0));
    }
}

#[test]
fn member_residual_is_second_order() {
    // 2 h² max|u₀⁗| / 12 ≈ 0.0208 h² leading term
    for m in [5, 8, 10] {
        let g = slab(m);
        let (_, checks) = build_family(&[1, 0], -5.0, 5.0, 11, &g, Arc::new(Logistic), &BuildOptions::default()).unwrap();
        let h = 1.0 / m as f64;
        for c in checks {
            assert!(c.residual <= 0.022 * h * h, "m = {m}, b = {}: {}", c.b, c.residual);
        }
    }
}

#[test]
fn member_limits_are_named() {
    let fam = family(5, 11);
    let gamma2 = vec![vec![1, 0, 0], vec![0, 1, 0]];
    let opts = RigidityOptions::new(1e-3);
    for v in &fam.members {
        for d in [[-1, 0, 0], [1, 0, 0], [0, 1, 0]] {
            let r = asymptotic_limit(v, &gamma2, &d, 60, 1e-6, &fam, &opts).unwrap();
            assert!(!matches!(r.classification, LimitClass::Unclassified { .. }));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn perturbed_members_relax_back(
        b in -4.0f64..4.0,
        amp in 0.005f64..0.02,
        sign in any::<bool>(),
        center in -4.0f64..4.0,
        radius in 1.0f64..3.0,
    ) {
        let fam = family(5, 41);
        let v = fam.member_at(b).unwrap();
        let grid = v.grid().clone();
        let pinned = grid.pinned_mask();
        let amp = if sign { amp } else { -amp };
        let bump: Vec<f64> = (0..v.len())
            .map(|i| {
                let x = grid.position_of(i);
                let s = ((x[0] - center) / radius).powi(2);
                if pinned[i] || s >= 1.0 { 0.0 } else { amp * (1.0 - s).powi(3) * (1.0 + 0.5 * (6.0 * x[1]).sin()) }
            })
            .collect();
        let out = relax(&v.perturbed(&bump).unwrap(), &AllenCahn, &RelaxOptions::default()).unwrap();
        prop_assert!(out.converged);
        let m = rigidity_check(&out.field, &fam, &RigidityOptions::new(1e-3)).unwrap();
        prop_assert!(m.matched(), "{m:?}");
        prop_assert!(m.sup_error.unwrap() < 1e-3);
        prop_assert!((m.b0.unwrap() - b).abs() <= 0.25);
    }
}
