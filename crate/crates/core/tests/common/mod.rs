#![allow(dead_code)]

use mblab::field::{Grid, GridAxis, ScalarField, TranslationVector};
use proptest::prelude::*;

/// Twisted-periodic grids in one or two dimensions.
pub fn periodic_grid() -> impl Strategy<Value = Grid> {
    let axis = (1usize..=3, -2i64..=2, 4usize..=6)
        .prop_map(|(period, rise, m)| GridAxis::periodic(period, rise, m).unwrap());
    prop::collection::vec(axis, 1..=2).prop_map(|axes| Grid::new(axes).unwrap())
}

pub fn field_on(grid: Grid) -> impl Strategy<Value = ScalarField> {
    let n = grid.node_count();
    prop::collection::vec(-1.5f64..2.5, n).prop_map(move |v| ScalarField::from_values(grid.clone(), v).unwrap())
}

pub fn field() -> impl Strategy<Value = ScalarField> {
    periodic_grid().prop_flat_map(field_on)
}

pub fn translation(n: usize) -> impl Strategy<Value = TranslationVector> {
    prop::collection::vec(-4i64..=4, n + 1).prop_map(|c| TranslationVector::from_components(c).unwrap())
}

pub fn slab(m: usize) -> Grid {
    Grid::new(vec![
        GridAxis::free(-20.0, 40, m).unwrap(),
        GridAxis::periodic(1, 0, 4).unwrap(),
    ])
    .unwrap()
}

pub fn bits(u: &ScalarField) -> Vec<u64> {
    u.values().iter().map(|v| v.to_bits()).collect()
}
