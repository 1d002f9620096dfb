//! Grid functions with rational average slope, the lattice action
//! `T_k u(x) = u(x - k) + k_{n+1}`, and the pointwise partial order.
//!
//! A field stores its values as a float part plus an integer part per node.
//! Translations only permute nodes and add integers, so they are exact and
//! compose exactly: `T_j T_k u` and `T_{j+k} u` are bit-identical on periodic
//! axes.
//!
//! Each axis is either periodic with a twist (`u(x + q e_i) = u(x) + p_i`,
//! slope `p_i / q_i`) or a truncated box whose end nodes are pinned and which
//! extends by its edge value outside the box.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance of the numerical ordering.
pub const DEFAULT_ORDER_TOL: f64 = 1e-8;

/// Smallest admissible number of nodes per unit length.
pub const MIN_NODES_PER_UNIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AxisKind {
    /// Twisted-periodic: period `period` (integer units), value jump `rise`.
    Periodic { period: usize, rise: i64 },
    /// Truncated box with pinned ends and constant extension.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub kind: AxisKind,
    /// Position of node 0.
    pub origin: f64,
    /// `m` with spacing `h = 1/m`.
    pub per_unit: usize,
    /// Number of nodes stored along the axis.
    pub len: usize,
}

impl GridAxis {
    /// Periodic axis over `[0, period)`.
    pub fn periodic(period: usize, rise: i64, per_unit: usize) -> Result<Self> {
        check_per_unit(per_unit)?;
        if period == 0 {
            return Err(Error::InvalidGrid("period must be at least one unit".into()));
        }
        Ok(Self {
            kind: AxisKind::Periodic { period, rise },
            origin: 0.0,
            per_unit,
            len: period * per_unit,
        })
    }

    /// Truncated box `[origin, origin + extent]` with both ends as nodes.
    pub fn free(origin: f64, extent: usize, per_unit: usize) -> Result<Self> {
        check_per_unit(per_unit)?;
        if extent == 0 {
            return Err(Error::InvalidGrid("box extent must be at least one unit".into()));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self {
            kind: AxisKind::Free,
            origin,
            per_unit,
            len: extent * per_unit + 1,
        })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn position(&self, i: i64) -> f64 {
        self.origin + i as f64 / self.per_unit as f64
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic { .. })
    }

    pub fn slope(&self) -> Rational64 {
        match self.kind {
            AxisKind::Periodic { period, rise } => Rational64::new(rise, period as i64),
            AxisKind::Free => Rational64::from_integer(0),
        }
    }

    /// Resolves a possibly out-of-range node index to `(stored index, integer lift)`.
    #[inline]
    pub fn resolve(&self, i: i64) -> (usize, i64) {
        let len = self.len as i64;
        match self.kind {
            AxisKind::Periodic { rise, .. } => {
                let r = i.rem_euclid(len);
                let c = i.div_euclid(len);
                (r as usize, c * rise)
            }
            AxisKind::Free => (i.clamp(0, len - 1) as usize, 0),
        }
    }

    fn same_layout(&self, other: &Self) -> bool {
        let kinds = match (self.kind, other.kind) {
            (AxisKind::Periodic { period: a, .. }, AxisKind::Periodic { period: b, .. }) => a == b,
            (AxisKind::Free, AxisKind::Free) => true,
            _ => false,
        };
        kinds
            && self.per_unit == other.per_unit
            && self.len == other.len
            && self.origin.to_bits() == other.origin.to_bits()
    }
}

fn check_per_unit(per_unit: usize) -> Result<()> {
    if per_unit < MIN_NODES_PER_UNIT {
        return Err(Error::InvalidGrid(format!(
            "spacing must be 1/m with integer m >= {MIN_NODES_PER_UNIT}, got m = {per_unit}"
        )));
    }
    Ok(())
}

/// Converts a spacing `h` into `m = 1/h`, rejecting anything that is not the
/// reciprocal of an integer `m >= 4`.
pub fn nodes_per_unit(h: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
    }
    let m = (1.0 / h).round();
    if ((1.0 / h) - m).abs() > 1e-9 * m.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "spacing must be 1/m for an integer m, got h = {h}"
        )));
    }
    let m = m as usize;
    check_per_unit(m)?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<GridAxis>,
}

impl Grid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("a grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &GridAxis {
        &self.axes[a]
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    /// Volume element `h_1 ⋯ h_n`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.axes.len()];
        for a in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.axes[a + 1].len;
        }
        strides
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for a in (0..self.axes.len()).rev() {
            idx[a] = flat % self.axes[a].len;
            flat /= self.axes[a].len;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, ax)| acc * ax.len + i)
    }

    pub fn position(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.position(i as i64))
            .collect()
    }

    pub fn position_of(&self, flat: usize) -> Vec<f64> {
        self.position(&self.unravel(flat))
    }

    /// Resolves a multi-index anywhere in Z^n to `(flat index, integer lift)`.
    pub fn resolve(&self, idx: &[i64]) -> (usize, i64) {
        let mut flat = 0;
        let mut lift = 0;
        for (ax, &i) in self.axes.iter().zip(idx) {
            let (r, l) = ax.resolve(i);
            flat = flat * ax.len + r;
            lift += l;
        }
        (flat, lift)
    }

    pub fn slope(&self) -> Vec<Rational64> {
        self.axes.iter().map(GridAxis::slope).collect()
    }

    pub fn slope_f64(&self) -> Vec<f64> {
        self.slope()
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect()
    }

    /// Same grid with every twist removed; used for gradient-like fields.
    pub fn untwisted(&self) -> Grid {
        let axes = self
            .axes
            .iter()
            .map(|ax| {
                let mut ax = ax.clone();
                if let AxisKind::Periodic { period, .. } = ax.kind {
                    ax.kind = AxisKind::Periodic { period, rise: 0 };
                }
                ax
            })
            .collect();
        Grid { axes }
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.axes.len() == other.axes.len()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| a.same_layout(b))
    }

    /// Nodes on the ends of a free axis; relaxation keeps them fixed.
    pub fn pinned_mask(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|flat| {
                let idx = self.unravel(flat);
                idx.iter()
                    .zip(&self.axes)
                    .any(|(&i, ax)| !ax.is_periodic() && (i == 0 || i + 1 == ax.len))
            })
            .collect()
    }

    /// Index of the node closest to the middle of the stored cell.
    pub fn center_node(&self) -> Vec<usize> {
        self.axes.iter().map(|ax| ax.len / 2).collect()
    }

    /// Nearest-neighbour tables used by the energy kernels.
    pub fn stencil(&self) -> Stencil {
        let n = self.dimension();
        let count = self.node_count();
        let mut plus = vec![Vec::with_capacity(count); n];
        let mut minus = vec![Vec::with_capacity(count); n];
        for flat in 0..count {
            let idx = self.unravel(flat);
            let mut probe: Vec<i64> = idx.iter().map(|&i| i as i64).collect();
            for a in 0..n {
                let i = probe[a];
                probe[a] = i + 1;
                plus[a].push(self.resolve(&probe));
                probe[a] = i - 1;
                minus[a].push(self.resolve(&probe));
                probe[a] = i;
            }
        }
        Stencil {
            plus,
            minus,
            pinned: self.pinned_mask(),
        }
    }
}

/// Neighbour `(flat index, lift offset)` tables per axis; a free-axis end node
/// is its own neighbour beyond the box.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub plus: Vec<Vec<(usize, i64)>>,
    pub minus: Vec<Vec<(usize, i64)>>,
    pub pinned: Vec<bool>,
}

/// An element `k̄ = (k, k_{n+1})` of Z^{n+1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TranslationVector(Vec<i64>);

impl TranslationVector {
    pub fn new(shift: &[i64], lift: i64) -> Self {
        let mut v = shift.to_vec();
        v.push(lift);
        Self(v)
    }

    /// From all `n + 1` components, the last being the vertical shift.
    pub fn from_components(components: Vec<i64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Precondition(
                "a translation vector has at least two components".into(),
            ));
        }
        Ok(Self(components))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn shift(&self) -> &[i64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn lift(&self) -> i64 {
        self.0[self.0.len() - 1]
    }

    /// Dimension `n` of the base space.
    pub fn base_dimension(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn scaled(&self, m: i64) -> Self {
        Self(self.0.iter().map(|v| v * m).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1)
    }

    pub fn dot(&self, a: &[f64]) -> f64 {
        self.0.iter().zip(a).map(|(&k, &v)| k as f64 * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    base: Vec<f64>,
    lift: Vec<i64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value {} at node {:?}",
                values[i],
                grid.unravel(i)
            )));
        }
        let lift = vec![0; values.len()];
        Ok(Self {
            grid,
            base: values,
            lift,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.node_count())
            .map(|flat| f(&grid.position_of(flat)))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let n = grid.node_count();
        Self::from_values(grid, vec![c; n])
    }

    /// Replaces the float part, keeping the integer part; used by relaxation.
    pub(crate) fn with_base(&self, base: Vec<f64>) -> Self {
        debug_assert_eq!(base.len(), self.base.len());
        Self {
            grid: self.grid.clone(),
            base,
            lift: self.lift.clone(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn lift(&self) -> &[i64] {
        &self.lift
    }

    pub fn slope(&self) -> Vec<Rational64> {
        self.grid.slope()
    }

    #[inline]
    pub fn value(&self, flat: usize) -> f64 {
        self.base[flat] + self.lift[flat] as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Value at any node of Z^n, using twisted periodicity or the constant
    /// extension of a box.
    pub fn value_at(&self, idx: &[i64]) -> f64 {
        let (flat, extra) = self.grid.resolve(idx);
        self.base[flat] + (self.lift[flat] + extra) as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = self.value(i);
            (lo.min(v), hi.max(v))
        })
    }

    /// `T_k̄ u(x) = u(x - k) + k_{n+1}`.
    pub fn translate(&self, k: &TranslationVector) -> Result<ScalarField> {
        let n = self.dimension();
        if k.base_dimension() != n {
            return Err(Error::Dimension {
                expected: n,
                found: k.base_dimension(),
            });
        }
        let node_shift: Vec<i64> = k
            .shift()
            .iter()
            .zip(self.grid.axes())
            .map(|(&s, ax)| s * ax.per_unit as i64)
            .collect();
        let count = self.len();
        let mut base = Vec::with_capacity(count);
        let mut lift = Vec::with_capacity(count);
        let mut src = vec![0i64; n];
        for flat in 0..count {
            let idx = self.grid.unravel(flat);
            for a in 0..n {
                src[a] = idx[a] as i64 - node_shift[a];
            }
            let (from, extra) = self.grid.resolve(&src);
            base.push(self.base[from]);
            lift.push(self.lift[from] + extra + k.lift());
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            base,
            lift,
        })
    }

    /// `u - v` at node `flat`, integer parts subtracted exactly.
    #[inline]
    pub fn difference(&self, other: &ScalarField, flat: usize) -> f64 {
        (self.base[flat] - other.base[flat]) + (self.lift[flat] - other.lift[flat]) as f64
    }

    /// Central-difference gradient, `n` components per node.
    pub fn central_gradient(&self) -> Vec<f64> {
        let n = self.dimension();
        let mut out = Vec::with_capacity(self.len() * n);
        for flat in 0..self.len() {
            let idx: Vec<i64> = self.grid.unravel(flat).iter().map(|&i| i as i64).collect();
            let mut probe = idx.clone();
            for a in 0..n {
                let ax = self.grid.axis(a);
                probe[a] = idx[a] + 1;
                let up = self.value_at(&probe);
                probe[a] = idx[a] - 1;
                let down = self.value_at(&probe);
                probe[a] = idx[a];
                out.push((up - down) * ax.per_unit as f64 / 2.0);
            }
        }
        out
    }

    /// Adds a perturbation (node values on the same grid).
    pub fn perturbed(&self, delta: &[f64]) -> Result<ScalarField> {
        if delta.len() != self.len() {
            return Err(Error::InvalidGrid(format!(
                "perturbation has {} values for {} nodes",
                delta.len(),
                self.len()
            )));
        }
        let base: Vec<f64> = self.base.iter().zip(delta).map(|(a, b)| a + b).collect();
        if base.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("perturbed field is not finite".into()));
        }
        Ok(self.with_base(base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Order {
    Less,
    Greater,
    Equal,
    Crossing,
}

impl Order {
    pub fn reversed(self) -> Order {
        match self {
            Order::Less => Order::Greater,
            Order::Greater => Order::Less,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub node: Vec<usize>,
    pub position: Vec<f64>,
    /// `u - v` at the node.
    pub difference: f64,
}

/// Outcome of comparing `u` against `v`: `Less` means `u < v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRelation {
    pub order: Order,
    /// Largest separation for a strict order, the smaller of the two
    /// excursions for a crossing, `sup|u - v|` for equality.
    pub margin: f64,
    /// For a crossing: the node where `u - v` is largest, then the node where
    /// it is smallest.
    pub witnesses: Vec<Witness>,
}

fn check_comparable(u: &ScalarField, v: &ScalarField) -> Result<()> {
    if !u.grid.same_layout(&v.grid) {
        return Err(Error::GridMismatch);
    }
    let (su, sv) = (u.slope(), v.slope());
    if su != sv {
        return Err(Error::SlopeMismatch {
            left: format!("{su:?}"),
            right: format!("{sv:?}"),
        });
    }
    Ok(())
}

/// Compares `u` with `v` over the stored cell.
///
/// `Equal` when `sup|u - v| ≤ tol`; `Less`/`Greater` when the difference
/// exceeds `tol` with one sign only; `Crossing` when it exceeds `tol` with
/// both signs.
pub fn compare(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<OrderRelation> {
    check_comparable(u, v)?;
    let mut above = (0.0_f64, usize::MAX);
    let mut below = (0.0_f64, usize::MAX);
    for i in 0..u.len() {
        let d = u.difference(v, i);
        if d > above.0 {
            above = (d, i);
        }
        if -d > below.0 {
            below = (-d, i);
        }
    }
    let witness = |flat: usize| {
        let node = u.grid.unravel(flat);
        Witness {
            position: u.grid.position(&node),
            node,
            difference: u.difference(v, flat),
        }
    };
    let rel = match (above.0 > tol, below.0 > tol) {
        (false, false) => OrderRelation {
            order: Order::Equal,
            margin: above.0.max(below.0),
            witnesses: vec![],
        },
        (true, false) => OrderRelation {
            order: Order::Greater,
            margin: above.0,
            witnesses: vec![],
        },
        (false, true) => OrderRelation {
            order: Order::Less,
            margin: below.0,
            witnesses: vec![],
        },
        (true, true) => OrderRelation {
            order: Order::Crossing,
            margin: above.0.min(below.0),
            witnesses: vec![witness(above.1), witness(below.1)],
        },
    };
    Ok(rel)
}

/// `max |u - v|` over the stored cell.
pub fn sup_distance(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    check_comparable(u, v)?;
    Ok((0..u.len())
        .map(|i| u.difference(v, i).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heteroclinic::logistic_profile;

    fn unit_periodic(m: usize) -> Grid {
        Grid::new(vec![GridAxis::periodic(1, 0, m).unwrap()]).unwrap()
    }

    fn logistic_line(m: usize) -> ScalarField {
        let grid = Grid::new(vec![GridAxis::free(-20.0, 40, m).unwrap()]).unwrap();
        ScalarField::from_fn(grid, |x| logistic_profile(x[0])).unwrap()
    }

    #[test]
    fn spacing_must_be_reciprocal_integer() {
        assert_eq!(nodes_per_unit(0.25).unwrap(), 4);
        assert_eq!(nodes_per_unit(0.01).unwrap(), 100);
        assert!(nodes_per_unit(0.3).is_err());
        assert!(nodes_per_unit(0.5).is_err());
        assert!(nodes_per_unit(-1.0).is_err());
        assert!(GridAxis::periodic(1, 0, 3).is_err());
    }

    #[test]
    fn translate_constant_adds_vertical_shift() {
        let u = ScalarField::constant(unit_periodic(8), 0.3).unwrap();
        let t = u.translate(&TranslationVector::new(&[1], 2)).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.3 + 2.0));
    }

    #[test]
    fn translate_logistic_is_a_shift() {
        let u = logistic_line(10);
        let t = u.translate(&TranslationVector::new(&[1], 0)).unwrap();
        let grid = u.grid().clone();
        // away from the left end, where the box extension takes over
        for flat in 10..u.len() {
            let x = grid.position_of(flat)[0];
            assert!((t.value(flat) - logistic_profile(x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn translate_inverse_is_exact_on_periodic_axes() {
        let grid = Grid::new(vec![
            GridAxis::periodic(2, 1, 4).unwrap(),
            GridAxis::periodic(1, 0, 5).unwrap(),
        ])
        .unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.5 * x[0] + 0.1 * (7.0 * x[1]).sin()).unwrap();
        let k = TranslationVector::new(&[3, -2], 5);
        let back = u.translate(&k).unwrap().translate(&k.neg()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn twisted_periodicity_in_value_at() {
        let grid = Grid::new(vec![GridAxis::periodic(2, 1, 4).unwrap()]).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.5 * x[0]).unwrap();
        // node 8 is x = 2, one period over: u(0) + 1
        assert_eq!(u.value_at(&[8]), 1.0);
        assert_eq!(u.value_at(&[-8]), -1.0);
    }

    #[test]
    fn compare_constants() {
        let g = unit_periodic(8);
        let zero = ScalarField::constant(g.clone(), 0.0).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        let rel = compare(&zero, &one, 1e-8).unwrap();
        assert_eq!(rel.order, Order::Less);
        assert_eq!(rel.margin, 1.0);
        assert_eq!(compare(&zero, &zero, 1e-8).unwrap().order, Order::Equal);
        assert_eq!(compare(&one, &zero, 1e-8).unwrap().order, Order::Greater);
    }

    #[test]
    fn compare_sine_crosses_zero() {
        let g = unit_periodic(16);
        let s = ScalarField::from_fn(g.clone(), |x| (2.0 * std::f64::consts::PI * x[0]).sin())
            .unwrap();
        let zero = ScalarField::constant(g, 0.0).unwrap();
        let rel = compare(&s, &zero, 1e-8).unwrap();
        assert_eq!(rel.order, Order::Crossing);
        assert_eq!(rel.witnesses.len(), 2);
        assert_eq!(rel.witnesses[0].position, vec![0.25]);
        assert_eq!(rel.witnesses[1].position, vec![0.75]);
        assert!(rel.witnesses[0].difference > 0.0 && rel.witnesses[1].difference < 0.0);
    }

    #[test]
    fn small_one_signed_difference_is_equal() {
        let g = unit_periodic(8);
        let a = ScalarField::constant(g.clone(), 0.0).unwrap();
        let b = ScalarField::constant(g, 1e-10).unwrap();
        assert_eq!(compare(&a, &b, 1e-8).unwrap().order, Order::Equal);
    }

    #[test]
    fn slope_mismatch_is_an_error() {
        let a = ScalarField::constant(
            Grid::new(vec![GridAxis::periodic(1, 0, 4).unwrap()]).unwrap(),
            0.0,
        )
        .unwrap();
        let b = ScalarField::constant(
            Grid::new(vec![GridAxis::periodic(1, 1, 4).unwrap()]).unwrap(),
            0.0,
        )
        .unwrap();
        assert!(matches!(compare(&a, &b, 1e-8), Err(Error::SlopeMismatch { .. })));
        assert!(matches!(sup_distance(&a, &b), Err(Error::SlopeMismatch { .. })));
    }

    #[test]
    fn sup_distance_of_shifted_logistic() {
        let grid = Grid::new(vec![GridAxis::free(-20.0, 40, 20).unwrap()]).unwrap();
        let u = ScalarField::from_fn(grid.clone(), |x| logistic_profile(x[0])).unwrap();
        let v = ScalarField::from_fn(grid, |x| logistic_profile(x[0] - 0.1)).unwrap();
        // maximised at t = 0 by symmetry: 2 (1/(1 + e^{-0.05}) - 1/2)
        let expected = 2.0 * (1.0 / (1.0 + (-0.05f64).exp()) - 0.5);
        let d = sup_distance(&u, &v).unwrap();
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
        assert!((d - 0.02499).abs() < 1e-5);
        assert_eq!(sup_distance(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn monotone_vertical_shift() {
        let u = logistic_line(5);
        let t = u.translate(&TranslationVector::new(&[0], 1)).unwrap();
        assert_eq!(compare(&u, &t, 1e-8).unwrap().order, Order::Less);
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(ScalarField::from_values(unit_periodic(4), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(ScalarField::from_values(unit_periodic(4), vec![0.0; 3]).is_err());
    }

    #[test]
    fn pinned_nodes_are_box_ends() {
        let grid = Grid::new(vec![
            GridAxis::free(0.0, 1, 4).unwrap(),
            GridAxis::periodic(1, 0, 4).unwrap(),
        ])
        .unwrap();
        let mask = grid.pinned_mask();
        assert_eq!(mask.iter().filter(|&&p| p).count(), 8);
        assert!(mask[0] && mask[grid.node_count() - 1]);
        assert!(!mask[grid.ravel(&[2, 1])]);
    }
}
