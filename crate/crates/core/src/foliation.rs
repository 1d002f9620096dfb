//! The foliation of the slab between the pure phases by planar heteroclinic
//! leaves `v_b(x) = u₀(ω·x - b)`, and the checks built on it: disjointness and
//! coverage, rigidity of trapped solutions, envelope identities, and limits of
//! translation sequences.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{compare, sup_distance, AxisKind, Grid, Order, ScalarField, Witness, DEFAULT_ORDER_TOL};
use crate::heteroclinic::ProfileSource;
use crate::integrand::{euler_lagrange_residual, AllenCahn};
use crate::lattice::{bezout_vector, lattice_contains};
use crate::minimize::{free_sup_norm, minimality_spot_check, MinimalityReport, SpotCheckOptions};
use crate::orbit::{envelope, extract_invariants, InvariantSystem, Sign, DEFAULT_SCAN_RADIUS};

/// Largest number of lattice periods searched when extending the family.
const MAX_PERIODS: i64 = 100_000;

#[derive(Debug, Clone)]
pub struct FoliationFamily {
    /// Primitive integer direction.
    pub omega_int: Vec<i64>,
    /// `omega_int / |omega_int|`.
    pub omega: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub members: Vec<ScalarField>,
    /// Bounding fields of the region, `u₁ ≡ 0` and `u₂ ≡ 1`.
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub grid: Grid,
    pub profile: Arc<dyn ProfileSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberCheck {
    pub b: f64,
    pub residual: f64,
    pub minimality: Option<MinimalityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Bound on the sup norm of each member's Euler–Lagrange residual.
    pub residual_bound: f64,
    pub spot: Option<SpotCheckOptions>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            residual_bound: 1e-3,
            spot: None,
        }
    }
}

fn primitive_direction(omega: &[i64]) -> Result<(Vec<i64>, Vec<f64>)> {
    let (g, _) = bezout_vector(omega);
    if g == 0 {
        return Err(Error::Precondition("direction ω must be nonzero".into()));
    }
    let int: Vec<i64> = omega.iter().map(|c| c / g).collect();
    let len = int.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    Ok((int.clone(), int.iter().map(|&c| c as f64 / len).collect()))
}

fn check_grid(grid: &Grid, omega_int: &[i64]) -> Result<()> {
    if grid.dimension() != omega_int.len() {
        return Err(Error::Dimension {
            expected: grid.dimension(),
            found: omega_int.len(),
        });
    }
    for (a, (ax, &w)) in grid.axes().iter().zip(omega_int).enumerate() {
        if let AxisKind::Periodic { rise, .. } = ax.kind {
            if rise != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has rise {rise}; leaves are bounded and need zero slope"
                )));
            }
            if w != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} is periodic but ω has component {w} there; use a free axis"
                )));
            }
        }
    }
    Ok(())
}

impl FoliationFamily {
    /// Assembles a family without checking the members; see [`build_family`].
    pub fn from_parts(
        omega_int: &[i64],
        b_grid: Vec<f64>,
        members: Vec<ScalarField>,
        grid: Grid,
        profile: Arc<dyn ProfileSource>,
    ) -> Result<Self> {
        let (omega_int, omega) = primitive_direction(omega_int)?;
        check_grid(&grid, &omega_int)?;
        if b_grid.len() != members.len() {
            return Err(Error::Precondition(format!(
                "{} parameters for {} members",
                b_grid.len(),
                members.len()
            )));
        }
        if members.iter().any(|m| m.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            lower: ScalarField::constant(grid.clone(), 0.0)?,
            upper: ScalarField::constant(grid.clone(), 1.0)?,
            omega_int,
            omega,
            b_grid,
            members,
            grid,
            profile,
        })
    }

    /// `ω · x`.
    pub fn phase(&self, x: &[f64]) -> f64 {
        self.omega.iter().zip(x).map(|(w, xi)| w * xi).sum()
    }

    /// `v_b` on the family grid.
    pub fn member_at(&self, b: f64) -> Result<ScalarField> {
        ScalarField::from_fn(self.grid.clone(), |x| self.profile.value(self.phase(x) - b))
    }

    /// Smallest positive `ω · k` over integer `k`: translating a leaf by `k`
    /// shifts its parameter by this amount.
    pub fn period(&self) -> f64 {
        let (g, _) = bezout_vector(&self.omega_int);
        let len = self.omega_int.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        g as f64 / len
    }

    /// Drops member `i`.
    pub fn without(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.b_grid.remove(i);
        out.members.remove(i);
        out
    }

    /// Invariants of the middle member.
    pub fn invariants(&self, radius: i64, tol: f64) -> Result<InvariantSystem> {
        let mid = self
            .members
            .get(self.members.len() / 2)
            .ok_or_else(|| Error::Precondition("family is empty".into()))?;
        extract_invariants(mid, radius, tol)
    }

    /// Parameter of the leaf through `(x, y)`, bracketed by consecutive
    /// parameters of the family extended by lattice translations and refined
    /// by bisection. Returns `(b, bracket)`.
    pub fn solve_level(&self, x: &[f64], y: f64) -> Option<(f64, (f64, f64))> {
        let (first, last) = (*self.b_grid.first()?, *self.b_grid.last()?);
        let delta = self.period();
        let phase = self.phase(x);
        let f = |b: f64| self.profile.value(phase - b);
        // the family is decreasing in b
        let mut j_lo = 0;
        while f(first - j_lo as f64 * delta) < y {
            j_lo += 1;
            if j_lo > MAX_PERIODS {
                return None;
            }
        }
        let mut j_hi = 0;
        while f(last + j_hi as f64 * delta) > y {
            j_hi += 1;
            if j_hi > MAX_PERIODS {
                return None;
            }
        }
        let mut extended: Vec<f64> = (-j_lo..=j_hi)
            .flat_map(|j| self.b_grid.iter().map(move |b| b + j as f64 * delta))
            .collect();
        extended.sort_by(f64::total_cmp);
        extended.dedup();
        let k = extended.windows(2).position(|w| f(w[0]) >= y && y >= f(w[1]))?;
        let (mut lo, mut hi) = (extended[k], extended[k + 1]);
        let bracket = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) >= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((0.5 * (lo + hi), bracket))
    }
}

/// Samples `v_b` for `count` equally spaced `b ∈ [b_min, b_max]` and checks
/// each member's Euler–Lagrange residual (and optionally its minimality).
pub fn build_family(
    omega: &[i64],
    b_min: f64,
    b_max: f64,
    count: usize,
    grid: &Grid,
    profile: Arc<dyn ProfileSource>,
    opts: &BuildOptions,
) -> Result<(FoliationFamily, Vec<MemberCheck>)> {
    if count < 2 {
        return Err(Error::Precondition(format!("family needs at least 2 members, got {count}")));
    }
    if !(b_min < b_max) {
        return Err(Error::Precondition(format!("need b_min < b_max, got [{b_min}, {b_max}]")));
    }
    let b_grid: Vec<f64> = (0..count)
        .map(|i| b_min + (b_max - b_min) * i as f64 / (count - 1) as f64)
        .collect();
    let mut fam = FoliationFamily::from_parts(omega, Vec::new(), Vec::new(), grid.clone(), profile)?;
    let mut checks = Vec::with_capacity(count);
    for b in b_grid {
        let v = fam.member_at(b)?;
        let residual = free_sup_norm(&euler_lagrange_residual(&v, &AllenCahn)?);
        if residual > opts.residual_bound {
            return Err(Error::Precondition(format!(
                "member b = {b}: Euler–Lagrange residual {residual:.3e} exceeds {:.3e}",
                opts.residual_bound
            )));
        }
        let minimality = match &opts.spot {
            Some(spot) => {
                let rep = minimality_spot_check(&v, &AllenCahn, spot)?;
                if !rep.passed {
                    return Err(Error::Precondition(format!(
                        "member b = {b} fails the minimality spot check (decrease {:.3e})",
                        rep.worst_decrease
                    )));
                }
                Some(rep)
            }
            None => None,
        };
        checks.push(MemberCheck { b, residual, minimality });
        fam.b_grid.push(b);
        fam.members.push(v);
    }
    Ok((fam, checks))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub index: usize,
    pub b: [f64; 2],
    pub order: Order,
    /// Smallest `v_b(x) - v_{b'}(x)` over the grid.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMiss {
    pub node: Vec<usize>,
    pub position: Vec<f64>,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationReport {
    pub passed: bool,
    pub disjoint: bool,
    pub covered: bool,
    pub members: usize,
    /// Members not strictly between the bounding fields.
    pub outside_region: Vec<usize>,
    pub pair_failures: Vec<PairCheck>,
    pub min_gap: f64,
    pub levels_checked: usize,
    pub coverage_misses: Vec<CoverageMiss>,
    /// Largest `|v_b(x) - y|` over the bisected leaves.
    pub max_level_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub tol: f64,
    /// Levels per node, spread over `(u₁ + tol, u₂ - tol)` including both ends.
    pub levels: usize,
}

impl VerifyOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, levels: 11 }
    }
}

/// Disjointness of consecutive leaves and coverage of the slab between the
/// bounding fields.
pub fn verify_foliation(fam: &FoliationFamily, opts: &VerifyOptions) -> Result<FoliationReport> {
    if fam.members.is_empty() {
        return Err(Error::Precondition("family is empty".into()));
    }
    if fam.b_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("non-monotone family: parameters decrease".into()));
    }
    let tol = opts.tol;
    let outside_region: Vec<usize> = fam
        .members
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            (0..m.len()).any(|i| !(m.difference(&fam.lower, i) > 0.0 && fam.upper.difference(m, i) > 0.0))
        })
        .map(|(i, _)| i)
        .collect();

    let mut pair_failures = Vec::new();
    let mut min_gap = f64::INFINITY;
    for i in 0..fam.members.len().saturating_sub(1) {
        let (v, w) = (&fam.members[i], &fam.members[i + 1]);
        let rel = compare(w, v, tol)?;
        let gap = (0..v.len()).fold(f64::INFINITY, |acc, j| acc.min(v.difference(w, j)));
        min_gap = min_gap.min(gap);
        if rel.order != Order::Less || !(gap > 0.0) {
            pair_failures.push(PairCheck {
                index: i,
                b: [fam.b_grid[i], fam.b_grid[i + 1]],
                order: rel.order,
                min_gap: gap,
            });
        }
    }

    let levels = opts.levels.max(2);
    let mut coverage_misses = Vec::new();
    let mut max_level_residual: f64 = 0.0;
    let mut levels_checked = 0;
    for flat in 0..fam.grid.node_count() {
        let x = fam.grid.position_of(flat);
        let lo = fam.lower.value(flat) + tol;
        let hi = fam.upper.value(flat) - tol;
        for j in 0..levels {
            let y = lo + (hi - lo) * j as f64 / (levels - 1) as f64;
            levels_checked += 1;
            match fam.solve_level(&x, y) {
                Some((b, _)) => {
                    let r = (fam.profile.value(fam.phase(&x) - b) - y).abs();
                    max_level_residual = max_level_residual.max(r);
                    if r > tol {
                        coverage_misses.push(CoverageMiss {
                            node: fam.grid.unravel(flat),
                            position: x.clone(),
                            level: y,
                        });
                    }
                }
                None => coverage_misses.push(CoverageMiss {
                    node: fam.grid.unravel(flat),
                    position: x.clone(),
                    level: y,
                }),
            }
        }
    }
    let disjoint = pair_failures.is_empty() && outside_region.is_empty();
    let covered = coverage_misses.is_empty();
    coverage_misses.truncate(32);
    Ok(FoliationReport {
        passed: disjoint && covered,
        disjoint,
        covered,
        members: fam.members.len(),
        outside_region,
        pair_failures,
        min_gap,
        levels_checked,
        coverage_misses,
        max_level_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchStatus {
    Matched,
    Unmatched,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub status: MatchStatus,
    pub b0: Option<f64>,
    /// Consecutive family parameters around `b0`.
    pub b_cell: Option<(f64, f64)>,
    pub sup_error: Option<f64>,
    pub tolerance: f64,
    /// The failed hypothesis when not applicable.
    pub reason: Option<String>,
    pub witness: Option<Witness>,
}

impl MatchResult {
    pub fn matched(&self) -> bool {
        self.status == MatchStatus::Matched
    }

    fn not_applicable(tolerance: f64, reason: String) -> Self {
        Self {
            status: MatchStatus::NotApplicable,
            b0: None,
            b_cell: None,
            sup_error: None,
            tolerance,
            reason: Some(reason),
            witness: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityOptions {
    pub match_tol: f64,
    pub order_tol: f64,
    pub radius: i64,
}

impl RigidityOptions {
    pub fn new(match_tol: f64) -> Self {
        Self {
            match_tol,
            order_tol: DEFAULT_ORDER_TOL,
            radius: DEFAULT_SCAN_RADIUS,
        }
    }
}

fn directions_agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10)
}

/// Tests whether `u`, trapped between the bounding fields and carrying the
/// family's invariants, is a leaf: solves `v_{b₀}(x*) = u(x*)` at the grid
/// center and compares globally.
pub fn rigidity_check(u: &ScalarField, fam: &FoliationFamily, opts: &RigidityOptions) -> Result<MatchResult> {
    let tol = opts.match_tol;
    if u.grid() != &fam.grid {
        return Err(Error::GridMismatch);
    }
    if compare(&fam.lower, u, opts.order_tol)?.order != Order::Less {
        return Ok(MatchResult::not_applicable(tol, "u is not above the lower field u₁".into()));
    }
    if compare(u, &fam.upper, opts.order_tol)?.order != Order::Less {
        return Ok(MatchResult::not_applicable(tol, "u is not below the upper field u₂".into()));
    }
    let family = fam.invariants(opts.radius, opts.order_tol)?;
    let own = match extract_invariants(u, opts.radius, opts.order_tol) {
        Ok(s) => s,
        Err(e) => return Ok(MatchResult::not_applicable(tol, format!("invariant extraction failed: {e}"))),
    };
    let t = family.t;
    for i in 0..t - 1 {
        if own.a.get(i).is_none_or(|a| !directions_agree(a, &family.a[i])) {
            return Ok(MatchResult::not_applicable(
                tol,
                format!("ā_{} of u differs from the family's", i + 1),
            ));
        }
    }
    if own.a.get(t - 1).is_none_or(|a| !directions_agree(a, &family.a[t - 1])) {
        return Ok(MatchResult::not_applicable(
            tol,
            format!("ā_{t} of u is {:?}, the family has {:?}", own.a.get(t - 1), family.a[t - 1]),
        ));
    }

    let center = fam.grid.center_node();
    let flat = fam.grid.ravel(&center);
    let x = fam.grid.position(&center);
    let Some((b0, _)) = fam.solve_level(&x, u.value(flat)) else {
        return Ok(MatchResult::not_applicable(tol, "no leaf through the reference point".into()));
    };
    let leaf = fam.member_at(b0)?;
    let rel = compare(u, &leaf, 0.0)?;
    let sup_error = sup_distance(u, &leaf)?;
    let witness = rel
        .witnesses
        .iter()
        .max_by(|a, b| a.difference.abs().total_cmp(&b.difference.abs()))
        .cloned();
    let b_cell = fam
        .b_grid
        .windows(2)
        .find(|w| w[0] <= b0 && b0 <= w[1])
        .map(|w| (w[0], w[1]));
    Ok(MatchResult {
        status: if sup_error <= tol {
            MatchStatus::Matched
        } else {
            MatchStatus::Unmatched
        },
        b0: Some(b0),
        b_cell,
        sup_error: Some(sup_error),
        tolerance: tol,
        reason: None,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeEntry {
    pub b: f64,
    pub lower_distance: f64,
    pub upper_distance: f64,
    pub lower_steps: usize,
    pub upper_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeIdentityReport {
    pub passed: bool,
    pub tolerance: f64,
    pub entries: Vec<EnvelopeEntry>,
    pub max_lower_distance: f64,
    pub max_upper_distance: f64,
}

/// For every member, the envelopes along `Γ_t` against the bounding fields.
pub fn envelope_identity_check(
    fam: &FoliationFamily,
    steps: usize,
    tol: f64,
    radius: i64,
) -> Result<EnvelopeIdentityReport> {
    let mut entries = Vec::new();
    for (b, v) in fam.b_grid.iter().zip(&fam.members) {
        let sys = extract_invariants(v, radius, DEFAULT_ORDER_TOL)?;
        let lower = envelope(v, &sys, Sign::Minus, steps, tol, radius)?;
        let upper = envelope(v, &sys, Sign::Plus, steps, tol, radius)?;
        entries.push(EnvelopeEntry {
            b: *b,
            lower_distance: sup_distance(&lower.field, &fam.lower)?,
            upper_distance: sup_distance(&upper.field, &fam.upper)?,
            lower_steps: lower.steps,
            upper_steps: upper.steps,
        });
    }
    let max_lower_distance = entries.iter().map(|e| e.lower_distance).fold(0.0, f64::max);
    let max_upper_distance = entries.iter().map(|e| e.upper_distance).fold(0.0, f64::max);
    Ok(EnvelopeIdentityReport {
        passed: max_lower_distance <= tol && max_upper_distance <= tol,
        tolerance: tol,
        entries,
        max_lower_distance,
        max_upper_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LimitClass {
    Lower,
    Upper,
    Member { b: f64, sup_error: f64 },
    Unclassified { reason: String },
}

#[derive(Debug, Clone)]
pub struct AsymptoticResult {
    pub limit: ScalarField,
    pub classification: LimitClass,
    pub steps: usize,
    pub value_increment: f64,
    pub gradient_increment: f64,
}

/// Iterates `T_{m k̄} u` for `k̄ = (direction, 0)` until values and central
/// gradients both move by less than `tol`, then names the limit.
///
/// A run that does not settle reports the closest pair of iterates; this only
/// means no convergent subsequence was found within `steps`.
pub fn asymptotic_limit(
    u: &ScalarField,
    gamma2_basis: &[Vec<i64>],
    direction: &[i64],
    steps: usize,
    tol: f64,
    fam: &FoliationFamily,
    rigidity: &RigidityOptions,
) -> Result<AsymptoticResult> {
    let n = u.dimension();
    if direction.len() != n && direction.len() != n + 1 {
        return Err(Error::Dimension {
            expected: n + 1,
            found: direction.len(),
        });
    }
    let mut k = direction.to_vec();
    k.resize(n + 1, 0);
    if !lattice_contains(gamma2_basis, &k) {
        return Err(Error::Precondition(format!("direction {k:?} is not in the given Γ₂")));
    }
    let k = crate::field::TranslationVector::from_components(k)?;
    let mut iterates = vec![u.clone()];
    let mut prev_grad = u.central_gradient();
    for m in 1..=steps {
        let next = u.translate(&k.scaled(m as i64))?;
        let grad = next.central_gradient();
        let dv = sup_distance(&next, &iterates[m - 1])?;
        let dg = grad
            .iter()
            .zip(&prev_grad)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        if dv < tol && dg < tol {
            let classification = classify_limit(&next, fam, rigidity)?;
            return Ok(AsymptoticResult {
                limit: next,
                classification,
                steps: m,
                value_increment: dv,
                gradient_increment: dg,
            });
        }
        iterates.push(next);
        prev_grad = grad;
    }
    let mut closest = (0, 0, f64::INFINITY);
    for i in 0..iterates.len() {
        for j in i + 1..iterates.len() {
            let d = sup_distance(&iterates[i], &iterates[j])?;
            if d < closest.2 {
                closest = (i, j, d);
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "no convergent subsequence found in {steps} steps; closest iterates m = {} and m = {} at sup distance {:.3e}",
        closest.0, closest.1, closest.2
    )))
}

fn classify_limit(w: &ScalarField, fam: &FoliationFamily, rigidity: &RigidityOptions) -> Result<LimitClass> {
    if sup_distance(w, &fam.lower)? <= rigidity.match_tol {
        return Ok(LimitClass::Lower);
    }
    if sup_distance(w, &fam.upper)? <= rigidity.match_tol {
        return Ok(LimitClass::Upper);
    }
    let m = rigidity_check(w, fam, rigidity)?;
    Ok(match (m.status, m.b0, m.sup_error) {
        (MatchStatus::Matched, Some(b), Some(sup_error)) => LimitClass::Member { b, sup_error },
        _ => LimitClass::Unclassified {
            reason: m
                .reason
                .unwrap_or_else(|| format!("nearest leaf at sup distance {:?}", m.sup_error)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridAxis;
    use crate::heteroclinic::{logistic_profile, Logistic};

    fn slab() -> Grid {
        Grid::new(vec![
            GridAxis::free(-20.0, 40, 4).unwrap(),
            GridAxis::periodic(1, 0, 4).unwrap(),
        ])
        .unwrap()
    }

    fn family(count: usize) -> FoliationFamily {
        build_family(&[1, 0], -5.0, 5.0, count, &slab(), Arc::new(Logistic), &BuildOptions {
            residual_bound: 1e-2,
            spot: None,
        })
        .unwrap()
        .0
    }

    #[test]
    fn member_is_logistic_in_first_coordinate() {
        let fam = family(11);
        let v = &fam.members[5];
        assert_eq!(fam.b_grid[5], 0.0);
        for flat in 0..v.len() {
            let x = fam.grid.position_of(flat);
            assert_eq!(v.value(flat), logistic_profile(x[0]));
        }
    }

    #[test]
    fn member_shift_is_a_translation() {
        let fam = family(11);
        // v_b(x) = v_0(x - b ω) for b = 1 on the interior
        let t = fam.members[5].translate(&crate::field::TranslationVector::new(&[1, 0], 0)).unwrap();
        let v1 = &fam.members[6];
        for flat in 0..v1.len() {
            let idx = fam.grid.unravel(flat);
            if idx[0] >= 4 {
                assert_eq!(t.value(flat), v1.value(flat));
            }
        }
    }

    #[test]
    fn rejects_incompatible_grids() {
        let g = Grid::new(vec![
            GridAxis::periodic(1, 0, 4).unwrap(),
            GridAxis::periodic(1, 0, 4).unwrap(),
        ])
        .unwrap();
        assert!(build_family(&[1, 0], -1.0, 1.0, 3, &g, Arc::new(Logistic), &BuildOptions::default()).is_err());
        assert!(build_family(&[0, 0], -1.0, 1.0, 3, &slab(), Arc::new(Logistic), &BuildOptions::default()).is_err());
        assert!(build_family(&[1, 0], -1.0, 1.0, 1, &slab(), Arc::new(Logistic), &BuildOptions::default()).is_err());
    }

    #[test]
    fn foliation_passes_and_duplicates_fail() {
        let fam = family(21);
        let rep = verify_foliation(&fam, &VerifyOptions::new(1e-6)).unwrap();
        assert!(rep.passed, "{rep:?}");
        let rep = verify_foliation(&fam.without(7), &VerifyOptions::new(1e-6)).unwrap();
        assert!(rep.passed);
        let mut dup = fam.clone();
        dup.members[8] = dup.members[7].clone();
        dup.b_grid[8] = dup.b_grid[7];
        let rep = verify_foliation(&dup, &VerifyOptions::new(1e-6)).unwrap();
        assert!(!rep.disjoint && !rep.passed);
        assert_eq!(rep.pair_failures[0].order, Order::Equal);
    }

    #[test]
    fn level_solve_inverts_the_profile() {
        let fam = family(3);
        let (b, _) = fam.solve_level(&[2.0, 0.0], 0.25).unwrap();
        assert!((b - (2.0 + 3f64.ln())).abs() < 1e-12);
        // far outside [-5, 5] through lattice translates
        let (b, _) = fam.solve_level(&[0.0, 0.0], 1e-6).unwrap();
        assert!((logistic_profile(-b) - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn rigidity_of_a_member() {
        let fam = family(11);
        let u = fam.member_at(0.37).unwrap();
        let m = rigidity_check(&u, &fam, &RigidityOptions::new(1e-10)).unwrap();
        assert!(m.matched());
        assert!((m.b0.unwrap() - 0.37).abs() < 1e-9);
        assert_eq!(m.b_cell, Some((0.0, 1.0)));
    }

    #[test]
    fn rigidity_not_applicable_for_other_direction() {
        let g = Grid::new(vec![
            GridAxis::free(-8.0, 16, 4).unwrap(),
            GridAxis::free(-8.0, 16, 4).unwrap(),
        ])
        .unwrap();
        let fam = build_family(&[1, 0], -2.0, 2.0, 5, &g, Arc::new(Logistic), &BuildOptions {
            residual_bound: 1e-2,
            spot: None,
        })
        .unwrap()
        .0;
        let other = ScalarField::from_fn(g, |x| logistic_profile(x[1] - 0.2)).unwrap();
        let m = rigidity_check(&other, &fam, &RigidityOptions::new(1e-3)).unwrap();
        assert_eq!(m.status, MatchStatus::NotApplicable);
        assert!(m.reason.unwrap().contains("ā_2"));
    }

    #[test]
    fn envelopes_are_the_pure_phases() {
        let fam = family(5);
        let rep = envelope_identity_check(&fam, 60, 1e-6, 3).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn asymptotic_classes() {
        let fam = family(11);
        let gamma2 = vec![vec![1, 0, 0], vec![0, 1, 0]];
        let opts = RigidityOptions::new(1e-6);
        let v = &fam.members[3];
        let up = asymptotic_limit(v, &gamma2, &[-1, 0], 80, 1e-6, &fam, &opts).unwrap();
        assert_eq!(up.classification, LimitClass::Upper);
        let same = asymptotic_limit(v, &gamma2, &[0, 1], 5, 1e-6, &fam, &opts).unwrap();
        match same.classification {
            LimitClass::Member { b, .. } => assert!((b - fam.b_grid[3]).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let zero = ScalarField::constant(fam.grid.clone(), 0.0).unwrap();
        let low = asymptotic_limit(&zero, &gamma2, &[1, 0], 3, 1e-6, &fam, &opts).unwrap();
        assert_eq!(low.classification, LimitClass::Lower);
        assert!(asymptotic_limit(v, &[vec![0, 1, 0]], &[1, 0], 3, 1e-6, &fam, &opts).is_err());
    }
}
