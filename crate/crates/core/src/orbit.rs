//! Translation orbits of a field: rotation vector, self-intersections, the
//! invariant system `(t, ā₁..ā_t, Γ₁..Γ_{t+1})`, admissibility, enveloping
//! limits and the ordering checks built on them.
//!
//! For a field without self-intersections every translate `T_k̄ u` is above,
//! below or equal to `u`. The invariant system encodes which: `T_k̄ u > u`
//! exactly when `k̄ ∈ Γ_s` and `k̄ · ā_s > 0` for some `s`, and `T_k̄ u = u`
//! exactly when `k̄ ∈ Γ_{t+1}`, where `Γ_s` is the sublattice of `Z^{n+1}`
//! orthogonal to `ā₁..ā_{s-1}`.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{compare, Order, OrderRelation, ScalarField, TranslationVector};
use crate::integrand::Integrand;
use crate::lattice::{self, enumerate_box, gram_schmidt, lattice_in_orthocomplement};
use crate::minimize::{minimality_spot_check, MinimalityReport, SpotCheckOptions};

/// Default `|k̄|_∞` radius of lattice scans.
pub const DEFAULT_SCAN_RADIUS: i64 = 3;

/// `|k̄ · ā| / |k̄|` below which a lattice vector counts as orthogonal.
const SIGN_BAND: f64 = 1e-9;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_f64(k: &[i64]) -> Vec<f64> {
    k.iter().map(|&c| c as f64).collect()
}

/// `ā₁ = (-ρ, 1) / √(|ρ|² + 1)`.
pub fn rotation_normal(rho: &[f64]) -> Vec<f64> {
    let scale = (rho.iter().map(|r| r * r).sum::<f64>() + 1.0).sqrt();
    rho.iter()
        // adding 0.0 turns -0.0 into 0.0
        .map(|r| -r / scale + 0.0)
        .chain(std::iter::once(1.0 / scale))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationFit {
    /// `[p, q]` pairs, `ρ_i = p / q`.
    pub rho: Vec<[i64; 2]>,
    /// Measured `sup |u(x) - u(x₀) - ρ·(x - x₀)|` over the cell.
    pub bound: f64,
    pub a1: Vec<f64>,
}

impl RotationFit {
    pub fn rho_f64(&self) -> Vec<f64> {
        self.rho.iter().map(|[p, q]| *p as f64 / *q as f64).collect()
    }
}

/// Rotation vector from the stored slope, with the measured bound taken
/// relative to the node nearest the origin.
pub fn rotation_fit(u: &ScalarField) -> RotationFit {
    let grid = u.grid();
    let slope: Vec<Rational64> = grid.slope();
    let rho: Vec<f64> = grid.slope_f64();
    let anchor = (0..u.len())
        .min_by(|&i, &j| norm(&grid.position_of(i)).total_cmp(&norm(&grid.position_of(j))))
        .unwrap_or(0);
    let x0 = grid.position_of(anchor);
    let bound = (0..u.len()).fold(0.0_f64, |acc, flat| {
        let x = grid.position_of(flat);
        let linear: f64 = rho.iter().zip(x.iter().zip(&x0)).map(|(r, (a, b))| r * (a - b)).sum();
        acc.max((u.value(flat) - u.value(anchor) - linear).abs())
    });
    RotationFit {
        rho: slope.iter().map(|r| [*r.numer(), *r.denom()]).collect(),
        bound,
        a1: rotation_normal(&rho),
    }
}

/// `compare(T_k̄ u, u, tol)`.
pub fn classify_translation(u: &ScalarField, k: &TranslationVector, tol: f64) -> Result<OrderRelation> {
    compare(&u.translate(k)?, u, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub k: TranslationVector,
    pub relation: OrderRelation,
}

/// Every `k̄` with `|k̄|_∞ ≤ radius` whose translate crosses `u`.
///
/// For each shift only the vertical components that can produce a crossing
/// are classified: with `D = u(· - k) - u`, the translate crosses only if
/// `k_{n+1}` lies strictly between `-max D + tol` and `-min D - tol`.
pub fn self_intersection_scan(u: &ScalarField, radius: i64, tol: f64) -> Result<Vec<IntersectionWitness>> {
    if radius < 1 {
        return Err(Error::Precondition("scan radius must be at least 1".into()));
    }
    let n = u.dimension();
    let mut out = Vec::new();
    let mut shifts = enumerate_box(n, radius);
    shifts.sort();
    for shift in shifts {
        let moved = u.translate(&TranslationVector::new(&shift, 0))?;
        let (dmin, dmax) = (0..u.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let d = moved.difference(u, i);
            (lo.min(d), hi.max(d))
        });
        let first = ((-dmax + tol).floor() as i64 + 1).max(-radius);
        let last = ((-dmin - tol).ceil() as i64 - 1).min(radius);
        for lift in first..=last {
            let k = TranslationVector::new(&shift, lift);
            let relation = classify_translation(u, &k, tol)?;
            if relation.order == Order::Crossing {
                out.push(IntersectionWitness { k, relation });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSystem {
    pub t: usize,
    pub a: Vec<Vec<f64>>,
    /// Hermite bases of `Γ₁ ⊇ … ⊇ Γ_{t+1}`.
    pub gamma_bases: Vec<Vec<Vec<i64>>>,
}

impl InvariantSystem {
    pub fn ambient_dimension(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    /// Same `t`, directions within `tol`, identical lattices.
    pub fn approx_eq(&self, other: &InvariantSystem, tol: f64) -> bool {
        self.t == other.t
            && self.a.len() == other.a.len()
            && self
                .a
                .iter()
                .zip(&other.a)
                .all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol))
            && self.gamma_bases == other.gamma_bases
    }

    /// Predicted relation of `T_k̄ u` to `u`.
    pub fn predict(&self, k: &[i64]) -> Order {
        let kf = to_f64(k);
        let scale = norm(&kf).max(1.0);
        for a in &self.a {
            let d = dotf(&kf, a);
            if d > SIGN_BAND * scale {
                return Order::Greater;
            }
            if d < -SIGN_BAND * scale {
                return Order::Less;
            }
        }
        Order::Equal
    }

    /// The last lattice `Γ_{t+1}`.
    pub fn stabilizer(&self) -> &[Vec<i64>] {
        self.gamma_bases.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub radius: i64,
    pub tol: f64,
    /// Shuffles the order in which lattice vectors are visited.
    pub order_seed: Option<u64>,
}

impl ExtractOptions {
    pub fn new(radius: i64, tol: f64) -> Self {
        Self {
            radius,
            tol,
            order_seed: None,
        }
    }
}

pub fn extract_invariants(u: &ScalarField, radius: i64, tol: f64) -> Result<InvariantSystem> {
    extract_invariants_with(u, &ExtractOptions::new(radius, tol))
}

fn identity_basis(dim: usize) -> Vec<Vec<i64>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
        .collect()
}

/// Unit vector of `R^d` orthogonal to `vectors` (which must span `d - 1`).
fn complement_direction(vectors: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    let q = gram_schmidt(vectors, 1e-10);
    if q.len() + 1 != d {
        return None;
    }
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            for qv in &q {
                let c = dotf(qv, &e);
                e.iter_mut().zip(qv).for_each(|(x, y)| *x -= c * y);
            }
            e
        })
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))
        .map(|e| {
            let nrm = norm(&e);
            e.into_iter().map(|x| x / nrm).collect()
        })
}

fn combinations(n: usize, r: usize, mut visit: impl FnMut(&[usize])) {
    if r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn primitive(k: &[i64]) -> Vec<i64> {
    let g = k.iter().fold(0i64, |g, &c| lattice::extended_gcd(g, c).0);
    if g <= 1 {
        k.to_vec()
    } else {
        k.iter().map(|c| c / g).collect()
    }
}

/// Chooses `ā_{s+1}` in `span(Γ_{s+1}) ∩ span(EQUAL)^⊥` so that every
/// translate classified above `u` has non-negative inner product with it.
fn next_direction(
    gamma_basis: &[Vec<i64>],
    greater: &[Vec<i64>],
    equal: &[Vec<i64>],
) -> Option<Vec<f64>> {
    let span_v = gram_schmidt(&gamma_basis.iter().map(|k| to_f64(k)).collect::<Vec<_>>(), 1e-12);
    let span_e = gram_schmidt(&equal.iter().map(|k| to_f64(k)).collect::<Vec<_>>(), 1e-12);
    let mut w_basis: Vec<Vec<f64>> = Vec::new();
    for v in &span_v {
        let mut r = v.clone();
        for q in span_e.iter().chain(w_basis.iter()) {
            let c = dotf(q, &r);
            r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let nr = norm(&r);
        if nr > 1e-9 {
            w_basis.push(r.into_iter().map(|x| x / nr).collect());
        }
    }
    let d = w_basis.len();
    if d == 0 {
        return None;
    }
    let coords = |v: &[f64]| -> Vec<f64> { w_basis.iter().map(|q| dotf(q, v)).collect() };
    let lift = |c: &[f64]| -> Vec<f64> {
        let dim = w_basis[0].len();
        let mut out = vec![0.0; dim];
        for (ci, q) in c.iter().zip(&w_basis) {
            out.iter_mut().zip(q).for_each(|(o, qi)| *o += ci * qi);
        }
        out
    };

    // oriented, primitive, deduplicated directions of the translates above u
    let mut dirs: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
    for k in greater {
        let p = primitive(k);
        let c = coords(&to_f64(&p));
        if norm(&c) > 1e-9 {
            dirs.entry(p).or_insert(c);
        }
    }
    if dirs.is_empty() {
        return None;
    }
    let mut ls = vec![0.0; d];
    for c in dirs.values() {
        let nc = norm(c);
        ls.iter_mut().zip(c).for_each(|(s, x)| *s += x / nc);
    }
    let ls_norm = norm(&ls);
    if ls_norm > 0.0 {
        ls.iter_mut().for_each(|x| *x /= ls_norm);
    }

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if d == 1 {
        candidates.push(vec![1.0]);
    } else {
        let mut pool: Vec<(Vec<i64>, Vec<f64>)> = dirs.iter().map(|(k, c)| (k.clone(), c.clone())).collect();
        pool.sort_by(|a, b| {
            let na: i64 = a.0.iter().map(|x| x * x).sum();
            let nb: i64 = b.0.iter().map(|x| x * x).sum();
            na.cmp(&nb).then_with(|| a.0.cmp(&b.0))
        });
        pool.truncate(48);
        combinations(pool.len(), d - 1, |idx| {
            let vs: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].1.clone()).collect();
            if let Some(c) = complement_direction(&vs, d) {
                candidates.push(c);
            }
        });
        if ls_norm > 0.0 {
            candidates.push(ls.clone());
        }
    }

    let consistent = |c: &[f64]| -> Option<Vec<f64>> {
        let total: f64 = dirs.values().map(|v| dotf(v, c) / norm(v)).sum();
        let sign = if total >= 0.0 { 1.0 } else { -1.0 };
        let oriented: Vec<f64> = c.iter().map(|x| sign * x).collect();
        let ok = dirs
            .values()
            .all(|v| dotf(v, &oriented) >= -SIGN_BAND * norm(v))
            && dirs.values().any(|v| dotf(v, &oriented) > SIGN_BAND * norm(v));
        ok.then_some(oriented)
    };
    let best = candidates
        .iter()
        .filter_map(|c| consistent(c))
        .max_by(|x, y| dotf(x, &ls).abs().total_cmp(&dotf(y, &ls).abs()))?;
    let mut a = lift(&best);
    a.iter_mut().for_each(|x| {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    });
    let na = norm(&a);
    Some(a.into_iter().map(|x| x / na).collect())
}

/// Runs the extraction: `ā₁` from the slope, then each further direction from
/// the classification of translates in the current lattice, until every
/// remaining translate is EQUAL. The result is checked against the full
/// classification of the scan box; disagreements are reported with witnesses.
pub fn extract_invariants_with(u: &ScalarField, opts: &ExtractOptions) -> Result<InvariantSystem> {
    let crossings = self_intersection_scan(u, opts.radius, opts.tol)?;
    if !crossings.is_empty() {
        return Err(Error::Extraction {
            reason: format!("field has {} self-intersections within the scan radius", crossings.len()),
            witnesses: crossings.iter().map(|w| w.k.components().to_vec()).collect(),
        });
    }
    let n1 = u.dimension() + 1;
    let mut vectors = enumerate_box(n1, opts.radius);
    if let Some(seed) = opts.order_seed {
        vectors.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut classes: BTreeMap<Vec<i64>, Order> = BTreeMap::new();
    for k in &vectors {
        let tv = TranslationVector::from_components(k.clone())?;
        classes.insert(k.clone(), classify_translation(u, &tv, opts.tol)?.order);
    }

    let fit = rotation_fit(u);
    let mut a = vec![fit.a1];
    let mut gamma_bases = vec![identity_basis(n1)];
    let t = loop {
        let s = a.len();
        gamma_bases.push(lattice_in_orthocomplement(&a, n1, opts.radius)?);
        if s == n1 {
            break s;
        }
        let in_lattice: Vec<&Vec<i64>> = vectors
            .iter()
            .filter(|k| {
                let kf = to_f64(k);
                a.iter().all(|d| dotf(&kf, d).abs() <= lattice::ORTHOGONALITY_TOL)
            })
            .collect();
        let mut greater = Vec::new();
        let mut equal = Vec::new();
        for k in &in_lattice {
            match classes[*k] {
                Order::Greater => greater.push((*k).clone()),
                Order::Less => greater.push(k.iter().map(|c| -c).collect()),
                Order::Equal => equal.push((*k).clone()),
                Order::Crossing => unreachable!("crossings rejected above"),
            }
        }
        if greater.is_empty() {
            break s;
        }
        let basis = gamma_bases.last().expect("pushed above");
        let Some(dir) = next_direction(basis, &greater, &equal) else {
            return Err(Error::Extraction {
                reason: format!("no direction in Γ_{} orders the classified translates", s + 1),
                witnesses: greater,
            });
        };
        a.push(dir);
    };

    let system = InvariantSystem { t, a, gamma_bases };
    let mismatches: Vec<Vec<i64>> = vectors
        .iter()
        .filter(|k| system.predict(k) != classes[*k])
        .cloned()
        .collect();
    if !mismatches.is_empty() {
        return Err(Error::Extraction {
            reason: format!(
                "{} classified translates disagree with the extracted invariants",
                mismatches.len()
            ),
            witnesses: mismatches,
        });
    }
    Ok(system)
}

/// Admissibility with lattices rebuilt at the default scan radius.
pub fn is_admissible(sys: &InvariantSystem) -> bool {
    is_admissible_with_radius(sys, DEFAULT_SCAN_RADIUS)
}

/// `ā₁ · ē_{n+1} > 0`, unit directions, and `ā_s ∈ span(Γ_s)` to 1e-10.
pub fn is_admissible_with_radius(sys: &InvariantSystem, radius: i64) -> bool {
    let Some(first) = sys.a.first() else {
        return false;
    };
    let dim = first.len();
    if dim == 0 || first[dim - 1] <= 0.0 {
        return false;
    }
    if sys.a.iter().any(|a| a.len() != dim || (norm(a) - 1.0).abs() > 1e-10) {
        return false;
    }
    for s in 1..sys.a.len() {
        let Ok(gamma) = lattice_in_orthocomplement(&sys.a[..s], dim, radius) else {
            return false;
        };
        let basis: Vec<Vec<f64>> = gamma.iter().map(|k| to_f64(k)).collect();
        if lattice::span_residual(&basis, &sys.a[s]) > 1e-10 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Envelope {
    pub field: ScalarField,
    /// Generator `k̄ ∈ Γ_t` that was iterated.
    pub k: TranslationVector,
    pub steps: usize,
    pub last_increment: f64,
    /// Invariants of the limit, or why extraction failed.
    pub invariants: std::result::Result<InvariantSystem, String>,
}

/// Shortest vector of `Γ_t` with `k̄ · ā_t` of the requested sign.
pub fn envelope_generator(sys: &InvariantSystem, sign: Sign) -> Result<TranslationVector> {
    if sys.t < 2 {
        return Err(Error::Precondition(format!("envelopes need t ≥ 2, got t = {}", sys.t)));
    }
    let basis = &sys.gamma_bases[sys.t - 1];
    let at = &sys.a[sys.t - 1];
    let dim = at.len();
    let r = DEFAULT_SCAN_RADIUS;
    let mut best: Option<(i64, Vec<i64>)> = None;
    for coeffs in enumerate_box(basis.len(), r) {
        let mut k = vec![0i64; dim];
        for (c, b) in coeffs.iter().zip(basis) {
            k.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        let d = dotf(&to_f64(&k), at) * sign.factor();
        if d <= SIGN_BAND * norm(&to_f64(&k)) {
            continue;
        }
        let len: i64 = k.iter().map(|x| x * x).sum();
        if best.as_ref().is_none_or(|(bl, bk)| len < *bl || (len == *bl && k < *bk)) {
            best = Some((len, k));
        }
    }
    let (_, k) = best.ok_or_else(|| Error::Precondition("Γ_t has no vector of the requested sign".into()))?;
    TranslationVector::from_components(k)
}

/// Limit of `T_{m k̄} u` along the shortest `k̄ ∈ Γ_t` with the requested sign
/// of `k̄ · ā_t`, declared once successive iterates differ by less than `tol`.
pub fn envelope(
    u: &ScalarField,
    sys: &InvariantSystem,
    sign: Sign,
    steps: usize,
    tol: f64,
    radius: i64,
) -> Result<Envelope> {
    let k = envelope_generator(sys, sign)?;
    let mut prev = u.clone();
    for m in 1..=steps {
        let next = u.translate(&k.scaled(m as i64))?;
        let inc = crate::field::sup_distance(&next, &prev)?;
        if inc < tol {
            // the limit is only known to a few increments, so classify it at
            // a matching tolerance
            let class_tol = crate::field::DEFAULT_ORDER_TOL.max(10.0 * tol);
            let invariants = extract_invariants(&next, radius, class_tol).map_err(|e| e.to_string());
            return Ok(Envelope {
                field: next,
                k,
                steps: m,
                last_increment: inc,
                invariants,
            });
        }
        prev = next;
    }
    Err(Error::NoConvergence(format!(
        "translates along {:?} still moving after {steps} steps",
        k.components()
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRelation {
    pub i: usize,
    pub j: usize,
    pub relation: OrderRelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalOrderReport {
    pub passed: bool,
    pub pairs: usize,
    pub violations: Vec<PairRelation>,
}

/// Pairwise comparison; passes iff no pair crosses.
pub fn total_order_check(fields: &[ScalarField], tol: f64) -> Result<TotalOrderReport> {
    let mut violations = Vec::new();
    let mut pairs = 0;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            pairs += 1;
            let relation = compare(&fields[i], &fields[j], tol)?;
            if relation.order == Order::Crossing {
                violations.push(PairRelation { i, j, relation });
            }
        }
    }
    Ok(TotalOrderReport {
        passed: violations.is_empty(),
        pairs,
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct GapOptions<'a> {
    pub integrand: &'a dyn Integrand,
    pub steps: usize,
    pub envelope_tol: f64,
    pub order_tol: f64,
    pub radius: i64,
    pub spot: SpotCheckOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStatus {
    pub index: usize,
    pub above_lower: bool,
    pub below_upper: bool,
    /// Invariants equal `(ā₁..ā_{t-1})` of the input.
    pub in_class: bool,
    pub class_note: Option<String>,
    pub minimality: MinimalityReport,
    pub anomaly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub passed: bool,
    pub lower_generator: TranslationVector,
    pub upper_generator: TranslationVector,
    pub candidates: Vec<CandidateStatus>,
}

/// Looks for a candidate strictly between the envelopes of `u` that carries
/// the invariants `(ā₁..ā_{t-1})` and survives the minimality spot check.
/// Any such candidate is an anomaly.
pub fn gap_check(
    u: &ScalarField,
    sys: &InvariantSystem,
    candidates: &[ScalarField],
    opts: &GapOptions<'_>,
) -> Result<GapReport> {
    let lower = envelope(u, sys, Sign::Minus, opts.steps, opts.envelope_tol, opts.radius)?;
    let upper = envelope(u, sys, Sign::Plus, opts.steps, opts.envelope_tol, opts.radius)?;
    let reduced = &sys.a[..sys.t - 1];
    let mut statuses = Vec::new();
    for (index, v) in candidates.iter().enumerate() {
        let above_lower = compare(&lower.field, v, opts.order_tol)?.order == Order::Less;
        let below_upper = compare(v, &upper.field, opts.order_tol)?.order == Order::Less;
        let (in_class, class_note) = match extract_invariants(v, opts.radius, opts.order_tol) {
            Ok(cs) => {
                let same = cs.t == reduced.len()
                    && cs
                        .a
                        .iter()
                        .zip(reduced)
                        .all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-10));
                (same, None)
            }
            Err(e) => (false, Some(e.to_string())),
        };
        let minimality = minimality_spot_check(v, opts.integrand, &opts.spot)?;
        let anomaly = above_lower && below_upper && in_class && minimality.passed;
        statuses.push(CandidateStatus {
            index,
            above_lower,
            below_upper,
            in_class,
            class_note,
            minimality,
            anomaly,
        });
    }
    Ok(GapReport {
        passed: statuses.iter().all(|s| !s.anomaly),
        lower_generator: lower.k,
        upper_generator: upper.k,
        candidates: statuses,
    })
}
