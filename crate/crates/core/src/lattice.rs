//! Integer lattice helpers: bounded enumeration, Hermite normal form, and
//! sublattices of Z^d orthogonal to a set of real directions.

use crate::error::{Error, Result};

/// Tolerance of `|k · a|` for a lattice vector to count as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// All nonzero integer vectors with `|k|_∞ ≤ radius`, in lexicographic order.
pub fn enumerate_box(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::with_capacity(total.saturating_sub(1));
    for code in 0..total {
        let mut rest = code;
        let mut v = vec![0i64; dim];
        for slot in v.iter_mut().rev() {
            *slot = (rest % side) as i64 - radius;
            rest /= side;
        }
        if v.iter().any(|&c| c != 0) {
            out.push(v);
        }
    }
    out
}

pub fn dot(k: &[i64], a: &[f64]) -> f64 {
    k.iter().zip(a).map(|(&ki, &ai)| ki as f64 * ai).sum()
}

/// Row-style Hermite normal form of the lattice generated by `rows`: upper
/// triangular, positive pivots, entries above each pivot reduced into
/// `[0, pivot)`. Zero rows are dropped, so the result is a basis.
pub fn hermite_normal_form(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let Some(cols) = rows.first().map(Vec::len) else {
        return Vec::new();
    };
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .filter(|r| r.iter().any(|&v| v != 0))
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let mut has_pivot = false;
        loop {
            let pick = (r..m.len())
                .filter(|&i| m[i][c] != 0)
                .min_by_key(|&i| m[i][c].abs());
            let Some(p) = pick else { break };
            has_pivot = true;
            m.swap(r, p);
            let mut cleared = true;
            for i in r + 1..m.len() {
                if m[i][c] != 0 {
                    let q = m[i][c] / m[r][c];
                    let pivot_row = m[r].clone();
                    for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                        *x -= q * y;
                    }
                    if m[i][c] != 0 {
                        cleared = false;
                    }
                }
            }
            if cleared {
                break;
            }
        }
        if !has_pivot {
            continue;
        }
        if m[r][c] < 0 {
            m[r].iter_mut().for_each(|v| *v = -*v);
        }
        let pivot_row = m[r].clone();
        for row in m.iter_mut().take(r) {
            let q = row[c].div_euclid(pivot_row[c]);
            if q != 0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= q * y;
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    m.into_iter()
        .filter(|row| row.iter().any(|&v| v != 0))
        .map(|row| row.into_iter().map(|v| v as i64).collect())
        .collect()
}

/// Rank of a set of real vectors (Gaussian elimination, relative tolerance).
pub fn rank(vectors: &[Vec<f64>]) -> usize {
    let Some(cols) = vectors.first().map(Vec::len) else {
        return 0;
    };
    let mut m: Vec<Vec<f64>> = vectors.to_vec();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else {
            break;
        };
        if m[p][c].abs() <= 1e-9 * scale {
            continue;
        }
        m.swap(r, p);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            let pivot = m[r].clone();
            for (x, y) in m[i].iter_mut().zip(&pivot) {
                *x -= f * y;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

pub fn integer_rank(vectors: &[Vec<i64>]) -> usize {
    hermite_normal_form(vectors).len()
}

/// Enumerated vectors of the box orthogonal to every direction.
pub fn orthogonal_vectors(directions: &[Vec<f64>], dim: usize, radius: i64) -> Vec<Vec<i64>> {
    enumerate_box(dim, radius)
        .into_iter()
        .filter(|k| {
            directions
                .iter()
                .all(|a| dot(k, a).abs() <= ORTHOGONALITY_TOL)
        })
        .collect()
}

/// Integer basis (Hermite normal form) of `Z^dim ∩ span(directions)^⊥`.
///
/// Lattice vectors are enumerated in the box `|k|_∞ ≤ radius`; if they span
/// less than the expected rank `dim - #directions` the radius is reported as
/// too small rather than returning a partial basis.
pub fn lattice_in_orthocomplement(
    directions: &[Vec<f64>],
    dim: usize,
    radius: i64,
) -> Result<Vec<Vec<i64>>> {
    if let Some(bad) = directions.iter().find(|a| a.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: bad.len(),
        });
    }
    if rank(directions) < directions.len() {
        return Err(Error::Lattice("directions are linearly dependent".into()));
    }
    if radius < 1 {
        return Err(Error::Lattice("radius must be at least 1".into()));
    }
    let expected = dim - directions.len();
    let basis = hermite_normal_form(&orthogonal_vectors(directions, dim, radius));
    if basis.len() < expected {
        return Err(Error::Lattice(format!(
            "radius {radius} too small: enumerated vectors span rank {}, expected {expected}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Whether `v` lies in the lattice generated by `basis`.
pub fn lattice_contains(basis: &[Vec<i64>], v: &[i64]) -> bool {
    if v.iter().all(|&c| c == 0) {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    let mut extended = basis.to_vec();
    extended.push(v.to_vec());
    hermite_normal_form(&extended) == hermite_normal_form(basis)
}

/// Coordinates of `v` in the rational span of `basis` with the residual
/// norm; the residual is zero iff `v` lies in that span.
pub fn span_residual(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let ortho = gram_schmidt(basis, 1e-12);
    let mut r = v.to_vec();
    for q in &ortho {
        let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= c * qi;
        }
    }
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Orthonormal basis of `span(vectors)`, dropping dependent vectors.
pub fn gram_schmidt(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes for stability
        for _ in 0..2 {
            for q in &out {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        if norm > tol * scale {
            out.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// `(g, x, y)` with `a x + b y = g = gcd(a, b) ≥ 0`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = extended_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Some integer vector `e` with `p · e = gcd(p)`.
pub fn bezout_vector(p: &[i64]) -> (i64, Vec<i64>) {
    let mut e = vec![0i64; p.len()];
    let mut g = 0i64;
    for (i, &pi) in p.iter().enumerate() {
        if g == 0 {
            if pi != 0 {
                g = pi.abs();
                e[i] = pi.signum();
            }
            continue;
        }
        let (ng, x, y) = extended_gcd(g, pi);
        for v in e.iter_mut().take(i) {
            *v *= x;
        }
        e[i] = y;
        g = ng;
    }
    (g, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn complement_of_vertical_axis() {
        let b = lattice_in_orthocomplement(&[vec![0.0, 0.0, 1.0]], 3, 3).unwrap();
        assert_eq!(b, vec![vec![1, 0, 0], vec![0, 1, 0]]);
    }

    #[test]
    fn complement_of_two_axes() {
        let b =
            lattice_in_orthocomplement(&[vec![0.0, 0.0, 1.0], vec![-1.0, 0.0, 0.0]], 3, 3).unwrap();
        assert_eq!(b, vec![vec![0, 1, 0]]);
    }

    #[test]
    fn complement_of_diagonal() {
        let b = lattice_in_orthocomplement(&[unit(&[-1.0, 1.0, 0.0])], 3, 3).unwrap();
        assert_eq!(b, vec![vec![1, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn dependent_directions_rejected() {
        let e = vec![0.0, 0.0, 1.0];
        assert!(lattice_in_orthocomplement(&[e.clone(), e], 3, 3).is_err());
    }

    #[test]
    fn small_radius_reported() {
        // the complement of (−3, 1, 0)/√10 in Z^3 needs (1, 3, 0)
        let err = lattice_in_orthocomplement(&[unit(&[-3.0, 1.0, 0.0])], 3, 2).unwrap_err();
        assert!(err.to_string().contains("too small"));
        let ok = lattice_in_orthocomplement(&[unit(&[-3.0, 1.0, 0.0])], 3, 3).unwrap();
        assert_eq!(ok, vec![vec![1, 3, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn hnf_of_redundant_generators() {
        let b = hermite_normal_form(&[vec![2, 0], vec![3, 0], vec![0, 4], vec![0, 6]]);
        assert_eq!(b, vec![vec![1, 0], vec![0, 2]]);
        assert!(hermite_normal_form(&[vec![0, 0]]).is_empty());
    }

    #[test]
    fn membership() {
        let basis = vec![vec![1, 1, 0], vec![0, 0, 1]];
        assert!(lattice_contains(&basis, &[2, 2, -3]));
        assert!(!lattice_contains(&basis, &[1, 0, 0]));
        assert!(lattice_contains(&basis, &[0, 0, 0]));
    }

    #[test]
    fn bezout() {
        let (g, e) = bezout_vector(&[3, 5]);
        assert_eq!(g, 1);
        assert_eq!(3 * e[0] + 5 * e[1], 1);
        let (g, e) = bezout_vector(&[0, -2]);
        assert_eq!(g, 2);
        assert_eq!(-2 * e[1], 2);
    }

    #[test]
    fn ranks() {
        assert_eq!(rank(&[vec![1.0, 0.0], vec![2.0, 0.0]]), 1);
        assert_eq!(rank(&[vec![1.0, 0.0], vec![0.0, 1e-3]]), 2);
        assert_eq!(integer_rank(&[vec![1, 2, 3], vec![2, 4, 6]]), 1);
    }
}
