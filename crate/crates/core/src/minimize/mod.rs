//! Discrete energy, its variational gradient, relaxation, and sampled
//! minimality checks.
//!
//! The energy of a grid field is a nodal quadrature: at every node the density
//! is averaged over the `2^n` combinations of forward and backward differences
//!
//! ```text
//! E(u) = h^n Σ_j 2^{-n} Σ_σ F(x_j, u_j, D^σ u_j)
//! ```
//!
//! For `F = |p|² + W(u)` the first variation is exactly `-2Δ_h u + W'(u)` with
//! the standard `2n + 1` point Laplacian, and there are no zero-energy
//! checkerboard modes.

mod relax;
mod spot;

pub use relax::{
    relax, relax_with, relaxer_registry, AdaptiveDescent, ConjugateGradient, FixedStepDescent,
    IterationRecord, Problem, RelaxOptions, RelaxOutcome, Relaxer, Trajectory, ENERGY_SLACK,
};
pub use spot::{
    minimality_spot_check, perturbation, MinimalityReport, PerturbationDescriptor,
    PerturbationShape, SpotCheckOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Stencil};
use crate::integrand::Integrand;

/// Where the energy is accumulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// Every stored node.
    Cell,
    /// Nodes within `radius` of `center`; distances use the nearest periodic
    /// image along periodic axes.
    Ball { center: Vec<f64>, radius: f64 },
    /// As `Ball`, but distance is measured along `axes` only; the region spans
    /// whole periods of the remaining (periodic) axes.
    Cylinder {
        center: Vec<f64>,
        radius: f64,
        axes: Vec<usize>,
    },
}

impl Region {
    pub(crate) fn mask(&self, grid: &Grid) -> Result<Option<Vec<bool>>> {
        match self {
            Region::Cell => Ok(None),
            Region::Ball { center, radius } => {
                let all: Vec<usize> = (0..grid.dimension()).collect();
                Region::Cylinder {
                    center: center.clone(),
                    radius: *radius,
                    axes: all,
                }
                .mask(grid)
            }
            Region::Cylinder { center, radius, axes } => {
                if center.len() != grid.dimension() {
                    return Err(Error::Dimension {
                        expected: grid.dimension(),
                        found: center.len(),
                    });
                }
                if let Some(&a) = axes.iter().find(|&&a| a >= grid.dimension()) {
                    return Err(Error::Dimension {
                        expected: grid.dimension(),
                        found: a + 1,
                    });
                }
                let mask: Vec<bool> = (0..grid.node_count())
                    .map(|flat| {
                        let x = grid.position_of(flat);
                        axis_distance(grid, &x, center, axes) <= *radius
                    })
                    .collect();
                if !mask.iter().any(|&m| m) {
                    return Err(Error::EmptyRegion);
                }
                Ok(Some(mask))
            }
        }
    }
}

/// Euclidean distance using the nearest image along periodic axes.
pub fn min_image_distance(grid: &Grid, x: &[f64], y: &[f64]) -> f64 {
    let all: Vec<usize> = (0..grid.dimension()).collect();
    axis_distance(grid, x, y, &all)
}

/// As [`min_image_distance`], restricted to the listed axes.
pub fn axis_distance(grid: &Grid, x: &[f64], y: &[f64], axes: &[usize]) -> f64 {
    axes.iter()
        .map(|&a| {
            let mut d = x[a] - y[a];
            if let crate::field::AxisKind::Periodic { period, .. } = grid.axis(a).kind {
                let q = period as f64;
                d -= q * (d / q).round();
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Evaluates the nodal quadrature and its gradient on a fixed grid.
pub(crate) struct EnergyKernel<'a> {
    integrand: &'a dyn Integrand,
    stencil: Stencil,
    lift: Vec<i64>,
    positions: Vec<f64>,
    inv_h: Vec<f64>,
    n: usize,
    volume: f64,
}

impl<'a> EnergyKernel<'a> {
    pub(crate) fn new(field: &ScalarField, integrand: &'a dyn Integrand) -> Result<Self> {
        let grid = field.grid();
        let n = grid.dimension();
        if let Some(d) = integrand.dimension() {
            if d != n {
                return Err(Error::Dimension {
                    expected: d,
                    found: n,
                });
            }
        }
        for (a, ax) in grid.axes().iter().enumerate() {
            if ax.len < 3 {
                return Err(Error::GridTooSmall { axis: a, len: ax.len });
            }
        }
        let positions = (0..grid.node_count())
            .flat_map(|flat| grid.position_of(flat))
            .collect();
        Ok(Self {
            integrand,
            stencil: grid.stencil(),
            lift: field.lift().to_vec(),
            positions,
            inv_h: grid.axes().iter().map(|ax| ax.per_unit as f64).collect(),
            n,
            volume: grid.cell_volume(),
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.lift.len()
    }

    pub(crate) fn volume(&self) -> f64 {
        self.volume
    }

    pub(crate) fn pinned(&self) -> &[bool] {
        &self.stencil.pinned
    }

    fn x(&self, j: usize) -> &[f64] {
        &self.positions[j * self.n..(j + 1) * self.n]
    }

    /// One-sided difference along `axis`, forward if `forward`.
    #[inline]
    fn difference(&self, base: &[f64], j: usize, axis: usize, forward: bool) -> (usize, f64) {
        if forward {
            let (nb, off) = self.stencil.plus[axis][j];
            let d = (base[nb] - base[j]) + (self.lift[nb] + off - self.lift[j]) as f64;
            (nb, d * self.inv_h[axis])
        } else {
            let (nb, off) = self.stencil.minus[axis][j];
            let d = (base[j] - base[nb]) + (self.lift[j] - self.lift[nb] - off) as f64;
            (nb, d * self.inv_h[axis])
        }
    }

    /// `2^{-n} Σ_σ F` at node `j` (without the volume factor).
    fn node_density(&self, base: &[f64], j: usize, p: &mut [f64]) -> Result<f64> {
        let x = self.x(j);
        let patterns = 1usize << self.n;
        let mut acc = 0.0;
        for sigma in 0..patterns {
            for (a, slot) in p.iter_mut().enumerate() {
                *slot = self.difference(base, j, a, sigma >> a & 1 == 1).1;
            }
            // F is Z-periodic in u, so the float part stands in for u
            let f = self.integrand.density(x, base[j], p);
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    value: f,
                    x: x.to_vec(),
                    u: base[j] + self.lift[j] as f64,
                    p: p.to_vec(),
                });
            }
            acc += f;
        }
        Ok(acc / patterns as f64)
    }

    /// Per-node energy contributions (volume included).
    pub(crate) fn node_energies(&self, base: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>> {
        let mut p = vec![0.0; self.n];
        let mut out = Vec::new();
        for j in 0..self.len() {
            if mask.is_some_and(|m| !m[j]) {
                continue;
            }
            out.push(self.volume * self.node_density(base, j, &mut p)?);
        }
        Ok(out)
    }

    pub(crate) fn energy(&self, base: &[f64]) -> Result<f64> {
        Ok(neumaier_sum(self.node_energies(base, None)?))
    }

    /// Energy and per-volume gradient; pinned nodes get zero gradient.
    pub(crate) fn energy_and_gradient(&self, base: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad.fill(0.0);
        let n = self.n;
        let patterns = 1usize << n;
        let w = 1.0 / patterns as f64;
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut nbs = vec![0usize; n];
        let mut terms = 0.0;
        let mut comp = 0.0;
        for j in 0..self.len() {
            let x = self.x(j);
            let mut node = 0.0;
            for sigma in 0..patterns {
                for a in 0..n {
                    let (nb, d) = self.difference(base, j, a, sigma >> a & 1 == 1);
                    nbs[a] = nb;
                    p[a] = d;
                }
                let f = self.integrand.density(x, base[j], &p);
                if !f.is_finite() {
                    return Err(Error::NonFinite {
                        value: f,
                        x: x.to_vec(),
                        u: base[j] + self.lift[j] as f64,
                        p: p.clone(),
                    });
                }
                node += f;
                grad[j] += w * self.integrand.d_u(x, base[j], &p);
                self.integrand.d_p(x, base[j], &p, &mut q);
                for a in 0..n {
                    let c = w * q[a] * self.inv_h[a];
                    if sigma >> a & 1 == 1 {
                        grad[nbs[a]] += c;
                        grad[j] -= c;
                    } else {
                        grad[j] += c;
                        grad[nbs[a]] -= c;
                    }
                }
            }
            // Neumaier step
            let v = self.volume * node * w;
            let t = terms + v;
            if terms.abs() >= v.abs() {
                comp += (terms - t) + v;
            } else {
                comp += (v - t) + terms;
            }
            terms = t;
        }
        for (g, &pinned) in grad.iter_mut().zip(&self.stencil.pinned) {
            if pinned {
                *g = 0.0;
            }
        }
        Ok(terms + comp)
    }
}

/// Quadrature of `F(x, u, ∇_h u)` over `region`.
///
/// Terms are summed in sorted order, so the result does not depend on how the
/// nodes are enumerated; translating a field by a lattice vector leaves the
/// full-cell energy bit-identical for x-independent densities.
pub fn energy(u: &ScalarField, integrand: &dyn Integrand, region: &Region) -> Result<f64> {
    let kernel = EnergyKernel::new(u, integrand)?;
    let mask = region.mask(u.grid())?;
    let mut terms = kernel.node_energies(u.base(), mask.as_deref())?;
    if terms.is_empty() {
        return Err(Error::EmptyRegion);
    }
    terms.sort_by(f64::total_cmp);
    Ok(neumaier_sum(terms))
}

/// Per-volume gradient `g` of the full-cell energy:
/// `E(u + sδ) = E(u) + s ⟨g, δ⟩ h^n + O(s²)` for perturbations vanishing on
/// pinned nodes. Returned on the untwisted grid.
pub fn energy_gradient(u: &ScalarField, integrand: &dyn Integrand) -> Result<ScalarField> {
    let kernel = EnergyKernel::new(u, integrand)?;
    let mut grad = vec![0.0; u.len()];
    kernel.energy_and_gradient(u.base(), &mut grad)?;
    ScalarField::from_values(u.grid().untwisted(), grad)
}

/// Sup norm of a gradient over the free (non-pinned) nodes.
pub fn free_sup_norm(grad: &ScalarField) -> f64 {
    let pinned = grad.grid().pinned_mask();
    grad.values()
        .iter()
        .zip(&pinned)
        .filter(|(_, &p)| !p)
        .fold(0.0, |acc, (g, _)| acc.max(g.abs()))
}
