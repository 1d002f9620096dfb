use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{axis_distance, energy, Region};
use crate::error::{Error, Result};
use crate::field::{AxisKind, ScalarField};
use crate::integrand::Integrand;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckOptions {
    pub trials: usize,
    pub max_radius: f64,
    /// Amplitudes are drawn from `[max_amplitude / 10, max_amplitude]` with a
    /// random sign.
    pub max_amplitude: f64,
    pub seed: u64,
}

impl SpotCheckOptions {
    pub fn new(trials: usize, max_radius: f64, seed: u64) -> Self {
        Self {
            trials,
            max_radius,
            max_amplitude: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PerturbationShape {
    /// `(1 - s²)^power` in the normalized radius `s`.
    Polynomial { power: u32 },
    /// Flat top on `s ≤ 1/2` with a smoothstep shoulder.
    Plateau,
}

impl PerturbationShape {
    fn profile(self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        match self {
            PerturbationShape::Polynomial { power } => (1.0 - s * s).powi(power as i32),
            PerturbationShape::Plateau => {
                if s <= 0.5 {
                    1.0
                } else {
                    let t = (s - 0.5) / 0.5;
                    1.0 - t * t * (3.0 - 2.0 * t)
                }
            }
        }
    }
}

/// Everything needed to rebuild one trial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDescriptor {
    pub trial: usize,
    pub trial_seed: u64,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Axes along which the support is bounded; the perturbation is constant
    /// along the other (short periodic) axes.
    pub axes: Vec<usize>,
    pub amplitude: f64,
    pub shape: PerturbationShape,
    /// `E(u + φ) - E(u)` over the ball containing the support.
    pub energy_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub trials: usize,
    pub seed: u64,
    pub energy: f64,
    pub tolerance: f64,
    /// Largest `E(u) - E(u + φ)` over all trials; at most `tolerance` passes.
    pub worst_decrease: f64,
    pub worst: Option<PerturbationDescriptor>,
    pub failures: usize,
    pub passed: bool,
    pub scope: String,
}

const SCOPE: &str = "sampled compactly supported perturbations; evidence of local \
                     non-improvability, not a certificate of minimality on every ball";

/// Perturbation values on the grid for `desc`; zero on pinned nodes.
pub fn perturbation(u: &ScalarField, desc: &PerturbationDescriptor) -> Vec<f64> {
    let grid = u.grid();
    let pinned = grid.pinned_mask();
    (0..u.len())
        .map(|flat| {
            if pinned[flat] {
                return 0.0;
            }
            let x = grid.position_of(flat);
            let s = axis_distance(grid, &x, &desc.center, &desc.axes) / desc.radius;
            desc.amplitude * desc.shape.profile(s)
        })
        .collect()
}

/// Largest admissible radius and the range of centers, per axis.
fn placement(u: &ScalarField, max_radius: f64) -> (f64, Vec<(f64, f64)>) {
    let mut limit = max_radius;
    let mut ranges = Vec::new();
    for ax in u.grid().axes() {
        let h = ax.spacing();
        match ax.kind {
            AxisKind::Periodic { period, .. } => {
                ranges.push((ax.origin, ax.origin + period as f64));
            }
            AxisKind::Free => {
                let extent = (ax.len - 1) as f64 * h;
                limit = limit.min(extent / 2.0 - 2.0 * h);
                ranges.push((ax.origin, ax.origin + extent));
            }
        }
    }
    (limit.max(0.0), ranges)
}

/// Samples compactly supported perturbations and reports whether any lowers
/// the energy by more than `1e-9 (1 + |E|)`.
pub fn minimality_spot_check(
    u: &ScalarField,
    integrand: &dyn Integrand,
    opts: &SpotCheckOptions,
) -> Result<MinimalityReport> {
    if opts.trials == 0 {
        return Err(Error::Precondition("spot check needs at least one trial".into()));
    }
    if !(opts.max_radius > 0.0) || !(opts.max_amplitude > 0.0) {
        return Err(Error::Precondition(
            "spot check radius and amplitude must be positive".into(),
        ));
    }
    let total = energy(u, integrand, &Region::Cell)?;
    let tolerance = 1e-9 * (1.0 + total.abs());
    let grid = u.grid();
    let h_max = grid.axes().iter().map(|ax| ax.spacing()).fold(0.0, f64::max);
    let (limit, ranges) = placement(u, opts.max_radius);
    let min_radius = (2.0 * h_max).min(limit);

    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: Option<PerturbationDescriptor> = None;
    let mut worst_decrease = f64::NEG_INFINITY;
    let mut failures = 0;
    for trial in 0..opts.trials {
        let trial_seed = master.next_u64();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let radius = if limit > min_radius {
            rng.random_range(min_radius..=limit)
        } else {
            limit
        };
        let center: Vec<f64> = grid
            .axes()
            .iter()
            .zip(&ranges)
            .map(|(ax, &(lo, hi))| {
                let (lo, hi) = if ax.is_periodic() {
                    (lo, hi)
                } else {
                    (lo + radius + ax.spacing(), hi - radius - ax.spacing())
                };
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    0.5 * (lo + hi)
                }
            })
            .collect();
        let magnitude = rng.random_range(opts.max_amplitude / 10.0..=opts.max_amplitude);
        let amplitude = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        let shape = match rng.random_range(0..4u32) {
            3 => PerturbationShape::Plateau,
            k => PerturbationShape::Polynomial { power: 3 + k },
        };
        // along a periodic axis too short for the ball, the perturbation is
        // taken constant; repeated over many periods and cut off far away it
        // is compactly supported with the energy change scaled up
        let axes: Vec<usize> = grid
            .axes()
            .iter()
            .enumerate()
            .filter(|(_, ax)| match ax.kind {
                AxisKind::Periodic { period, .. } => radius <= period as f64 / 2.0 - 3.0 * ax.spacing(),
                AxisKind::Free => true,
            })
            .map(|(a, _)| a)
            .collect();
        let mut desc = PerturbationDescriptor {
            trial,
            trial_seed,
            center,
            radius,
            axes,
            amplitude,
            shape,
            energy_change: 0.0,
        };
        if radius > 0.0 {
            let phi = perturbation(u, &desc);
            let region = Region::Cylinder {
                center: desc.center.clone(),
                radius: radius + 2.0 * h_max,
                axes: desc.axes.clone(),
            };
            let before = energy(u, integrand, &region)?;
            let after = energy(&u.perturbed(&phi)?, integrand, &region)?;
            desc.energy_change = after - before;
        }
        let decrease = -desc.energy_change;
        if decrease > tolerance {
            failures += 1;
        }
        if decrease > worst_decrease {
            worst_decrease = decrease;
            worst = Some(desc);
        }
    }
    Ok(MinimalityReport {
        trials: opts.trials,
        seed: opts.seed,
        energy: total,
        tolerance,
        worst_decrease,
        worst,
        failures,
        passed: failures == 0,
        scope: SCOPE.into(),
    })
}
