//! Variational densities `F(x, u, p)` and the Allen–Cahn double well.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::registry::Registry;

/// Step of the central second differences used by the growth probes.
pub const HESSIAN_PROBE_STEP: f64 = 1e-4;

/// Fractional part `u - floor(u)`, always in `[0, 1)`.
#[inline]
pub fn frac(u: f64) -> f64 {
    let f = u - u.floor();
    // u slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// The 1-periodic double well `W(frac(u))` with `W(s) = s²(1-s)²`.
#[inline]
pub fn eval_double_well(u: f64) -> f64 {
    let s = frac(u);
    let t = s * (1.0 - s);
    t * t
}

/// Derivative of the periodic double well, `W'(s) = 2s(1-s)(1-2s)`.
#[inline]
pub fn double_well_derivative(u: f64) -> f64 {
    let s = frac(u);
    2.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// `|p|² + W(frac(u))`.
pub fn allen_cahn_density(u: f64, p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>() + eval_double_well(u)
}

/// A density `F(x, u, p)` that is Z-periodic in `x` and `u`.
///
/// Implementations must be pure: the relaxation and scan code calls them from
/// several places on shared references. The energy kernels rely on the
/// periodicity in `u` and may evaluate the density at `u - m` for an integer `m`.
pub trait Integrand: Send + Sync + Debug {
    fn name(&self) -> &str;

    fn density(&self, x: &[f64], u: f64, p: &[f64]) -> f64;

    /// `∂F/∂u`.
    fn d_u(&self, x: &[f64], u: f64, p: &[f64]) -> f64;

    /// `∂F/∂p`, written into `out` (same length as `p`).
    fn d_p(&self, x: &[f64], u: f64, p: &[f64], out: &mut [f64]);

    /// The constant `c ≥ 1` of the ellipticity and growth bounds.
    fn growth_constant(&self) -> f64;

    /// Spatial dimension this density is restricted to, `None` if any.
    fn dimension(&self) -> Option<usize> {
        None
    }
}

/// `F = |p|² + W(frac(u))`, the periodic extension of the phase-transition
/// energy. `F_pp = 2·Id`, so the growth constant is 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllenCahn;

impl Integrand for AllenCahn {
    fn name(&self) -> &str {
        "allen-cahn"
    }

    fn density(&self, _x: &[f64], u: f64, p: &[f64]) -> f64 {
        allen_cahn_density(u, p)
    }

    fn d_u(&self, _x: &[f64], u: f64, _p: &[f64]) -> f64 {
        double_well_derivative(u)
    }

    fn d_p(&self, _x: &[f64], _u: f64, p: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(p) {
            *o = 2.0 * v;
        }
    }

    fn growth_constant(&self) -> f64 {
        2.0
    }
}

/// Allen–Cahn in a periodic medium: `a(x)|p|² + W(frac(u))` with
/// `a(x) = 1 + ¼ Π cos(2π x_i)`. Used to exercise x-dependent densities.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModulatedAllenCahn;

impl ModulatedAllenCahn {
    fn stiffness(x: &[f64]) -> f64 {
        1.0 + 0.25
            * x.iter()
                .map(|xi| (2.0 * std::f64::consts::PI * xi).cos())
                .product::<f64>()
    }
}

impl Integrand for ModulatedAllenCahn {
    fn name(&self) -> &str {
        "modulated-allen-cahn"
    }

    fn density(&self, x: &[f64], u: f64, p: &[f64]) -> f64 {
        Self::stiffness(x) * p.iter().map(|v| v * v).sum::<f64>() + eval_double_well(u)
    }

    fn d_u(&self, _x: &[f64], u: f64, _p: &[f64]) -> f64 {
        double_well_derivative(u)
    }

    fn d_p(&self, x: &[f64], _u: f64, p: &[f64], out: &mut [f64]) {
        let a = Self::stiffness(x);
        for (o, v) in out.iter_mut().zip(p) {
            *o = 2.0 * a * v;
        }
    }

    fn growth_constant(&self) -> f64 {
        // 2a(x) ranges over [1.5, 2.5]; mixed x-derivatives need some slack too
        16.0
    }
}

/// The pure Dirichlet density `|p|²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dirichlet;

impl Integrand for Dirichlet {
    fn name(&self) -> &str {
        "dirichlet"
    }

    fn density(&self, _x: &[f64], _u: f64, p: &[f64]) -> f64 {
        p.iter().map(|v| v * v).sum()
    }

    fn d_u(&self, _x: &[f64], _u: f64, _p: &[f64]) -> f64 {
        0.0
    }

    fn d_p(&self, _x: &[f64], _u: f64, p: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(p) {
            *o = 2.0 * v;
        }
    }

    fn growth_constant(&self) -> f64 {
        2.0
    }
}

/// Built-in integrands addressable by name: `allen-cahn`,
/// `modulated-allen-cahn`, `dirichlet`.
pub fn integrand_registry() -> Registry<dyn Integrand> {
    let mut reg: Registry<dyn Integrand> = Registry::new("integrand");
    reg.register("allen-cahn", Arc::new(AllenCahn));
    reg.register("modulated-allen-cahn", Arc::new(ModulatedAllenCahn));
    reg.register("dirichlet", Arc::new(Dirichlet));
    reg
}

#[derive(Debug, Clone)]
pub struct GrowthOptions {
    pub dimension: usize,
    pub sample_count: usize,
    pub seed: u64,
    /// Momenta are drawn from `[-p_box, p_box]^n`.
    pub p_box: f64,
    /// Slack on the bounds, absorbing finite-difference noise.
    pub tol: f64,
}

impl GrowthOptions {
    pub fn new(dimension: usize, sample_count: usize, seed: u64) -> Self {
        Self {
            dimension,
            sample_count,
            seed,
            p_box: 4.0,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthBound {
    Ellipticity,
    MixedFirstOrder,
    MixedSecondOrder,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthViolation {
    pub bound: GrowthBound,
    pub value: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub samples: usize,
    pub growth_constant: f64,
    pub rayleigh_min: f64,
    pub rayleigh_max: f64,
    /// `max (|F_pu| + |F_px|) / (1 + |p|)` over the samples.
    pub mixed_first_constant: f64,
    /// `max (|F_uu| + |F_ux| + |F_xx|) / (1 + |p|²)` over the samples.
    pub mixed_second_constant: f64,
    pub violation_count: usize,
    /// The first few violations, in sampling order.
    pub violations: Vec<GrowthViolation>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_RECORDED_VIOLATIONS: usize = 16;

/// Samples the ellipticity and growth bounds of `integrand`.
///
/// The p-Hessian is probed along random unit directions with central second
/// differences of the density; mixed derivatives use central differences of
/// the analytic first derivatives.
pub fn check_growth(integrand: &dyn Integrand, opts: &GrowthOptions) -> Result<GrowthReport> {
    if opts.sample_count == 0 {
        return Err(Error::Precondition("sample_count must be at least 1".into()));
    }
    let n = opts.dimension;
    if n == 0 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    if let Some(d) = integrand.dimension() {
        if d != n {
            return Err(Error::Dimension {
                expected: d,
                found: n,
            });
        }
    }
    let c = integrand.growth_constant();
    let s = HESSIAN_PROBE_STEP;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut report = GrowthReport {
        samples: opts.sample_count,
        growth_constant: c,
        rayleigh_min: f64::INFINITY,
        rayleigh_max: f64::NEG_INFINITY,
        mixed_first_constant: 0.0,
        mixed_second_constant: 0.0,
        violation_count: 0,
        violations: Vec::new(),
    };

    let eval = |x: &[f64], u: f64, p: &[f64]| -> Result<f64> {
        let v = integrand.density(x, u, p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                value: v,
                x: x.to_vec(),
                u,
                p: p.to_vec(),
            })
        }
    };

    let mut fp_plus = vec![0.0; n];
    let mut fp_minus = vec![0.0; n];
    for _ in 0..opts.sample_count {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let u: f64 = rng.random_range(-1.0..2.0);
        let p: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-opts.p_box..opts.p_box))
            .collect();
        let mut xi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        xi.iter_mut().for_each(|v| *v /= norm);

        let f0 = eval(&x, u, &p)?;
        let pp: Vec<f64> = p.iter().zip(&xi).map(|(a, b)| a + s * b).collect();
        let pm: Vec<f64> = p.iter().zip(&xi).map(|(a, b)| a - s * b).collect();
        let q = (eval(&x, u, &pp)? - 2.0 * f0 + eval(&x, u, &pm)?) / (s * s);
        report.rayleigh_min = report.rayleigh_min.min(q);
        report.rayleigh_max = report.rayleigh_max.max(q);
        let record = |bound: GrowthBound, value: f64, report: &mut GrowthReport| {
            report.violation_count += 1;
            if report.violations.len() < MAX_RECORDED_VIOLATIONS {
                report.violations.push(GrowthViolation {
                    bound,
                    value,
                    x: x.clone(),
                    u,
                    p: p.clone(),
                });
            }
        };
        if q < 1.0 / c - opts.tol || q > c + opts.tol {
            record(GrowthBound::Ellipticity, q, &mut report);
        }

        // F_pu
        integrand.d_p(&x, u + s, &p, &mut fp_plus);
        integrand.d_p(&x, u - s, &p, &mut fp_minus);
        let f_pu = norm_of_difference(&fp_plus, &fp_minus, 2.0 * s);
        // F_px, F_ux, F_xx
        let mut f_px_sq = 0.0;
        let mut f_ux_sq = 0.0;
        let mut f_xx_sq = 0.0;
        let mut xp = x.clone();
        let mut xm = x.clone();
        for j in 0..n {
            xp[j] = x[j] + s;
            xm[j] = x[j] - s;
            integrand.d_p(&xp, u, &p, &mut fp_plus);
            integrand.d_p(&xm, u, &p, &mut fp_minus);
            f_px_sq += norm_of_difference(&fp_plus, &fp_minus, 2.0 * s).powi(2);
            let dux = (integrand.d_u(&xp, u, &p) - integrand.d_u(&xm, u, &p)) / (2.0 * s);
            f_ux_sq += dux * dux;
            for k in 0..n {
                let fxx = mixed_second_difference(|y| eval(y, u, &p), &x, j, k, s)?;
                f_xx_sq += fxx * fxx;
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        let f_uu = (integrand.d_u(&x, u + s, &p) - integrand.d_u(&x, u - s, &p)) / (2.0 * s);
        let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();

        let first = (f_pu + f_px_sq.sqrt()) / (1.0 + p_norm);
        let second = (f_uu.abs() + f_ux_sq.sqrt() + f_xx_sq.sqrt()) / (1.0 + p_norm * p_norm);
        report.mixed_first_constant = report.mixed_first_constant.max(first);
        report.mixed_second_constant = report.mixed_second_constant.max(second);
        if first > c + opts.tol {
            record(GrowthBound::MixedFirstOrder, first, &mut report);
        }
        if second > c + opts.tol {
            record(GrowthBound::MixedSecondOrder, second, &mut report);
        }
    }
    Ok(report)
}

fn norm_of_difference(a: &[f64], b: &[f64], denom: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / denom).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn mixed_second_difference<F>(f: F, x: &[f64], j: usize, k: usize, s: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut y = x.to_vec();
    if j == k {
        let f0 = f(&y)?;
        y[j] = x[j] + s;
        let fp = f(&y)?;
        y[j] = x[j] - s;
        let fm = f(&y)?;
        return Ok((fp - 2.0 * f0 + fm) / (s * s));
    }
    let mut corner = |dj: f64, dk: f64| {
        y[j] = x[j] + dj;
        y[k] = x[k] + dk;
        f(&y)
    };
    let pp = corner(s, s)?;
    let pm = corner(s, -s)?;
    let mp = corner(-s, s)?;
    let mm = corner(-s, -s)?;
    Ok((pp - pm - mp + mm) / (4.0 * s * s))
}

/// Discrete Euler–Lagrange operator `-div F_p + F_u` of the grid energy.
///
/// This is the variational derivative of [`crate::minimize::energy`] per unit
/// volume, so its inner product with a perturbation reproduces the directional
/// derivative of the discrete energy exactly. For Allen–Cahn it is the
/// standard `-2Δ_h u + W'(u)`. Pinned boundary nodes of free axes carry zero.
pub fn euler_lagrange_residual(u: &ScalarField, integrand: &dyn Integrand) -> Result<ScalarField> {
    let g = crate::minimize::energy_gradient(u, integrand)?;
    Ok(g)
}
