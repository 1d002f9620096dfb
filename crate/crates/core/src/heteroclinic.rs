//! The one-dimensional connecting orbit between the pure phases 0 and 1.
//!
//! For `F = u'² + W(u)` the profile `u₀(t) = 1/(1 + e^{-t})` solves
//! `u'' = u - 3u² + 2u³` with `u₀(0) = 1/2`: the first integral gives
//! `u' = u(1 - u)`, which the logistic function satisfies. A boundary-value
//! relaxation of the discrete energy provides an independent check.

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{nodes_per_unit, Grid, GridAxis, ScalarField};
use crate::integrand::{eval_double_well, AllenCahn};
use crate::minimize::{relax, RelaxOptions};
use crate::registry::Registry;

/// `1 / (1 + e^{-t})`, evaluated without overflow for large `|t|`.
pub fn logistic_profile(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `u₀'(t) = u₀(t)(1 - u₀(t))`.
pub fn logistic_derivative(t: f64) -> f64 {
    let u = logistic_profile(t);
    u * (1.0 - u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileOrigin {
    ClosedForm,
    Bvp,
    Tabulated,
}

/// Samples of a monotone profile on `[-L, L]` with spacing `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    pub half_length: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub origin: ProfileOrigin,
}

fn check_window(half_length: f64, h: f64) -> Result<(usize, usize)> {
    let m = nodes_per_unit(h)?;
    if !(half_length > 0.0) || half_length.fract() != 0.0 {
        return Err(Error::Precondition(format!(
            "half length must be a positive integer, got {half_length}"
        )));
    }
    Ok((half_length as usize, m))
}

impl Profile1D {
    /// The logistic profile sampled on `[-L, L]`.
    pub fn closed_form(half_length: f64, h: f64) -> Result<Self> {
        let (l, m) = check_window(half_length, h)?;
        let count = 2 * l * m + 1;
        let values = (0..count)
            .map(|i| logistic_profile(-half_length + i as f64 / m as f64))
            .collect();
        Ok(Self {
            half_length,
            spacing: 1.0 / m as f64,
            values,
            origin: ProfileOrigin::ClosedForm,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Abscissa of sample `i`.
    pub fn t(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing
    }

    /// Linear interpolation, constant beyond the ends.
    pub fn evaluate(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let s = (t + self.half_length) / self.spacing;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= last as f64 {
            return self.values[last];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[(i + 1).min(last)]
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// Monotone, inside `(0, 1)`, and `1/2` at the origin within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        if !self.is_strictly_increasing() {
            return Err(Error::Precondition("profile is not strictly increasing".into()));
        }
        if self.values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Precondition("profile leaves (0, 1)".into()));
        }
        let mid = self.evaluate(0.0);
        if (mid - 0.5).abs() > tol {
            return Err(Error::Precondition(format!("profile(0) = {mid}, expected 1/2")));
        }
        Ok(())
    }

    /// `sup_i |u_i - f(t_i)|`.
    pub fn sup_error(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.len()).fold(0.0, |acc, i| acc.max((self.values[i] - f(self.t(i))).abs()))
    }

    /// Point where the interpolated profile crosses 1/2.
    pub fn center(&self) -> Option<f64> {
        let i = self.values.windows(2).position(|w| w[0] <= 0.5 && 0.5 < w[1])?;
        let (a, b) = (self.values[i], self.values[i + 1]);
        Some(self.t(i) + self.spacing * (0.5 - a) / (b - a))
    }

    /// The profile as a field on a free axis with pinned ends.
    pub fn to_field(&self) -> Result<ScalarField> {
        let m = (1.0 / self.spacing).round() as usize;
        let l = self.half_length as usize;
        let grid = Grid::new(vec![GridAxis::free(-self.half_length, 2 * l, m)?])?;
        ScalarField::from_values(grid, self.values.clone())
    }

    pub fn from_field(u: &ScalarField, origin: ProfileOrigin) -> Result<Self> {
        if u.dimension() != 1 || u.grid().axis(0).is_periodic() {
            return Err(Error::Precondition("profile needs a 1-D free axis".into()));
        }
        let ax = u.grid().axis(0);
        let half_length = -ax.origin;
        let extent = (ax.len - 1) as f64 * ax.spacing();
        if (extent - 2.0 * half_length).abs() > 1e-9 {
            return Err(Error::Precondition("profile window must be symmetric about 0".into()));
        }
        Ok(Self {
            half_length,
            spacing: ax.spacing(),
            values: u.values(),
            origin,
        })
    }

    /// CSV with header `t,u`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,u\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e}", self.t(i), v);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("t,u") => {}
            other => return Err(Error::Parse(format!("expected header `t,u`, got {other:?}"))),
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut cols = line.split(',');
            let mut next = || -> Result<f64> {
                cols.next()
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column", row + 2)))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))
            };
            ts.push(next()?);
            values.push(next()?);
        }
        if ts.len() < 3 {
            return Err(Error::Parse("profile needs at least three rows".into()));
        }
        let h = ts[1] - ts[0];
        let m = nodes_per_unit(h)?;
        let h = 1.0 / m as f64;
        let half_length = -ts[0];
        for (i, t) in ts.iter().enumerate() {
            if (t - (ts[0] + i as f64 * h)).abs() > 1e-9 {
                return Err(Error::Parse(format!("row {}: abscissae are not uniform", i + 2)));
            }
        }
        check_window(half_length, h)?;
        if (ts[ts.len() - 1] - half_length).abs() > 1e-9 {
            return Err(Error::Parse("profile window must be symmetric about 0".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite profile value {v}")));
        }
        Ok(Self {
            half_length,
            spacing: h,
            values,
            origin: ProfileOrigin::Tabulated,
        })
    }
}

/// Relaxes the discrete energy on `[-L, L]` from a linear ramp between the
/// pinned tail values `u₀(±L)`.
pub fn solve_heteroclinic_bvp(half_length: f64, h: f64) -> Result<Profile1D> {
    if half_length < 10.0 {
        return Err(Error::Precondition(format!("half length {half_length} < 10")));
    }
    if h > 0.1 {
        return Err(Error::Precondition(format!("spacing {h} > 0.1")));
    }
    let (l, m) = check_window(half_length, h)?;
    let grid = Grid::new(vec![GridAxis::free(-half_length, 2 * l, m)?])?;
    let lo = logistic_profile(-half_length);
    let hi = logistic_profile(half_length);
    let ramp = ScalarField::from_fn(grid, |x| {
        lo + (hi - lo) * (x[0] + half_length) / (2.0 * half_length)
    })?;
    let opts = RelaxOptions {
        max_iterations: 100_000,
        ..RelaxOptions::default()
    };
    let out = relax(&ramp, &AllenCahn, &opts)?;
    if !out.converged {
        return Err(Error::NoConvergence(format!(
            "heteroclinic solve stopped at gradient {:e} after {} iterations",
            out.gradient_norm, out.iterations
        )));
    }
    Profile1D::from_field(&out.field, ProfileOrigin::Bvp)
}

/// `sup |(u')² - W(u)|` over interior nodes with central differences.
pub fn equipartition_residual(profile: &Profile1D) -> Result<f64> {
    if profile.len() < 3 || !profile.is_strictly_increasing() {
        return Err(Error::Precondition(
            "equipartition needs a strictly increasing profile".into(),
        ));
    }
    let v = &profile.values;
    Ok((1..v.len() - 1).fold(0.0, |acc, i| {
        let du = (v[i + 1] - v[i - 1]) / (2.0 * profile.spacing);
        acc.max((du * du - eval_double_well(v[i])).abs())
    }))
}

/// A monotone profile `t ↦ u(t)` used to build foliation leaves.
pub trait ProfileSource: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;
    fn value(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Logistic;

impl ProfileSource for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn value(&self, t: f64) -> f64 {
        logistic_profile(t)
    }
}

impl ProfileSource for Profile1D {
    fn name(&self) -> &str {
        match self.origin {
            ProfileOrigin::ClosedForm => "closed-form-table",
            ProfileOrigin::Bvp => "bvp",
            ProfileOrigin::Tabulated => "table",
        }
    }

    fn value(&self, t: f64) -> f64 {
        self.evaluate(t)
    }
}

/// The relaxed profile on `[-20, 20]` at `h = 0.01`, computed on first use.
#[derive(Debug, Default)]
pub struct BvpProfile {
    profile: OnceLock<std::result::Result<Profile1D, String>>,
}

impl BvpProfile {
    pub fn profile(&self) -> Result<&Profile1D> {
        self.profile
            .get_or_init(|| solve_heteroclinic_bvp(20.0, 0.01).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::NoConvergence(e.clone()))
    }
}

impl ProfileSource for BvpProfile {
    fn name(&self) -> &str {
        "bvp"
    }

    fn value(&self, t: f64) -> f64 {
        match self.profile() {
            Ok(p) => p.evaluate(t),
            Err(_) => f64::NAN,
        }
    }
}

pub fn profile_registry() -> Registry<dyn ProfileSource> {
    let mut reg: Registry<dyn ProfileSource> = Registry::new("profile");
    reg.register("logistic", Arc::new(Logistic))
        .register("bvp", Arc::new(BvpProfile::default()));
    reg
}
