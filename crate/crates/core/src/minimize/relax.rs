use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EnergyKernel;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::integrand::Integrand;
use crate::registry::Registry;

/// Relative energy slack under which a step still counts as non-increasing;
/// absorbs summation roundoff once the gradient is tiny.
pub const ENERGY_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Name of a registered relaxer: `fixed`, `adaptive` or `cg`.
    pub strategy: String,
    pub max_iterations: usize,
    /// Stop once the sup norm of the gradient is at most this.
    pub gradient_tolerance: f64,
    /// Step size for `fixed`, initial step for `adaptive`; a stability
    /// estimate from the grid spacing is used when absent.
    pub step: Option<f64>,
    /// Values are projected into `[lo, hi]` after every update.
    pub clamp: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            strategy: "cg".into(),
            max_iterations: 200_000,
            gradient_tolerance: 1e-10,
            step: None,
            clamp: None,
            seed: 0,
        }
    }
}

impl RelaxOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "gradient tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        if let Some((lo, hi)) = self.clamp {
            if !(lo < hi) {
                return Err(Error::Config(format!("clamp range needs lo < hi, got [{lo}, {hi}]")));
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Result of a relaxer: final float parts plus the accepted-iterate log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub base: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub field: ScalarField,
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub log: Vec<IterationRecord>,
}

impl RelaxOutcome {
    /// Iteration log as CSV with header `iteration,energy,grad_norm,step`.
    pub fn log_csv(&self) -> String {
        let mut s = String::from("iteration,energy,grad_norm,step\n");
        for r in &self.log {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                r.iteration, r.energy, r.grad_norm, r.step
            ));
        }
        s
    }
}

/// The discrete minimization problem seen by a relaxer: energy and gradient
/// over the float parts of a field, with pinned nodes held fixed.
pub struct Problem<'a> {
    kernel: EnergyKernel<'a>,
    clamp: Option<(f64, f64)>,
}

impl<'a> Problem<'a> {
    pub fn new(field: &ScalarField, integrand: &'a dyn Integrand, clamp: Option<(f64, f64)>) -> Result<Self> {
        Ok(Self {
            kernel: EnergyKernel::new(field, integrand)?,
            clamp,
        })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.len() == 0
    }

    pub fn energy(&self, base: &[f64]) -> Result<f64> {
        self.kernel.energy(base)
    }

    /// Energy, writing the per-volume gradient into `grad`.
    pub fn evaluate(&self, base: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.kernel.energy_and_gradient(base, grad)
    }

    /// `⟨a, b⟩ h^n`, the inner product matching the energy's first variation.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.kernel.volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    pub fn sup_norm(&self, g: &[f64]) -> f64 {
        g.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest eigenvalue estimate of the discrete Hessian, from the growth
    /// constant and the grid spacing.
    pub fn stiffness(&self) -> f64 {
        let c = self.kernel.integrand.growth_constant();
        c * (1.0 + 4.0 * self.kernel.inv_h.iter().map(|i| i * i).sum::<f64>())
    }

    pub fn pinned(&self) -> &[bool] {
        self.kernel.pinned()
    }

    /// `base + alpha * dir`, projected into the clamp range; pinned nodes keep
    /// their values because their direction entries are zero.
    pub fn step_to(&self, base: &[f64], dir: &[f64], alpha: f64, out: &mut [f64]) {
        for ((o, b), d) in out.iter_mut().zip(base).zip(dir) {
            *o = b + alpha * d;
        }
        if let Some((lo, hi)) = self.clamp {
            for (o, &pinned) in out.iter_mut().zip(self.kernel.pinned()) {
                if !pinned {
                    *o = o.clamp(lo, hi);
                }
            }
        }
    }

    pub(crate) fn accepts(&self, before: f64, after: f64) -> bool {
        after <= before + ENERGY_SLACK * (1.0 + before.abs())
    }
}

pub trait Relaxer: Send + Sync {
    fn name(&self) -> &str;
    fn relax(&self, problem: &Problem<'_>, start: Vec<f64>, opts: &RelaxOptions) -> Result<Trajectory>;
}

fn check_finite(energy: f64, iteration: usize) -> Result<f64> {
    if energy.is_finite() {
        Ok(energy)
    } else {
        Err(Error::Diverged { iteration })
    }
}

/// Evaluation after the start; a blown-up density means the iteration diverged.
fn evaluate_iterate(problem: &Problem<'_>, base: &[f64], grad: &mut [f64], iteration: usize) -> Result<f64> {
    match problem.evaluate(base, grad) {
        Ok(e) => check_finite(e, iteration),
        Err(Error::NonFinite { .. }) => Err(Error::Diverged { iteration }),
        Err(e) => Err(e),
    }
}

/// Trial evaluation; a non-finite density just rejects the trial.
fn evaluate_trial(problem: &Problem<'_>, base: &[f64], grad: &mut [f64]) -> Result<f64> {
    match problem.evaluate(base, grad) {
        Err(Error::NonFinite { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Explicit gradient descent with a constant step.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedStepDescent;

impl Relaxer for FixedStepDescent {
    fn name(&self) -> &str {
        "fixed"
    }

    fn relax(&self, problem: &Problem<'_>, start: Vec<f64>, opts: &RelaxOptions) -> Result<Trajectory> {
        let tau = opts.step.unwrap_or(1.0 / problem.stiffness());
        let mut base = start;
        let mut grad = vec![0.0; base.len()];
        let mut trial = vec![0.0; base.len()];
        let mut energy = check_finite(problem.evaluate(&base, &mut grad)?, 0)?;
        let initial = energy;
        let mut log = vec![IterationRecord {
            iteration: 0,
            energy,
            grad_norm: problem.sup_norm(&grad),
            step: 0.0,
        }];
        let mut iterations = 0;
        let mut converged = problem.sup_norm(&grad) <= opts.gradient_tolerance;
        while !converged && iterations < opts.max_iterations {
            iterations += 1;
            let dir: Vec<f64> = grad.iter().map(|g| -g).collect();
            problem.step_to(&base, &dir, tau, &mut trial);
            std::mem::swap(&mut base, &mut trial);
            energy = evaluate_iterate(problem, &base, &mut grad, iterations)?;
            if energy > 1e12 * (1.0 + initial.abs()) {
                return Err(Error::Diverged { iteration: iterations });
            }
            let norm = problem.sup_norm(&grad);
            log.push(IterationRecord {
                iteration: iterations,
                energy,
                grad_norm: norm,
                step: tau,
            });
            converged = norm <= opts.gradient_tolerance;
        }
        Ok(Trajectory {
            base,
            converged,
            iterations,
            log,
        })
    }
}

/// Gradient descent whose step grows by 1.2 after an accepted step and halves
/// after a rejected one.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdaptiveDescent;

impl Relaxer for AdaptiveDescent {
    fn name(&self) -> &str {
        "adaptive"
    }

    fn relax(&self, problem: &Problem<'_>, start: Vec<f64>, opts: &RelaxOptions) -> Result<Trajectory> {
        let mut tau = opts.step.unwrap_or(1.0 / problem.stiffness());
        let mut base = start;
        let mut grad = vec![0.0; base.len()];
        let mut trial = vec![0.0; base.len()];
        let mut trial_grad = vec![0.0; base.len()];
        let mut energy = check_finite(problem.evaluate(&base, &mut grad)?, 0)?;
        let mut norm = problem.sup_norm(&grad);
        let mut log = vec![IterationRecord {
            iteration: 0,
            energy,
            grad_norm: norm,
            step: 0.0,
        }];
        let mut iterations = 0;
        while norm > opts.gradient_tolerance && iterations < opts.max_iterations {
            iterations += 1;
            let dir: Vec<f64> = grad.iter().map(|g| -g).collect();
            problem.step_to(&base, &dir, tau, &mut trial);
            let e = evaluate_trial(problem, &trial, &mut trial_grad)?;
            // within roundoff of the old energy only a shrinking gradient counts
            let success = e.is_finite()
                && (e < energy
                    || (problem.accepts(energy, e) && problem.sup_norm(&trial_grad) < norm));
            if success {
                std::mem::swap(&mut base, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                energy = e;
                norm = problem.sup_norm(&grad);
                log.push(IterationRecord {
                    iteration: iterations,
                    energy,
                    grad_norm: norm,
                    step: tau,
                });
                tau *= 1.2;
            } else {
                tau *= 0.5;
                if tau < f64::MIN_POSITIVE {
                    break;
                }
            }
        }
        Ok(Trajectory {
            converged: norm <= opts.gradient_tolerance,
            base,
            iterations,
            log,
        })
    }
}

/// Relative directional derivative at which a line search stops; conjugacy
/// degrades quickly on stiff grids if this is loose.
const LINE_SEARCH_ETA: f64 = 1e-3;

/// Polak–Ribière nonlinear conjugate gradients with a safeguarded secant line
/// search. Every accepted step is non-increasing in energy.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConjugateGradient;

struct LinePoint {
    alpha: f64,
    energy: f64,
    slope: f64,
    base: Vec<f64>,
    grad: Vec<f64>,
}

impl ConjugateGradient {
    fn probe(problem: &Problem<'_>, base: &[f64], dir: &[f64], alpha: f64) -> Result<LinePoint> {
        let mut trial = vec![0.0; base.len()];
        let mut grad = vec![0.0; base.len()];
        problem.step_to(base, dir, alpha, &mut trial);
        let energy = evaluate_trial(problem, &trial, &mut grad)?;
        let slope = if energy.is_finite() {
            problem.inner(&grad, dir)
        } else {
            f64::INFINITY
        };
        Ok(LinePoint {
            alpha,
            energy,
            slope,
            base: trial,
            grad,
        })
    }

    /// Finds an acceptable point along `dir`; `None` if no tried step lowers
    /// the energy.
    fn line_search(
        problem: &Problem<'_>,
        base: &[f64],
        energy: f64,
        slope0: f64,
        dir: &[f64],
        guess: f64,
    ) -> Result<Option<LinePoint>> {
        let ok = |p: &LinePoint| p.energy.is_finite() && problem.accepts(energy, p.energy);
        let mut best: Option<LinePoint> = None;
        // energies tie at roundoff near convergence, so rank accepted points
        // by how flat the line is there
        let keep = |best: &mut Option<LinePoint>, p: LinePoint| {
            if best.as_ref().is_none_or(|b| p.slope.abs() < b.slope.abs()) {
                *best = Some(p);
            }
        };

        let (mut lo_a, mut lo_s) = (0.0, slope0);
        let mut hi = Self::probe(problem, base, dir, guess)?;
        let mut expansions = 0;
        while ok(&hi) && hi.slope < 0.0 && expansions < 30 {
            lo_a = hi.alpha;
            lo_s = hi.slope;
            let next = Self::probe(problem, base, dir, 2.0 * hi.alpha)?;
            keep(&mut best, std::mem::replace(&mut hi, next));
            expansions += 1;
        }
        let (mut hi_a, mut hi_s) = (hi.alpha, hi.slope);
        if ok(&hi) {
            let done = hi.slope.abs() <= LINE_SEARCH_ETA * slope0.abs();
            keep(&mut best, hi);
            if done {
                return Ok(best);
            }
        }
        for _ in 0..40 {
            let width = hi_a - lo_a;
            if width <= 1e-16 * hi_a {
                break;
            }
            let secant = if hi_s.is_finite() && hi_s > lo_s {
                lo_a - lo_s * width / (hi_s - lo_s)
            } else {
                f64::NAN
            };
            let a = if secant.is_finite() {
                secant.clamp(lo_a + 0.1 * width, hi_a - 0.1 * width)
            } else {
                lo_a + 0.5 * width
            };
            let p = Self::probe(problem, base, dir, a)?;
            let accepted = ok(&p);
            if accepted && p.slope.abs() <= LINE_SEARCH_ETA * slope0.abs() {
                keep(&mut best, p);
                break;
            }
            if accepted && p.slope < 0.0 {
                lo_a = p.alpha;
                lo_s = p.slope;
                keep(&mut best, p);
            } else {
                hi_a = p.alpha;
                hi_s = if p.slope.is_finite() { p.slope } else { f64::INFINITY };
                if accepted {
                    keep(&mut best, p);
                }
            }
        }
        Ok(best)
    }
}

impl Relaxer for ConjugateGradient {
    fn name(&self) -> &str {
        "cg"
    }

    fn relax(&self, problem: &Problem<'_>, start: Vec<f64>, opts: &RelaxOptions) -> Result<Trajectory> {
        let mut base = start;
        let mut grad = vec![0.0; base.len()];
        let mut energy = check_finite(problem.evaluate(&base, &mut grad)?, 0)?;
        let mut norm = problem.sup_norm(&grad);
        let mut log = vec![IterationRecord {
            iteration: 0,
            energy,
            grad_norm: norm,
            step: 0.0,
        }];
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut guess = opts.step.unwrap_or(1.0 / problem.stiffness());
        let mut iterations = 0;
        let mut since_restart = 0;
        while norm > opts.gradient_tolerance && iterations < opts.max_iterations {
            iterations += 1;
            let mut slope0 = problem.inner(&grad, &dir);
            if slope0 >= 0.0 {
                dir = grad.iter().map(|g| -g).collect();
                slope0 = problem.inner(&grad, &dir);
                since_restart = 0;
            }
            let mut found = Self::line_search(problem, &base, energy, slope0, &dir, guess)?;
            if found.is_none() && since_restart > 0 {
                // retry along steepest descent before giving up
                dir = grad.iter().map(|g| -g).collect();
                slope0 = problem.inner(&grad, &dir);
                since_restart = 0;
                found = Self::line_search(problem, &base, energy, slope0, &dir, guess)?;
            }
            let Some(p) = found else { break };
            let beta = {
                let num: f64 = p.grad.iter().zip(&grad).map(|(n, o)| n * (n - o)).sum();
                let den: f64 = grad.iter().map(|g| g * g).sum();
                if den > 0.0 {
                    (num / den).max(0.0)
                } else {
                    0.0
                }
            };
            guess = p.alpha;
            base = p.base;
            grad = p.grad;
            energy = check_finite(p.energy, iterations)?;
            norm = problem.sup_norm(&grad);
            log.push(IterationRecord {
                iteration: iterations,
                energy,
                grad_norm: norm,
                step: p.alpha,
            });
            since_restart += 1;
            let restart = since_restart >= base.len().max(50) || opts.clamp.is_some();
            let beta = if restart { 0.0 } else { beta };
            if restart {
                since_restart = 0;
            }
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g + beta * *d;
            }
        }
        Ok(Trajectory {
            converged: norm <= opts.gradient_tolerance,
            base,
            iterations,
            log,
        })
    }
}

pub fn relaxer_registry() -> Registry<dyn Relaxer> {
    let mut reg: Registry<dyn Relaxer> = Registry::new("relaxer");
    reg.register("fixed", Arc::new(FixedStepDescent))
        .register("adaptive", Arc::new(AdaptiveDescent))
        .register("cg", Arc::new(ConjugateGradient));
    reg
}

/// Relaxes `u0` towards a critical point of the discrete energy using the
/// strategy named in `opts`. Only the float parts move, so the slope and the
/// pinned boundary values are preserved. Non-convergence is reported through
/// the flag with the last iterate.
pub fn relax(u0: &ScalarField, integrand: &dyn Integrand, opts: &RelaxOptions) -> Result<RelaxOutcome> {
    let relaxer = relaxer_registry().get(&opts.strategy)?;
    relax_with(u0, integrand, relaxer.as_ref(), opts)
}

/// As [`relax`] with an explicit strategy object.
pub fn relax_with(
    u0: &ScalarField,
    integrand: &dyn Integrand,
    relaxer: &dyn Relaxer,
    opts: &RelaxOptions,
) -> Result<RelaxOutcome> {
    opts.validate()?;
    let problem = Problem::new(u0, integrand, opts.clamp)?;
    let mut start = u0.base().to_vec();
    if let Some((lo, hi)) = opts.clamp {
        for (v, &pinned) in start.iter_mut().zip(problem.pinned()) {
            if !pinned {
                *v = v.clamp(lo, hi);
            }
        }
    }
    let traj = relaxer.relax(&problem, start, opts)?;
    let mut grad = vec![0.0; traj.base.len()];
    let energy = check_finite(problem.evaluate(&traj.base, &mut grad)?, traj.iterations)?;
    let gradient_norm = problem.sup_norm(&grad);
    Ok(RelaxOutcome {
        field: u0.with_base(traj.base),
        converged: gradient_norm <= opts.gradient_tolerance,
        iterations: traj.iterations,
        energy,
        gradient_norm,
        log: traj.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid, GridAxis};
    use crate::heteroclinic::logistic_profile;
    use crate::integrand::AllenCahn;

    fn ramp(m: usize) -> ScalarField {
        let grid = Grid::new(vec![GridAxis::free(-10.0, 20, m).unwrap()]).unwrap();
        let lo = logistic_profile(-10.0);
        let hi = logistic_profile(10.0);
        ScalarField::from_fn(grid, |x| lo + (hi - lo) * (x[0] + 10.0) / 20.0).unwrap()
    }

    #[test]
    fn zero_is_returned_untouched() {
        let grid = Grid::new(vec![GridAxis::periodic(1, 0, 8).unwrap()]).unwrap();
        let u = ScalarField::constant(grid, 0.0).unwrap();
        for name in ["fixed", "adaptive", "cg"] {
            let opts = RelaxOptions {
                strategy: name.into(),
                ..Default::default()
            };
            let out = relax(&u, &AllenCahn, &opts).unwrap();
            assert!(out.converged);
            assert_eq!(out.iterations, 0);
            assert_eq!(out.field.values(), u.values());
        }
    }

    #[test]
    fn strategies_agree_on_a_coarse_heteroclinic() {
        let u0 = ramp(5);
        let mut results = Vec::new();
        for name in ["adaptive", "cg"] {
            let opts = RelaxOptions {
                strategy: name.into(),
                gradient_tolerance: 1e-9,
                ..Default::default()
            };
            let out = relax(&u0, &AllenCahn, &opts).unwrap();
            assert!(out.converged, "{name}: {}", out.gradient_norm);
            assert!(out.log.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-13));
            results.push(out.field.values());
        }
        let diff = results[0]
            .iter()
            .zip(&results[1])
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn pinned_ends_and_slope_are_kept() {
        let u0 = ramp(5);
        let out = relax(&u0, &AllenCahn, &RelaxOptions::default()).unwrap();
        let last = u0.len() - 1;
        assert_eq!(out.field.value(0), u0.value(0));
        assert_eq!(out.field.value(last), u0.value(last));
    }

    #[test]
    fn clamp_keeps_values_in_range() {
        let grid = Grid::new(vec![GridAxis::periodic(2, 0, 8).unwrap()]).unwrap();
        let u0 = ScalarField::from_fn(grid, |x| 0.5 + 0.8 * (std::f64::consts::PI * x[0]).sin()).unwrap();
        let opts = RelaxOptions {
            clamp: Some((0.0, 1.0)),
            max_iterations: 200,
            ..Default::default()
        };
        let out = relax(&u0, &AllenCahn, &opts).unwrap();
        let (lo, hi) = out.field.min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
    }

    #[test]
    fn invalid_options_rejected() {
        let grid = Grid::new(vec![GridAxis::periodic(1, 0, 8).unwrap()]).unwrap();
        let u = ScalarField::constant(grid, 0.0).unwrap();
        let bad = RelaxOptions {
            gradient_tolerance: 0.0,
            ..Default::default()
        };
        assert!(matches!(relax(&u, &AllenCahn, &bad), Err(Error::Config(_))));
        let bad = RelaxOptions {
            clamp: Some((1.0, 0.0)),
            ..Default::default()
        };
        assert!(relax(&u, &AllenCahn, &bad).is_err());
        let bad = RelaxOptions {
            strategy: "newton".into(),
            ..Default::default()
        };
        assert!(matches!(relax(&u, &AllenCahn, &bad), Err(Error::Unknown { .. })));
    }

    #[test]
    fn huge_fixed_step_diverges() {
        let grid = Grid::new(vec![GridAxis::periodic(1, 0, 16).unwrap()]).unwrap();
        let u0 = ScalarField::from_fn(grid, |x| 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let opts = RelaxOptions {
            strategy: "fixed".into(),
            step: Some(10.0),
            max_iterations: 10_000,
            ..Default::default()
        };
        assert!(matches!(relax(&u0, &AllenCahn, &opts), Err(Error::Diverged { .. })));
    }
}
