//! Batch front end. Exit codes: 0 when every check passes, 2 when a check
//! ran and failed, 1 on configuration, input or solver errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mblab::config::ExperimentConfig;
use mblab::foliation::{
    asymptotic_limit, build_family, envelope_identity_check, rigidity_check, verify_foliation, BuildOptions,
    EnvelopeIdentityReport, FoliationFamily, FoliationReport, LimitClass, MatchResult, MemberCheck,
    RigidityOptions, VerifyOptions,
};
use mblab::heteroclinic::profile_registry;
use mblab::integrand::integrand_registry;
use mblab::io::{read_family, read_field, write_family, write_field};
use mblab::minimize::{minimality_spot_check, relax, MinimalityReport};
use mblab::orbit::{
    extract_invariants, is_admissible_with_radius, rotation_fit, self_intersection_scan, total_order_check,
    IntersectionWitness, InvariantSystem, RotationFit, TotalOrderReport,
};
use mblab::{Error, ScalarField};

#[derive(Parser)]
#[command(name = "mblab", version, about = "Minimal laminations of periodic variational problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (INI).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the configured start field and spot-check minimality.
    Relax {
        #[command(flatten)]
        common: Common,
    },
    /// Extract the invariants of a field.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: PathBuf,
    },
    /// Build the heteroclinic family and verify the foliation.
    Foliate {
        #[command(flatten)]
        common: Common,
        /// Verify an existing family instead of building one.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Match a field against the family.
    Rigidity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Limits of translation sequences of a field, or of every family member.
    Asymptote {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Total-order check over a set of fields.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long = "field")]
        fields: Vec<PathBuf>,
        /// Include the family members.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Include the constant fields 0 and 1.
        #[arg(long)]
        constants: bool,
    },
}

enum Verdict {
    Pass,
    Fail,
}

type Run = Result<Verdict, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(Verdict::Pass)) => ExitCode::from(0),
        Ok(Ok(Verdict::Fail)) => ExitCode::from(2),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Run {
    match cmd {
        Command::Relax { common } => run_relax(&Ctx::new(&common)?),
        Command::Classify { common, field } => run_classify(&Ctx::new(&common)?, &field),
        Command::Foliate { common, manifest } => run_foliate(&Ctx::new(&common)?, manifest.as_deref()),
        Command::Rigidity { common, field, manifest } => {
            run_rigidity(&Ctx::new(&common)?, &field, manifest.as_deref())
        }
        Command::Asymptote { common, field, manifest } => {
            run_asymptote(&Ctx::new(&common)?, field.as_deref(), manifest.as_deref())
        }
        Command::Report {
            common,
            fields,
            manifest,
            constants,
        } => run_report(&Ctx::new(&common)?, &fields, manifest.as_deref(), constants),
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, Error> {
        let mut cfg = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.seed = seed;
            cfg.relax.seed = seed;
        }
        let out = common
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out)?;
        Ok(Self { cfg, out })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Error> {
        fs::write(self.out.join(name), serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    fn rigidity_options(&self) -> RigidityOptions {
        RigidityOptions {
            match_tol: self.cfg.tolerances.matching,
            order_tol: self.cfg.tolerances.order,
            radius: self.cfg.scan_radius,
        }
    }

    fn family(&self, manifest: Option<&Path>) -> Result<(FoliationFamily, Vec<MemberCheck>), Error> {
        let profile = profile_registry().get(&self.cfg.family.profile)?;
        match manifest {
            Some(m) => Ok((read_family(m, profile)?, Vec::new())),
            None => {
                let f = &self.cfg.family;
                build_family(
                    &f.omega,
                    f.b_min,
                    f.b_max,
                    f.count,
                    self.cfg.require_grid()?,
                    profile,
                    &BuildOptions {
                        residual_bound: self.cfg.tolerances.residual,
                        spot: self.cfg.minimality.spot_options(self.cfg.seed),
                    },
                )
            }
        }
    }
}

#[derive(Serialize)]
struct RelaxSummary<'a> {
    passed: bool,
    integrand: &'a str,
    strategy: &'a str,
    seed: u64,
    converged: bool,
    iterations: usize,
    energy: f64,
    gradient_norm: f64,
    minimality: Option<&'a MinimalityReport>,
}

fn run_relax(ctx: &Ctx) -> Run {
    let cfg = &ctx.cfg;
    let integrand = integrand_registry().get(&cfg.integrand)?;
    let u0 = cfg.initial_field()?;
    let outcome = relax(&u0, integrand.as_ref(), &cfg.relax)?;
    write_field(&ctx.out.join("field.csv"), &outcome.field)?;
    fs::write(ctx.out.join("log.csv"), outcome.log_csv())?;
    let minimality = match cfg.minimality.spot_options(cfg.seed) {
        Some(opts) => Some(minimality_spot_check(&outcome.field, integrand.as_ref(), &opts)?),
        None => None,
    };
    if let Some(m) = &minimality {
        ctx.write_json("minimality.json", m)?;
    }
    let passed = outcome.converged && minimality.as_ref().is_none_or(|m| m.passed);
    ctx.write_json(
        "relax.json",
        &RelaxSummary {
            passed,
            integrand: integrand.name(),
            strategy: &cfg.relax.strategy,
            seed: cfg.seed,
            converged: outcome.converged,
            iterations: outcome.iterations,
            energy: outcome.energy,
            gradient_norm: outcome.gradient_norm,
            minimality: minimality.as_ref(),
        },
    )?;
    Ok(verdict(passed))
}

#[derive(Serialize)]
struct ClassifyReport {
    passed: bool,
    rotation: RotationFit,
    intersections: Vec<IntersectionWitness>,
    invariants: Option<InvariantSystem>,
    admissible: Option<bool>,
    anomaly: Option<String>,
}

fn run_classify(ctx: &Ctx, field: &Path) -> Run {
    let u = read_field(field)?;
    let (radius, tol) = (ctx.cfg.scan_radius, ctx.cfg.tolerances.order);
    let intersections = self_intersection_scan(&u, radius, tol)?;
    let (invariants, anomaly) = if intersections.is_empty() {
        match extract_invariants(&u, radius, tol) {
            Ok(sys) => (Some(sys), None),
            Err(e @ Error::Extraction { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    } else {
        (None, Some(format!("{} self-intersections found", intersections.len())))
    };
    let admissible = invariants.as_ref().map(|s| is_admissible_with_radius(s, radius));
    let passed = anomaly.is_none();
    if let Some(sys) = &invariants {
        ctx.write_json("invariants.json", sys)?;
    }
    ctx.write_json(
        "classify.json",
        &ClassifyReport {
            passed,
            rotation: rotation_fit(&u),
            intersections,
            invariants,
            admissible,
            anomaly,
        },
    )?;
    Ok(verdict(passed))
}

#[derive(Serialize)]
struct FoliateReport {
    passed: bool,
    members: usize,
    b_grid: Vec<f64>,
    member_checks: Vec<MemberCheck>,
    foliation: FoliationReport,
    envelopes: Result<EnvelopeIdentityReport, String>,
    scope: &'static str,
}

fn run_foliate(ctx: &Ctx, manifest: Option<&Path>) -> Run {
    let (fam, member_checks) = ctx.family(manifest)?;
    if manifest.is_none() {
        write_family(&ctx.out.join("family"), &fam)?;
    }
    let t = &ctx.cfg.tolerances;
    let foliation = verify_foliation(
        &fam,
        &VerifyOptions {
            tol: t.foliation,
            levels: ctx.cfg.family.levels,
        },
    )?;
    let envelopes = envelope_identity_check(&fam, ctx.cfg.family.envelope_steps, t.envelope, ctx.cfg.scan_radius)
        .map_err(|e| e.to_string());
    let passed = foliation.passed && envelopes.as_ref().is_ok_and(|e| e.passed);
    ctx.write_json(
        "foliation.json",
        &FoliateReport {
            passed,
            members: fam.members.len(),
            b_grid: fam.b_grid.clone(),
            member_checks,
            foliation,
            envelopes,
            scope: "members are critical and pass sampled minimality checks; minimality on every ball is not certified",
        },
    )?;
    Ok(verdict(passed))
}

fn run_rigidity(ctx: &Ctx, field: &Path, manifest: Option<&Path>) -> Run {
    let u = read_field(field)?;
    let (fam, _) = ctx.family(manifest)?;
    let m: MatchResult = rigidity_check(&u, &fam, &ctx.rigidity_options())?;
    ctx.write_json("rigidity.json", &m)?;
    Ok(verdict(m.matched()))
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
enum LimitOutcome {
    Converged {
        steps: usize,
        value_increment: f64,
        gradient_increment: f64,
        classification: LimitClass,
    },
    /// No convergent subsequence among the iterates examined.
    NotFound { detail: String },
    NotApplicable { detail: String },
}

#[derive(Serialize)]
struct AsymptoteEntry {
    input: String,
    direction: Vec<i64>,
    outcome: LimitOutcome,
}

#[derive(Serialize)]
struct AsymptoteReport {
    passed: bool,
    unclassified: usize,
    not_found: usize,
    entries: Vec<AsymptoteEntry>,
}

fn run_asymptote(ctx: &Ctx, field: Option<&Path>, manifest: Option<&Path>) -> Run {
    let (fam, _) = ctx.family(manifest)?;
    let inputs: Vec<(String, ScalarField)> = match field {
        Some(p) => vec![(p.display().to_string(), read_field(p)?)],
        None => fam
            .b_grid
            .iter()
            .zip(&fam.members)
            .map(|(b, v)| (format!("member b = {b}"), v.clone()))
            .collect(),
    };
    let cfg = &ctx.cfg;
    let rigidity = ctx.rigidity_options();
    let mut entries = Vec::new();
    for (name, u) in &inputs {
        let sys = extract_invariants(u, cfg.scan_radius, cfg.tolerances.order)?;
        let gamma2 = sys.gamma_bases.get(1).cloned().unwrap_or_default();
        for d in &cfg.asymptote.directions {
            let outcome = match asymptotic_limit(
                u,
                &gamma2,
                d,
                cfg.asymptote.steps,
                cfg.tolerances.asymptote,
                &fam,
                &rigidity,
            ) {
                Ok(r) => LimitOutcome::Converged {
                    steps: r.steps,
                    value_increment: r.value_increment,
                    gradient_increment: r.gradient_increment,
                    classification: r.classification,
                },
                Err(Error::NoConvergence(detail)) => LimitOutcome::NotFound { detail },
                Err(e @ (Error::Precondition(_) | Error::Dimension { .. })) => {
                    LimitOutcome::NotApplicable { detail: e.to_string() }
                }
                Err(e) => return Err(e),
            };
            entries.push(AsymptoteEntry {
                input: name.clone(),
                direction: d.clone(),
                outcome,
            });
        }
    }
    let unclassified = entries
        .iter()
        .filter(|e| {
            matches!(
                e.outcome,
                LimitOutcome::Converged {
                    classification: LimitClass::Unclassified { .. },
                    ..
                }
            )
        })
        .count();
    let not_found = entries
        .iter()
        .filter(|e| matches!(e.outcome, LimitOutcome::NotFound { .. }))
        .count();
    let passed = unclassified == 0 && not_found == 0;
    ctx.write_json(
        "asymptote.json",
        &AsymptoteReport {
            passed,
            unclassified,
            not_found,
            entries,
        },
    )?;
    Ok(verdict(passed))
}

#[derive(Serialize)]
struct OrderReport {
    inputs: Vec<String>,
    #[serde(flatten)]
    check: TotalOrderReport,
}

fn run_report(ctx: &Ctx, files: &[PathBuf], manifest: Option<&Path>, constants: bool) -> Run {
    let mut inputs = Vec::new();
    let mut fields = Vec::new();
    for p in files {
        inputs.push(p.display().to_string());
        fields.push(read_field(p)?);
    }
    if let Some(m) = manifest {
        let profile = profile_registry().get(&ctx.cfg.family.profile)?;
        let fam = read_family(m, profile)?;
        for (b, v) in fam.b_grid.iter().zip(fam.members) {
            inputs.push(format!("member b = {b}"));
            fields.push(v);
        }
    }
    if constants {
        let grid = fields
            .first()
            .map(|f| f.grid().clone())
            .ok_or_else(|| Error::Precondition("constants need at least one other field for the grid".into()))?;
        for c in [0.0, 1.0] {
            inputs.push(format!("constant {c}"));
            fields.push(ScalarField::constant(grid.clone(), c)?);
        }
    }
    if fields.len() < 2 {
        return Err(Error::Precondition("report needs at least two fields".into()));
    }
    let check = total_order_check(&fields, ctx.cfg.tolerances.order)?;
    let passed = check.passed;
    ctx.write_json("report.json", &OrderReport { inputs, check })?;
    Ok(verdict(passed))
}

fn verdict(passed: bool) -> Verdict {
    if passed {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}
