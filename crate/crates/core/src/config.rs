//! Experiment configuration: INI text with bracketed sections and
//! `key = value` lines.
//!
//! ```ini
//! [run]
//! seed = 7
//!
//! [grid]
//! boundary = free, periodic
//! cell = 40, 1
//! h = 0.1
//!
//! [field]
//! init = logistic
//! omega = 1, 0
//! b = 0.37
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::field::{nodes_per_unit, Grid, GridAxis, ScalarField};
use crate::heteroclinic::logistic_profile;
use crate::io::read_field;
use crate::minimize::{RelaxOptions, SpotCheckOptions};
use crate::orbit::DEFAULT_SCAN_RADIUS;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialField {
    Constant(f64),
    /// Linear along axis 0 between `low` and `high`; by default the logistic
    /// values at the box ends.
    Ramp { low: Option<f64>, high: Option<f64> },
    /// `u₀(ω̂ · x - b)` with `ω̂ = ω / |ω|`.
    Logistic { omega: Vec<f64>, b: f64 },
    File(PathBuf),
}

/// Smooth bump `amplitude (1 - |x - center|² / radius²)³` added to the start.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub init: InitialField,
    pub bump: Option<Bump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub order: f64,
    pub foliation: f64,
    pub matching: f64,
    pub envelope: f64,
    pub asymptote: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            order: 1e-8,
            foliation: 1e-6,
            matching: 1e-3,
            envelope: 1e-6,
            asymptote: 1e-6,
            residual: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub omega: Vec<i64>,
    pub b_min: f64,
    pub b_max: f64,
    pub count: usize,
    pub profile: String,
    pub envelope_steps: usize,
    pub levels: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            omega: vec![1, 0],
            b_min: -5.0,
            b_max: 5.0,
            count: 101,
            profile: "logistic".into(),
            envelope_steps: 40,
            levels: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityConfig {
    /// Zero disables the spot check.
    pub trials: usize,
    pub max_radius: f64,
    pub max_amplitude: f64,
}

impl Default for MinimalityConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            max_radius: 4.0,
            max_amplitude: 0.5,
        }
    }
}

impl MinimalityConfig {
    pub fn spot_options(&self, seed: u64) -> Option<SpotCheckOptions> {
        (self.trials > 0).then_some(SpotCheckOptions {
            trials: self.trials,
            max_radius: self.max_radius,
            max_amplitude: self.max_amplitude,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteConfig {
    pub directions: Vec<Vec<i64>>,
    pub steps: usize,
}

impl Default for AsymptoteConfig {
    fn default() -> Self {
        Self {
            directions: vec![vec![-1, 0, 0], vec![1, 0, 0], vec![0, 1, 0]],
            steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub integrand: String,
    pub grid: Option<Grid>,
    pub field: Option<FieldConfig>,
    pub relax: RelaxOptions,
    pub tolerances: Tolerances,
    pub scan_radius: i64,
    pub family: FamilyConfig,
    pub minimality: MinimalityConfig,
    pub asymptote: AsymptoteConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            integrand: "allen-cahn".into(),
            grid: None,
            field: None,
            relax: RelaxOptions::default(),
            tolerances: Tolerances::default(),
            scan_radius: DEFAULT_SCAN_RADIUS,
            family: FamilyConfig::default(),
            minimality: MinimalityConfig::default(),
            asymptote: AsymptoteConfig::default(),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["seed", "out"]),
    ("grid", &["n", "boundary", "cell", "h", "origin", "rise"]),
    (
        "field",
        &["init", "value", "low", "high", "omega", "b", "path", "bump_amplitude", "bump_center", "bump_radius"],
    ),
    ("integrand", &["name"]),
    (
        "relax",
        &["strategy", "max_iterations", "gradient_tolerance", "step", "clamp_low", "clamp_high"],
    ),
    (
        "tolerances",
        &["order", "foliation", "match", "envelope", "asymptote", "residual"],
    ),
    ("scan", &["radius"]),
    (
        "family",
        &["omega", "b_min", "b_max", "count", "profile", "envelope_steps", "levels"],
    ),
    ("minimality", &["trials", "max_radius", "max_amplitude"]),
    ("asymptote", &["directions", "steps"]),
];

struct Sections(BTreeMap<String, BTreeMap<String, String>>);

impl Sections {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.0.get(section)?.get(key).map(String::as_str)
    }

    fn has(&self, section: &str) -> bool {
        self.0.contains_key(section)
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("[{section}] {key} = {v}: {e}")))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|v| parse_list(v).map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))))
            .transpose()
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s}: {e}")))
        .collect()
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut map = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys before the first [section]".into()));
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(Error::Config(format!("unknown section [{name}]")));
            };
            let entry: &mut BTreeMap<String, String> = map.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(Error::Config(format!("unknown key {k} in [{name}]")));
                }
                entry.insert(k.to_string(), v.trim().to_string());
            }
        }
        let s = Sections(map);
        let mut cfg = ExperimentConfig::default();

        if let Some(seed) = s.parse("run", "seed")? {
            cfg.seed = seed;
        }
        cfg.out = s.get("run", "out").map(|p| base_dir.join(p));
        if let Some(name) = s.get("integrand", "name") {
            cfg.integrand = name.to_string();
        }
        if s.has("grid") {
            cfg.grid = Some(parse_grid(&s)?);
        }
        if s.has("field") {
            cfg.field = Some(parse_field(&s, base_dir)?);
        }

        let r = &mut cfg.relax;
        if let Some(v) = s.get("relax", "strategy") {
            r.strategy = v.to_string();
        }
        if let Some(v) = s.parse("relax", "max_iterations")? {
            r.max_iterations = v;
        }
        if let Some(v) = s.parse("relax", "gradient_tolerance")? {
            r.gradient_tolerance = v;
        }
        r.step = s.parse("relax", "step")?;
        match (s.parse::<f64>("relax", "clamp_low")?, s.parse::<f64>("relax", "clamp_high")?) {
            (Some(lo), Some(hi)) => r.clamp = Some((lo, hi)),
            (None, None) => {}
            _ => return Err(Error::Config("[relax] clamp_low and clamp_high go together".into())),
        }
        r.seed = cfg.seed;

        let t = &mut cfg.tolerances;
        for (key, slot) in [
            ("order", &mut t.order),
            ("foliation", &mut t.foliation),
            ("match", &mut t.matching),
            ("envelope", &mut t.envelope),
            ("asymptote", &mut t.asymptote),
            ("residual", &mut t.residual),
        ] {
            if let Some(v) = s.parse("tolerances", key)? {
                *slot = v;
            }
        }
        if let Some(v) = s.parse("scan", "radius")? {
            cfg.scan_radius = v;
        }

        let f = &mut cfg.family;
        if let Some(v) = s.list("family", "omega")? {
            f.omega = v;
        }
        if let Some(v) = s.parse("family", "b_min")? {
            f.b_min = v;
        }
        if let Some(v) = s.parse("family", "b_max")? {
            f.b_max = v;
        }
        if let Some(v) = s.parse("family", "count")? {
            f.count = v;
        }
        if let Some(v) = s.get("family", "profile") {
            f.profile = v.to_string();
        }
        if let Some(v) = s.parse("family", "envelope_steps")? {
            f.envelope_steps = v;
        }
        if let Some(v) = s.parse("family", "levels")? {
            f.levels = v;
        }

        let m = &mut cfg.minimality;
        if let Some(v) = s.parse("minimality", "trials")? {
            m.trials = v;
        }
        if let Some(v) = s.parse("minimality", "max_radius")? {
            m.max_radius = v;
        }
        if let Some(v) = s.parse("minimality", "max_amplitude")? {
            m.max_amplitude = v;
        }

        if let Some(v) = s.get("asymptote", "directions") {
            cfg.asymptote.directions = v
                .split(';')
                .map(str::trim)
                .filter(|d| !d.is_empty())
                .map(|d| parse_list(d).map_err(|e| Error::Config(format!("[asymptote] directions: {e}"))))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = s.parse("asymptote", "steps")? {
            cfg.asymptote.steps = v;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.relax.validate()?;
        let t = &self.tolerances;
        for (name, v) in [
            ("order", t.order),
            ("foliation", t.foliation),
            ("match", t.matching),
            ("envelope", t.envelope),
            ("asymptote", t.asymptote),
            ("residual", t.residual),
        ] {
            positive(&format!("tolerance {name}"), v)?;
        }
        if self.scan_radius < 1 {
            return Err(Error::Config(format!("scan radius must be at least 1, got {}", self.scan_radius)));
        }
        if self.family.count < 2 {
            return Err(Error::Config("family count must be at least 2".into()));
        }
        if !(self.family.b_min < self.family.b_max) {
            return Err(Error::Config("family needs b_min < b_max".into()));
        }
        if self.family.omega.iter().all(|&w| w == 0) {
            return Err(Error::Config("family omega must be nonzero".into()));
        }
        if self.minimality.trials > 0 {
            positive("minimality max_radius", self.minimality.max_radius)?;
            positive("minimality max_amplitude", self.minimality.max_amplitude)?;
        }
        if self.asymptote.steps == 0 {
            return Err(Error::Config("asymptote steps must be positive".into()));
        }
        if let (Some(grid), Some(field)) = (&self.grid, &self.field) {
            let n = grid.dimension();
            if let InitialField::Logistic { omega, .. } = &field.init {
                if omega.len() != n {
                    return Err(Error::Config(format!("field omega has {} entries for n = {n}", omega.len())));
                }
            }
            if let Some(b) = &field.bump {
                if b.center.len() != n {
                    return Err(Error::Config(format!("bump center has {} entries for n = {n}", b.center.len())));
                }
            }
        }
        Ok(())
    }

    pub fn require_grid(&self) -> Result<&Grid> {
        self.grid.as_ref().ok_or_else(|| Error::Config("missing [grid] section".into()))
    }

    /// The configured starting field.
    pub fn initial_field(&self) -> Result<ScalarField> {
        let field = self
            .field
            .as_ref()
            .ok_or_else(|| Error::Config("missing [field] section".into()))?;
        let mut u = match &field.init {
            InitialField::File(path) => read_field(path)?,
            init => {
                let grid = self.require_grid()?.clone();
                match init {
                    InitialField::Constant(c) => ScalarField::constant(grid, *c)?,
                    InitialField::Logistic { omega, b } => {
                        let len = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
                        if !(len > 0.0) {
                            return Err(Error::Config("field omega must be nonzero".into()));
                        }
                        ScalarField::from_fn(grid, |x| {
                            logistic_profile(omega.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() / len - b)
                        })?
                    }
                    InitialField::Ramp { low, high } => {
                        let ax = grid.axis(0).clone();
                        if ax.is_periodic() {
                            return Err(Error::Config("a ramp needs a free first axis".into()));
                        }
                        let a = ax.origin;
                        let z = ax.position(ax.len as i64 - 1);
                        let lo = low.unwrap_or_else(|| logistic_profile(a));
                        let hi = high.unwrap_or_else(|| logistic_profile(z));
                        ScalarField::from_fn(grid, |x| lo + (hi - lo) * (x[0] - a) / (z - a))?
                    }
                    InitialField::File(_) => unreachable!(),
                }
            }
        };
        if let Some(b) = &field.bump {
            let grid = u.grid().clone();
            let pinned = grid.pinned_mask();
            let delta: Vec<f64> = (0..u.len())
                .map(|flat| {
                    if pinned[flat] {
                        return 0.0;
                    }
                    let x = grid.position_of(flat);
                    let r2 = crate::minimize::min_image_distance(&grid, &x, &b.center).powi(2) / (b.radius * b.radius);
                    if r2 < 1.0 {
                        b.amplitude * (1.0 - r2).powi(3)
                    } else {
                        0.0
                    }
                })
                .collect();
            u = u.perturbed(&delta)?;
        }
        Ok(u)
    }
}

fn parse_grid(s: &Sections) -> Result<Grid> {
    let boundary: Vec<String> = s
        .list("grid", "boundary")?
        .ok_or_else(|| Error::Config("[grid] needs boundary".into()))?;
    let n = boundary.len();
    if let Some(dim) = s.parse::<usize>("grid", "n")? {
        if dim != n {
            return Err(Error::Config(format!("[grid] n = {dim} but {n} boundaries given")));
        }
    }
    let cell: Vec<usize> = s
        .list("grid", "cell")?
        .ok_or_else(|| Error::Config("[grid] needs cell".into()))?;
    let h: Vec<f64> = s
        .list("grid", "h")?
        .ok_or_else(|| Error::Config("[grid] needs h".into()))?;
    let h = match h.len() {
        1 => vec![h[0]; n],
        l if l == n => h,
        l => return Err(Error::Config(format!("[grid] h has {l} entries for n = {n}"))),
    };
    let origin: Vec<f64> = match s.list("grid", "origin")? {
        Some(o) => o,
        None => cell.iter().map(|&c| -(c as f64) / 2.0).collect(),
    };
    let rise: Vec<i64> = s.list("grid", "rise")?.unwrap_or_else(|| vec![0; n]);
    if [cell.len(), origin.len(), rise.len()].iter().any(|&l| l != n) {
        return Err(Error::Config(format!("[grid] lists must all have {n} entries")));
    }
    let mut axes = Vec::with_capacity(n);
    for a in 0..n {
        let m = nodes_per_unit(h[a]).map_err(|e| Error::Config(format!("[grid] axis {a}: {e}")))?;
        let axis = match boundary[a].as_str() {
            "periodic" => GridAxis::periodic(cell[a], rise[a], m),
            "free" => {
                if rise[a] != 0 {
                    return Err(Error::Config(format!("[grid] axis {a}: free axes have no rise")));
                }
                GridAxis::free(origin[a], cell[a], m)
            }
            other => return Err(Error::Config(format!("[grid] unknown boundary {other}"))),
        }
        .map_err(|e| Error::Config(format!("[grid] axis {a}: {e}")))?;
        axes.push(axis);
    }
    Grid::new(axes).map_err(|e| Error::Config(e.to_string()))
}

fn parse_field(s: &Sections, base_dir: &Path) -> Result<FieldConfig> {
    let init = match s.get("field", "init").unwrap_or("constant") {
        "constant" => InitialField::Constant(s.parse("field", "value")?.unwrap_or(0.0)),
        "ramp" => InitialField::Ramp {
            low: s.parse("field", "low")?,
            high: s.parse("field", "high")?,
        },
        "logistic" => InitialField::Logistic {
            omega: s
                .list("field", "omega")?
                .ok_or_else(|| Error::Config("[field] logistic needs omega".into()))?,
            b: s.parse("field", "b")?.unwrap_or(0.0),
        },
        "file" => InitialField::File(
            base_dir.join(
                s.get("field", "path")
                    .ok_or_else(|| Error::Config("[field] file needs path".into()))?,
            ),
        ),
        other => return Err(Error::Config(format!("[field] unknown init {other}"))),
    };
    let bump = match s.parse::<f64>("field", "bump_amplitude")? {
        Some(amplitude) => Some(Bump {
            amplitude,
            center: s
                .list("field", "bump_center")?
                .ok_or_else(|| Error::Config("[field] bump needs bump_center".into()))?,
            radius: positive(
                "bump_radius",
                s.parse("field", "bump_radius")?
                    .ok_or_else(|| Error::Config("[field] bump needs bump_radius".into()))?,
            )?,
        }),
        None => None,
    };
    Ok(FieldConfig { init, bump })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HETEROCLINIC: &str = "
[run]
seed = 11

[grid]
boundary = free
cell = 40
h = 0.01
origin = -20

[field]
init = ramp

[relax]
strategy = cg
gradient_tolerance = 1e-10
";

    #[test]
    fn parses_heteroclinic_config() {
        let cfg = ExperimentConfig::parse(HETEROCLINIC, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.relax.seed, 11);
        let grid = cfg.require_grid().unwrap();
        assert_eq!(grid.node_count(), 4001);
        let u = cfg.initial_field().unwrap();
        assert_eq!(u.value(0), logistic_profile(-20.0));
        assert_eq!(u.value(4000), logistic_profile(20.0));
    }

    #[test]
    fn rejects_bad_spacing_and_unknown_keys() {
        let bad = HETEROCLINIC.replace("h = 0.01", "h = 0.3");
        assert!(matches!(ExperimentConfig::parse(&bad, Path::new(".")), Err(Error::Config(_))));
        let bad = HETEROCLINIC.replace("h = 0.01", "h = 0.01\nspacing = 2");
        assert!(ExperimentConfig::parse(&bad, Path::new(".")).is_err());
        let bad = HETEROCLINIC.replace("[relax]", "[relaxx]");
        assert!(ExperimentConfig::parse(&bad, Path::new(".")).is_err());
        let bad = HETEROCLINIC.replace("gradient_tolerance = 1e-10", "gradient_tolerance = -1");
        assert!(ExperimentConfig::parse(&bad, Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("[tolerances]\norder = 0\n", Path::new(".")).is_err());
    }

    #[test]
    fn logistic_field_with_bump() {
        let text = "
[grid]
boundary = free, periodic
cell = 10, 1
h = 0.25

[field]
init = logistic
omega = 1, 0
b = 0.5
bump_amplitude = 0.01
bump_center = 0.5, 0.5
bump_radius = 1

[asymptote]
directions = -1,0,0; 0,1,0
";
        let cfg = ExperimentConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(cfg.asymptote.directions, vec![vec![-1, 0, 0], vec![0, 1, 0]]);
        let u = cfg.initial_field().unwrap();
        let grid = u.grid();
        let c = grid.ravel(&[22, 2]);
        assert_eq!(grid.position_of(c), vec![0.5, 0.5]);
        assert!((u.value(c) - 0.5 - 0.01).abs() < 1e-15);
    }
}
