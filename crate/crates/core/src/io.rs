//! Plain-text exchange formats: field CSV with a JSON sidecar describing the
//! grid, and the family manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisKind, Grid, GridAxis, ScalarField};
use crate::foliation::FoliationFamily;
use crate::heteroclinic::ProfileSource;

/// Positions in a CSV row may differ from the sidecar grid by this much.
const POSITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Free,
}

/// Grid description stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    /// Period (periodic axes) or box extent (free axes), in units.
    pub cell: Vec<usize>,
    pub h: Vec<f64>,
    /// Slope per axis as `[numerator, denominator]`.
    pub slope: Vec<[i64; 2]>,
    pub origin: Vec<f64>,
    pub boundary: Vec<Boundary>,
}

impl Sidecar {
    pub fn from_grid(grid: &Grid) -> Self {
        let mut out = Sidecar {
            n: grid.dimension(),
            cell: Vec::new(),
            h: Vec::new(),
            slope: Vec::new(),
            origin: Vec::new(),
            boundary: Vec::new(),
        };
        for ax in grid.axes() {
            let s = ax.slope();
            out.slope.push([*s.numer(), *s.denom()]);
            out.h.push(ax.spacing());
            out.origin.push(ax.origin);
            match ax.kind {
                AxisKind::Periodic { period, .. } => {
                    out.cell.push(period);
                    out.boundary.push(Boundary::Periodic);
                }
                AxisKind::Free => {
                    out.cell.push((ax.len - 1) / ax.per_unit);
                    out.boundary.push(Boundary::Free);
                }
            }
        }
        out
    }

    pub fn to_grid(&self) -> Result<Grid> {
        let n = self.n;
        if [self.cell.len(), self.h.len(), self.slope.len(), self.origin.len(), self.boundary.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Parse(format!("sidecar arrays must all have length n = {n}")));
        }
        let mut axes = Vec::with_capacity(n);
        for a in 0..n {
            let m = crate::field::nodes_per_unit(self.h[a])?;
            let [p, q] = self.slope[a];
            if q <= 0 {
                return Err(Error::Parse(format!("axis {a}: slope denominator must be positive")));
            }
            axes.push(match self.boundary[a] {
                Boundary::Periodic => {
                    let period = self.cell[a] as i64;
                    if (p * period) % q != 0 {
                        return Err(Error::Parse(format!(
                            "axis {a}: slope {p}/{q} does not give an integer rise over period {period}"
                        )));
                    }
                    GridAxis::periodic(self.cell[a], p * period / q, m)?
                }
                Boundary::Free => {
                    if p != 0 {
                        return Err(Error::Parse(format!("axis {a}: free axes have zero slope")));
                    }
                    GridAxis::free(self.origin[a], self.cell[a], m)?
                }
            });
        }
        Grid::new(axes)
    }
}

/// Sidecar path for a field CSV: same stem, `.json` extension.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// CSV text with header `x1,…,xn,u` and one row per stored node.
pub fn field_to_csv(u: &ScalarField) -> String {
    let grid = u.grid();
    let n = grid.dimension();
    let mut out = String::new();
    for a in 1..=n {
        let _ = write!(out, "x{a},");
    }
    out.push_str("u\n");
    for flat in 0..u.len() {
        for x in grid.position_of(flat) {
            let _ = write!(out, "{x:.16e},");
        }
        let _ = writeln!(out, "{:.16e}", u.value(flat));
    }
    out
}

pub fn field_from_csv(text: &str, grid: Grid) -> Result<ScalarField> {
    let n = grid.dimension();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let expected: Vec<String> = (1..=n).map(|a| format!("x{a}")).chain(["u".to_string()]).collect();
    let found: Vec<&str> = header.split(',').map(str::trim).collect();
    if found != expected {
        return Err(Error::Parse(format!("expected header {}, got {header}", expected.join(","))));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row, line) in lines.enumerate() {
        let cols = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
        if cols.len() != n + 1 {
            return Err(Error::Parse(format!("row {}: expected {} columns, got {}", row + 1, n + 1, cols.len())));
        }
        if row >= grid.node_count() {
            return Err(Error::Parse(format!("more rows than the {} grid nodes", grid.node_count())));
        }
        let x = grid.position_of(row);
        if x.iter().zip(&cols).any(|(a, b)| (a - b).abs() > POSITION_TOL) {
            return Err(Error::Parse(format!(
                "row {}: position {:?} does not match grid node {:?}",
                row + 1,
                &cols[..n],
                x
            )));
        }
        values.push(cols[n]);
    }
    if values.len() != grid.node_count() {
        return Err(Error::Parse(format!(
            "expected {} rows, got {}",
            grid.node_count(),
            values.len()
        )));
    }
    ScalarField::from_values(grid, values).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes `path` and its sidecar.
pub fn write_field(path: &Path, u: &ScalarField) -> Result<()> {
    fs::write(path, field_to_csv(u))?;
    let side = serde_json::to_string_pretty(&Sidecar::from_grid(u.grid()))?;
    fs::write(sidecar_path(path), side + "\n")?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let side_path = sidecar_path(path);
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", side_path.display())))?;
    let grid = side.to_grid()?;
    field_from_csv(&fs::read_to_string(path)?, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub omega: Vec<f64>,
    pub omega_int: Vec<i64>,
    pub profile: String,
    pub b_grid: Vec<f64>,
    /// Member CSV files, relative to the manifest.
    pub members: Vec<String>,
}

/// Writes `manifest.json` and one CSV per member into `dir`.
pub fn write_family(dir: &Path, fam: &FoliationFamily) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut members = Vec::with_capacity(fam.members.len());
    for (i, v) in fam.members.iter().enumerate() {
        let name = format!("member_{i:04}.csv");
        write_field(&dir.join(&name), v)?;
        members.push(name);
    }
    let manifest = Manifest {
        omega: fam.omega.clone(),
        omega_int: fam.omega_int.clone(),
        profile: fam.profile.name().to_string(),
        b_grid: fam.b_grid.clone(),
        members,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

pub fn read_family(manifest: &Path, profile: Arc<dyn ProfileSource>) -> Result<FoliationFamily> {
    let m: Manifest = serde_json::from_str(&fs::read_to_string(manifest)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", manifest.display())))?;
    if m.profile != profile.name() {
        return Err(Error::Parse(format!(
            "manifest profile {} does not match {}",
            m.profile,
            profile.name()
        )));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let members = m
        .members
        .iter()
        .map(|f| read_field(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let grid = members
        .first()
        .map(|v| v.grid().clone())
        .ok_or_else(|| Error::Parse("manifest lists no members".into()))?;
    FoliationFamily::from_parts(&m.omega_int, m.b_grid, members, grid, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heteroclinic::Logistic;

    fn grid() -> Grid {
        Grid::new(vec![
            GridAxis::free(-2.5, 5, 4).unwrap(),
            GridAxis::periodic(2, 1, 5).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let u = ScalarField::from_fn(grid(), |x| (x[0] * 1.7).sin() / 3.0 + x[1] / 2.0 + 1e-300).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write_field(&p, &u).unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.grid(), u.grid());
        for i in 0..u.len() {
            assert_eq!(back.value(i).to_bits(), u.value(i).to_bits());
        }
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side["slope"][1], serde_json::json!([1, 2]));
        assert!(fs::read_to_string(&p).unwrap().starts_with("x1,x2,u\n"));
    }

    #[test]
    fn malformed_csv_rejected() {
        let g = grid();
        assert!(field_from_csv("", g.clone()).is_err());
        assert!(field_from_csv("x1,u\n0,0\n", g.clone()).is_err());
        assert!(field_from_csv("x1,x2,u\n-2.5,0,abc\n", g.clone()).is_err());
        assert!(field_from_csv("x1,x2,u\n-2.5,0,0.1\n", g).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let g = Grid::new(vec![GridAxis::free(-5.0, 10, 4).unwrap(), GridAxis::periodic(1, 0, 4).unwrap()]).unwrap();
        let (fam, _) = crate::foliation::build_family(
            &[2, 0],
            -1.0,
            1.0,
            3,
            &g,
            Arc::new(Logistic),
            &crate::foliation::BuildOptions {
                residual_bound: 1e-2,
                spot: None,
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write_family(dir.path(), &fam).unwrap();
        let back = read_family(&path, Arc::new(Logistic)).unwrap();
        assert_eq!(back.omega_int, vec![1, 0]);
        assert_eq!(back.b_grid, fam.b_grid);
        assert_eq!(back.members, fam.members);
    }
}
