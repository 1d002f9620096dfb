use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mblab::field::{Grid, GridAxis, ScalarField};
use mblab::heteroclinic::logistic_profile;
use mblab::io::{read_field, write_field};
use serde_json::Value;

fn mblab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mblab")).args(args).output().unwrap();
    (out.status.code().expect("exited normally"), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SLAB: &str = "
[grid]
boundary = free, periodic
cell = 40, 1
h = 0.2
origin = -20, 0

[family]
omega = 1, 0
b_min = -5
b_max = 5
count = 21

[minimality]
trials = 5
";

fn slab_grid() -> Grid {
    Grid::new(vec![GridAxis::free(-20.0, 40, 5).unwrap(), GridAxis::periodic(1, 0, 5).unwrap()]).unwrap()
}

#[test]
fn relax_heteroclinic_matches_logistic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "h.ini",
        "[run]\nseed = 5\n\n[grid]\nboundary = free\ncell = 40\nh = 0.01\norigin = -20\n\n[field]\ninit = ramp\n\n[minimality]\ntrials = 10\nmax_amplitude = 0.05\n",
    );
    let out = dir.path().join("out");
    let (code, err) = mblab(&["relax", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let u = read_field(&out.join("field.csv")).unwrap();
    let worst = (0..u.len())
        .map(|i| (u.value(i) - logistic_profile(u.grid().position_of(i)[0])).abs())
        .fold(0.0, f64::max);
    assert!(worst < 5e-4, "{worst}");
    assert!(fs::read_to_string(out.join("log.csv")).unwrap().starts_with("iteration,energy,grad_norm,step\n"));
    assert_eq!(json(&out.join("minimality.json"))["passed"], true);
    assert_eq!(json(&out.join("relax.json"))["converged"], true);
}

#[test]
fn relax_of_pure_phase_is_idle_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.ini",
        "[grid]\nboundary = free, periodic\ncell = 10, 1\nh = 0.25\n\n[field]\ninit = constant\nvalue = 0\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(mblab(&["relax", "--config", s(&cfg), "--out", s(&a), "--seed", "9"]).0, 0);
    assert_eq!(mblab(&["relax", "--config", s(&cfg), "--out", s(&b), "--seed", "9"]).0, 0);
    let summary = json(&a.join("relax.json"));
    assert_eq!(summary["iterations"], 0);
    assert_eq!(summary["seed"], 9);
    let u = read_field(&a.join("field.csv")).unwrap();
    assert!(u.values().iter().all(|v| *v == 0.0));
    for f in ["field.csv", "field.json", "log.csv", "minimality.json", "relax.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.ini", "[grid]\nboundary = free\ncell = 10\nh = 0.3\n\n[field]\ninit = ramp\n");
    let (code, err) = mblab(&["relax", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("1/m"), "{err}");
    let junk = write(dir.path(), "junk.ini", "this is not = [ a config\n[[[");
    assert_eq!(mblab(&["relax", "--config", s(&junk), "--out", s(dir.path())]).0, 1);
    let missing = dir.path().join("nope.csv");
    assert_eq!(mblab(&["classify", "--field", s(&missing), "--out", s(dir.path())]).0, 1);
    let csv = write(dir.path(), "f.csv", "x1,u\n0,abc\n");
    write(dir.path(), "f.json", "{\"n\":1,\"cell\":[1],\"h\":[0.25],\"slope\":[[0,1]],\"origin\":[0],\"boundary\":[\"periodic\"]}");
    assert_eq!(mblab(&["classify", "--field", s(&csv), "--out", s(dir.path())]).0, 1);
    assert_eq!(mblab(&["relax", "--out", s(dir.path())]).0, 1);
}

#[test]
fn classify_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let member = dir.path().join("member.csv");
    write_field(&member, &ScalarField::from_fn(slab_grid(), |x| logistic_profile(x[0] - 0.5)).unwrap()).unwrap();
    let out = dir.path().join("m");
    assert_eq!(mblab(&["classify", "--field", s(&member), "--out", s(&out)]).0, 0);
    let inv = json(&out.join("invariants.json"));
    assert_eq!(inv["t"], 2);
    assert_eq!(inv["a"][1], serde_json::json!([-1.0, 0.0, 0.0]));

    let constant = dir.path().join("c.csv");
    write_field(&constant, &ScalarField::constant(slab_grid(), 0.3).unwrap()).unwrap();
    let out = dir.path().join("c");
    assert_eq!(mblab(&["classify", "--field", s(&constant), "--out", s(&out)]).0, 0);
    assert_eq!(json(&out.join("invariants.json"))["t"], 1);

    let grid = Grid::new(vec![GridAxis::periodic(2, 0, 8).unwrap(), GridAxis::periodic(2, 0, 8).unwrap()]).unwrap();
    let pi = std::f64::consts::PI;
    let crossing = ScalarField::from_fn(grid, |x| {
        0.5 + 0.2 * (pi * (x[0] + x[1])).sin() + 0.2 * (pi * (x[0] - x[1])).sin()
    })
    .unwrap();
    let path = dir.path().join("x.csv");
    write_field(&path, &crossing).unwrap();
    let out = dir.path().join("x");
    assert_eq!(mblab(&["classify", "--field", s(&path), "--out", s(&out)]).0, 2);
    let rep = json(&out.join("classify.json"));
    assert!(!rep["intersections"].as_array().unwrap().is_empty());
    assert_eq!(rep["passed"], false);
}

#[test]
fn foliation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.ini", SLAB);
    let out = dir.path().join("fol");
    let (code, err) = mblab(&["foliate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let rep = json(&out.join("foliation.json"));
    assert_eq!(rep["foliation"]["disjoint"], true);
    assert_eq!(rep["foliation"]["covered"], true);
    let manifest = out.join("family").join("manifest.json");
    assert_eq!(json(&manifest)["members"].as_array().unwrap().len(), 21);

    // duplicate one member in the manifest
    let mut m = json(&manifest);
    m["members"][5] = m["members"][4].clone();
    m["b_grid"][5] = m["b_grid"][4].clone();
    let dup = out.join("family").join("dup.json");
    fs::write(&dup, serde_json::to_string(&m).unwrap()).unwrap();
    let bad = dir.path().join("dup");
    assert_eq!(mblab(&["foliate", "--config", s(&cfg), "--manifest", s(&dup), "--out", s(&bad)]).0, 2);
    assert_eq!(json(&bad.join("foliation.json"))["foliation"]["disjoint"], false);

    // a member matches itself; a constant is outside the trapped region
    let member = dir.path().join("v.csv");
    write_field(&member, &ScalarField::from_fn(slab_grid(), |x| logistic_profile(x[0] - 0.37)).unwrap()).unwrap();
    let r = dir.path().join("rig");
    assert_eq!(mblab(&["rigidity", "--config", s(&cfg), "--manifest", s(&manifest), "--field", s(&member), "--out", s(&r)]).0, 0);
    let rig = json(&r.join("rigidity.json"));
    assert_eq!(rig["status"], "MATCHED");
    assert!((rig["b0"].as_f64().unwrap() - 0.37).abs() < 1e-9);
    let half = dir.path().join("h.csv");
    write_field(&half, &ScalarField::constant(slab_grid(), 0.5).unwrap()).unwrap();
    assert_eq!(mblab(&["rigidity", "--config", s(&cfg), "--manifest", s(&manifest), "--field", s(&half), "--out", s(&r)]).0, 2);
    assert_eq!(json(&r.join("rigidity.json"))["status"], "NOT_APPLICABLE");

    // asymptotes of a member
    let a = dir.path().join("asy");
    assert_eq!(mblab(&["asymptote", "--config", s(&cfg), "--manifest", s(&manifest), "--field", s(&member), "--out", s(&a)]).0, 0);
    let asy = json(&a.join("asymptote.json"));
    let kinds: Vec<&str> = asy["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["outcome"]["classification"]["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, vec!["upper", "lower", "member"]);

    // total order of the family with the constants, then with a crossing field
    let rep = dir.path().join("rep");
    assert_eq!(mblab(&["report", "--config", s(&cfg), "--manifest", s(&manifest), "--field", s(&member), "--constants", "--out", s(&rep)]).0, 0);
    let crossing = dir.path().join("cross.csv");
    write_field(&crossing, &ScalarField::from_fn(slab_grid(), |x| logistic_profile(-x[0])).unwrap()).unwrap();
    assert_eq!(mblab(&["report", "--config", s(&cfg), "--manifest", s(&manifest), "--field", s(&crossing), "--constants", "--out", s(&rep)]).0, 2);
    let r = json(&rep.join("report.json"));
    assert_eq!(r["violations"][0]["relation"]["order"], "CROSSING");
}
