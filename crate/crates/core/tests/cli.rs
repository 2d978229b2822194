use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gaussharm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussharm")).args(args).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            (v[0], v[v.len() - 1])
        })
        .collect()
}

const SMALL: &str = r#"{
  "dim": 1,
  "grid": { "half_width": 3.0, "h": 0.125, "levels": [0.125], "per_octave": 2 },
  "corpus": [
    { "id": "one", "function": { "kind": "polynomial", "terms": [{ "coef": 1.0, "powers": [0] }] } },
    { "id": "bump", "function": { "kind": "bump", "center": [0.5], "radius": 1.0 } }
  ]
}"#;

#[test]
fn square_function_of_constant_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = gaussharm(&["field", "--config", &cfg, "--operator", "s", "--u", "one"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("S_one_r0.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|&(_, v)| v == 0.0));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("S_one_r0.json")).unwrap()).unwrap();
    assert_eq!(side["schema"], 1);
}

#[test]
fn unknown_corpus_entry_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussharm(&["field", "--operator", "t", "--u", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown corpus entry"));
}

#[test]
fn maximal_function_refines_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut fields = Vec::new();
    for k in ["1", "2", "3"] {
        let o = gaussharm(&["field", "--config", &cfg, "--operator", "t", "--u", "bump", "--refine", k], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fields.push(read_csv(&dir.path().join(format!("T_bump_r{k}.csv"))));
    }
    // The grid is cell-centred, so levels share no nodes; compare the sup and
    // the γ-weighted L¹ mass. Both grow with resolution, by shrinking steps.
    let stats: Vec<(f64, f64)> = fields
        .iter()
        .map(|f| {
            let h = f[1].0 - f[0].0;
            let sup = f.iter().map(|r| r.1).fold(0.0, f64::max);
            let l1: f64 = f.iter().map(|&(x, v)| v * (-x * x / 2.0).exp() * h).sum::<f64>() / (2.0 * std::f64::consts::PI).sqrt();
            (sup, l1)
        })
        .collect();
    for w in stats.windows(2) {
        assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1, "{stats:?}");
    }
    assert!(stats[2].1 - stats[1].1 < stats[1].1 - stats[0].1, "{stats:?}");
}

#[test]
fn semigroup_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = gaussharm(&["field", "--config", &cfg, "--operator", "semigroup", "--u", "one", "--times", "0.5,1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("semigroup_one_r0.csv")).unwrap();
    assert!(text.starts_with("x1,t,value"));
    for l in text.lines().skip(1) {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }
}

#[test]
fn cover_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussharm(&["cover", "--points", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("covering.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["result"]["coverage_fraction"], 1.0);
}

#[test]
fn cover_empty_set_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for spec in ["", "[]"] {
        let o = gaussharm(&["cover", "--points", spec], dir.path());
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("F must be non-empty"));
    }
    let o = gaussharm(&["cover", "--points", "1,x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cover_svg_in_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussharm(&["cover", "--points", "0,0;1.5,-0.5", "--svg"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("covering.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<g").count(), svg.matches("</g>").count());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("covering.json")).unwrap()).unwrap();
    let centers = v["result"]["centers"].as_array().unwrap().len();
    assert!(svg.matches("<circle").count() >= centers);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), r#"{ "checks": ["weak11"] }"#);
    let o = gaussharm(&["verify", "--config", &ok], &dir.path().join("ok"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("ok/bundle.json").is_file());
    assert!(dir.path().join("ok/weak11.csv").is_file());

    let zero = write_config(dir.path(), r#"{ "checks": ["weak11"], "budgets": { "weak11": 0.0 } }"#);
    let o = gaussharm(&["verify", "--config", &zero], &dir.path().join("zero"));
    assert_eq!(o.status.code(), Some(1));

    let bad = write_config(dir.path(), r#"{ "checks": ["weak11"], "budget": {} }"#);
    let o = gaussharm(&["verify", "--config", &bad], &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(2));

    let o = gaussharm(&["verify", "--check", "nonsense"], &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(2));

    let o = gaussharm(&["verify", "--dim", "7"], &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_corpus_gives_empty_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "corpus": [] }"#);
    let o = gaussharm(&["verify", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("bundle.json")).unwrap()).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 0);
}

#[test]
fn usage_errors_exit_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_gaussharm")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
