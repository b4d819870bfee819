use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equimeasure"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const NEWTON_RADIAL: &str = r#"{
    "kernel": {"family": "power_sum", "alpha": 1.0, "beta": 2.0},
    "dimension": 3,
    "problem": "radial",
    "grid": {"count": 120, "extent": 1.2}
}"#;

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&bin().output().unwrap()), 1);
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run("minimize", &missing, &out, &[])), 1);

    let bad = write_config(dir.path(), "bad.json", "{\"kernel\": ");
    assert_eq!(code(&run("minimize", &bad, &out, &[])), 1);

    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"kernel": {"family": "power", "exponent": 2.0}, "dimension": 1,
            "problem": "particle", "grid": {"count": 5, "extent": 1.0},
            "diagnostics": ["not_a_check"]}"#,
    );
    assert_eq!(code(&run("verify", &unknown, &out, &[])), 1);

    let zero_dim = write_config(
        dir.path(),
        "zero.json",
        r#"{"kernel": {"family": "power", "exponent": 2.0}, "dimension": 0,
            "problem": "radial", "grid": {"count": 5, "extent": 1.0}}"#,
    );
    assert_eq!(code(&run("minimize", &zero_dim, &out, &[])), 1);
}

#[test]
fn kernel_report_for_newtonian_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.json", NEWTON_RADIAL);
    let out = dir.path().join("o");
    let o = run("kernel-report", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&out.join("hypothesis_report.json"));
    assert_eq!(doc["pd_certificate"], "SubharmonicDecaying");
    assert_eq!(doc["hypotheses"]["H_satisfied"], true);
    assert!(doc["support_radius_bound"].as_f64().unwrap() > 0.0);
    assert!(doc["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn kernel_report_warns_on_non_integrable_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.json",
        r#"{"kernel": {"family": "power_sum", "alpha": 3.1, "beta": 2.0},
            "dimension": 3, "problem": "radial", "grid": {"count": 10, "extent": 1.0}}"#,
    );
    let out = dir.path().join("o");
    let o = run("kernel-report", &cfg, &out, &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let doc = json(&out.join("hypothesis_report.json"));
    assert_eq!(doc["hypotheses"]["l1loc_finite"], false);
    assert!(!doc["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn minimize_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", NEWTON_RADIAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run("minimize", &cfg, &a, &["--seed", "7"])), 0);
    assert_eq!(code(&run("minimize", &cfg, &b, &["--seed", "7"])), 0);
    for f in ["solution.csv", "potential.csv", "report.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let rep = json(&a.join("report.json"));
    assert_eq!(rep["seed"], 7);
    assert_eq!(rep["convexity_hint"], "ConvexCertified");
}

#[test]
fn cube_kernel_reaches_two_atom_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"kernel": {"family": "piecewise_cube"}, "dimension": 1,
            "problem": "particle", "grid": {"count": 41, "extent": 2.0}}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(code(&run("minimize", &cfg, &out, &[])), 0);
    let energy = json(&out.join("report.json"))["energy"].as_f64().unwrap();
    assert!(energy <= 1.001, "energy {energy}");
}

#[test]
fn verify_flags_a_perturbed_measure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", NEWTON_RADIAL);
    let sol = dir.path().join("sol");
    assert_eq!(code(&run("minimize", &cfg, &sol, &[])), 0);

    // move a tenth of the heaviest shell's mass onto the outermost shell
    let text = fs::read_to_string(sol.join("solution.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let parse = |l: &str| -> (String, f64) {
        let (r, w) = l.split_once(',').unwrap();
        (r.to_string(), w.parse().unwrap())
    };
    let heavy = (1..lines.len())
        .max_by(|&i, &j| parse(&lines[i]).1.total_cmp(&parse(&lines[j]).1))
        .unwrap();
    let last = lines.len() - 1;
    let (r_h, w_h) = parse(&lines[heavy]);
    let (r_l, w_l) = parse(&lines[last]);
    lines[heavy] = format!("{r_h},{}", w_h - 0.1 * w_h);
    lines[last] = format!("{r_l},{}", w_l + 0.1 * w_h);
    fs::write(dir.path().join("perturbed.csv"), lines.join("\n") + "\n").unwrap();

    let vcfg = write_config(
        dir.path(),
        "v.json",
        r#"{"kernel": {"family": "power_sum", "alpha": 1.0, "beta": 2.0},
            "dimension": 3, "problem": "radial", "grid": {"count": 120, "extent": 1.2},
            "measure": "perturbed.csv", "diagnostics": ["el_residual"]}"#,
    );
    let out = dir.path().join("v");
    let o = run("verify", &vcfg, &out, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["summary"]["failed"], 1);
    assert_eq!(manifest["checks"][0]["status"], "fail");
}

#[test]
fn verify_passes_on_the_solved_measure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"kernel": {"family": "power_sum", "alpha": 1.0, "beta": 2.0},
            "dimension": 3, "problem": "radial", "grid": {"count": 120, "extent": 1.2},
            "diagnostics": ["el_residual", "support_convexity", "linfty_bound"]}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run("verify", &cfg, &a, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&run("verify", &cfg, &b, &[])), 0);
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["summary"]["all_applicable_passed"], true);
    assert_eq!(manifest["summary"]["passed"], 3);
}

#[test]
fn sphere_annulus_ratio_runs_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"kernel": {"family": "power_sum", "alpha": 1.0, "beta": 2.0},
            "dimension": 3, "problem": "radial", "grid": {"count": 20, "extent": 1.0},
            "diagnostics": ["sphere_annulus_ratio"]}"#,
    );
    let out = dir.path().join("o");
    let o = run("verify", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn auto_extent_without_confinement_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"kernel": {"family": "gaussian", "sigma": 1.0}, "dimension": 2,
            "problem": "radial", "grid": {"count": 20, "extent": "auto"}}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(code(&run("minimize", &cfg, &out, &[])), 2);
}
