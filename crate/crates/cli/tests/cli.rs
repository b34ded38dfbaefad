use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
name = "small"

[scaled]
g2 = 0.001
gamma_r = 1.0
mu = 0.5

[integrator]
dt = 0.005
t_burn = 5.0
t_record = 40.0
n_traj = 6
seed = 11

[spectra]
t_seg = 10.0
omega_max = 5.0
thetas = [0.7]
shadow = true

[outputs]
residual = true
epr = true
triple = { t_seg = 10.0, k_max = 1 }
"#;

fn nopo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nopo")).args(args).output().unwrap()
}

fn read(dir: &Path, f: &str) -> String {
    std::fs::read_to_string(dir.join(f)).unwrap()
}

#[test]
fn manifest_rerun_reproduces_every_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = nopo(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = a.join("manifest.json");
    let out = nopo(&["run", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let m: serde_json::Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["results"]["n_ok"], 6);
    let files: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect();
    for f in ["spectra.csv", "residual.csv", "epr.csv", "moments.csv", "triple.csv"] {
        assert!(files.iter().any(|x| x == f), "missing {f}");
    }
    for f in &files {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs");
    }
}

#[test]
fn csv_has_metadata_header_and_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = nopo(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(tmp.path(), "spectra.csv");
    assert!(text.starts_with("# schema_version: 1\n"));
    assert!(text.contains("# seed: 11\n"));
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let h = r.headers().unwrap().clone();
    assert_eq!(&h[0], "omega");
    assert!(h.iter().any(|c| c == "v_theta_0.7_se"));
    // bins up to Ω = 5 at spacing 2π/10
    assert_eq!(r.records().count(), 8);
}

#[test]
fn analytic_at_threshold_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("edge.toml");
    std::fs::write(&cfg, "analytic_only = true\n[scaled]\ng2 = 0.001\ngamma_r = 1.0\nmu = 1.0\n").unwrap();
    let out = nopo(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu < 1"));
}

#[test]
fn bad_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in [
        "[scaled]\ng2 = 0.001\ngamma_r = 1.0\n",
        "[scaled]\ng2 = 0.001\ngamma_r = -1.0\nmu = 0.5\n",
        "colour = \"red\"\n[scaled]\ng2 = 0.001\ngamma_r = 1.0\nmu = 0.5\n",
        "name = \"empty\"\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = tmp.path().join(format!("bad{i}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let out = nopo(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "config {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(nopo(&["run", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(nopo(&["preset", "no_such_preset"]).status.code(), Some(2));
}

#[test]
fn list_presets_names_the_catalog() {
    let out = nopo(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for p in nopo_cli::presets::catalog() {
        assert!(text.contains(p.name));
    }
}

#[test]
fn every_preset_prints_a_config_that_parses_back() {
    for p in nopo_cli::presets::catalog() {
        let text = p.config.to_toml().unwrap();
        let back = nopo_cli::parse(&text, p.name).unwrap();
        assert_eq!(back, p.config, "{}", p.name);
    }
}

#[test]
fn analytic_presets_write_curves() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["fig_optsqueeze", "fig_inference", "crit_squeeze", "fig_mu093", "crit_xx"] {
        let dir = tmp.path().join(name);
        let out = nopo(&["analytic", name, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join("manifest.json").exists());
    }
    let curve = read(&tmp.path().join("fig_optsqueeze"), "curve.csv");
    // five damping ratios, 100 drives each
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 1 + 500);
    let spec = read(&tmp.path().join("fig_mu093"), "spectra_analytic.csv");
    assert!(spec.contains("v_nl_analytic"));
}

#[test]
fn physical_units_scale_the_frequency_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("phys.toml");
    std::fs::write(
        &cfg,
        "analytic_only = true\n[physical]\ngamma0 = 4.0\ngamma = 2.0\nchi = 0.01\ndrive_re = 100.0\n[spectra]\nt_seg = 10.0\nomega_max = 1.0\nthetas = []\nshadow = false\n",
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(nopo(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(nopo(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--physical-units"]).status.success());
    let second = |d: &Path| -> f64 {
        let t = read(d, "spectra_analytic.csv");
        let row = t.lines().filter(|l| !l.starts_with('#')).nth(2).unwrap().to_string();
        row.split(',').next().unwrap().parse().unwrap()
    };
    assert!((second(&b) - 2.0 * second(&a)).abs() < 1e-12);
}
