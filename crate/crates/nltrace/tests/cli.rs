//! End-to-end tests of the `nltrace` binary: config validation, artifact
//! shapes, and the documented error behaviors.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nltrace")
}

fn run(cfg: &Path, out: &Path, cmd: &str) -> Output {
    Command::new(bin())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            cmd,
        ])
        .output()
        .unwrap()
}

const BALL_CFG: &str = r#"
format_version = 1
seed = 3
[domain]
kind = "ball"
dimension = 2
radius = 1.0
[window]
m_max = 7
[sobolev]
s_grid = [0.5]
p_grid = [2.0]
[battery]
members = ["const_one"]
[budget]
seminorm_samples = 20000
"#;

#[test]
fn malformed_config_fails_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "format_version = 1\n[domain\nkind=").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "decompose");
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "partial outputs written on config error");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("parse"), "unhelpful error: {msg}");
}

#[test]
fn unknown_key_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, format!("{BALL_CFG}\n[surprise]\nx = 1\n")).unwrap();
    let out = run(&cfg, &dir.path().join("out"), "decompose");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decompose_ball_writes_tables_and_passes_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, BALL_CFG).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "decompose");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "resolved_config.toml",
        "cubes_omega.jsonl",
        "cubes_complement.jsonl",
        "reflection_interior.jsonl",
        "reflection_exterior.jsonl",
        "thickness_audit.json",
        "plumpness.json",
    ] {
        assert!(out_dir.join(f).exists(), "missing artifact {f}");
    }
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("thickness_audit.json")).unwrap())
            .unwrap();
    assert_eq!(audit["interior"]["pass"], true);
    assert_eq!(audit["exterior"]["pass"], true);
    // Cube export: versioned header then level-major records.
    let cubes = std::fs::read_to_string(out_dir.join("cubes_omega.jsonl")).unwrap();
    let mut lines = cubes.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["format"], "whitney-cubes");
    assert_eq!(header["version"], 1);
    let mut last_level = i64::MIN;
    for line in lines {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let m = rec["m"].as_i64().unwrap();
        assert!(m >= last_level, "export not level-major");
        last_level = m;
    }
}

#[test]
fn annuli_decompose_reports_thick_but_not_plump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
format_version = 1
seed = 3
[domain]
kind = "annuli_balls"
dimension = 2
n_max = 5
[window]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
m_max = 9
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "decompose");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("thickness_audit.json")).unwrap())
            .unwrap();
    let plump: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("plumpness.json")).unwrap())
            .unwrap();
    assert_eq!(audit["interior"]["pass"], true);
    assert_eq!(audit["exterior"]["pass"], true);
    assert_eq!(plump["all_pass"], false, "annuli must fail the plumpness probe");
}

#[test]
fn extend_constant_field_is_constant_on_covered_region() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!("{BALL_CFG}\n[extend]\nfunction = \"const_one\"\nfield_resolution = 33\n"),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "extend");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(out_dir.join("ext_field.bin")).unwrap();
    let grid = nltrace::config::read_grid_bytes::<2>(&bytes)
        .map_err(|e| e.to_string())
        .unwrap();
    assert_eq!(grid.dims, [33, 33]);
    let mut finite = 0usize;
    for &v in &grid.values {
        if v.is_finite() {
            assert!((v - 1.0).abs() <= 1e-12, "field value {v} != 1");
            finite += 1;
        }
    }
    assert!(finite > 500, "too few evaluable field points: {finite}");
}

#[test]
fn extend_sqrt_profile_is_continuous_across_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
format_version = 1
seed = 3
[domain]
kind = "ball"
dimension = 2
radius = 1.0
[window]
m_max = 9
[extend]
function = "sqrt_collar"
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "extend");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("ext_profile.csv")).unwrap();
    let mut prev: Option<f64> = None;
    let mut max_jump = 0.0f64;
    let mut step = 0.0f64;
    let mut prev_t: Option<f64> = None;
    for line in csv.lines().skip(1) {
        let mut parts = line.split(',');
        let t: f64 = parts.next().unwrap().parse().unwrap();
        let v: f64 = parts.next().unwrap().parse().unwrap();
        if let Some(pt) = prev_t {
            step = t - pt;
        }
        prev_t = Some(t);
        if !v.is_finite() {
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            max_jump = max_jump.max((v - p).abs());
        }
        prev = Some(v);
    }
    // The data has modulus sqrt(t); allow the grid-scale modulus with a
    // generous factor for the near-boundary blending.
    let bound = 20.0 * step.sqrt();
    assert!(
        max_jump <= bound,
        "profile jump {max_jump:.4} above grid-modulus bound {bound:.4}"
    );
}

#[test]
fn unknown_battery_function_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!("{BALL_CFG}\n[extend]\nfunction = \"mystery\"\n"),
    )
    .unwrap();
    let out = run(&cfg, &dir.path().join("out"), "extend");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
}

#[test]
fn grid_sdf_domain_round_trips_through_decompose() {
    let dir = tempfile::tempdir().unwrap();
    // Sample the interval SDF on a fine 1-D grid.
    let n = 4097usize;
    let h = 8.0 / (n - 1) as f64;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let x: f64 = -4.0 + i as f64 * h;
            x.abs() - 1.0
        })
        .collect();
    let mut buf = Vec::new();
    nltrace::config::write_grid::<1>(&mut buf, &[n], &[-4.0], &[h], &values).unwrap();
    std::fs::write(dir.path().join("sdf.bin"), &buf).unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
format_version = 1
[domain]
kind = "grid_sdf"
dimension = 1
file = "sdf.bin"
[window]
lo = [-4.0]
hi = [4.0]
m_max = 6
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "decompose");
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("cubes_omega.jsonl").exists());
}

#[test]
fn grid_dimension_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut buf = Vec::new();
    nltrace::config::write_grid::<2>(
        &mut buf,
        &[4, 4],
        &[-1.0, -1.0],
        &[0.5, 0.5],
        &vec![1.0; 16],
    )
    .unwrap();
    std::fs::write(dir.path().join("sdf.bin"), &buf).unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
format_version = 1
[domain]
kind = "grid_sdf"
dimension = 1
file = "sdf.bin"
"#,
    )
    .unwrap();
    let out = run(&cfg, &dir.path().join("out"), "decompose");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn s_equal_one_needs_explicit_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        BALL_CFG.replace("s_grid = [0.5]", "s_grid = [0.5, 1.0]"),
    )
    .unwrap();
    let out = run(&cfg, &dir.path().join("out"), "seminorm");
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("0 < s < 1"), "message: {msg}");

    // With the opt-in, the run proceeds (s = 1 used only where admissible).
    let cfg2 = dir.path().join("cfg2.toml");
    std::fs::write(
        &cfg2,
        BALL_CFG.replace(
            "s_grid = [0.5]",
            "s_grid = [0.5, 1.0]\nallow_s_one = true",
        ),
    )
    .unwrap();
    let out2 = run(&cfg2, &dir.path().join("out2"), "seminorm");
    assert_eq!(
        out2.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out2.stderr)
    );
}

#[test]
fn resolved_config_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    // Minimal config: window, grids, budget all defaulted.
    std::fs::write(
        &cfg,
        r#"
format_version = 1
[domain]
kind = "interval"
dimension = 1
a = -1.0
b = 1.0
[window]
m_max = 8
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, "decompose");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = std::fs::read_to_string(out_dir.join("resolved_config.toml")).unwrap();
    for key in [
        "seed",
        "window_lo",
        "window_hi",
        "m_max",
        "lambda",
        "kappa",
        "s_grid",
        "p_grid",
        "seminorm_samples",
        "battery_members",
    ] {
        assert!(echoed.contains(key), "resolved config lacks `{key}`:\n{echoed}");
    }
}
