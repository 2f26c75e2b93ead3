use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_msdeconv");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn bundled_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove("MSDECONV_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV written by the tool, header line included.
fn body(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn write_config(dir: &Path, name: &str, toml: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, toml).unwrap();
    p
}

fn origin_toml(extra_modes: &str) -> String {
    format!(
        r#"
seed = 7
input = "{}"

[grid]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
scales = [{{ h = 0.5, width = 1.0 }}]
directions = [[1.0, 0.0], [0.0, 1.0]]

[modes]
candidates = [[0.0, 0.0]]
{extra_modes}
"#,
        data("normal.csv").display()
    )
}

#[test]
fn empty_scale_list_is_a_validation_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &format!(
            "input = \"{}\"\n[grid]\nscales = []\n",
            data("normal.csv").display()
        ),
    );
    let o = run(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "out", "test"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("grid.scales"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_and_tables_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "[grid]\nscale = []\n");
    let o = run(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "out", "test"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = run(dir.path(), &["--out", "out", "reproduce", "--table", "9"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("table"));
}

#[test]
fn unreadable_or_malformed_input_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["--out", "out", "test", "--input", "missing.csv"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("missing.csv"));

    fs::write(dir.path().join("bad.csv"), "x1,x2\n0.1,0.2\n0.3,oops\n").unwrap();
    let o = run(dir.path(), &["--out", "out", "test", "--input", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn test_writes_one_decision_row_per_triple() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "origin.toml", &origin_toml(""));
    let o = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "300",
            "--out",
            "out",
            "test",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body(&dir.path().join("out/decisions.csv"));
    assert_eq!(rows[0], "t1,t2,s1,s2,h,statistic,critical,decision");
    // 3 x 3 locations, two directions plus their negations.
    assert_eq!(rows.len() - 1, 36);
    let head = fs::read_to_string(dir.path().join("out/decisions.csv")).unwrap();
    assert!(head.starts_with("# msdeconv test\n# seed = 7\n"));
    assert!(head.contains("#   kappa_reps = 300"));
}

#[test]
fn reruns_with_the_same_seed_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = bundled_config("trimodal_map.toml");
    let cfg = cfg.to_str().unwrap();
    for (cmd, files) in [
        ("test", &["decisions.csv", "quantile.csv"][..]),
        ("map", &["map.csv", "map.svg"][..]),
        ("modes", &["modes.csv"][..]),
    ] {
        for out in ["a", "b"] {
            let o = run(
                dir.path(),
                &["--config", cfg, "--reps", "200", "--out", out, cmd],
            );
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        }
        for f in files {
            let a = fs::read(dir.path().join("a").join(f)).unwrap();
            let b = fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(a, b, "{cmd} {f}");
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "origin.toml", &origin_toml(""));
    let cfg = cfg.to_str().unwrap();
    for (out, threads) in [("one", "1"), ("four", "4")] {
        let o = run(
            dir.path(),
            &[
                "--config",
                cfg,
                "--reps",
                "300",
                "--threads",
                threads,
                "--out",
                out,
                "test",
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        body(&dir.path().join("one/decisions.csv")),
        body(&dir.path().join("four/decisions.csv"))
    );
}

#[test]
fn automatic_candidates_give_one_row_per_grid_location() {
    let dir = TempDir::new().unwrap();
    let cfg = bundled_config("trimodal_map.toml");
    let o = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "200",
            "--out",
            "out",
            "modes",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body(&dir.path().join("out/modes.csv"));
    assert_eq!(
        rows[0],
        "x1,x2,detected,triples,triple_indices,scales_meeting_threshold,reason"
    );
    assert_eq!(rows.len() - 1, 16);
}

#[test]
fn empty_annulus_reports_an_undetected_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "far.toml",
        &origin_toml("lower = 50.0\nc = 60.0"),
    );
    let o = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "200",
            "--out",
            "out",
            "modes",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body(&dir.path().join("out/modes.csv"));
    assert_eq!(rows.len(), 2);
    let cells: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(cells[2], "false");
    assert_eq!(cells[3], "0");
    assert_eq!(cells[6], "empty candidate set");
}

#[test]
fn a_map_without_rejections_is_still_a_drawable_svg() {
    let dir = TempDir::new().unwrap();
    // All observations far outside every kernel support.
    let mut csv = String::from("x1,x2\n");
    for i in 0..200 {
        csv.push_str(&format!(
            "{},{}\n",
            50.0 + 0.01 * i as f64,
            50.0 - 0.01 * i as f64
        ));
    }
    fs::write(dir.path().join("far.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        "far.toml",
        "input = \"far.csv\"\n[grid]\nlo = [-1.0, -1.0]\nhi = [1.0, 1.0]\nscales = [{ h = 0.5, width = 1.0 }]\ndirections = 4\n",
    );
    let o = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "200",
            "--out",
            "out",
            "map",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("out/map.svg")).unwrap();
    assert!(svg.starts_with("<!--\n# msdeconv map"));
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains(r#"id="xt0""#) && svg.contains(r#"id="yt0""#));
    assert!(!svg.contains("marker-end"));
    assert_eq!(body(&dir.path().join("out/map.csv")).len(), 1);
}

#[test]
fn trimodal_map_points_towards_the_three_modes() {
    let dir = TempDir::new().unwrap();
    let cfg = bundled_config("trimodal_map.toml");
    let o = run(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--out", "out", "map"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body(&dir.path().join("out/map.csv"));
    let idx = |name: &str| rows[0].split(',').position(|c| c == name).unwrap();
    let (t1, t2, s1, s2) = (idx("t1"), idx("t2"), idx("s1"), idx("s2"));
    let arrows: Vec<[f64; 4]> = rows[1..]
        .iter()
        .map(|r| {
            let c: Vec<f64> = r
                .split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect();
            [c[t1], c[t2], c[s1], c[s2]]
        })
        .collect();
    assert!(arrows.len() >= 6, "{} arrows", arrows.len());
    for mode in [[-0.5, -0.5], [1.5, -0.5], [0.5, 1.5]] {
        let hit = arrows.iter().any(|a| {
            let (dx, dy) = (mode[0] - a[0], mode[1] - a[1]);
            let dist = dx.hypot(dy);
            dist < 1.5 && (dx * a[2] + dy * a[3]) / dist > 0.5
        });
        assert!(hit, "no arrow towards {mode:?}");
    }
}

#[test]
fn nothing_is_written_outside_the_output_directory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "origin.toml", &origin_toml(""));
    let o = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "200",
            "--out",
            "results",
            "modes",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["origin.toml", "results"]);
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .args(["simulate", "--n", "50", "--signal", "bimodal"])
        .current_dir(dir.path())
        .env("MSDECONV_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/sample.csv").exists());
}

#[test]
fn simulate_is_seeded() {
    let dir = TempDir::new().unwrap();
    let go = |out: &str, seed: &str| {
        let o = run(
            dir.path(),
            &[
                "--seed", seed, "--out", out, "simulate", "--n", "100", "--signal", "trimodal",
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        body(&dir.path().join(out).join("sample.csv"))
    };
    let a = go("a", "11");
    assert_eq!(a.len(), 101);
    assert_eq!(a, go("b", "11"));
    assert_ne!(a, go("c", "12"));
}

#[test]
fn reproduce_writes_the_requested_table() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["--reps", "4", "--out", "out", "reproduce", "--table", "1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body(&dir.path().join("out/table1.csv"));
    assert!(rows.len() >= 4, "{rows:?}");
}

#[test]
fn config_output_dir_beats_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "output_dir = \"from-config\"\n[simulate]\nn = 20\n",
    );
    let o = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "simulate"])
        .current_dir(dir.path())
        .env("MSDECONV_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-config/sample.csv").exists());
    assert!(!dir.path().join("from-env").exists());
}
