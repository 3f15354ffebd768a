//! End-to-end checks of the command-line surface: exit codes, file-format
//! contracts, flag/config precedence, and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ebeam_mdp::io::{read_pfm, read_shots};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ebeam-mdp"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .env_remove("EBEAM_MDP_THREADS")
        .output()
        .expect("spawn CLI")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_rect_pfm(path: &Path, m: usize, x0: usize, y0: usize, w: usize, h: usize) {
    let mut field = ebeam_mdp::RasterField::zeros(m, m);
    for j in y0..y0 + h {
        for i in x0..x0 + w {
            *field.at_mut(i, j) = 1.0;
        }
    }
    ebeam_mdp::io::write_pfm(path, &field).unwrap();
}

/// Config shrinking the blur scales so 64-px-grid runs stay interior.
const SMALL_GRID_CONFIG: &str = r#"{
    "grid_size": 64,
    "ebl": { "sigma_f": 2.0, "sigma_b": 6.0 }
}"#;

#[test]
fn config_dump_is_reparseable_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_in(dir.path(), &["config-dump"]);
    assert_exit(&first, 0);
    let text = String::from_utf8(first.stdout).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["grid_size"], 512);
    assert_eq!(parsed["ebl"]["sigma_b"], 30.0);
    assert_eq!(parsed["opt"]["epochs"], 200);

    // Feeding the dump back in resolves to the same document.
    let cfg_path = dir.path().join("dump.json");
    std::fs::write(&cfg_path, &text).unwrap();
    let second = run_in(dir.path(), &["config-dump", "--config", "dump.json"]);
    assert_exit(&second, 0);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{ "grid_size": 128, "opt": { "seed": 9 } }"#)
        .unwrap();
    let out = run_in(
        dir.path(),
        &["config-dump", "--config", "cfg.json", "--grid", "256", "--lr", "0.5"],
    );
    assert_exit(&out, 0);
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["grid_size"], 256); // flag beats config
    assert_eq!(parsed["opt"]["seed"], 9); // config beats default
    assert_eq!(parsed["opt"]["lr"], 0.5);
}

#[test]
fn unknown_config_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{ "grid": 64 }"#).unwrap();
    let out = run_in(dir.path(), &["config-dump", "--config", "cfg.json"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn simulate_empty_shot_file_writes_zero_energy_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n").unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--shots", "shots.csv", "--out-dir", "sim"],
    );
    assert_exit(&out, 0);
    let energy = read_pfm(&dir.path().join("sim/energy.pfm")).unwrap();
    assert_eq!(energy.width(), 64);
    assert!(energy.as_slice().iter().all(|&v| v == 0.0));
    // An unexposed resist stays far below threshold everywhere.
    let resist = read_pfm(&dir.path().join("sim/resist.pfm")).unwrap();
    assert!(resist.as_slice().iter().all(|&v| v < 1e-9));
}

#[test]
fn simulate_centered_shot_gives_a_mirror_symmetric_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    // 20x12 shot centered on the 64-px grid: left edges at (22, 26).
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n0,22,26,20,12,1.0,1\n")
        .unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--shots", "shots.csv", "--out-dir", "sim"],
    );
    assert_exit(&out, 0);
    let energy = read_pfm(&dir.path().join("sim/energy.pfm")).unwrap();
    let m = energy.width();
    for y in 0..m {
        for x in 0..m {
            let e = energy.at(x, y);
            assert!(
                (e - energy.at(m - 1 - x, y)).abs() <= 1e-12
                    && (e - energy.at(x, m - 1 - y)).abs() <= 1e-12,
                "field not symmetric at ({x}, {y})"
            );
        }
    }
    // A plateau, not a spike: the center region saturates near the full
    // shot weight while the corners stay low.
    assert!(energy.at(m / 2, m / 2) > 0.9);
    assert!(energy.at(1, 1) < 0.1);
}

#[test]
fn simulate_fast_and_exact_agree_on_interior_shots() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n0,22,24,20,16,1.25,1\n")
        .unwrap();
    // Variance-matched dose-map softness: sqrt(1/6) pixels cancels the
    // leading discretization error of the pixel-box sampling, which is what
    // brings the two paths inside the 1e-3 envelope.
    let sigma_prime = (1.0f64 / 6.0).sqrt().to_string();
    for (mode, dirname) in [("exact", "sim_exact"), ("fast", "sim_fast")] {
        let out = run_in(
            dir.path(),
            &[
                "simulate", "--config", "cfg.json", "--shots", "shots.csv", "--forward", mode,
                "--sigma-prime", &sigma_prime, "--out-dir", dirname,
            ],
        );
        assert_exit(&out, 0);
    }
    let exact = read_pfm(&dir.path().join("sim_exact/energy.pfm")).unwrap();
    let fast = read_pfm(&dir.path().join("sim_fast/energy.pfm")).unwrap();
    let peak = exact.max();
    assert!(peak > 0.0);
    let worst = exact
        .as_slice()
        .iter()
        .zip(fast.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(worst / peak <= 1e-3, "normalized deviation {}", worst / peak);
}

#[test]
fn malformed_shot_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n0,1,2\n").unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--shots", "shots.csv"],
    );
    assert_exit(&out, 2);
}

#[test]
fn invalid_physics_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{ "grid_size": 64, "ebl": { "sigma_f": -2.0 } }"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n").unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--shots", "shots.csv"],
    );
    assert_exit(&out, 3);
}

#[test]
fn missing_required_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    let sim = run_in(dir.path(), &["simulate", "--config", "cfg.json"]);
    assert_exit(&sim, 3);
    let mdp = run_in(dir.path(), &["mdp", "--config", "cfg.json"]);
    assert_exit(&mdp, 3);
}

#[test]
fn wrong_sized_target_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("target.pfm"), 32, 8, 8, 10, 10);
    let out = run_in(
        dir.path(),
        &["mdp", "--config", "cfg.json", "--target", "target.pfm", "--epochs", "2"],
    );
    assert_exit(&out, 3);
}

#[test]
fn fracture_writes_exact_cover_and_unfracturable_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("target.pfm"), 64, 20, 22, 24, 18);
    let out = run_in(
        dir.path(),
        &["fracture", "--config", "cfg.json", "--target", "target.pfm", "--out-dir", "frac"],
    );
    assert_exit(&out, 0);
    let shots = read_shots(&dir.path().join("frac/shots.csv")).unwrap();
    assert_eq!(shots.len(), 1);
    assert_eq!(
        (shots[0].x, shots[0].y, shots[0].w, shots[0].h),
        (20.0, 22.0, 24.0, 18.0)
    );

    // A 1-px-wide feature cannot be covered once w_min = 2.
    std::fs::write(
        dir.path().join("narrow.json"),
        r#"{ "grid_size": 64, "ebl": { "sigma_f": 2.0, "sigma_b": 6.0 },
             "bounds": { "w_min": 2, "h_min": 2 } }"#,
    )
    .unwrap();
    write_rect_pfm(&dir.path().join("line.pfm"), 64, 10, 10, 1, 20);
    let narrow = run_in(
        dir.path(),
        &["fracture", "--config", "narrow.json", "--target", "line.pfm"],
    );
    assert_exit(&narrow, 3);
}

#[test]
fn mdp_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("target.pfm"), 64, 20, 22, 24, 18);
    for out_dir in ["a", "b"] {
        let out = run_in(
            dir.path(),
            &[
                "mdp", "--config", "cfg.json", "--target", "target.pfm", "--epochs", "8",
                "--seed", "3", "--out-dir", out_dir,
            ],
        );
        assert_exit(&out, 0);
    }
    for name in [
        "shots_init.csv",
        "shots_best.csv",
        "trace.csv",
        "resist_init.pfm",
        "resist_best.pfm",
        "resist_best.pgm",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn mdp_trace_has_one_row_per_epoch_and_best_improves_on_init() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("target.pfm"), 64, 20, 22, 24, 18);
    let out = run_in(
        dir.path(),
        &[
            "mdp", "--config", "cfg.json", "--target", "target.pfm", "--epochs", "6",
            "--out-dir", "run",
        ],
    );
    assert_exit(&out, 0);
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "epoch,total,l2,pvb,sparsity,dose,overlap,lr");
    assert_eq!(lines.len(), 1 + 6);
    let total = |line: &str| -> f64 { line.split(',').nth(1).unwrap().parse().unwrap() };
    let first = total(lines[1]);
    let min = lines[1..].iter().map(|l| total(l)).fold(f64::INFINITY, f64::min);
    assert!(min <= first);
}

#[test]
fn ilt_writes_ordered_corner_rasters_and_band_column() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("wafer.pfm"), 16, 5, 5, 6, 6);
    let out = run_in(
        dir.path(),
        &[
            "ilt", "--config", "cfg.json", "--target", "wafer.pfm", "--epochs", "4",
            "--out-dir", "run",
        ],
    );
    assert_exit(&out, 0);
    let inner = read_pfm(&dir.path().join("run/print_inner.pfm")).unwrap();
    let nominal = read_pfm(&dir.path().join("run/print_nominal.pfm")).unwrap();
    let outer = read_pfm(&dir.path().join("run/print_outer.pfm")).unwrap();
    assert_eq!(inner.width(), 16);
    for k in 0..inner.len() {
        assert!(inner.as_slice()[k] <= nominal.as_slice()[k] + 1e-12);
        assert!(nominal.as_slice()[k] <= outer.as_slice()[k] + 1e-12);
    }
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let pvb: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(pvb > 0.0, "band should be positive with dose_delta > 0");
    }
}

#[test]
fn ilt_zero_dose_delta_zeroes_the_band_column() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{ "grid_size": 64, "ebl": { "sigma_f": 2.0, "sigma_b": 6.0 },
             "optical": { "dose_delta": 0.0 } }"#,
    )
    .unwrap();
    write_rect_pfm(&dir.path().join("wafer.pfm"), 16, 5, 5, 6, 6);
    let out = run_in(
        dir.path(),
        &[
            "ilt", "--config", "cfg.json", "--target", "wafer.pfm", "--epochs", "3",
            "--out-dir", "run",
        ],
    );
    assert_exit(&out, 0);
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let pvb: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(pvb, 0.0);
    }
}

#[test]
fn bench_emits_contract_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "bench", "--config", "cfg.json", "--counts", "1,4", "--trials", "1", "--out",
            "bench.csv",
        ],
    );
    assert_exit(&out, 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n_shots,exact_ms,fast_ms");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 3);
        let exact: f64 = cells[1].parse().unwrap();
        let fast: f64 = cells[2].parse().unwrap();
        assert!(exact > 0.0 && exact.is_finite());
        assert!(fast > 0.0 && fast.is_finite());
    }
    // The file copy matches stdout.
    assert_eq!(std::fs::read_to_string(dir.path().join("bench.csv")).unwrap(), stdout);
}

#[test]
fn thread_env_var_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n0,22,24,20,16,1.25,1\n")
        .unwrap();

    let ok = bin()
        .current_dir(dir.path())
        .args(["simulate", "--config", "cfg.json", "--shots", "shots.csv", "--out-dir", "s1"])
        .env("EBEAM_MDP_THREADS", "2")
        .output()
        .unwrap();
    assert_exit(&ok, 0);

    let bad = bin()
        .current_dir(dir.path())
        .args(["simulate", "--config", "cfg.json", "--shots", "shots.csv"])
        .env("EBEAM_MDP_THREADS", "lots")
        .output()
        .unwrap();
    assert_exit(&bad, 2);

    // The flag wins over the environment.
    let flag_wins = bin()
        .current_dir(dir.path())
        .args([
            "--threads", "1", "simulate", "--config", "cfg.json", "--shots", "shots.csv",
            "--out-dir", "s2",
        ])
        .env("EBEAM_MDP_THREADS", "lots")
        .output()
        .unwrap();
    assert_exit(&flag_wins, 0);

    // Thread count must not change numeric results.
    let a = std::fs::read(dir.path().join("s1/energy.pfm")).unwrap();
    let b = std::fs::read(dir.path().join("s2/energy.pfm")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shot_list_round_trips_through_simulate_outputs() {
    // The best-shot CSV written by mdp can seed a follow-up simulate run.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    write_rect_pfm(&dir.path().join("target.pfm"), 64, 20, 22, 24, 18);
    let mdp = run_in(
        dir.path(),
        &[
            "mdp", "--config", "cfg.json", "--target", "target.pfm", "--epochs", "3",
            "--out-dir", "run",
        ],
    );
    assert_exit(&mdp, 0);
    let sim = run_in(
        dir.path(),
        &[
            "simulate", "--config", "cfg.json", "--shots", "run/shots_best.csv", "--out-dir",
            "sim",
        ],
    );
    assert_exit(&sim, 0);
    let follow = read_pfm(&dir.path().join("sim/resist.pfm")).unwrap();
    let best = read_pfm(&dir.path().join("run/resist_best.pfm")).unwrap();
    assert_eq!(follow.as_slice(), best.as_slice());
}

fn path_of(p: &Path, tail: &str) -> PathBuf {
    p.join(tail)
}

#[test]
fn outputs_land_in_the_requested_directory_tree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_GRID_CONFIG).unwrap();
    std::fs::write(dir.path().join("shots.csv"), "id,x,y,w,h,d,q\n0,22,24,20,16,1.25,1\n")
        .unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--shots", "shots.csv", "--out-dir", "deep/nested/out"],
    );
    assert_exit(&out, 0);
    for tail in [
        "deep/nested/out/energy.pfm",
        "deep/nested/out/energy.pgm",
        "deep/nested/out/resist.pfm",
        "deep/nested/out/resist.pgm",
    ] {
        assert!(path_of(dir.path(), tail).exists(), "{tail} missing");
    }
}
