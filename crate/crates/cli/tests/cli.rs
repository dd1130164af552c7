//! End-to-end tests of the `aeroqkd` binary: exit codes, file outputs,
//! determinism, and the synthetic-layer generator round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeroqkd"))
}

fn workspace_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table1.cfg")
}

fn fast_config(dir: &Path) -> PathBuf {
    // The shipped scenario with a coarser grid and time step for quick runs.
    let text = std::fs::read_to_string(workspace_config())
        .unwrap()
        .replace("resolution = 512", "resolution = 128")
        .replace("time_step_s = 1.0", "time_step_s = 8.0");
    let path = dir.join("fast.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn validate_accepts_shipped_config() {
    let out = bin().args(["validate", "--config"]).arg(workspace_config()).output().unwrap();
    run_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("sha256:"));
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let out = bin().args(["validate", "--config", "/nonexistent.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_error_exits_with_config_code_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = std::fs::read_to_string(workspace_config())
        .unwrap()
        .replace("signal_intensity = 0.8\n", "");
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, bad).unwrap();
    let out = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("signal_intensity"), "stderr: {stderr}");
}

#[test]
fn scenario_error_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    // Range shorter than the closest approach: a scenario-level error.
    let bad = std::fs::read_to_string(workspace_config())
        .unwrap()
        .replace("max_range_m = 60000", "max_range_m = 12000");
    let path = dir.path().join("short.cfg");
    std::fs::write(&path, bad).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&path)
        .args(["--out-dir"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "config-category scenario error");
}

#[test]
fn malformed_grid_exits_with_domain_code() {
    let dir = tempfile::tempdir().unwrap();
    let grid_path = dir.path().join("broken.dat");
    std::fs::write(&grid_path, "DENSITY-GRID v1\n2 2 0.1 0.1 0 0\n1 1 1\n").unwrap();
    let cfg = std::fs::read_to_string(fast_config(dir.path()))
        .unwrap()
        .replace("source = synthetic", &format!("source = file\npath = {}", grid_path.display()));
    // Strip synthetic-only keys.
    let cfg: String = cfg
        .lines()
        .filter(|l| {
            !(l.starts_with("wall_density")
                || l.starts_with("thickness_m")
                || l.starts_with("chord_m")
                || l.starts_with("resolution")
                || l.starts_with("phase_center_frac")
                || l.starts_with("structure"))
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = dir.path().join("broken.cfg");
    std::fs::write(&path, cfg).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "grid value-count mismatch is a domain error");
}

#[test]
fn run_without_boundary_layer_has_unit_strehl_column() {
    let dir = tempfile::tempdir().unwrap();
    let config = fast_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--no-boundary-layer", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "t,alpha_deg,l_m,theta_deg,deflection_mrad,offset_m,opd_rms_m,strehl,eta0,eta,loss_db,q_mu,e_mu,r_bps,phase"
    );
    let strehl_col = header.split(',').position(|c| c == "strehl").unwrap();
    for line in lines {
        let strehl: f64 = line.split(',').nth(strehl_col).unwrap().parse().unwrap();
        assert_eq!(strehl, 1.0);
    }
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn time_step_override_controls_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = fast_config(dir.path());
    let out_dir = dir.path().join("out");
    // t_max ~ 244.8 s; dt = 200 leaves k in {-1, 0, 1}: three records.
    let out = bin()
        .args(["run", "--no-boundary-layer", "--time-step", "200", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "header plus one row per timestep");
}

#[test]
fn compare_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = fast_config(dir.path());
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args(["compare", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&out_dir)
            .env("SOURCE_DATE_EPOCH", "1700000000")
            .output()
            .unwrap();
        run_ok(&out);
        let mut files = Vec::new();
        for name in ["timeseries_with_bl.csv", "timeseries_no_bl.csv", "summary.txt"] {
            files.push((name.to_string(), std::fs::read(out_dir.join(name)).unwrap()));
        }
        outputs.push(files);
    }
    for ((name, a), (_, b)) in outputs[0].iter().zip(&outputs[1]) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn synth_layer_emits_loadable_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = fast_config(dir.path());
    let grid_path = dir.path().join("layer.dat");
    let out = bin()
        .args(["synth-layer", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&grid_path)
        .output()
        .unwrap();
    run_ok(&out);
    let grid = aeroqkd_core::flow::load_density_grid(&grid_path).unwrap();
    assert_eq!((grid.nx, grid.ny), (129, 65));

    // A file-sourced run over the emitted grid matches the synthetic run.
    let file_cfg_text = std::fs::read_to_string(&config).unwrap().replace(
        "source = synthetic",
        &format!("source = file\npath = {}\n#", grid_path.display()),
    );
    // Comment out synthetic-only keys the file source does not take.
    let file_cfg_text = file_cfg_text
        .lines()
        .map(|l| {
            if l.starts_with("wall_density")
                || l.starts_with("thickness_m")
                || l.starts_with("chord_m")
                || l.starts_with("resolution")
                || l.starts_with("phase_center_frac")
                || l.starts_with("structure")
            {
                format!("# {l}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let file_cfg = dir.path().join("file.cfg");
    std::fs::write(&file_cfg, file_cfg_text).unwrap();
    for (cfg, sub) in [(&config, "synth"), (&file_cfg, "file")] {
        let out = bin()
            .args(["run", "--config"])
            .arg(cfg)
            .arg("--out-dir")
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        run_ok(&out);
    }
    let a = std::fs::read_to_string(dir.path().join("synth/timeseries.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("file/timeseries.csv")).unwrap();
    assert_eq!(a, b, "file-ingested grid must reproduce the synthetic run");
}
