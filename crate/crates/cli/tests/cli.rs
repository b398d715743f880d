use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fluxmech_core::fluxonium::{spectrum_sweep, uniform_grid, FluxoniumParams};
use fluxmech_core::SpectrumTrace;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fluxmech(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxmech"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FLUXMECH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_has_eleven_entries_each_naming_a_figure() {
    let dir = TempDir::new().unwrap();
    let o = fluxmech(&["list"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11, "{text}");
    for name in [
        "fluxonium-spectrum",
        "wavefunctions",
        "matrix-elements",
        "couplings",
        "eit",
        "mode-splitting",
        "cooling",
        "hybrid-spectrum",
        "rabi",
        "entanglement",
        "dispersive",
    ] {
        let line = lines.iter().find(|l| l.split_whitespace().next() == Some(name)).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.contains("Fig.") || line.contains("figure"), "{line}");
    }
}

#[test]
fn empty_config_runs_fluxonium_spectrum_with_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("empty.conf");
    fs::write(&cfg, "# nothing set\n").unwrap();
    let o = fluxmech(&["fluxonium-spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fluxonium-spectrum/spectrum.csv")).unwrap();
    let trace = SpectrumTrace::from_csv(&text).unwrap();
    assert_eq!(trace.len(), 501);
    assert_eq!(trace.columns.len(), 6);
    assert!(trace.columns.iter().enumerate().all(|(k, c)| c.name == format!("level_{k}")));
    let resolved = fs::read_to_string(dir.path().join("fluxonium-spectrum/config.resolved.txt")).unwrap();
    for key in ["e_j", "e_c", "e_l", "basis_size", "n_levels", "phi_min", "phi_max", "points"] {
        assert!(resolved.lines().any(|l| l.starts_with(key)), "{key} missing from\n{resolved}");
    }
}

#[test]
fn unknown_key_exits_2_and_names_nearest_key() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "EJ_GHz = 5.5\n").unwrap();
    let o = fluxmech(&["fluxonium-spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("EJ_GHz") && err.contains("`e_j`"), "{err}");
    assert!(!dir.path().join("fluxonium-spectrum").exists());
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "omega_m = 6 MHz\n\ngamma_m 5 Hz\n").unwrap();
    let o = fluxmech(&["eit", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 1"), "{}", stderr(&o));

    fs::write(&cfg, "omega_m = 6 MHz\nomega_m = 4 MHz\n").unwrap();
    let o = fluxmech(&["eit", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("conflicting"), "{}", stderr(&o));

    let o = fluxmech(&["eit", "--set", "omega_m=4 mT"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omega_m"), "{}", stderr(&o));

    let o = fluxmech(&["eit", "--threads", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = fluxmech(&["eitt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`eit`"), "{}", stderr(&o));
}

#[test]
fn units_are_normalized_in_resolved_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("units.conf");
    fs::write(&cfg, "omega_m = 6 MHz  # mechanical\nphi_e = 0.3\nmass = 0.75 pg\nb_field = 250 uT\n").unwrap();
    let o = fluxmech(&["cooling", "--dry-run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value = |key: &str| {
        text.lines()
            .find(|l| l.split_whitespace().next() == Some(key))
            .and_then(|l| l.split_once('='))
            .map(|(_, v)| v.trim().to_string())
            .unwrap()
    };
    assert_eq!(value("omega_m"), "6e6 Hz");
    assert_eq!(value("phi_e"), "3e-1 Phi0");
    assert_eq!(value("mass"), "7.5e-16 kg");
    assert_eq!(value("b_field"), "2.5e-4 T");
    assert!(!dir.path().join("cooling").exists());
}

#[test]
fn numerical_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    // qubit relaxation far below g_z: adiabatic elimination does not apply
    let o = fluxmech(&["cooling", "--set", "gamma=1kHz", "--set", "gamma_phi=1kHz", "--set", "spectrum_points=11"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("fluxmech: cooling:"), "{}", stderr(&o));
}

#[test]
fn identical_config_gives_byte_identical_outputs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for scenario in ["eit", "entanglement"] {
        let args = [scenario, "--set", "points=201"];
        assert!(fluxmech(&args, a.path()).status.success());
        assert!(fluxmech(&[scenario, "--set", "points=201", "--threads", "1"], b.path()).status.success());
        let names: Vec<_> = fs::read_dir(a.path().join(scenario)).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert!(names.len() >= 4);
        for n in names {
            let x = fs::read(a.path().join(scenario).join(&n)).unwrap();
            let y = fs::read(b.path().join(scenario).join(&n)).unwrap();
            assert!(x == y, "{scenario}/{n:?} differs");
        }
    }
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = TempDir::new().unwrap();
    let o = fluxmech(&["matrix-elements", "--set", "points=21"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let run = dir.path().join("matrix-elements");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<(String, String)> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect();
    let mut on_disk: Vec<String> = fs::read_dir(&run)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    assert_eq!(listed.iter().map(|l| l.0.clone()).collect::<Vec<_>>(), on_disk);
    for (path, hash) in &listed {
        let digest = format!("{:x}", Sha256::digest(fs::read(run.join(path)).unwrap()));
        assert_eq!(&digest, hash, "{path}");
    }
    let config = fs::read(run.join("config.resolved.txt")).unwrap();
    let config_hash = format!("{:x}", Sha256::digest(&config));
    assert_eq!(manifest["config_sha256"], config_hash);
    assert_eq!(manifest["figure"], "Fig. 2a");
}

#[test]
fn emitted_csv_reproduces_the_library_trace() {
    let dir = TempDir::new().unwrap();
    let o = fluxmech(&["fluxonium-spectrum", "--set", "points=11", "--no-plot"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fluxonium-spectrum/spectrum.csv")).unwrap();
    let parsed = SpectrumTrace::from_csv(&text).unwrap();
    assert_eq!(parsed.to_csv(), text);
    assert_eq!(parsed.metadata["scenario"], "fluxonium-spectrum");
    assert_eq!(parsed.metadata["config_sha256"].len(), 64);

    let direct = spectrum_sweep(&FluxoniumParams::default(), &uniform_grid(0.0, 1.0, 11)).unwrap();
    assert_eq!(parsed.grid, direct.grid);
    assert_eq!(parsed.columns, direct.columns);
    assert!(!dir.path().join("fluxonium-spectrum/plot.py").exists());
}

#[test]
fn output_root_defaults_to_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fluxmech"))
        .args(["couplings", "--set", "points=5"])
        .env("FLUXMECH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("couplings/couplings.csv").exists());
    assert!(dir.path().join("couplings/plot.py").exists());
}
