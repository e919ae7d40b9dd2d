#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_spintomo");

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SPINTOMO_VALIDITY_TOL").output().expect("spawn spintomo")
}

/// Output files of the pipeline stages, in order.
pub const STAGES: [&str; 5] = ["observed.json", "tomogram.json", "coeffs.json", "detection.json", "corrected.json"];

/// Runs inject, simulate, invert, detect and correct on the reference
/// fixture inside `dir`; returns the stage outputs or the failing stderr.
pub fn run_pipeline(dir: &Path, extra: &[&str]) -> Result<Vec<(String, Vec<u8>)>, String> {
    let reference = fixture("two_qubit_ref.json");
    let reference = reference.to_str().unwrap();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["inject".into(), reference.into(), "--error".into(), "X1".into(), "-o".into(), p(STAGES[0])],
        vec![
            "tomo-simulate".into(),
            p(STAGES[0]),
            "--noise".into(),
            "1e-3".into(),
            "--seed".into(),
            "0".into(),
            "-o".into(),
            p(STAGES[1]),
        ],
        vec!["tomo-invert".into(), p(STAGES[1]), "-o".into(), p(STAGES[2])],
        vec!["detect".into(), reference.into(), p(STAGES[2]), "-o".into(), p(STAGES[3])],
        vec![
            "correct".into(),
            p(STAGES[0]),
            "--report".into(),
            p(STAGES[3]),
            "--reference".into(),
            reference.into(),
            "-o".into(),
            p(STAGES[4]),
        ],
    ];
    for step in &steps {
        let mut args: Vec<&str> = extra.to_vec();
        args.extend(step.iter().map(String::as_str));
        let out = run(&args);
        if !out.status.success() {
            return Err(format!("{} failed: {}", step[0], String::from_utf8_lossy(&out.stderr)));
        }
    }
    STAGES.iter().map(|s| std::fs::read(dir.join(s)).map(|b| (s.to_string(), b)).map_err(|e| e.to_string())).collect()
}

/// Compares stage outputs with the golden files; `UPDATE_GOLDEN=1`
/// rewrites them instead.
pub fn check_golden(outputs: &[(String, Vec<u8>)]) -> Result<(), String> {
    let dir = golden_dir();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1");
    for (name, bytes) in outputs {
        let path = dir.join(name);
        if update {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
            continue;
        }
        let want = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if &want != bytes {
            return Err(format!("{name} differs from the golden copy"));
        }
    }
    Ok(())
}
