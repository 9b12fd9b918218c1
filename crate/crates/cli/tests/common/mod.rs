#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// A scratch directory that holds configs, inputs and run directories.
pub struct Workspace {
    dir: TempDir,
}

pub struct RunOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutcome {
    pub fn ok(&self) -> bool {
        self.code == 0
    }

    pub fn error(&self) -> Value {
        serde_json::from_str(&self.stderr).unwrap_or(Value::Null)
    }
}

impl From<Output> for RunOutcome {
    fn from(o: Output) -> Self {
        RunOutcome {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn write_config(&self, name: &str, cfg: &Value) -> PathBuf {
        let p = self.dir.path().join(format!("{name}.json"));
        fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        p
    }

    /// Runs `covpow <verb> <config>` with the workspace as output root.
    pub fn run(&self, verb: &str, name: &str, cfg: &Value) -> RunOutcome {
        self.run_into(verb, name, cfg, None)
    }

    pub fn run_into(
        &self,
        verb: &str,
        name: &str,
        cfg: &Value,
        output_dir: Option<&str>,
    ) -> RunOutcome {
        let config = self.write_config(name, cfg);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_covpow"));
        cmd.current_dir(self.dir.path())
            .env("COVPOW_OUTPUT_ROOT", self.dir.path())
            .arg(verb)
            .arg(&config);
        if let Some(o) = output_dir {
            cmd.arg("--output-dir").arg(o);
        }
        cmd.output().unwrap().into()
    }

    pub fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.dir.path().join(rel)).unwrap()
    }

    pub fn json(&self, rel: &str) -> Value {
        serde_json::from_str(&self.read(rel)).unwrap()
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.dir.path().join(rel).exists()
    }

    /// Entries of the workspace root whose names start with `.`.
    pub fn hidden_entries(&self) -> Vec<String> {
        fs::read_dir(self.dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with('.'))
            .collect()
    }
}

/// Every file under `dir` except `manifest.json`, keyed by relative path.
pub fn artifact_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    collect(dir, dir, &mut out);
    out.remove("manifest.json");
    out
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            let rel = p
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .replace('\\', "/");
            out.insert(rel, fs::read(&p).unwrap());
        }
    }
}

/// The manifest without its timestamp.
pub fn stable_manifest(dir: &Path) -> Value {
    let mut m: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m.as_object_mut().unwrap().remove("created_unix");
    m
}

pub fn split() -> Value {
    serde_json::json!({"train_frac": 0.5, "val_frac": 0.25, "test_frac": 0.25, "seed": 1})
}

/// Small two-class dataset simulated into `two/`.
pub fn simulate_two_class(ws: &Workspace) {
    let out = ws.run(
        "simulate",
        "two",
        &serde_json::json!({
            "schema_version": "1",
            "output_dir": "two",
            "seed": 3,
            "two_class": {"n_nodes": 6, "recordings_per_class": 6, "windows_per_class": 60,
                          "window": {"length": 32, "overlap": 0.5}}
        }),
    );
    assert!(out.ok(), "{}", out.stderr);
}
