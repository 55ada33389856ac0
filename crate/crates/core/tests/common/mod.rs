#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use memnet::pipeline::Dataset;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn memnet(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_memnet"))
        .args(args)
        .output()
        .expect("spawn memnet");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn write_csv(dir: &Path, name: &str, ds: &Dataset) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, ds.to_csv()).expect("write dataset");
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// First stdout line as JSON.
pub fn json_line(r: &Run) -> serde_json::Value {
    let line = r.stdout.lines().next().unwrap_or_else(|| panic!("no output; stderr: {}", r.stderr));
    serde_json::from_str(line).expect("json line")
}
