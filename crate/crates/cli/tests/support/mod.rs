//! Temp-dir workspace and binary runner for the CLI tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use taxrank::graph::{write_tsv, CategoryGraph};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", self.stdout))
    }
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn taxrank(args: &[&str]) -> Run {
    Command::new(env!("CARGO_BIN_EXE_taxrank"))
        .args(args)
        .output()
        .expect("binary runs")
        .into()
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, content: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, content).unwrap();
        p.to_string_lossy().into_owned()
    }

    pub fn write_json(&self, name: &str, v: &Value) -> String {
        self.write(name, &serde_json::to_string_pretty(v).unwrap())
    }

    pub fn graph_tsv(&self, name: &str, g: &CategoryGraph) -> String {
        let mut buf = Vec::new();
        write_tsv(g, &mut buf).unwrap();
        self.write(name, std::str::from_utf8(&buf).unwrap())
    }

    pub fn sinks(&self, name: &str, titles: &[&str]) -> String {
        let list: Vec<Value> = titles
            .iter()
            .map(|t| json!({"label": t, "category_title": t}))
            .collect();
        self.write_json(name, &Value::Array(list))
    }
}

pub fn topic_map(owner: &str, topics: &[(&str, u64)]) -> Value {
    json!({
        "owner": owner,
        "topics": topics.iter().map(|(t, c)| json!({"title": t, "count": c})).collect::<Vec<_>>(),
    })
}

pub fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}
