//! Outputs are staged in memory and only written once every computation has
//! succeeded, so a failing run leaves no partial artifacts behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((rel.into(), bytes.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, rel: impl Into<PathBuf>, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
        bytes.push(b'\n');
        self.add(rel, bytes);
    }

    /// Write everything under `out`. Refuses to overwrite any of `inputs`.
    pub fn commit(self, out: &Path, inputs: &[PathBuf]) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::input(format!("{}: {e}", p.display()));
        let inputs: Vec<PathBuf> = inputs.iter().filter_map(|p| fs::canonicalize(p).ok()).collect();
        for (rel, _) in &self.files {
            let target = out.join(rel);
            if let Ok(canon) = fs::canonicalize(&target) {
                if inputs.contains(&canon) {
                    return Err(CliError::input(format!(
                        "output {} would overwrite an input file",
                        target.display()
                    )));
                }
            }
        }

        let mut staged = Vec::with_capacity(self.files.len());
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (rel, bytes) in &self.files {
            let target = out.join(rel);
            let parent = target.parent().unwrap_or(out);
            if let Err(e) = fs::create_dir_all(parent) {
                cleanup(&staged);
                return Err(io(parent, e));
            }
            let mut tmp = target.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                return Err(io(&tmp, e));
            }
            staged.push((tmp, target));
        }
        for (i, (tmp, target)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, target) {
                cleanup(&staged[i..]);
                return Err(io(target, e));
            }
        }
        Ok(())
    }
}

/// File stem for a series name: lowercase, path-safe.
pub fn stem_for(name: &str) -> String {
    let s: String = name
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".to_string()
    } else {
        s
    }
}

/// Distinct stems for `names`, avoiding `reserved`; clashes get `-2`, `-3`, ...
pub fn unique_stems<'a>(names: impl IntoIterator<Item = &'a str>, reserved: &[&str]) -> Vec<String> {
    let mut taken: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    for name in names {
        let base = stem_for(name);
        let mut stem = base.clone();
        let mut k = 2;
        while taken.contains(&stem) {
            stem = format!("{base}-{k}");
            k += 1;
        }
        taken.push(stem.clone());
        out.push(stem);
    }
    out
}
