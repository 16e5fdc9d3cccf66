//! All-or-nothing file output: nothing lands at its final path until every
//! file has been written to a temporary sibling.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name: OsString = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, String)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, content: String) -> Result<()> {
        if path.is_dir() {
            anyhow::bail!("{} is a directory", path.display());
        }
        self.files.push((path.to_owned(), content));
        Ok(())
    }

    pub fn commit(self) -> Result<()> {
        let mut temps = Vec::with_capacity(self.files.len());
        for (path, content) in &self.files {
            let tmp = with_suffix(path, &format!(".tmp{}", std::process::id()));
            if let Err(e) = fs::write(&tmp, content) {
                for t in &temps {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(e).with_context(|| format!("cannot write {}", path.display()));
            }
            temps.push(tmp);
        }
        for (tmp, (path, _)) in temps.iter().zip(&self.files) {
            fs::rename(tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}
