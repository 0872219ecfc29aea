//! Output directory bookkeeping: every file written by a run is tracked so a
//! failed run can remove what it produced.

use std::fs;
use std::path::{Path, PathBuf};

use pinnduct::{Error, Result};

pub struct OutputDir {
    root: PathBuf,
    created: Vec<PathBuf>,
    written: Vec<PathBuf>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl OutputDir {
    /// Creates `root` and any missing parents.
    pub fn create(root: &Path) -> Result<Self> {
        let mut created = Vec::new();
        let mut cur = Some(root);
        while let Some(dir) = cur {
            if dir.as_os_str().is_empty() || dir.exists() {
                break;
            }
            created.push(dir.to_path_buf());
            cur = dir.parent();
        }
        fs::create_dir_all(root).map_err(io(root))?;
        if !root.is_dir() {
            return Err(Error::config(format!("{} is not a directory", root.display())));
        }
        Ok(Self {
            root: root.to_path_buf(),
            created,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Removes written files and the directories this run created.
    pub fn discard(self) {
        for f in &self.written {
            let _ = fs::remove_file(f);
        }
        // innermost first; only empty directories go
        for d in &self.created {
            let _ = fs::remove_dir(d);
        }
    }
}
