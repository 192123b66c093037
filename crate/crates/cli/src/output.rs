use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Files written by one command; removed again if the command fails.
#[derive(Debug)]
pub struct Outputs {
    created_dirs: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new() -> Self {
        Self { created_dirs: Vec::new(), files: Vec::new() }
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<(), CliError> {
        if dir.as_os_str().is_empty() || dir.is_dir() {
            return Ok(());
        }
        if let Some(parent) = dir.parent() {
            self.ensure_dir(parent)?;
        }
        fs::create_dir(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        self.created_dirs.push(dir.to_path_buf());
        Ok(())
    }

    pub fn write(&mut self, path: impl AsRef<Path>, bytes: &[u8]) -> Result<(), CliError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        self.files.push(path.to_path_buf());
        fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }

    /// Removes everything this instance created.
    pub fn discard(self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }

    /// Runs `body`, discarding its outputs on failure.
    pub fn run<T>(body: impl FnOnce(&mut Outputs) -> Result<T, CliError>) -> Result<T, CliError> {
        let mut outs = Outputs::new();
        match body(&mut outs) {
            Ok(v) => Ok(v),
            Err(e) => {
                outs.discard();
                Err(e)
            }
        }
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Self::new()
    }
}
