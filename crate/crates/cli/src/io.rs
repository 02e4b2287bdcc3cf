use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use crate::InputError;

/// Reads an input file; a missing or unreadable file is an input error.
pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

pub fn read_input_string(path: &Path) -> Result<String> {
    String::from_utf8(read_input(path)?).map_err(|_| InputError(format!("{} is not UTF-8", path.display())).into())
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so a failed run never leaves a truncated output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes several outputs once all of them have been produced.
pub fn write_all(outputs: &[(&Path, &[u8])]) -> Result<()> {
    for (path, bytes) in outputs {
        write_atomic(path, bytes)?;
    }
    Ok(())
}
