//! Dataset manifests: one path per line, optionally followed by a label.
//! Relative paths resolve against the manifest's directory. Blank lines and
//! lines starting with `#` are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub path: PathBuf,
    pub label: Option<String>,
}

pub fn parse(text: &str, base: &Path) -> Vec<Entry> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut parts = line.splitn(2, char::is_whitespace);
            let path = Path::new(parts.next().unwrap_or_default());
            let label = parts.next().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
            Entry {
                path: if path.is_absolute() { path.to_path_buf() } else { base.join(path) },
                label,
            }
        })
        .collect()
}

pub fn read(path: &Path) -> Result<Vec<Entry>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let entries = parse(&text, path.parent().unwrap_or(Path::new(".")));
    if entries.is_empty() {
        return Err(CliError::format(path, "manifest lists no files"));
    }
    Ok(entries)
}
