use std::path::{Path, PathBuf};

use pointsynth::config::RunConfig;
use pointsynth::geometry::read_pattern;
use pointsynth::PointPattern;

use crate::error::{CliError, CliResult};

/// The config file if given, else defaults; returns the original text too.
pub fn load_config(path: Option<&Path>) -> CliResult<(RunConfig, Option<String>)> {
    match path {
        Some(p) => {
            let (cfg, text) = RunConfig::load(p).map_err(CliError::input)?;
            Ok((cfg, Some(text)))
        }
        None => Ok((RunConfig::default(), None)),
    }
}

pub fn load_pattern(path: &Path) -> CliResult<PointPattern> {
    read_pattern(path).map_err(CliError::input)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("creating {}: {e}", path.display())))
}

/// Pattern files in a directory (by header), sorted by name.
pub fn patterns_in(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let head = std::fs::read(&path)?;
        if head.starts_with(b"# pointsynth v1") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}
