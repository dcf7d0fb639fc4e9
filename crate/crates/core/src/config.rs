//! Run configuration read from TOML; every field has a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptors::NndConfig;
use crate::error::{Error, Result};
use crate::eval::{BootstrapOptions, PersistenceOptions};
use crate::generators::GeneratorSpec;
use crate::optim::{RandomSearchOptions, SynthesisConfig};

/// Name of the verbatim config copy written into output directories.
pub const ECHO_FILE: &str = "config.toml";
/// Name of the fully resolved config (defaults filled in).
pub const RESOLVED_FILE: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; output `i` uses `child_seed(seed, i)`.
    pub seed: u64,
    pub n_outputs: usize,
    pub generator: Option<GeneratorSpec>,
    pub synthesis: SynthesisConfig,
    pub nnd: NndConfig,
    pub random_search: RandomSearchOptions,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            n_outputs: 10,
            generator: None,
            synthesis: SynthesisConfig::default(),
            nnd: NndConfig::default(),
            random_search: RandomSearchOptions::default(),
            eval: EvalConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub observation: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Radii `0, r_max / (count - 1), ..., r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusGrid {
    pub r_max: f64,
    pub count: usize,
}

impl RadiusGrid {
    pub fn radii(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.r_max],
            c => (0..c).map(|i| self.r_max * i as f64 / (c - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k_max: usize,
    /// Probe grid side for the contact distribution.
    pub probes: usize,
    pub scdf_radii: RadiusGrid,
    pub euler_radii: RadiusGrid,
    pub persistence: PersistenceOptions,
    /// Patterns above this size are randomly thinned before persistence.
    pub thin_to: Option<usize>,
    /// Diagram dimensions summed into the comparison distance.
    pub dims: Vec<u8>,
    pub bootstrap: BootstrapOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_max: 50,
            probes: 128,
            scdf_radii: RadiusGrid { r_max: 0.1, count: 51 },
            euler_radii: RadiusGrid { r_max: 0.1, count: 51 },
            persistence: PersistenceOptions::default(),
            thin_to: Some(2000),
            dims: vec![0, 1],
            bootstrap: BootstrapOptions::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.probes == 0 {
            return Err(Error::Config("eval.k_max and eval.probes must be positive".into()));
        }
        for (name, g) in [("scdf_radii", &self.scdf_radii), ("euler_radii", &self.euler_radii)] {
            if !(g.r_max >= 0.0) || g.count == 0 {
                return Err(Error::Config(format!("eval.{name} needs r_max >= 0 and count >= 1")));
            }
        }
        if !(self.persistence.r_cap > 0.0) {
            return Err(Error::Config("eval.persistence.r_cap must be positive".into()));
        }
        if let Some(t) = self.thin_to {
            if t > self.persistence.max_points {
                return Err(Error::Config(format!(
                    "eval.thin_to = {t} exceeds eval.persistence.max_points = {}",
                    self.persistence.max_points
                )));
            }
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d > 1) {
            return Err(Error::Config("eval.dims must be a non-empty subset of [0, 1]".into()));
        }
        let b = &self.bootstrap;
        if !(b.confidence > 0.0 && b.confidence < 1.0) || b.n_resamples == 0 {
            return Err(Error::Config("eval.bootstrap needs confidence in (0, 1) and n_resamples >= 1".into()));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, returning it with its original text for echoing.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        self.synthesis.validate()?;
        self.nnd.validate(&crate::Window::unit()).map_err(|e| Error::Config(format!("nnd: {e}")))?;
        self.eval.validate()?;
        if self.n_outputs == 0 {
            return Err(Error::Config("n_outputs must be at least 1".into()));
        }
        if self.random_search.iterations_per_point == 0 {
            return Err(Error::Config("random_search.iterations_per_point must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the original text (or the resolved config when there was none)
    /// and the resolved config into `dir`.
    pub fn echo(&self, original: Option<&str>, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let resolved = self.to_toml();
        let echo = dir.join(ECHO_FILE);
        std::fs::write(&echo, original.unwrap_or(&resolved)).map_err(|e| Error::io(&echo, e))?;
        let res = dir.join(RESOLVED_FILE);
        std::fs::write(&res, resolved).map_err(|e| Error::io(&res, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.synthesis.n = 64;
        cfg.synthesis.j = Some(3);
        cfg.generator = Some(GeneratorSpec::default_for("cox_circles").unwrap());
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = RunConfig::from_toml("[synthesis]\nn = 64\n\n[eval]\nk_max = 20\n").unwrap();
        assert_eq!(cfg.synthesis.n, 64);
        assert_eq!(cfg.synthesis.l, 8);
        assert_eq!(cfg.eval.k_max, 20);
        assert_eq!(cfg.eval.probes, 128);
    }

    #[test]
    fn violations_are_named() {
        let err = RunConfig::from_toml("[synthesis]\nn = 100\n").unwrap_err().to_string();
        assert!(err.contains("power of two"), "{err}");
        let err = RunConfig::from_toml("[synthesis]\nn = 64\nj = 9\n").unwrap_err().to_string();
        assert!(err.contains("j = 9"), "{err}");
        let err = RunConfig::from_toml("bogus = 1\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn echo_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let text = "seed = 3\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        cfg.echo(Some(text), dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join(ECHO_FILE)).unwrap(), text);
        let resolved = std::fs::read_to_string(dir.path().join(RESOLVED_FILE)).unwrap();
        assert_eq!(RunConfig::from_toml(&resolved).unwrap(), cfg);
    }

    #[test]
    fn radius_grid_includes_endpoints() {
        let r = RadiusGrid { r_max: 0.1, count: 11 }.radii();
        assert_eq!(r.len(), 11);
        assert_eq!(r[0], 0.0);
        assert_eq!(r[10], 0.1);
    }
}
