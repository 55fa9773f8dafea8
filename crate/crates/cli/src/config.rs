//! Optional config file of `key = value` lines (TOML syntax). Flags given
//! on the command line take precedence over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{io_error, CliError};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Spacings {
    One(f64),
    Many(Vec<f64>),
}

impl Spacings {
    pub fn into_vec(self) -> Vec<f64> {
        match self {
            Spacings::One(h) => vec![h],
            Spacings::Many(hs) => hs,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub rho: Option<PathBuf>,
    pub psi_output: Option<PathBuf>,
    pub psi_only: Option<bool>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub surface: Option<String>,
    pub h: Option<Spacings>,
    pub stage: Option<String>,
    pub sigma: Option<f64>,
    pub threshold: Option<f64>,
    pub stencil: Option<usize>,
    pub order: Option<String>,
    pub eps_morph: Option<f64>,
    pub eps_synth: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub density: Option<bool>,
    pub level: Option<f64>,
    pub format: Option<String>,
    pub channels: Option<bool>,
    pub threads: Option<usize>,
    pub min_spacing: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag, else file value, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag, else file value; missing in both is a usage error.
pub fn require<T>(flag: Option<T>, file: Option<T>, key: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("`{key}` is required (flag or config file)")))
}

pub fn parse<T>(s: &str, key: &str) -> Result<T, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_and_lists() {
        let c: FileConfig =
            toml::from_str("surface = \"torus\"\nh = [0.5, 0.25]\nsigma = 0.02\n").unwrap();
        assert_eq!(c.surface.as_deref(), Some("torus"));
        assert_eq!(c.h.unwrap().into_vec(), vec![0.5, 0.25]);
        let c: FileConfig = toml::from_str("h = 0.5").unwrap();
        assert_eq!(c.h.unwrap().into_vec(), vec![0.5]);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("sigmaa = 1.0").is_err());
    }

    #[test]
    fn flags_win() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
        assert!(require::<u8>(None, None, "x").is_err());
    }
}
