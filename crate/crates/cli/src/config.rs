//! Experiment configuration files (TOML) and sweep expansion.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Schema version understood by this build.
pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ParityProtocol,
    ExcitationProtocol,
    Ipr,
    Kz,
    Dispersion,
    Sensitivity,
    Imager,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ParityProtocol => "parity-protocol",
            ExperimentKind::ExcitationProtocol => "excitation-protocol",
            ExperimentKind::Ipr => "ipr",
            ExperimentKind::Kz => "kz",
            ExperimentKind::Dispersion => "dispersion",
            ExperimentKind::Sensitivity => "sensitivity",
            ExperimentKind::Imager => "imager",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// One swept parameter: either explicit `values`, or `points` samples from
/// `from` to `to` inclusive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub scale: GridScale,
}

impl SweepAxis {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let name = &self.param;
        let values = match (&self.values, self.from, self.to, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(from), Some(to), Some(points)) => match points {
                0 => Vec::new(),
                1 => vec![from],
                _ => {
                    if self.scale == GridScale::Log && !(from > 0.0 && to > 0.0) {
                        bail!("sweep `{name}`: a log grid needs positive endpoints, got {from}..{to}");
                    }
                    (0..points)
                        .map(|i| {
                            let f = i as f64 / (points - 1) as f64;
                            match self.scale {
                                _ if i == 0 => from,
                                _ if i == points - 1 => to,
                                GridScale::Linear => from + f * (to - from),
                                GridScale::Log => (from.ln() + f * (to.ln() - from.ln())).exp(),
                            }
                        })
                        .collect()
                }
            },
            _ => bail!("sweep `{name}`: give either `values` or all of `from`, `to`, `points`"),
        };
        if values.is_empty() {
            bail!("sweep `{name}`: grid is empty");
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            bail!("sweep `{name}`: non-finite grid value {x}");
        }
        Ok(values)
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_version: u32,
    pub kind: ExperimentKind,
    /// Stem of the output files; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub realizations: usize,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

/// A point of the sweep grid: the swept values in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub values: Vec<(String, f64)>,
}

/// A parsed config plus its provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: ExperimentConfig,
    /// SHA-256 of the file bytes, hex.
    pub hash: String,
    pub name: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
        let config = parse(text).with_context(|| format!("invalid config {}", path.display()))?;
        let name = match &config.name {
            Some(n) => n.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| config.kind.as_str().to_owned()),
        };
        Ok(Self {
            path: path.to_owned(),
            hash: hex::encode(Sha256::digest(&bytes)),
            config,
            name,
        })
    }
}

/// Parses and structurally validates a config document.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text)?;
    if config.spec_version != SPEC_VERSION {
        bail!(
            "spec_version: this build reads version {SPEC_VERSION}, got {}",
            config.spec_version
        );
    }
    if config.realizations == 0 {
        bail!("realizations: must be >= 1");
    }
    if let Some(name) = &config.name {
        if name.is_empty() || name.contains(['/', '\\']) {
            bail!("name: must be a plain non-empty file stem, got {name:?}");
        }
    }
    let mut seen = BTreeSet::new();
    for axis in &config.sweep {
        if !seen.insert(axis.param.as_str()) {
            bail!("sweep `{}`: parameter swept twice", axis.param);
        }
        axis.grid()?;
    }
    Ok(config)
}

impl ExperimentConfig {
    /// Cartesian product of the sweep axes, first axis slowest. A config
    /// without sweeps has a single point.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let axes: Vec<(String, Vec<f64>)> = self
            .sweep
            .iter()
            .map(|a| Ok((a.param.clone(), a.grid()?)))
            .collect::<Result<_>>()?;
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((name.clone(), v));
                        q
                    })
                })
                .collect();
        }
        Ok(points
            .into_iter()
            .enumerate()
            .map(|(index, values)| GridPoint { index, values })
            .collect())
    }

    /// Base parameters with the point's swept values substituted.
    pub fn params_at(&self, point: &GridPoint) -> toml::Table {
        let mut table = self.params.clone();
        for (name, v) in &point.values {
            table.insert(name.clone(), toml::Value::Float(*v));
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
spec_version = 1
kind = "kz"
seed = 3

[params]
n = 40

[[sweep]]
param = "prep_time"
from = 1.0
to = 100.0
points = 3
scale = "log"

[[sweep]]
param = "coupling"
values = [1.0, 2.0]
"#;

    #[test]
    fn grid_is_a_cartesian_product() {
        let c = parse(BASE).unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1].values, vec![("prep_time".into(), 1.0), ("coupling".into(), 2.0)]);
        assert!((g[2].values[0].1 - 10.0).abs() < 1e-12);
        assert_eq!(c.params_at(&g[5])["coupling"], toml::Value::Float(2.0));
    }

    #[test]
    fn empty_grids_are_rejected() {
        let bad = BASE.replace("points = 3", "points = 0");
        assert!(parse(&bad).unwrap_err().to_string().contains("grid is empty"));
        let bad = BASE.replace("values = [1.0, 2.0]", "values = []");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = parse(&BASE.replace("seed = 3", "seed = 3\nbogus = 1")).unwrap_err();
        assert!(format!("{err:#}").contains("bogus"), "{err:#}");
        let err = parse(&BASE.replace("spec_version = 1", "spec_version = 9")).unwrap_err();
        assert!(err.to_string().contains("spec_version"));
        let err = parse(&BASE.replace("scale = \"log\"", "scale = \"log\"\nvalues = [1.0]")).unwrap_err();
        assert!(err.to_string().contains("prep_time"));
    }
}
