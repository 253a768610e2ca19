//! Run configuration: a flat TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;
use willmore::harness::{Experiment, Overrides};
use willmore::initial::{parse_vertices_csv, Parameterization};
use willmore::schemes::SchemeConfig;
use willmore::Variant;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "WILLMORE_OUTPUT_ROOT";

/// Keys as they appear in the file. Everything is optional so that a named
/// preset can be refined key by key.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub seed: Option<String>,
    /// Radius for the `circle` seed.
    pub radius: Option<f64>,
    /// CSV of `x,y` rows used as the initial polygon.
    pub vertices_file: Option<PathBuf>,
    pub scheme: Option<String>,
    pub nodes: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub lambda: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max: Option<usize>,
    pub snapshot_times: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub emit_svg: Option<bool>,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

/// Parses `value` as a TOML value, falling back to a bare string so that
/// `--set scheme=linear` works without quotes.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

impl RawConfig {
    /// Reads `path` (if any) and applies `sets` in order.
    pub fn load(path: Option<&Path>, sets: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?
                .parse::<toml::Table>()
                .with_context(|| format!("parsing config {}", p.display()))?,
            None => toml::Table::new(),
        };
        for s in sets {
            let Some((key, value)) = s.split_once('=') else {
                bail!("override `{s}` is not of the form key=value");
            };
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        let mut raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .context("invalid configuration")?;
        // relative vertex files are relative to the config file
        if let (Some(cfg), Some(v)) = (path, raw.vertices_file.as_mut()) {
            if v.is_relative() {
                if let Some(dir) = cfg.parent() {
                    *v = dir.join(&*v);
                }
            }
        }
        Ok(raw)
    }

    fn name(&self) -> String {
        self.experiment
            .clone()
            .unwrap_or_else(|| "custom".to_string())
    }

    /// Output directory, resolved against the output root.
    pub fn output_dir(&self) -> PathBuf {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(self.name()));
        resolve_output(dir)
    }

    fn seed(&self) -> anyhow::Result<Option<Parameterization>> {
        if let Some(file) = &self.vertices_file {
            if self.seed.is_some() {
                bail!("give either `seed` or `vertices_file`, not both");
            }
            let text = std::fs::read_to_string(file)
                .with_context(|| format!("reading vertices {}", file.display()))?;
            return Ok(Some(Parameterization::Vertices(parse_vertices_csv(&text)?)));
        }
        let Some(key) = &self.seed else {
            if self.radius.is_some() {
                bail!("`radius` needs `seed = \"circle\"`");
            }
            return Ok(None);
        };
        Ok(Some(
            match (Parameterization::from_key(key)?, self.radius) {
                (Parameterization::Circle { .. }, Some(radius)) => {
                    if !(radius.is_finite() && radius > 0.0) {
                        bail!("circle radius must be positive, got {radius}");
                    }
                    Parameterization::Circle { radius }
                }
                (_, Some(_)) => bail!("`radius` only applies to the circle seed"),
                (p, None) => p,
            },
        ))
    }

    /// Builds and validates the experiment.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let seed = self.seed()?;
        let variant = self
            .scheme
            .as_deref()
            .map(str::parse::<Variant>)
            .transpose()?;
        let nodes = match (&seed, self.nodes) {
            (Some(Parameterization::Vertices(v)), None) => Some(v.len()),
            (_, n) => n,
        };
        if let Some(l) = self.lambda {
            if l < 0.0 {
                bail!("lambda must be nonnegative, got {l}");
            }
        }
        let overrides = Overrides {
            seed: seed.clone(),
            variant,
            nodes,
            dt: self.dt,
            t_end: self.t_end,
            lambda: self.lambda,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            snapshot_times: self.snapshot_times.clone(),
        };
        let experiment = match &self.experiment {
            Some(name) => Experiment::preset(name)?.with_overrides(&overrides)?,
            None => {
                let missing: Vec<&str> = [
                    ("seed", seed.is_none()),
                    ("nodes", nodes.is_none()),
                    ("dt", self.dt.is_none()),
                    ("t_end", self.t_end.is_none()),
                ]
                .into_iter()
                .filter_map(|(k, m)| m.then_some(k))
                .collect();
                if !missing.is_empty() {
                    bail!(
                        "without `experiment` the keys {} are required",
                        missing.join(", ")
                    );
                }
                let mut scheme = SchemeConfig::new(
                    variant.unwrap_or(Variant::Linear),
                    self.lambda.unwrap_or(0.0),
                    self.dt.unwrap_or_default(),
                )?;
                if let Some(t) = self.picard_tol {
                    scheme.picard_tol = t;
                }
                if let Some(m) = self.picard_max {
                    scheme.picard_max = m;
                }
                let e = Experiment {
                    name: self.name(),
                    seed: seed.unwrap_or(Parameterization::CircleSeed),
                    nodes: nodes.unwrap_or_default(),
                    scheme,
                    t_end: self.t_end.unwrap_or_default(),
                    snapshot_times: self.snapshot_times.clone().unwrap_or_default(),
                };
                e.validate()?;
                e
            }
        };
        Ok(RunConfig {
            experiment,
            output_dir: self.output_dir(),
            emit_svg: self.emit_svg.unwrap_or(false),
        })
    }
}

/// Joins `dir` onto the output root; absolute paths are kept.
pub fn resolve_output(dir: PathBuf) -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_default()
        .join(dir)
}
