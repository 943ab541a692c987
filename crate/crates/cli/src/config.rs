//! Experiment configuration: TOML schema, dotted overrides, validation and hashing.

use std::path::{Path, PathBuf};

use nldiff::fundamental::Exclusion;
use nldiff::rescaling::{FamilyKind, ScalingFamily, ScalingLaw};
use nldiff::solver::SolveConfig;
use nldiff::{Grid, KernelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ScalingFamily>,
    pub run: RunSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Absorption exponent; omit for the linear equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub ball_radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DatumKind {
    /// `A |x|^{-α}` with `A`, `α` from the family section.
    PowerLaw,
    /// `M δ`, with `M` from `limit.mass` or the mass audit of the fine solve.
    PointSource,
    /// The family's representative datum itself.
    Family,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    /// Defaults to `power_law` for the power-law families and `point_source` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Absorption coefficient of the limit problem; defaults to the family's `c0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Time step of the reference solve; defaults to `run.dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub k_ladder: Vec<f64>,
    /// Window factors `R` of the metric `sup_{|x| <= R √t}`.
    pub windows: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    /// Points per axis of the grid holding the rescaled fields `u^k(·, 1)`.
    pub target_points: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { k_ladder: vec![4.0, 8.0, 16.0, 32.0], windows: vec![2.0, 4.0], fit_window: None, target_points: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    pub t_list: Vec<f64>,
    pub exclusion: Exclusion,
    /// Time of the `w-snapshot` fields.
    pub w_time: f64,
}

impl Default for BarrierSection {
    fn default() -> Self {
        Self { t_list: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0], exclusion: Exclusion::default(), w_time: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Splits `a.b.c=value` into its key path and value.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
    if path.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    // values that are not valid TOML literals are taken as bare strings
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    Ok((path, value))
}

pub fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("override paths are non-empty");
    let mut node = table;
    for (depth, segment) in parents.iter().enumerate() {
        let entry = node.entry(segment.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override path `{}` crosses a non-table value", path[..=depth].join(".")))
        })?;
    }
    node.insert(last.clone(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for spec in overrides {
            let (path, value) = parse_override(spec)?;
            apply_override(&mut table, &path, value)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn solve_config(&self) -> SolveConfig {
        let mut cfg = SolveConfig::new(
            self.kernel,
            self.grid,
            self.run.p,
            self.run.dt,
            self.run.t_end,
            self.run.snapshot_times.clone(),
        );
        cfg.ball_radii = self.run.ball_radii.clone();
        cfg
    }

    pub fn family(&self) -> Result<ScalingFamily, CliError> {
        self.family.ok_or_else(|| CliError::Config("family: section required by this subcommand".into()))
    }

    /// Scaling law of the run. Linear runs get a supercritical placeholder
    /// exponent; `f(k)` does not depend on `p`.
    pub fn law(&self) -> Result<ScalingLaw, CliError> {
        let family = self.family()?;
        let p = self.run.p.unwrap_or(family.critical_exponent() + 1.0);
        ScalingLaw::new(family, p).map_err(|e| field_error("run.p", e))
    }

    pub fn limit_datum(&self) -> DatumKind {
        self.limit.datum.unwrap_or(match self.family {
            Some(f) if is_power_law(f.kind()) => DatumKind::PowerLaw,
            _ => DatumKind::PointSource,
        })
    }

    /// Snapshot times `k^2` of the rescaling ladder.
    pub fn ladder_times(&self) -> Vec<f64> {
        self.compare.k_ladder.iter().map(|k| k * k).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.kernel.dimension() != self.grid.dimension() {
            return Err(CliError::Config(format!(
                "kernel.dimension: {} does not match grid.dimension {}",
                self.kernel.dimension(),
                self.grid.dimension()
            )));
        }
        self.kernel.check_resolved(&self.grid).map_err(|e| field_error("kernel.support_radius", e))?;
        if !(self.run.dt.is_finite() && self.run.dt > 0.0) {
            return Err(CliError::Config(format!("run.dt: must be positive, got {}", self.run.dt)));
        }
        if !(self.run.t_end.is_finite() && self.run.t_end > 0.0) {
            return Err(CliError::Config(format!("run.t_end: must be positive, got {}", self.run.t_end)));
        }
        if let Some(p) = self.run.p {
            if !(p.is_finite() && p > 1.0) {
                return Err(CliError::Config(format!("run.p: must exceed 1, got {p}")));
            }
        }
        self.solve_config().validate().map_err(|e| field_error("run", e))?;
        if let Some(family) = &self.family {
            if family.dimension() != self.grid.dimension() {
                return Err(CliError::Config(format!(
                    "family.N: {} does not match grid.dimension {}",
                    family.dimension(),
                    self.grid.dimension()
                )));
            }
        }
        if let Some(dt) = self.limit.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::Config(format!("limit.dt: must be positive, got {dt}")));
            }
        }
        if let Some(m) = self.limit.mass {
            if !(m.is_finite() && m >= 0.0) {
                return Err(CliError::Config(format!("limit.mass: must be >= 0, got {m}")));
            }
        }
        if let Some(c0) = self.limit.c0 {
            if !(c0.is_finite() && c0 >= 0.0) {
                return Err(CliError::Config(format!("limit.c0: must be >= 0, got {c0}")));
            }
        }
        if self.limit.datum == Some(DatumKind::PowerLaw) && !self.family.is_some_and(|f| is_power_law(f.kind())) {
            return Err(CliError::Config("limit.datum: power_law needs a power-law family section".into()));
        }
        if self.limit.datum == Some(DatumKind::Family) && self.family.is_none() {
            return Err(CliError::Config("limit.datum: family needs a family section".into()));
        }
        if self.compare.k_ladder.is_empty() || self.compare.k_ladder.iter().any(|k| !(k.is_finite() && *k >= 1.0)) {
            return Err(CliError::Config("compare.k_ladder: needs entries >= 1".into()));
        }
        if self.compare.k_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("compare.k_ladder: must be strictly increasing".into()));
        }
        if self.compare.windows.is_empty() || self.compare.windows.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(CliError::Config("compare.windows: needs positive entries".into()));
        }
        if let Some((lo, hi)) = self.compare.fit_window {
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::Config(format!("compare.fit_window: need 0 < lo < hi, got ({lo}, {hi})")));
            }
        }
        Grid::new(self.grid.dimension(), self.compare.target_points, 1.0)
            .map_err(|e| field_error("compare.target_points", e))?;
        if self.barrier.t_list.is_empty() || self.barrier.t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("barrier.t_list: must be non-empty and strictly increasing".into()));
        }
        if self.barrier.t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::Config("barrier.t_list: times must be positive".into()));
        }
        if !(self.barrier.w_time.is_finite() && self.barrier.w_time > 0.0) {
            return Err(CliError::Config(format!("barrier.w_time: must be positive, got {}", self.barrier.w_time)));
        }
        Ok(())
    }
}

fn is_power_law(kind: FamilyKind) -> bool {
    matches!(kind, FamilyKind::PowerLaw | FamilyKind::PowerLawOverLog | FamilyKind::PowerLawTimesLog)
}

fn field_error(path: &str, e: nldiff::Error) -> CliError {
    CliError::Config(format!("{path}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL: &str = r#"
[kernel]
family = "epanechnikov"
support_radius = 1.0
dimension = 1

[grid]
dimension = 1
points_per_axis = 256
half_length = 8.0

[run]
dt = 0.1
t_end = 1.0
snapshot_times = [0.5, 1.0]
"#;

    #[test]
    fn minimal_config_loads_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL, &[]).unwrap();
        assert_eq!(c.run.p, None);
        assert_eq!(c.compare.windows, vec![2.0, 4.0]);
        assert_eq!(c.barrier.exclusion, Exclusion::default());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = ExperimentConfig::from_toml(MINIMAL, &["run.p=3".into(), "kernel.family=quartic".into()]).unwrap();
        assert_eq!(c.run.p, Some(3.0));
        assert_eq!(c.kernel.family(), nldiff::KernelFamily::Quartic);
    }

    #[test]
    fn negative_dt_names_the_field() {
        let err = ExperimentConfig::from_toml(MINIMAL, &["run.dt=-0.1".into()]).unwrap_err();
        assert!(err.to_string().contains("run.dt"), "{err}");
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL, &["barrier.w_time=2".into(), "compare.windows=[3.0]".into()]).unwrap();
        assert_eq!(c.barrier.t_list, BarrierSection::default().t_list);
        assert_eq!(c.compare.k_ladder, CompareSection::default().k_ladder);
        assert_eq!(c.compare.windows, vec![3.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml(MINIMAL, &["run.typo=1".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml(MINIMAL, &[]).unwrap();
        let b = ExperimentConfig::from_toml(MINIMAL, &["run.p=2".into()]).unwrap();
        assert_eq!(a.hash(), ExperimentConfig::from_toml(MINIMAL, &[]).unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn canonical_form_round_trips() {
        let a = ExperimentConfig::from_toml(MINIMAL, &["run.p=2".into()]).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml(), &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn override_syntax() {
        let (path, v) = parse_override("a.b = [1, 2]").unwrap();
        assert_eq!(path, vec!["a", "b"]);
        assert!(v.is_array());
        let (_, v) = parse_override("x=bump").unwrap();
        assert_eq!(v.as_str(), Some("bump"));
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }
}
