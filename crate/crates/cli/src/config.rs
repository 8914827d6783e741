//! Scenario configuration: one flat JSON document per run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use inflab_core::analytic::{ExponentMode, ReferenceFunction};
use inflab_core::estimates::TestFunction;
use inflab_core::grid::Region;
use inflab_core::solver::{InnerSolver, Linearization, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Solve,
    Verify,
    Sweep,
    Sharpness,
    Capacity,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinQuad {
    Rectangle,
    LShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default = "default_domain_min")]
    pub domain_min: [f64; 2],
    #[serde(default = "default_domain_max")]
    pub domain_max: [f64; 2],
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    /// Registry name, see `inflab list-references`.
    #[serde(default)]
    pub boundary: Option<String>,
    /// `x,y,g` table of boundary values, relative to the config file.
    #[serde(default)]
    pub boundary_csv: Option<PathBuf>,
    #[serde(default = "default_epsilon_list")]
    pub epsilon_list: Vec<f64>,
    #[serde(default = "default_kappa_list")]
    pub kappa_list: Vec<f64>,
    #[serde(default = "default_alpha_list")]
    pub alpha_list: Vec<f64>,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default)]
    pub v_region: Option<Region>,
    #[serde(default)]
    pub w_region: Option<Region>,
    #[serde(default)]
    pub flatness_center: Option<[f64; 2]>,
    #[serde(default)]
    pub flatness_radii: Option<Vec<f64>>,
    #[serde(default = "default_exponent_mode")]
    pub exponent_mode: ExponentMode,
    #[serde(default = "default_exponent_levels")]
    pub exponent_levels: usize,
    #[serde(default)]
    pub include_log_speed: bool,
    /// Quadrilateral JSON document, relative to the config file.
    #[serde(default)]
    pub geometry: Option<PathBuf>,
    #[serde(default)]
    pub quad: Option<BuiltinQuad>,
    #[serde(default = "default_rect_min")]
    pub rect_min: [f64; 2],
    #[serde(default = "default_rect_max")]
    pub rect_max: [f64; 2],
    #[serde(default = "default_duality_tolerance")]
    pub duality_tolerance: f64,
    #[serde(default)]
    pub test_functions: Option<Vec<TestFunction>>,
    #[serde(default)]
    pub dual_region: Option<Region>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "default_true")]
    pub dump_fields: bool,
    #[serde(default)]
    pub residual_tolerance: Option<f64>,
    #[serde(default)]
    pub max_outer_iterations: Option<usize>,
    #[serde(default)]
    pub relaxation: Option<f64>,
    #[serde(default)]
    pub inner: Option<InnerSolver>,
    #[serde(default)]
    pub linearization: Option<Linearization>,
}

fn default_domain_min() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_domain_max() -> [f64; 2] {
    [1.5, 1.5]
}
fn default_h_list() -> Vec<f64> {
    vec![1.0 / 64.0]
}
fn default_epsilon_list() -> Vec<f64> {
    vec![1e-2]
}
fn default_kappa_list() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}
fn default_alpha_list() -> Vec<f64> {
    vec![1.0]
}
fn default_p_list() -> Vec<f64> {
    vec![3.0]
}
fn default_exponent_mode() -> ExponentMode {
    ExponentMode::Origin
}
fn default_exponent_levels() -> usize {
    6
}
fn default_rect_min() -> [f64; 2] {
    [0.0, 0.0]
}
fn default_rect_max() -> [f64; 2] {
    [2.0, 1.0]
}
fn default_duality_tolerance() -> f64 {
    0.03
}
fn default_true() -> bool {
    true
}

/// Rejected configuration, located at a field and, when known, a line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "config error, field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A validated configuration and the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
    pub boundary: Option<ReferenceFunction>,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let c = &self.config;
        let mut s = SolverConfig { deterministic_ordering: true, ..SolverConfig::default() };
        if let Some(v) = c.residual_tolerance {
            s.residual_tolerance = v;
        }
        if let Some(v) = c.max_outer_iterations {
            s.max_outer_iterations = v;
        }
        if let Some(v) = c.relaxation {
            s.relaxation = v;
        }
        if let Some(v) = c.inner {
            s.inner = v;
        }
        if let Some(v) = c.linearization {
            s.linearization = v;
        }
        s
    }
}

fn line_of(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

/// Parses and validates `text`; `base_dir` anchors relative paths.
pub fn parse(text: &str, base_dir: &Path) -> Result<LoadedConfig, ConfigError> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
            .unwrap_or("<document>")
            .to_string();
        ConfigError { field, line: Some(e.line()), message: msg }
    })?;
    let err = |field: &str, message: String| ConfigError { field: field.to_string(), line: line_of(text, field), message };
    let c = &config;

    let boundary = match (&c.boundary, &c.boundary_csv) {
        (Some(_), Some(_)) => return Err(err("boundary_csv", "give either `boundary` or `boundary_csv`, not both".into())),
        (Some(name), None) => {
            Some(ReferenceFunction::from_str(name).map_err(|e| err("boundary", format!("{e}; run `inflab list-references`")))?)
        }
        _ => None,
    };
    let needs_boundary = matches!(c.kind, ScenarioKind::Solve | ScenarioKind::Verify | ScenarioKind::Sweep);
    if needs_boundary && c.boundary.is_none() && c.boundary_csv.is_none() {
        return Err(err("boundary", format!("{:?} scenarios need `boundary` or `boundary_csv`", c.kind)));
    }

    let positive = |field: &str, v: &[f64]| -> Result<(), ConfigError> {
        if let Some(x) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(err(field, format!("value {x} must be positive and finite")));
        }
        Ok(())
    };
    let nonempty = |field: &str, v: &[f64]| -> Result<(), ConfigError> {
        if v.is_empty() {
            Err(err(field, "list must not be empty".into()))
        } else {
            Ok(())
        }
    };
    for (field, list) in [("h_list", &c.h_list), ("epsilon_list", &c.epsilon_list), ("alpha_list", &c.alpha_list), ("p_list", &c.p_list)] {
        nonempty(field, list)?;
        positive(field, list)?;
    }
    nonempty("kappa_list", &c.kappa_list)?;
    if let Some(k) = c.kappa_list.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(err("kappa_list", format!("kappa {k} must be nonnegative")));
    }
    if let Some(e) = c.epsilon_list.iter().find(|e| **e > 1.0) {
        return Err(err("epsilon_list", format!("epsilon {e} is outside (0, 1]")));
    }
    match c.kind {
        ScenarioKind::Capacity => {
            if let Some(p) = c.p_list.iter().find(|p| **p <= 1.0) {
                return Err(err("p_list", format!("p = {p} is outside (1, ∞)")));
            }
            if c.geometry.is_some() && c.quad.is_some() {
                return Err(err("geometry", "give either `geometry` or `quad`, not both".into()));
            }
            if !(c.duality_tolerance > 0.0) {
                return Err(err("duality_tolerance", "must be positive".into()));
            }
        }
        ScenarioKind::Verify | ScenarioKind::Sweep => {
            if let Some(p) = c.p_list.iter().find(|p| **p <= 2.0) {
                return Err(err("p_list", format!("p = {p} must exceed 2")));
            }
        }
        _ => {}
    }
    for a in 0..2 {
        if !(c.domain_max[a] > c.domain_min[a]) {
            return Err(err("domain_max", "domain_max must exceed domain_min in both coordinates".into()));
        }
    }
    if let Some(r) = &c.flatness_radii {
        nonempty("flatness_radii", r)?;
        positive("flatness_radii", r)?;
    }
    if c.exponent_levels < inflab_core::analytic::MIN_LEVELS {
        return Err(err("exponent_levels", format!("at least {} levels are needed", inflab_core::analytic::MIN_LEVELS)));
    }
    if let Some(t) = c.residual_tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(err("residual_tolerance", format!("{t} must be positive")));
        }
    }
    if let Some(r) = c.relaxation {
        if !(r > 0.0 && r <= 1.0) {
            return Err(err("relaxation", format!("{r} is outside (0, 1]")));
        }
    }
    if c.max_outer_iterations == Some(0) {
        return Err(err("max_outer_iterations", "must be at least 1".into()));
    }
    Ok(LoadedConfig { config, base_dir: base_dir.to_path_buf(), boundary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_boundary_is_located() {
        let text = "{\n  \"kind\": \"solve\",\n  \"boundary\": \"nope\"\n}";
        let e = parse(text, Path::new(".")).unwrap_err();
        assert_eq!(e.field, "boundary");
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn unknown_field_is_reported() {
        let text = "{\"kind\": \"solve\",\n \"bondary\": \"x1\"}";
        let e = parse(text, Path::new(".")).unwrap_err();
        assert_eq!(e.field, "bondary");
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn ranges_are_checked() {
        let e = parse(r#"{"kind": "solve", "boundary": "x1", "epsilon_list": [2.0]}"#, Path::new(".")).unwrap_err();
        assert_eq!(e.field, "epsilon_list");
        let e = parse(r#"{"kind": "sweep", "boundary": "x1", "h_list": []}"#, Path::new(".")).unwrap_err();
        assert_eq!(e.field, "h_list");
        let e = parse(r#"{"kind": "capacity", "p_list": [1.0]}"#, Path::new(".")).unwrap_err();
        assert_eq!(e.field, "p_list");
        let ok = parse(r#"{"kind": "verify", "boundary": "linear(1,2,3)"}"#, Path::new(".")).unwrap();
        assert!(ok.boundary.is_some());
    }
}
