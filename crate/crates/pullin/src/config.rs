//! Run configuration: a single JSON document with optional sections.
//!
//! Loading happens in three steps. The file is parsed into a JSON value, `--set` overrides
//! are written into it, and the result is deserialized and validated. Everything downstream
//! sees a [`Config`] with every default filled in.

use std::fmt;
use std::path::Path;

use pullin_core::fieldexpr::{sample_vector, Expr};
use pullin_core::grid::{Grid, GridKind, VectorField};
use pullin_core::operators::check_peclet;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// A configuration problem, tagged with the key it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Interval,
    RadialBall,
    Rectangle,
}

impl From<Kind> for GridKind {
    fn from(k: Kind) -> GridKind {
        match k {
            Kind::Interval => GridKind::Interval,
            Kind::RadialBall => GridKind::RadialBall,
            Kind::Rectangle => GridKind::Rectangle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub kind: Kind,
    /// Ambient dimension; implied by the kind except for balls.
    #[serde(default, alias = "N")]
    pub dim: Option<usize>,
    pub m: usize,
    #[serde(default)]
    pub bounds: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvectionSection {
    /// One expression per vector component; zero drift when absent.
    #[serde(default)]
    pub components: Option<Vec<String>>,
    #[serde(default = "defaults::decomposition_tol")]
    pub decomposition_tol: f64,
}

impl Default for AdvectionSection {
    fn default() -> Self {
        AdvectionSection {
            components: None,
            decomposition_tol: defaults::decomposition_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub lambda_step0: f64,
    pub newton_tol: f64,
    pub bracket_tol: f64,
    /// Load used by `solve` and `eigen`.
    pub lambda: f64,
    /// Number of shooting heights sampled by `oracle`.
    pub eta_grid: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            lambda_step0: 0.1,
            newton_tol: 1e-10,
            bracket_tol: 1e-6,
            lambda: 0.0,
            eta_grid: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    pub eig_tol: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection { eig_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Exponents for the main estimate, each in (1, 2).
    pub beta: Vec<f64>,
    /// Multiples of `t_max(β)`, each in (0, 1).
    pub t_fractions: Vec<f64>,
    /// Exponents for the energy and Hardy checks, each in [1, 2].
    pub energy_beta: Vec<f64>,
    pub psi_count: usize,
    pub seed: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            beta: vec![1.25, 1.5, 1.75],
            t_fractions: vec![0.5, 0.9, 0.99],
            energy_beta: vec![1.0, 1.5, 2.0],
            psi_count: 50,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "out".into(),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    #[serde(default)]
    pub advection: AdvectionSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

mod defaults {
    pub fn decomposition_tol() -> f64 {
        1e-10
    }
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: Config,
    pub grid: Grid,
    pub components: Vec<Expr>,
    pub c: VectorField,
}

impl Setup {
    pub fn writes(&self, f: Format) -> bool {
        self.config.output.formats.contains(&f)
    }

    /// SHA-256 of the resolved configuration without the output directory, so that the
    /// same computation written to two places carries the same hash.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(&self.config).expect("config serializes");
        value["output"]
            .as_object_mut()
            .expect("output section")
            .remove("directory");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn resolved_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.config).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Reads, overrides, deserializes and validates a configuration file.
pub fn load_config(path: &Path, overrides: &[(String, Value)]) -> Result<Setup, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| {
        ConfigError::new(
            "",
            format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()),
        )
    })?;
    for (key, v) in overrides {
        set_path(&mut value, key, v.clone())?;
    }
    from_value(value)
}

/// Deserializes and validates an already parsed configuration.
pub fn from_value(value: Value) -> Result<Setup, ConfigError> {
    let config: Config = serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { String::new() } else { key };
        ConfigError::new(key, e.into_inner().to_string())
    })?;
    validate(config)
}

/// Parses `key=value`; the value is read as JSON and falls back to a plain string.
pub fn parse_override(s: &str) -> Result<(String, Value), String> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| format!("override `{s}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("override `{s}` has an empty key segment"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Writes `v` at a dotted path, creating intermediate objects.
pub fn set_path(root: &mut Value, key: &str, v: Value) -> Result<(), ConfigError> {
    let segments: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (i, seg) in segments.iter().enumerate() {
        let here = segments[..i].join(".");
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(here, "is not a section; cannot override inside it"))?;
        if i + 1 == segments.len() {
            obj.insert(seg.to_string(), v);
            return Ok(());
        }
        node = obj.entry(seg.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

fn check(
    ok: bool,
    key: impl Into<String>,
    message: impl FnOnce() -> String,
) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(key, message()))
    }
}

fn validate(mut config: Config) -> Result<Setup, ConfigError> {
    let kind = GridKind::from(config.grid.kind);
    let dim = match (kind, config.grid.dim) {
        (GridKind::Interval, d) => d.unwrap_or(1),
        (GridKind::Rectangle, d) => d.unwrap_or(2),
        (GridKind::RadialBall, Some(d)) => d,
        (GridKind::RadialBall, None) => {
            return Err(ConfigError::new("grid.dim", "radial-ball grids need N"))
        }
    };
    config.grid.dim = Some(dim);
    let bounds = config
        .grid
        .bounds
        .get_or_insert_with(|| vec![[0.0, 1.0]; if kind == GridKind::Rectangle { 2 } else { 1 }])
        .clone();
    let pairs: Vec<(f64, f64)> = bounds.iter().map(|b| (b[0], b[1])).collect();
    let grid = Grid::build(kind, dim, config.grid.m, &pairs)
        .map_err(|e| ConfigError::new("grid", e.to_string()))?;

    let d = kind.vector_dim();
    let texts = config
        .advection
        .components
        .get_or_insert_with(|| vec!["0".to_string(); d])
        .clone();
    check(texts.len() == d, "advection.components", || {
        format!(
            "{} grids take {d} component(s), got {}",
            kind.name(),
            texts.len()
        )
    })?;
    let mut components = Vec::with_capacity(d);
    for (i, t) in texts.iter().enumerate() {
        let key = format!("advection.components[{i}]");
        let e = Expr::parse(t).map_err(|e| ConfigError::new(&key, e.to_string()))?;
        e.check_legal(kind)
            .map_err(|e| ConfigError::new(&key, e.to_string()))?;
        e.sample(&grid)
            .map_err(|e| ConfigError::new(&key, e.to_string()))?;
        components.push(e);
    }
    let c = sample_vector(&grid, &components)
        .map_err(|e| ConfigError::new("advection.components", e.to_string()))?;
    check_peclet(&grid, &c).map_err(|e| ConfigError::new("advection.components", e.to_string()))?;
    let tol = config.advection.decomposition_tol;
    check(
        tol > 0.0 && tol <= 1e-6,
        "advection.decomposition_tol",
        || format!("{tol} outside (0, 1e-6]"),
    )?;

    let s = &config.solver;
    check(
        s.lambda_step0 > 0.0 && s.lambda_step0.is_finite(),
        "solver.lambda_step0",
        || format!("{} must be positive", s.lambda_step0),
    )?;
    check(
        s.newton_tol > 0.0 && s.newton_tol <= 1e-8,
        "solver.newton_tol",
        || format!("{} outside (0, 1e-8]", s.newton_tol),
    )?;
    check(
        s.bracket_tol > 0.0 && s.bracket_tol < 1.0,
        "solver.bracket_tol",
        || format!("{} outside (0, 1)", s.bracket_tol),
    )?;
    check(
        s.lambda >= 0.0 && s.lambda.is_finite(),
        "solver.lambda",
        || format!("{} must be nonnegative", s.lambda),
    )?;
    check(s.eta_grid >= 2, "solver.eta_grid", || {
        format!("{} must be at least 2", s.eta_grid)
    })?;
    let e = config.spectral.eig_tol;
    check(e > 0.0 && e <= 1e-8, "spectral.eig_tol", || {
        format!("{e} outside (0, 1e-8]")
    })?;

    let v = &config.verify;
    check(!v.beta.is_empty(), "verify.beta", || "empty list".into())?;
    for (i, &b) in v.beta.iter().enumerate() {
        check(b > 1.0 && b < 2.0, format!("verify.beta[{i}]"), || {
            format!("β = {b} outside (1, 2)")
        })?;
    }
    check(!v.t_fractions.is_empty(), "verify.t_fractions", || {
        "empty list".into()
    })?;
    for (i, &f) in v.t_fractions.iter().enumerate() {
        check(
            f > 0.0 && f < 1.0,
            format!("verify.t_fractions[{i}]"),
            || format!("{f} outside (0, 1)"),
        )?;
    }
    for (i, &b) in v.energy_beta.iter().enumerate() {
        check(
            (1.0..=2.0).contains(&b),
            format!("verify.energy_beta[{i}]"),
            || format!("β = {b} outside [1, 2]"),
        )?;
    }
    check(v.psi_count >= 1, "verify.psi_count", || {
        "must be at least 1".into()
    })?;
    let o = &config.output;
    check(!o.directory.is_empty(), "output.directory", || {
        "empty path".into()
    })?;
    check(!o.formats.is_empty(), "output.formats", || {
        "empty list".into()
    })?;
    config.output.formats.sort_by_key(|f| *f as u8);
    config.output.formats.dedup();

    Ok(Setup {
        config,
        grid,
        components,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({"grid": {"kind": "interval", "m": 33}, "advection": {"components": ["0"]}})
    }

    fn key_of(v: Value) -> String {
        from_value(v).unwrap_err().key
    }

    #[test]
    fn defaults_are_materialized() {
        let s = from_value(minimal()).unwrap();
        let c = &s.config;
        assert_eq!(c.solver.newton_tol, 1e-10);
        assert_eq!(c.spectral.eig_tol, 1e-8);
        assert_eq!(c.verify.seed, 42);
        assert_eq!(c.grid.dim, Some(1));
        assert_eq!(c.grid.bounds, Some(vec![[0.0, 1.0]]));
        let echoed: Value = serde_json::from_str(&s.resolved_json()).unwrap();
        assert_eq!(echoed["solver"]["bracket_tol"], json!(1e-6));
        assert_eq!(echoed["output"]["formats"], json!(["csv", "json"]));
    }

    #[test]
    fn resolved_config_is_a_fixed_point() {
        let s = from_value(minimal()).unwrap();
        let again = from_value(serde_json::from_str(&s.resolved_json()).unwrap()).unwrap();
        assert_eq!(s.config, again.config);
        assert_eq!(s.hash(), again.hash());
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let a = from_value(minimal()).unwrap();
        let mut v = minimal();
        v["output"] = json!({"directory": "elsewhere"});
        assert_eq!(a.hash(), from_value(v).unwrap().hash());
        let mut v = minimal();
        v["verify"] = json!({"seed": 7});
        assert_ne!(a.hash(), from_value(v).unwrap().hash());
    }

    #[test]
    fn beta_out_of_range_names_key() {
        let mut v = minimal();
        v["verify"] = json!({"beta": [1.5, 2.5]});
        assert_eq!(key_of(v), "verify.beta[1]");
    }

    #[test]
    fn illegal_variable_names_component() {
        let mut v = minimal();
        v["advection"]["components"] = json!(["sin(pi*y)"]);
        let e = from_value(v).unwrap_err();
        assert_eq!(e.key, "advection.components[0]");
        assert!(e.message.contains('y'), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = minimal();
        v["solver"] = json!({"newton_tolerance": 1e-9});
        let e = from_value(v).unwrap_err();
        assert_eq!(e.key, "solver.newton_tolerance");
        assert!(e.message.contains("newton_tolerance"), "{e}");
        let mut v = minimal();
        v["plots"] = json!({});
        assert!(from_value(v).unwrap_err().message.contains("plots"));
    }

    #[test]
    fn type_errors_name_key() {
        let mut v = minimal();
        v["grid"]["m"] = json!("many");
        assert_eq!(key_of(v), "grid.m");
        let mut v = minimal();
        v["grid"]["kind"] = json!("disk");
        assert_eq!(key_of(v), "grid.kind");
    }

    #[test]
    fn grid_and_tolerance_errors() {
        let mut v = minimal();
        v["grid"]["m"] = json!(2);
        assert_eq!(key_of(v), "grid");
        let mut v = minimal();
        v["grid"] = json!({"kind": "radial-ball", "m": 33});
        assert_eq!(key_of(v), "grid.dim");
        let mut v = minimal();
        v["spectral"] = json!({"eig_tol": 1e-3});
        assert_eq!(key_of(v), "spectral.eig_tol");
        let mut v = minimal();
        v["advection"]["components"] = json!(["1", "2"]);
        assert_eq!(key_of(v), "advection.components");
        let mut v = minimal();
        v["advection"]["components"] = json!(["1000"]);
        assert_eq!(key_of(v), "advection.components");
        let mut v = minimal();
        v["advection"]["components"] = json!(["sin(x"]);
        assert_eq!(key_of(v), "advection.components[0]");
    }

    #[test]
    fn overrides() {
        let (k, v) = parse_override("verify.beta=[1.5]").unwrap();
        assert_eq!(k, "verify.beta");
        assert_eq!(v, json!([1.5]));
        assert_eq!(
            parse_override("grid.kind=rectangle").unwrap().1,
            json!("rectangle")
        );
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());

        let mut root = minimal();
        set_path(&mut root, "solver.lambda", json!(0.5)).unwrap();
        set_path(&mut root, "grid.m", json!(65)).unwrap();
        let s = from_value(root.clone()).unwrap();
        assert_eq!(s.config.solver.lambda, 0.5);
        assert_eq!(s.grid.len(), 65);
        assert_eq!(
            set_path(&mut root, "grid.m.x", json!(1)).unwrap_err().key,
            "grid.m"
        );
    }

    #[test]
    fn rectangle_defaults_to_zero_drift() {
        let s = from_value(json!({"grid": {"kind": "rectangle", "m": 9}})).unwrap();
        assert_eq!(
            s.config.advection.components,
            Some(vec!["0".into(), "0".into()])
        );
        assert_eq!(s.c.max_norm(), 0.0);
    }
}
