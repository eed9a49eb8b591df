//! Experiment configuration files and command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Model id plus parameters, written either as `"quadric:sign=-,c=0.5"` or as
/// a JSON object `{"id": "quadric", "sign": "-", "c": 0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "Value")]
pub struct ModelSpec {
    pub id: String,
    pub params: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawModel {
    Text(String),
    Object(BTreeMap<String, Value>),
}

impl TryFrom<RawModel> for ModelSpec {
    type Error = CliError;

    fn try_from(raw: RawModel) -> Result<Self, CliError> {
        match raw {
            RawModel::Text(s) => s.parse(),
            RawModel::Object(mut map) => {
                let id = match map.remove("id") {
                    Some(Value::String(s)) => s,
                    _ => return Err(CliError::Config("model object needs a string \"id\"".into())),
                };
                Ok(ModelSpec { id, params: map })
            }
        }
    }
}

impl From<ModelSpec> for Value {
    fn from(spec: ModelSpec) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("id".into(), Value::String(spec.id));
        map.extend(spec.params);
        Value::Object(map)
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (id, rest) = s.split_once(':').unwrap_or((s, ""));
        if id.is_empty() {
            return Err(CliError::Config(format!("empty model id in {s:?}")));
        }
        let mut params = BTreeMap::new();
        for item in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| CliError::Config(format!("model parameter {item:?} is not key=value")))?;
            params.insert(k.trim().to_string(), parse_scalar(v.trim()));
        }
        Ok(ModelSpec { id: id.to_string(), params })
    }
}

/// Numbers and `;`-separated number lists become JSON numbers/arrays.
fn parse_scalar(v: &str) -> Value {
    if let Ok(k) = v.parse::<i64>() {
        return serde_json::json!(k);
    }
    if let Ok(x) = v.parse::<f64>() {
        return serde_json::json!(x);
    }
    if v.contains(';') {
        let items: Option<Vec<f64>> = v.split(';').map(|p| p.parse().ok()).collect();
        if let Some(items) = items {
            return serde_json::json!(items);
        }
    }
    Value::String(v.to_string())
}

impl ModelSpec {
    pub fn usize_param(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0)
                .map(|x| x as usize)
                .ok_or_else(|| CliError::Config(format!("model parameter {key} must be a non-negative integer, got {v}"))),
        }
    }

    pub fn f64_param(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| CliError::Config(format!("model parameter {key} must be a number, got {v}"))),
        }
    }

    pub fn str_param<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, CliError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s),
            Some(v) => Err(CliError::Config(format!("model parameter {key} must be a string, got {v}"))),
        }
    }
}

/// How evaluation points are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    /// Number of points; the first is the model's base point, the rest are
    /// random. Defaults depend on the experiment.
    #[serde(default)]
    pub count: Option<usize>,
    /// Shrinks random points toward the base point (1 = the model's own
    /// sampling domain).
    #[serde(default = "one")]
    pub margin: f64,
    /// Explicit chart points; overrides `count`.
    #[serde(default)]
    pub list: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

impl Default for PointSpec {
    fn default() -> Self {
        PointSpec { count: None, margin: 1.0, list: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report JSON.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Residual rows as CSV.
    #[serde(default)]
    pub rows_csv: Option<PathBuf>,
    /// `(r, L(β_r))` table of the circle-length experiment.
    #[serde(default)]
    pub circle_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub points: PointSpec,
    #[serde(default)]
    pub planes: Option<usize>,
    #[serde(default)]
    pub tuples: Option<usize>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Expected holomorphic sectional curvature; defaults to the model's
    /// known constant where there is one.
    #[serde(default)]
    pub expected: Option<f64>,
    /// Row id to tolerance; replaces the built-in thresholds.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Experiment-specific parameters (`direction`, `u`, `target_n`, `c`).
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Flag overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub radii: Option<Vec<f64>>,
    pub points: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Config from `--model` and `--experiment` alone.
    pub fn from_overrides(o: &Overrides) -> Result<Self, CliError> {
        let (Some(model), Some(experiment)) = (&o.model, &o.experiment) else {
            return Err(CliError::Config("without a config file both --model and --experiment are required".into()));
        };
        let mut cfg = ExperimentConfig {
            model: model.parse()?,
            experiment: experiment.clone(),
            seed: 0,
            points: PointSpec::default(),
            planes: None,
            tuples: None,
            radii: None,
            nodes: None,
            expected: None,
            tolerances: BTreeMap::new(),
            params: BTreeMap::new(),
            output: OutputSpec::default(),
        };
        cfg.apply(o)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(m) = &o.model {
            self.model = m.parse()?;
        }
        if let Some(e) = &o.experiment {
            self.experiment = e.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = &o.radii {
            self.radii = Some(r.clone());
        }
        if let Some(n) = o.points {
            self.points.count = Some(n);
            self.points.list = None;
        }
        if let Some(out) = &o.out {
            self.output.report = Some(out.clone());
            self.output.rows_csv = Some(out.with_extension("rows.csv"));
            if self.output.circle_csv.is_none() {
                self.output.circle_csv = Some(out.with_extension("circle.csv"));
            }
        }
        Ok(())
    }

    pub fn param_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| CliError::Config(format!("parameter {key} must be a number, got {v}"))),
        }
    }

    pub fn param_vector(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|_| CliError::Config(format!("parameter {key} must be a list of numbers, got {v}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_object_models_agree() {
        let a: ModelSpec = "quadric:sign=-,c=0.5,n=1".parse().unwrap();
        let b: ModelSpec = serde_json::from_str(r#"{"id": "quadric", "sign": "-", "c": 0.5, "n": 1}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.f64_param("c", 1.0).unwrap(), 0.5);
        assert_eq!(a.usize_param("n", 3).unwrap(), 1);
    }

    #[test]
    fn weight_lists_parse() {
        let m: ModelSpec = "weighted-sphere:weights=1;2".parse().unwrap();
        assert_eq!(m.params["weights"], serde_json::json!([1.0, 2.0]));
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = ExperimentConfig::from_json(r#"{"model": "sphere", "experiment": "extract-H"}"#).unwrap();
        cfg.apply(&Overrides { seed: Some(9), radii: Some(vec![0.1, 0.05]), points: Some(2), ..Overrides::default() }).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.radii, Some(vec![0.1, 0.05]));
        assert_eq!(cfg.points.count, Some(2));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"model": "sphere", "experiment": "x", "radius": 1}"#).is_err());
    }
}
