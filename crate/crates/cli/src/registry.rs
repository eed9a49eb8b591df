//! Model and experiment catalogs.

use serde::Serialize;
use serde_json::Value;

use phlab::models::{self, ChartModel, QuadricSign, ScalarField};

use crate::config::ModelSpec;
use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub parameters: &'static str,
    pub description: &'static str,
}

pub const MODELS: &[CatalogEntry] = &[
    CatalogEntry { id: "heisenberg", parameters: "n: CR dimension (default 1)", description: "Heisenberg group H_n, flat and Sasakian" },
    CatalogEntry { id: "sphere", parameters: "n: CR dimension (default 1)", description: "unit sphere S^{2n+1} in a stereographic chart, H = 1" },
    CatalogEntry {
        id: "quadric",
        parameters: "n (default 1), sign: + or - (default -), c > 0 (default 0.5)",
        description: "model hypersurface Q_+(c) or Q_-(c), H = +-1/(2c)",
    },
    CatalogEntry {
        id: "weighted-sphere",
        parameters: "weights: positive list, length n + 1 (default 1;2)",
        description: "ellipsoid sum a_j |z_j|^2 = 1, non-constant H",
    },
    CatalogEntry {
        id: "conformal",
        parameters: "base: model id (default heisenberg) with its parameters, u: factor (default x)",
        description: "rescaled contact form e^{2u} theta on a base model",
    },
];

pub const EXPERIMENTS: &[CatalogEntry] = &[
    CatalogEntry { id: "identity-suite", parameters: "points, tuples, seed", description: "structure and Bianchi identities over random tuples" },
    CatalogEntry { id: "curvature-sweep", parameters: "points, planes, seed, expected", description: "holomorphic and sectional curvature over random planes" },
    CatalogEntry { id: "circle-length", parameters: "radii, nodes, params.direction", description: "lengths of geodesic circles in a holomorphic plane" },
    CatalogEntry { id: "extract-H", parameters: "radii, nodes, expected, params.direction", description: "holomorphic sectional curvature from the circle-length limit" },
    CatalogEntry { id: "reeb-expansion", parameters: "radii, nodes, params.direction", description: "r^3 coefficient of circle lengths in a Reeb plane" },
    CatalogEntry { id: "conformal", parameters: "points, planes, params.u", description: "conformal change of connection coefficients and curvature" },
    CatalogEntry { id: "immersion", parameters: "points, tuples, planes, params.target_n", description: "second fundamental form, Gauss equation and curvature monotonicity" },
    CatalogEntry { id: "appendix-chain", parameters: "points, tuples, params.c", description: "identity chain for R - 4c R_0 on constant-H models, with a c + 0.1 control" },
    CatalogEntry { id: "psh-checker", parameters: "points", description: "infinitesimal pseudohermitian transformations of H_1" },
];

fn ids(entries: &[CatalogEntry]) -> String {
    entries.iter().map(|e| e.id).collect::<Vec<_>>().join(", ")
}

pub fn check_experiment(id: &str) -> Result<(), CliError> {
    if EXPERIMENTS.iter().any(|e| e.id == id) {
        Ok(())
    } else {
        Err(CliError::UnknownExperiment { id: id.to_string(), valid: ids(EXPERIMENTS) })
    }
}

/// A built model with what the registry knows about it.
#[derive(Clone, Debug)]
pub struct Model {
    pub chart: ChartModel,
    pub kind: ModelKind,
}

#[derive(Clone, Debug)]
pub enum ModelKind {
    Heisenberg { n: usize },
    Sphere { n: usize },
    Quadric { sign: QuadricSign, c: f64 },
    WeightedSphere,
    Conformal { base: Box<Model>, u: ScalarField, label: String },
}

impl Model {
    /// Known constant holomorphic sectional curvature.
    pub fn expected_h(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Heisenberg { .. } => Some(0.0),
            ModelKind::Sphere { .. } => Some(1.0),
            ModelKind::Quadric { sign, c } => Some(sign.value() / (2.0 * c)),
            ModelKind::WeightedSphere => None,
            ModelKind::Conformal { base, u: ScalarField::Constant(a), .. } => base.expected_h().map(|h| h * (-2.0 * a).exp()),
            ModelKind::Conformal { .. } => None,
        }
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<Model, CliError> {
    let kind_n = || spec.usize_param("n", 1);
    let positive_n = |n: usize| if n == 0 { Err(CliError::Config("n must be at least 1".into())) } else { Ok(n) };
    match spec.id.as_str() {
        "heisenberg" => {
            let n = positive_n(kind_n()?)?;
            Ok(Model { chart: models::heisenberg(n), kind: ModelKind::Heisenberg { n } })
        }
        "sphere" => {
            let n = positive_n(kind_n()?)?;
            Ok(Model { chart: models::sphere(n), kind: ModelKind::Sphere { n } })
        }
        "quadric" => {
            let n = positive_n(kind_n()?)?;
            let sign = match spec.str_param("sign", "-")? {
                "+" | "plus" => QuadricSign::Plus,
                "-" | "minus" => QuadricSign::Minus,
                s => return Err(CliError::Config(format!("quadric sign must be + or -, got {s:?}"))),
            };
            let c = spec.f64_param("c", 0.5)?;
            Ok(Model { chart: models::quadric(n, sign, c)?, kind: ModelKind::Quadric { sign, c } })
        }
        "weighted-sphere" => {
            let weights: Vec<f64> = match spec.params.get("weights") {
                None => vec![1.0, 2.0],
                Some(v) => serde_json::from_value(v.clone()).map_err(|_| CliError::Config(format!("weights must be a list of numbers, got {v}")))?,
            };
            Ok(Model { chart: models::weighted_sphere(weights)?, kind: ModelKind::WeightedSphere })
        }
        "conformal" => {
            let base_spec = match spec.params.get("base") {
                None => ModelSpec { id: "heisenberg".into(), params: forwarded(spec) },
                Some(Value::String(id)) => ModelSpec { id: id.clone(), params: forwarded(spec) },
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("conformal base: {e}")))?,
            };
            if base_spec.id == "conformal" {
                return Err(CliError::Config("nested conformal rescalings are not supported".into()));
            }
            let base = build_model(&base_spec)?;
            let (u, label) = scalar_field(spec.params.get("u"), base.chart.cr_dim())?;
            Ok(Model { chart: models::conformal(base.chart.clone(), u.clone(), &label), kind: ModelKind::Conformal { base: Box::new(base), u, label } })
        }
        other => Err(CliError::UnknownModel { id: other.to_string(), valid: ids(MODELS) }),
    }
}

/// Parameters of a conformal spec that belong to its base model.
fn forwarded(spec: &ModelSpec) -> std::collections::BTreeMap<String, Value> {
    spec.params.iter().filter(|(k, _)| k.as_str() != "u" && k.as_str() != "base").map(|(k, v)| (k.clone(), v.clone())).collect()
}

/// Index of a coordinate name in the chart ordering `(x_1, y_1, ..., x_n, y_n, t)`.
fn coordinate_index(name: &str, n: usize) -> Option<usize> {
    if name == "t" {
        return Some(2 * n);
    }
    let (head, tail) = name.split_at(1);
    let a: usize = if tail.is_empty() { 1 } else { tail.parse().ok()? };
    if a == 0 || a > n {
        return None;
    }
    match head {
        "x" => Some(2 * (a - 1)),
        "y" => Some(2 * (a - 1) + 1),
        _ => None,
    }
}

/// Conformal factor from `0.3` (constant), `"x"`, `"y2"`, `"t"` (coordinate)
/// or `{"constant": c, "coeffs": [...]}` (affine).
pub fn scalar_field(v: Option<&Value>, n: usize) -> Result<(ScalarField, String), CliError> {
    let dim = 2 * n + 1;
    match v {
        None => Ok((ScalarField::coordinate(0, dim), "x".into())),
        Some(Value::Number(x)) => {
            let a = x.as_f64().unwrap_or(0.0);
            Ok((ScalarField::Constant(a), a.to_string()))
        }
        Some(Value::String(s)) if s == "zero" => Ok((ScalarField::Constant(0.0), "0".into())),
        Some(Value::String(s)) => {
            if let Ok(a) = s.parse::<f64>() {
                return Ok((ScalarField::Constant(a), a.to_string()));
            }
            let p = coordinate_index(s, n).ok_or_else(|| CliError::Config(format!("conformal factor {s:?} is not a coordinate name (x, y, x2, ..., t) or a number")))?;
            Ok((ScalarField::coordinate(p, dim), s.clone()))
        }
        Some(Value::Object(map)) => {
            let constant = map.get("constant").and_then(Value::as_f64).unwrap_or(0.0);
            let coeffs: Vec<f64> = map
                .get("coeffs")
                .map(|c| serde_json::from_value(c.clone()))
                .transpose()
                .map_err(|_| CliError::Config("affine factor coeffs must be numbers".into()))?
                .unwrap_or_default();
            if coeffs.len() != dim {
                return Err(CliError::Config(format!("affine factor needs {dim} coefficients, got {}", coeffs.len())));
            }
            let label = format!("affine({constant};{})", coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"));
            Ok((ScalarField::Affine { constant, coeffs }, label))
        }
        Some(other) => Err(CliError::Config(format!("unsupported conformal factor {other}"))),
    }
}

pub fn render_catalog(entries: &[CatalogEntry], json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(entries).expect("catalog serializes");
    }
    let id_w = entries.iter().map(|e| e.id.len()).max().unwrap_or(2).max(2);
    let mut out = format!("{:<id_w$}  DESCRIPTION\n", "ID");
    for e in entries {
        out.push_str(&format!("{:<id_w$}  {}\n{:<id_w$}    parameters: {}\n", e.id, e.description, "", e.parameters));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_models_are_listed() {
        for id in ["heisenberg", "sphere", "quadric", "weighted-sphere", "conformal"] {
            assert!(MODELS.iter().any(|e| e.id == id), "{id}");
        }
        assert_eq!(EXPERIMENTS.len(), 9);
    }

    #[test]
    fn quadric_expected_curvature() {
        let m = build_model(&"quadric:sign=+,c=0.5".parse().unwrap()).unwrap();
        assert_eq!(m.expected_h(), Some(1.0));
        let m = build_model(&"quadric:c=0.25".parse().unwrap()).unwrap();
        assert_eq!(m.expected_h(), Some(-2.0));
    }

    #[test]
    fn conformal_specs() {
        let m = build_model(&"conformal:base=sphere,n=2,u=y2".parse().unwrap()).unwrap();
        assert_eq!(m.chart.cr_dim(), 2);
        assert!(m.expected_h().is_none());
        let m = build_model(&"conformal:base=sphere,u=0.5".parse().unwrap()).unwrap();
        assert!((m.expected_h().unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
        assert!(build_model(&"conformal:u=z".parse().unwrap()).is_err());
    }

    #[test]
    fn unknown_model_names_valid_ids() {
        let err = build_model(&"nosuch".parse().unwrap()).unwrap_err();
        assert!(err.to_string().contains("heisenberg"));
    }
}
