//! Dispatch of a configuration to the library experiments.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phlab::complex::conformal_report;
use phlab::geodesic::{self, CircleExperiment, CirclePlane, DEFAULT_NODES, DEFAULT_RADII};
use phlab::identities::identity_suite;
use phlab::immersion::immersion_report;
use phlab::models::{immersion_standard, ImmersionFamily};
use phlab::report::{CheckRow, ExperimentReport};
use phlab::spaceform::{self, appendix_chain_check, curvature_sweep, holomorphic_defect, measured_constant};
use phlab::symmetry::{coordinate_field, heisenberg_psh_fields, is_infinitesimal_psh, psh_residuals, PSH_TOLERANCE};
use phlab::GeometryError;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::registry::{build_model, check_experiment, Model, ModelKind};

/// Default tolerance of the curvature-sweep rows.
pub const SWEEP_TOLERANCE: f64 = 1e-5;
/// Offset of the wrong constant fed to the appendix-chain control.
pub const CHAIN_CONTROL_OFFSET: f64 = 0.1;

/// Base point first, then seeded random points pulled toward it by the margin.
pub fn sample_points(cfg: &ExperimentConfig, model: &Model, default_count: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let chart = &model.chart;
    if let Some(list) = &cfg.points.list {
        if let Some(bad) = list.iter().find(|p| p.len() != chart.dim()) {
            return Err(CliError::Config(format!("point {bad:?} does not have {} coordinates", chart.dim())));
        }
        return Ok(list.clone());
    }
    let margin = cfg.points.margin;
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(CliError::Config(format!("points.margin must lie in (0, 1], got {margin}")));
    }
    let count = cfg.points.count.unwrap_or(default_count).max(1);
    let base = chart.base_point();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = vec![base.clone()];
    for _ in 1..count {
        let p = chart.sample_point(&mut rng);
        points.push(base.iter().zip(&p).map(|(b, q)| b + margin * (q - b)).collect());
    }
    Ok(points)
}

fn direction(cfg: &ExperimentConfig, m: usize) -> Result<Vec<f64>, CliError> {
    match cfg.param_vector("direction")? {
        Some(v) if v.len() == m => Ok(v),
        Some(v) => Err(CliError::Config(format!("direction must have {m} frame components, got {}", v.len()))),
        None => {
            let mut v = vec![0.0; m];
            v[1] = 1.0;
            Ok(v)
        }
    }
}

fn radii(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.radii.clone().unwrap_or_else(|| DEFAULT_RADII.to_vec())
}

/// Tolerance of the extracted limit: the acceptance tolerances of the anchors.
fn limit_tolerance(model: &Model) -> f64 {
    match model.kind {
        ModelKind::Sphere { .. } | ModelKind::Heisenberg { .. } => 5e-3,
        _ => 1e-2,
    }
}

fn per_point(rep: &mut ExperimentReport, id: &str, points: &[Vec<f64>], mut f: impl FnMut(&[f64]) -> Result<ExperimentReport, GeometryError>) {
    for (k, x) in points.iter().enumerate() {
        match f(x) {
            Ok(r) => {
                let prefix = if points.len() > 1 { format!("p{k}-") } else { String::new() };
                rep.absorb(r, &prefix);
            }
            Err(e) => rep.push(CheckRow::error(id, x, &e)),
        }
    }
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: ExperimentReport,
    /// `(r, L(β_r))` table of the first point, for circle-length runs.
    pub circle_table: Option<String>,
}

/// Runs one experiment. Geometry failures become failed rows; only
/// configuration problems are returned as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    check_experiment(&cfg.experiment)?;
    let model = build_model(&cfg.model)?;
    let chart = &model.chart;
    let m = chart.dim();
    let n = chart.cr_dim();
    let seed = cfg.seed;
    let planes = cfg.planes.unwrap_or(5);
    let tuples = cfg.tuples.unwrap_or(20);
    let nodes = cfg.nodes.unwrap_or(DEFAULT_NODES);
    let mut rep = ExperimentReport::new(cfg.experiment.clone(), chart.id());
    let mut circle_table = None;
    match cfg.experiment.as_str() {
        "identity-suite" => {
            let points = sample_points(cfg, &model, 5)?;
            rep.absorb(identity_suite(chart, &points, tuples, seed), "");
        }
        "curvature-sweep" => {
            let points = sample_points(cfg, &model, 5)?;
            let expected = cfg.expected.or(model.expected_h());
            per_point(&mut rep, "curvature-sweep", &points[..1], |_| curvature_sweep(chart, &points, planes, seed, expected, SWEEP_TOLERANCE));
        }
        "circle-length" => {
            let points = sample_points(cfg, &model, 1)?;
            let u = direction(cfg, m)?;
            let radii = radii(cfg);
            per_point(&mut rep, "circle-length", &points, |x| {
                let plane = CirclePlane::holomorphic(n, u.clone())?;
                let mut exp = CircleExperiment::new(x.to_vec(), plane, radii.clone(), nodes)?;
                geodesic::run_circle_experiment(chart, &mut exp)?;
                let mut r = ExperimentReport::new("circle-length", chart.id());
                for c in &exp.results {
                    r.push(CheckRow::check("quadrature-error", x, c.quadrature_error, 1e-12 * (2.0 * std::f64::consts::PI * c.radius).max(1.0)));
                    r.set_value(format!("length-r{}", c.radius), c.length);
                    r.set_value(format!("limit-quantity-r{}", c.radius), c.limit_quantity);
                }
                if let Some(fit) = &exp.fit {
                    r.set_value("fit-intercept", fit.intercept);
                    r.set_value("fit-residual", fit.residual);
                }
                if circle_table.is_none() {
                    circle_table = Some(geodesic::circle_csv(&exp.results));
                }
                Ok(r)
            });
        }
        "extract-H" => {
            let points = sample_points(cfg, &model, 1)?;
            let u = direction(cfg, m)?;
            let expected = cfg.expected.or(model.expected_h()).map(|e| (e, limit_tolerance(&model)));
            let radii = radii(cfg);
            per_point(&mut rep, "extract-H", &points, |x| {
                let plane = CirclePlane::holomorphic(n, u.clone())?;
                geodesic::holomorphic_limit_report(chart, x, &plane, &radii, nodes, expected)
            });
        }
        "reeb-expansion" => {
            let points = sample_points(cfg, &model, 1)?;
            let v = direction(cfg, m)?;
            let radii = radii(cfg);
            per_point(&mut rep, "reeb-expansion", &points, |x| geodesic::reeb_plane_expansion_check(chart, x, &v, &radii, nodes));
        }
        "conformal" => {
            let (base, u, label) = match &model.kind {
                ModelKind::Conformal { base, u, label } => (base.chart.clone(), u.clone(), label.clone()),
                _ => {
                    let (u, label) = crate::registry::scalar_field(cfg.params.get("u"), n)?;
                    (chart.clone(), u, label)
                }
            };
            let base_model = Model { chart: base, kind: model.kind.clone() };
            let points = sample_points(cfg, &base_model, 5)?;
            rep.absorb(conformal_report(&base_model.chart, &u, &label, &points, planes, seed), "");
            rep.model = format!("{} with u={label}", base_model.chart.id());
        }
        "immersion" => {
            let family = match model.kind {
                ModelKind::Sphere { .. } => ImmersionFamily::SphereInSphere,
                ModelKind::Heisenberg { .. } => ImmersionFamily::HeisenbergInHeisenberg,
                _ => return Err(CliError::Config("immersion needs a sphere or heisenberg source model".into())),
            };
            let target = match cfg.param_f64("target_n")? {
                Some(t) if t >= 0.0 && t.fract() == 0.0 => t as usize,
                Some(t) => return Err(CliError::Config(format!("target_n must be an integer, got {t}"))),
                None => n + 1,
            };
            let imm = immersion_standard(n, target, family)?;
            let points = sample_points(cfg, &model, 3)?;
            rep.absorb(immersion_report(&imm, &points, tuples, planes, seed), "");
            rep.model = imm.label.clone();
        }
        "appendix-chain" => {
            let points = sample_points(cfg, &model, 5)?;
            let c = match cfg.param_f64("c")? {
                Some(c) => c,
                None => match measured_constant(chart, &points, seed) {
                    Ok(c) => c,
                    Err(e) => {
                        rep.push(CheckRow::error("appendix-chain", &points[0], &e));
                        return Ok(finish(rep, cfg, None));
                    }
                },
            };
            per_point(&mut rep, "appendix-chain", &points[..1], |_| appendix_chain_check(chart, c, &points, tuples, seed));
            for x in &points {
                match holomorphic_defect(chart, c + CHAIN_CONTROL_OFFSET, x, 16, seed) {
                    Ok(d) => rep.push(CheckRow::negative_control("chain-wrong-constant", x, d, spaceform::NEGATIVE_CONTROL_THRESHOLD)),
                    Err(e) => rep.push(CheckRow::error("chain-wrong-constant", x, &e)),
                }
            }
        }
        "psh-checker" => {
            if !matches!(model.kind, ModelKind::Heisenberg { n: 1 }) {
                return Err(CliError::Config("psh-checker ships its field list for heisenberg with n = 1 only".into()));
            }
            let points = sample_points(cfg, &model, 5)?;
            for field in heisenberg_psh_fields() {
                let mut r = is_infinitesimal_psh(chart, &field, &points);
                for row in &mut r.rows {
                    row.note = Some(field.label.clone());
                }
                rep.absorb(r, &format!("{}: ", field.label));
            }
            let dx = coordinate_field(3, 0, "d_x");
            for x in &points {
                match psh_residuals(chart, &dx, x) {
                    Ok(r) => rep.push(CheckRow::negative_control("d_x-rejected", x, r.lie_theta.max(r.cr), PSH_TOLERANCE)),
                    Err(e) => rep.push(CheckRow::error("d_x-rejected", x, &e)),
                }
            }
        }
        other => unreachable!("experiment {other} passed the registry check"),
    }
    Ok(finish(rep, cfg, circle_table))
}

fn finish(mut rep: ExperimentReport, cfg: &ExperimentConfig, circle_table: Option<String>) -> RunOutput {
    rep.experiment = cfg.experiment.clone();
    for row in &mut rep.rows {
        if let Some(&tol) = cfg.tolerances.get(&row.id) {
            row.retolerance(tol);
        }
    }
    rep.config = serde_json::to_value(cfg).expect("config serializes");
    rep.refresh();
    RunOutput { report: rep, circle_table }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes the report JSON, row CSV and circle table where configured.
pub fn write_outputs(cfg: &ExperimentConfig, out: &RunOutput) -> Result<(), CliError> {
    if let Some(p) = &cfg.output.report {
        write(p, &out.report.to_json())?;
    }
    if let Some(p) = &cfg.output.rows_csv {
        write(p, &out.report.rows_csv())?;
    }
    if let (Some(p), Some(table)) = (&cfg.output.circle_csv, &out.circle_table) {
        write(p, table)?;
    }
    Ok(())
}
