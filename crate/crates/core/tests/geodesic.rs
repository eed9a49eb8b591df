mod common;

use phlab::frame::frame_packet;
use phlab::geodesic::{conservation_drift, run_circle_experiment, CircleExperiment, CirclePlane, DEFAULT_NODES, DEFAULT_RADII};
use phlab::models::{self, ChartModel, ScalarField};

fn unit(m: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[k] = 1.0;
    v
}

fn fitted_intercept(model: &ChartModel, plane: &CirclePlane, nodes: usize, halve: bool) -> f64 {
    let mut exp = CircleExperiment::new(model.base_point(), plane.clone(), DEFAULT_RADII.to_vec(), nodes).unwrap();
    if halve {
        exp.tolerances = exp.tolerances.halved();
    }
    run_circle_experiment(model, &mut exp).unwrap();
    exp.fit.unwrap().intercept
}

/// Doubling the quadrature nodes and halving the integration tolerances moves
/// the fitted `r³` coefficient by less than one percent.
#[test]
fn fitted_coefficient_is_discretization_stable() {
    let cases = [
        (models::sphere(1), CirclePlane::holomorphic(1, unit(3, 1)).unwrap()),
        (models::weighted_sphere(vec![1.0, 2.0]).unwrap(), CirclePlane::holomorphic(1, unit(3, 2)).unwrap()),
        (models::conformal(models::heisenberg(1), ScalarField::coordinate(0, 3), "x"), CirclePlane::reeb(unit(3, 1)).unwrap()),
    ];
    for (model, plane) in cases {
        let coarse = fitted_intercept(&model, &plane, DEFAULT_NODES, false);
        let fine = fitted_intercept(&model, &plane, 2 * DEFAULT_NODES, true);
        let rel = (coarse - fine).abs() / fine.abs().max(1e-3);
        assert!(rel < 1e-2, "{}: {coarse} vs {fine}", model.id());
    }
}

#[test]
fn geodesic_flow_conserves_speed_and_reeb_component() {
    for model in common::all_models() {
        let x = model.base_point();
        let fp = frame_packet(&model, &x, 0).unwrap();
        let m = model.dim();
        let mut c: Vec<f64> = (0..m).map(|k| 0.3 + 0.1 * k as f64).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        c.iter_mut().for_each(|v| *v *= 0.2 / norm);
        let v = fp.from_frame(&c);
        let (energy, theta) = conservation_drift(&model, &x, &v, 1.0, 8).unwrap();
        assert!(energy < 1e-9 && theta < 1e-9, "{}: {energy} {theta}", model.id());
    }
}

/// Circles in a horizontal holomorphic plane of the Heisenberg group have
/// length `2πr √(1 + r²/4)` for every choice of plane.
#[test]
fn heisenberg_circles_match_the_closed_form() {
    let model = models::heisenberg(2);
    let plane = CirclePlane::holomorphic(2, unit(5, 2)).unwrap();
    let mut exp = CircleExperiment::new(model.base_point(), plane, vec![0.1, 0.05], 32).unwrap();
    run_circle_experiment(&model, &mut exp).unwrap();
    for c in &exp.results {
        let exact = 2.0 * std::f64::consts::PI * c.radius * (1.0 + c.radius * c.radius / 4.0).sqrt();
        assert!((c.length - exact).abs() < 1e-9, "{c:?}");
    }
}
