use proptest::prelude::*;

use phlab::curvature::{curvature_packet, holomorphic_sectional, vectors};
use phlab::jet::{self, Jet};
use phlab::models;
use phlab::report::{CheckRow, ExperimentReport};

fn horizontal(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2 * n).prop_filter("nonzero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-2).prop_map(|v| {
        let mut out = vec![0.0];
        out.extend(v);
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holomorphic_curvature_is_scale_and_phase_invariant(u in horizontal(2), s in 0.1..10.0f64, angle in 0.0..6.3f64) {
        let model = models::weighted_sphere(vec![1.0, 2.0, 4.0]).unwrap();
        let cv = curvature_packet(&model, &model.base_point(), 0).unwrap();
        let ju = vectors::apply_j(2, &u);
        let w: Vec<f64> = u.iter().zip(&ju).map(|(a, b)| s * (angle.cos() * a + angle.sin() * b)).collect();
        let (hu, hw) = (holomorphic_sectional(&cv, &u).unwrap(), holomorphic_sectional(&cv, &w).unwrap());
        prop_assert!((hu - hw).abs() < 1e-9 * hu.abs().max(1.0));
    }

    #[test]
    fn sphere_has_unit_holomorphic_curvature_everywhere(x in -0.6..0.6f64, y in -0.6..0.6f64, t in -0.6..0.6f64, u in horizontal(1)) {
        let model = models::sphere(1);
        let cv = curvature_packet(&model, &[x, y, t], 0).unwrap();
        prop_assert!((holomorphic_sectional(&cv, &u).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn heisenberg_cr_frame_is_horizontal(x in -5.0..5.0f64, y in -5.0..5.0f64, t in -5.0..5.0f64) {
        let model = models::heisenberg(1);
        let p = [x, y, t];
        let theta = model.theta_values(&p).unwrap();
        for v in model.cr_frame(&p, 0).unwrap() {
            let re: f64 = theta.iter().zip(jet::values(&v.re)).map(|(a, b)| a * b).sum();
            let im: f64 = theta.iter().zip(jet::values(&v.im)).map(|(a, b)| a * b).sum();
            prop_assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        }
    }

    #[test]
    fn jet_exp_and_ln_are_inverse(a in 0.1..3.0f64, b in -1.0..1.0f64) {
        let x = Jet::seed(&[a, b], 4);
        let f = &(&x[0] * &x[0]) + &x[1].exp();
        let back = f.ln().exp();
        for (p, q) in f.coefficients().iter().zip(back.coefficients()) {
            prop_assert!((p - q).abs() < 1e-10 * p.abs().max(1.0));
        }
    }

    #[test]
    fn row_verdicts_follow_value_and_tolerance(value in 0.0..1.0f64, tolerance in 0.0..1.0f64, retol in 0.0..1.0f64) {
        let mut row = CheckRow::check("row", &[0.0], value, tolerance);
        prop_assert_eq!(row.pass, value <= tolerance);
        prop_assert!(row.consistent());
        row.retolerance(retol);
        prop_assert_eq!(row.pass, value <= retol);
        let control = CheckRow::negative_control("control", &[0.0], value, tolerance);
        prop_assert_eq!(control.pass, value > tolerance);
        let mut rep = ExperimentReport::new("e", "m");
        rep.push(row);
        rep.push(control);
        let parsed = ExperimentReport::from_json(&rep.to_json()).unwrap();
        prop_assert!(parsed.rows.iter().all(CheckRow::consistent));
        prop_assert_eq!(parsed.all_pass(), rep.all_pass());
    }
}
