mod common;

use nalgebra::DMatrix;

use phlab::frame::frame_packet;
use phlab::jet::{self, Jet};
use phlab::models::{self, ScalarField};

use common::{all_models, points};

const SAMPLES: usize = 100;

#[test]
fn theta_annihilates_the_cr_frame() {
    for model in all_models() {
        for x in points(&model, SAMPLES, 1) {
            let theta = model.theta_values(&x).unwrap();
            let scale = theta.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for t in model.cr_frame(&x, 0).unwrap() {
                let re: f64 = theta.iter().zip(&jet::values(&t.re)).map(|(a, b)| a * b).sum();
                let im: f64 = theta.iter().zip(&jet::values(&t.im)).map(|(a, b)| a * b).sum();
                assert!(re.abs().max(im.abs()) < 1e-12 * scale.max(1.0), "{} at {x:?}", model.id());
            }
        }
    }
}

/// `θ ∧ (dθ)^n ≠ 0` iff the bordered matrix `[[dθ, θᵀ], [θ, 0]]` is invertible.
#[test]
fn contact_volume_is_nonzero() {
    for model in all_models() {
        let m = model.dim();
        for x in points(&model, SAMPLES, 2) {
            let theta = model.theta(&x, 1).unwrap();
            let bordered = DMatrix::from_fn(m + 1, m + 1, |p, q| match (p < m, q < m) {
                (true, true) => theta[q].d(p).value() - theta[p].d(q).value(),
                (true, false) => theta[p].value(),
                (false, true) => theta[q].value(),
                (false, false) => 0.0,
            });
            let s = bordered.singular_values();
            let ratio = s.min() / s.max();
            assert!(ratio > 1e-8, "{} at {x:?}: singular value ratio {ratio}", model.id());
        }
    }
}

/// `dθ(V, J V) > 0` on the real span of the CR frame, with `J Re T = -Im T`.
#[test]
fn levi_form_is_positive() {
    for model in all_models() {
        let n = model.cr_dim();
        for x in points(&model, SAMPLES, 3) {
            let theta = model.theta(&x, 1).unwrap();
            let m = model.dim();
            let dtheta = |u: &[f64], v: &[f64]| -> f64 {
                let mut s = 0.0;
                for p in 0..m {
                    for q in 0..m {
                        s += (theta[q].d(p).value() - theta[p].d(q).value()) * u[p] * v[q];
                    }
                }
                s
            };
            let frame = model.cr_frame(&x, 0).unwrap();
            let mut basis = Vec::new();
            let mut jbasis = Vec::new();
            for t in &frame {
                let re = jet::values(&t.re);
                let im = jet::values(&t.im);
                jbasis.push(im.iter().map(|v| -v).collect::<Vec<_>>());
                basis.push(re.clone());
                jbasis.push(re);
                basis.push(im);
            }
            let gram = DMatrix::from_fn(2 * n, 2 * n, |a, b| dtheta(&basis[a], &jbasis[b]));
            let sym = (&gram + gram.transpose()) * 0.5;
            let min = sym.symmetric_eigenvalues().min();
            assert!(min > 0.0, "{} at {x:?}: Levi eigenvalue {min}", model.id());
            let fp = frame_packet(&model, &x, 0).unwrap();
            assert!(fp.levi_min > 0.0);
        }
    }
}

#[test]
fn conformal_changes_compose() {
    let base = models::sphere(2);
    let u = ScalarField::coordinate(0, 5);
    let v = ScalarField::Affine { constant: 0.3, coeffs: vec![0.0, 0.5, 0.1, 0.0, -0.2] };
    let sum = ScalarField::Affine { constant: 0.3, coeffs: vec![1.0, 0.5, 0.1, 0.0, -0.2] };
    let twice = models::conformal(models::conformal(base.clone(), u, "x"), v, "v");
    let once = models::conformal(base.clone(), sum, "x+v");
    for x in points(&base, 20, 4) {
        let a = twice.theta(&x, 2).unwrap();
        let b = once.theta(&x, 2).unwrap();
        for (ja, jb) in a.iter().zip(&b) {
            let scale = ja.coefficients().iter().map(|c| c.abs()).fold(1.0, f64::max);
            let diff = common::max_abs_diff(ja.coefficients(), jb.coefficients());
            assert!(diff < 1e-12 * scale, "{diff}");
        }
    }
}

#[test]
fn zero_factor_is_the_identity() {
    let base = models::quadric(1, models::QuadricSign::Minus, 0.5).unwrap();
    let same = models::conformal(base.clone(), ScalarField::Constant(0.0), "0");
    for x in points(&base, 10, 5) {
        let a: Vec<Jet> = base.theta(&x, 2).unwrap();
        let b = same.theta(&x, 2).unwrap();
        for (ja, jb) in a.iter().zip(&b) {
            assert_eq!(ja.coefficients(), jb.coefficients());
        }
    }
}

#[test]
fn points_outside_the_chart_are_rejected() {
    let s = models::sphere(1);
    assert!(s.theta(&[f64::NAN, 0.0, 0.0], 0).is_err());
    let q = models::quadric(1, models::QuadricSign::Plus, 0.5).unwrap();
    assert!(frame_packet(&q, &[1.0, 1.0, 0.0], 0).is_err());
}
