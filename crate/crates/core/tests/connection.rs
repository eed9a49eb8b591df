mod common;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phlab::connection::{connection_packet, idx3};
use phlab::curvature::{curvature_packet, holomorphic_sectional, sectional, vectors};
use phlab::models::{self, QuadricSign, ScalarField};

use common::{max_abs_diff, points, Reframed};

fn frame_change_models() -> Vec<models::ChartModel> {
    vec![
        models::sphere(1),
        models::quadric(2, QuadricSign::Minus, 0.5).unwrap(),
        models::weighted_sphere(vec![1.0, 2.0]).unwrap(),
        models::conformal(models::sphere(2), ScalarField::coordinate(3, 5), "y2"),
    ]
}

fn random_horizontal(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    v[0] = 0.0;
    let norm = vectors::dot(&v, &v).sqrt();
    v.iter().map(|c| c / norm).collect()
}

#[test]
fn coordinate_connection_does_not_depend_on_the_cr_frame() {
    for base in frame_change_models() {
        let other = Reframed::model(base.clone());
        for x in points(&base, 4, 10) {
            let (pa, pb) = (connection_packet(&base, &x, 0).unwrap(), connection_packet(&other, &x, 0).unwrap());
            let frames_differ = (&pa.frame.frame_values() - &pb.frame.frame_values()).amax();
            assert!(frames_differ > 1e-2, "the reframed model must use a different frame");
            let (a, b) = (pa.coordinate_gamma(), pb.coordinate_gamma());
            let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!(max_abs_diff(&a, &b) < 1e-8 * scale, "{} at {x:?}", base.id());
        }
    }
}

#[test]
fn curvature_does_not_depend_on_the_cr_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for base in frame_change_models() {
        let other = Reframed::model(base.clone());
        let m = base.dim();
        for x in points(&base, 3, 12) {
            let ca = curvature_packet(&base, &x, 0).unwrap();
            let cb = curvature_packet(&other, &x, 0).unwrap();
            assert!((ca.conn.tau_norm() - cb.conn.tau_norm()).abs() < 1e-8);
            for _ in 0..4 {
                let u = random_horizontal(&mut rng, m);
                let coord = ca.conn.frame.from_frame(&u);
                let u_other = cb.conn.frame.to_frame(&coord);
                assert!(u_other[0].abs() < 1e-10);
                let (ha, hb) = (holomorphic_sectional(&ca, &u).unwrap(), holomorphic_sectional(&cb, &u_other).unwrap());
                assert!((ha - hb).abs() < 1e-8 * ha.abs().max(1.0), "{} H {ha} vs {hb}", base.id());

                // An orthonormal partner of u, not in its holomorphic line.
                let ju = vectors::apply_j(base.cr_dim(), &u);
                let mut v = random_horizontal(&mut rng, m);
                let (cu, cj) = (vectors::dot(&v, &u), vectors::dot(&v, &ju));
                for p in 0..m {
                    v[p] -= cu * u[p] + 0.5 * cj * ju[p];
                }
                let nv = vectors::dot(&v, &v).sqrt();
                v.iter_mut().for_each(|c| *c /= nv);
                let v_other = cb.conn.frame.to_frame(&ca.conn.frame.from_frame(&v));
                let (ka, kb) = (sectional(&ca, &u, &v).unwrap(), sectional(&cb, &u_other, &v_other).unwrap());
                assert!((ka - kb).abs() < 1e-8 * ka.abs().max(1.0), "{} K {ka} vs {kb}", base.id());
            }
        }
    }
}

/// `∇θ = 0`, `∇g = 0` and `∇J = 0` in chart coordinates, from the coordinate
/// Christoffel symbols `∇_{∂_p} ∂_q = Γ^k_{pq} ∂_k`.
#[test]
fn structure_tensors_are_parallel() {
    for model in common::all_models() {
        let m = model.dim();
        for x in points(&model, 3, 13) {
            let cp = connection_packet(&model, &x, 0).unwrap();
            let gamma = cp.coordinate_gamma();
            let fp = &cp.frame;
            let mut worst: f64 = 0.0;
            for p in 0..m {
                for q in 0..m {
                    let mut dtheta = fp.theta[q].d(p).value();
                    for k in 0..m {
                        dtheta -= gamma[idx3(m, k, p, q)] * fp.theta[k].value();
                    }
                    worst = worst.max(dtheta.abs());
                    for r in 0..m {
                        let mut dg = fp.metric[q][r].d(p).value();
                        let mut dj = fp.j[q][r].d(p).value();
                        for k in 0..m {
                            dg -= gamma[idx3(m, k, p, q)] * fp.metric[k][r].value() + gamma[idx3(m, k, p, r)] * fp.metric[q][k].value();
                            // J^q_r: ∂_p J^q_r + Γ^q_{pk} J^k_r - Γ^k_{pr} J^q_k
                            dj += gamma[idx3(m, q, p, k)] * fp.j[k][r].value() - gamma[idx3(m, k, p, r)] * fp.j[q][k].value();
                        }
                        worst = worst.max(dg.abs()).max(dj.abs());
                    }
                }
            }
            assert!(worst < 1e-8, "{} at {x:?}: {worst}", model.id());
        }
    }
}

#[test]
fn axioms_hold_in_every_model() {
    for model in common::all_models() {
        for x in points(&model, 5, 14) {
            let cp = connection_packet(&model, &x, 0).unwrap();
            assert!(cp.residual < 1e-9, "{} at {x:?}: {}", model.id(), cp.residual);
        }
    }
}
