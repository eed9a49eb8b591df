mod common;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phlab::curvature::{curvature_packet, holomorphic_sectional, idx4, vectors, CurvaturePacket};
use phlab::models::{self, ChartModel, QuadricSign, ScalarField};

use common::points;

fn sasakian_models() -> Vec<ChartModel> {
    vec![
        models::heisenberg(1),
        models::heisenberg(2),
        models::sphere(1),
        models::sphere(2),
        models::quadric(1, QuadricSign::Plus, 0.5).unwrap(),
        models::quadric(2, QuadricSign::Minus, 1.0).unwrap(),
    ]
}

fn torsion_models() -> Vec<ChartModel> {
    vec![
        models::conformal(models::heisenberg(1), ScalarField::coordinate(0, 3), "x"),
        models::conformal(models::sphere(2), ScalarField::coordinate(3, 5), "y2"),
    ]
}

fn random_horizontal(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    v[0] = 0.0;
    v
}

#[test]
fn pseudohermitian_torsion_detects_sasakian_models() {
    for model in sasakian_models() {
        for x in points(&model, 5, 20) {
            let tau = curvature_packet(&model, &x, 0).unwrap().conn.tau_norm();
            assert!(tau < 1e-10, "{} at {x:?}: {tau}", model.id());
        }
    }
    for model in torsion_models() {
        for x in points(&model, 5, 21) {
            let tau = curvature_packet(&model, &x, 0).unwrap().conn.tau_norm();
            assert!(tau > 1e-3, "{} at {x:?}: {tau}", model.id());
        }
    }
}

#[test]
fn holomorphic_curvature_depends_only_on_the_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for model in sasakian_models().into_iter().chain(torsion_models()).chain([models::weighted_sphere(vec![1.0, 3.0]).unwrap()]) {
        let n = model.cr_dim();
        for x in points(&model, 3, 23) {
            let cv = curvature_packet(&model, &x, 0).unwrap();
            for _ in 0..5 {
                let u = random_horizontal(&mut rng, model.dim());
                let ju = vectors::apply_j(n, &u);
                let (lambda, mu) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let w: Vec<f64> = u.iter().zip(&ju).map(|(a, b)| lambda * a + mu * b).collect();
                let (hu, hw) = (holomorphic_sectional(&cv, &u).unwrap(), holomorphic_sectional(&cv, &w).unwrap());
                assert!((hu - hw).abs() < 1e-9 * hu.abs().max(1.0), "{} {hu} vs {hw}", model.id());
            }
        }
    }
}

/// `R(E_i, E_j) E_k` has component `E_p` at `idx4(m, p, k, i, j)`.
fn components_with_reeb_in(cv: &CurvaturePacket, slots: &[usize]) -> f64 {
    let m = cv.dim();
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let idx = [a, b, c, d];
                    if slots.iter().any(|&s| idx[s] == 0) {
                        worst = worst.max(cv.riemann[idx4(m, a, b, c, d)].value().abs());
                    }
                }
            }
        }
    }
    worst
}

#[test]
fn curvature_preserves_the_horizontal_bundle() {
    for model in sasakian_models().into_iter().chain(torsion_models()) {
        for x in points(&model, 3, 24) {
            let cv = curvature_packet(&model, &x, 0).unwrap();
            let scale = cv.norm().max(1.0);
            assert!(components_with_reeb_in(&cv, &[0, 1]) < 1e-9 * scale, "{}", model.id());
        }
    }
}

#[test]
fn sasakian_curvature_has_pair_symmetry_and_kills_the_reeb_field() {
    for model in sasakian_models() {
        let m = model.dim();
        for x in points(&model, 3, 25) {
            let cv = curvature_packet(&model, &x, 0).unwrap();
            let scale = cv.norm().max(1.0);
            assert!(components_with_reeb_in(&cv, &[0, 1, 2, 3]) < 1e-9 * scale, "{}", model.id());
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let diff = cv.r(a, b, c, d) - cv.r(c, d, a, b);
                            assert!(diff.abs() < 1e-9 * scale, "{} R({a}{b}{c}{d}) {diff}", model.id());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn torsion_breaks_pair_symmetry() {
    let model = torsion_models().remove(0);
    let m = model.dim();
    let cv = curvature_packet(&model, &model.base_point(), 0).unwrap();
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    worst = worst.max((cv.r(a, b, c, d) - cv.r(c, d, a, b)).abs());
                }
            }
        }
    }
    assert!(worst > 1e-3, "{worst}");
}

/// Curvature in coordinate components `R(∂_a, ∂_b, ∂_c, ∂_d)`.
fn coordinate_curvature(model: &ChartModel, x: &[f64]) -> Vec<f64> {
    let cv = curvature_packet(model, x, 0).unwrap();
    let m = cv.dim();
    let f = cv.conn.frame.coframe.iter().map(|r| r.iter().map(|c| c.value()).collect::<Vec<_>>()).collect::<Vec<_>>();
    let mut out = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let ea: Vec<f64> = (0..m).map(|k| f[k][a]).collect();
                    let eb: Vec<f64> = (0..m).map(|k| f[k][b]).collect();
                    let ec: Vec<f64> = (0..m).map(|k| f[k][c]).collect();
                    let ed: Vec<f64> = (0..m).map(|k| f[k][d]).collect();
                    out[idx4(m, a, b, c, d)] = cv.eval(&ea, &eb, &ec, &ed);
                }
            }
        }
    }
    out
}

/// `(∇_{∂_p} R)` by Richardson-extrapolated central differences of
/// coordinate components, compared with the jet computation in the frame.
#[test]
fn covariant_derivative_matches_finite_differences() {
    let h = 1e-3;
    for model in torsion_models().into_iter().chain([models::weighted_sphere(vec![1.0, 2.0]).unwrap()]) {
        let m = model.dim();
        let x = model.base_point();
        let cv = curvature_packet(&model, &x, 1).unwrap();
        let nabla = cv.nabla().unwrap();
        let gamma = cv.conn.coordinate_gamma();
        let coframe: Vec<Vec<f64>> = cv.conn.frame.coframe.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
        let r0 = coordinate_curvature(&model, &x);
        let m4 = m * m * m * m;
        let mut largest: f64 = 0.0;
        for p in 0..m {
            let shifted = |s: f64| {
                let mut y = x.clone();
                y[p] += s;
                coordinate_curvature(&model, &y)
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            let (plus_half, minus_half) = (shifted(h / 2.0), shifted(-h / 2.0));
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let i = idx4(m, a, b, c, d);
                            let coarse = (plus[i] - minus[i]) / (2.0 * h);
                            let fine = (plus_half[i] - minus_half[i]) / h;
                            let mut fd = (4.0 * fine - coarse) / 3.0;
                            for k in 0..m {
                                fd -= gamma[phlab::connection::idx3(m, k, p, a)] * r0[idx4(m, k, b, c, d)];
                                fd -= gamma[phlab::connection::idx3(m, k, p, b)] * r0[idx4(m, a, k, c, d)];
                                fd -= gamma[phlab::connection::idx3(m, k, p, c)] * r0[idx4(m, a, b, k, d)];
                                fd -= gamma[phlab::connection::idx3(m, k, p, d)] * r0[idx4(m, a, b, c, k)];
                            }
                            // Frame result contracted with ∂_p, ∂_a, ..., ∂_d.
                            let mut jet = 0.0;
                            for u in 0..m {
                                for (ai, fa) in coframe.iter().enumerate() {
                                    for (bi, fb) in coframe.iter().enumerate() {
                                        for (ci, fc) in coframe.iter().enumerate() {
                                            for (di, fdd) in coframe.iter().enumerate() {
                                                let w = coframe[u][p] * fa[a] * fb[b] * fc[c] * fdd[d];
                                                if w != 0.0 {
                                                    jet += w * nabla[u * m4 + idx4(m, ai, bi, ci, di)];
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                            largest = largest.max(jet.abs());
                            assert!((fd - jet).abs() < 1e-6 * jet.abs().max(1.0), "{} p={p} R{a}{b}{c}{d}: {fd} vs {jet}", model.id());
                        }
                    }
                }
            }
        }
        assert!(largest > 1e-2, "{}: the check needs a non-parallel curvature", model.id());
    }
}
