//! Complex-frame translation layer and the conformal-change formulas.
//!
//! From an adapted orthonormal frame `E_0 = T, E_1, ..., E_{2n}` with
//! `E_{n+a} = J E_a` we take `T_a = E_a - i J E_a`, which spans `T_{1,0}`.
//! Index `A` runs over `0` (the Reeb field), `1..=n` (`T_a`) and
//! `n+1..=2n` (`T_{\bar a}`). Complex formulas are written with the Levi
//! form normalized by `dθ(X, Y) = (Xθ(Y) - Yθ(X) - θ([X, Y]))/2`, where this
//! frame has `g_{a\bar b} = δ_{ab}`; in that normalization the commutation
//! formula reads `∇_{\bar b} u_a = ∇_a u_{\bar b} + 2i g_{a\bar b} u_0`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::connection::{connection_packet, idx3, ConnectionPacket};
use crate::curvature::{curvature_packet, holomorphic_sectional};
use crate::error::{GeometryError, Result};
use crate::frame::FramePacket;
use crate::identities::{random_vector, Domain};
use crate::jet::Jet;
use crate::models::{conformal, ChartModel, ScalarField};
use crate::report::{CheckRow, ExperimentReport};

pub type C64 = Complex<f64>;

const I: C64 = Complex { re: 0.0, im: 1.0 };

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Index of `T_{\bar a}` for `T_a`, and conversely.
pub fn bar(n: usize, a: usize) -> usize {
    match a {
        0 => 0,
        a if a <= n => a + n,
        a => a - n,
    }
}

/// Frame components of `T_A` in the real frame `E`.
pub fn complex_frame(n: usize) -> Vec<Vec<C64>> {
    let m = 2 * n + 1;
    let mut z = vec![vec![c(0.0); m]; m];
    z[0][0] = c(1.0);
    for a in 1..=n {
        z[a][a] = c(1.0);
        z[a][n + a] = -I;
        z[n + a][a] = c(1.0);
        z[n + a][n + a] = I;
    }
    z
}

/// Coefficients of a frame-component vector in the complex frame.
pub fn to_complex(n: usize, v: &[C64]) -> Vec<C64> {
    let m = 2 * n + 1;
    let mut out = vec![c(0.0); m];
    out[0] = v[0];
    for a in 1..=n {
        out[a] = (v[a] + I * v[n + a]) * 0.5;
        out[n + a] = (v[a] - I * v[n + a]) * 0.5;
    }
    out
}

/// `Γ^C_{AB}` with `∇_{T_A} T_B = Γ^C_{AB} T_C`, from real frame coefficients.
pub fn frame_coefficients(cp: &ConnectionPacket) -> Vec<C64> {
    let n = cp.n();
    let m = cp.dim();
    let z = complex_frame(n);
    let mut out = vec![c(0.0); m * m * m];
    for a in 0..m {
        for b in 0..m {
            let mut v = vec![c(0.0); m];
            for i in 0..m {
                for j in 0..m {
                    let w = z[a][i] * z[b][j];
                    if w == c(0.0) {
                        continue;
                    }
                    for (k, vk) in v.iter_mut().enumerate() {
                        *vk += w * cp.gamma_value(k, i, j);
                    }
                }
            }
            for (k, ck) in to_complex(n, &v).into_iter().enumerate() {
                out[idx3(m, k, a, b)] = ck;
            }
        }
    }
    out
}

/// Chart components of `T_A` as jets (real and imaginary parts).
fn chart_fields(fp: &FramePacket) -> Vec<(Vec<Jet>, Vec<Jet>)> {
    let n = fp.n;
    let m = fp.dim();
    let zero: Vec<Jet> = fp.frame[0].iter().map(Jet::zero_like).collect();
    (0..m)
        .map(|a| {
            if a == 0 {
                (fp.frame[0].clone(), zero.clone())
            } else if a <= n {
                (fp.frame[a].clone(), fp.frame[n + a].iter().map(|v| -v).collect())
            } else {
                (fp.frame[a - n].clone(), fp.frame[a].clone())
            }
        })
        .collect()
}

fn values_c(v: &(Vec<Jet>, Vec<Jet>)) -> Vec<C64> {
    v.0.iter().zip(&v.1).map(|(r, i)| Complex::new(r.value(), i.value())).collect()
}

/// Derivative of a complex jet vector along a complex chart vector.
fn along(x: &[C64], y: &(Vec<Jet>, Vec<Jet>)) -> Vec<C64> {
    let m = x.len();
    (0..m)
        .map(|k| {
            let gr = y.0[k].gradient();
            let gi = y.1[k].gradient();
            (0..m).map(|q| x[q] * Complex::new(gr[q], gi[q])).sum()
        })
        .collect()
}

/// Coefficients `Γ^C_{AB}` of the connection of `cp` with respect to the
/// complex frame built from `basis` (a possibly different pseudohermitian
/// structure on the same CR manifold) with the Reeb field `reeb` in slot 0.
/// Evaluated through the coordinate connection.
pub fn coefficients_in_frame(cp: &ConnectionPacket, basis: &FramePacket, reeb: &[f64]) -> Result<Vec<C64>> {
    let m = cp.dim();
    let gc = cp.coordinate_gamma();
    let fields = chart_fields(basis);
    let mut cols: Vec<Vec<C64>> = fields.iter().map(values_c).collect();
    cols[0] = reeb.iter().map(|v| c(*v)).collect();
    let basis_matrix = DMatrix::from_fn(m, m, |k, a| cols[a][k]);
    let lu = basis_matrix.lu();
    let mut out = vec![c(0.0); m * m * m];
    for a in 0..m {
        for b in 0..m {
            // ∇_X Y = X(Y^k) + Γc^k_{pq} X^p Y^q, with Y the field T_B.
            let x = &cols[a];
            let y = &cols[b];
            let mut v = if b == 0 {
                // The Reeb field of `cp` is parallel; its coefficients are not needed.
                vec![c(0.0); m]
            } else {
                along(x, &fields[b])
            };
            if b != 0 {
                for (k, vk) in v.iter_mut().enumerate() {
                    for p in 0..m {
                        for q in 0..m {
                            *vk += x[p] * y[q] * gc[idx3(m, k, p, q)];
                        }
                    }
                }
            }
            let sol = lu.solve(&DVector::from_vec(v)).ok_or(GeometryError::DegenerateFrame { point: cp.point().to_vec() })?;
            for k in 0..m {
                out[idx3(m, k, a, b)] = sol[k];
            }
        }
    }
    Ok(out)
}

/// First and second frame derivatives of a real function:
/// `first[A] = T_A(u)`, `second[A][B] = T_A(T_B(u))`.
pub struct ScalarDerivatives {
    pub value: f64,
    pub first: Vec<C64>,
    pub second: Vec<Vec<C64>>,
}

pub fn scalar_derivatives(fp: &FramePacket, u: &ScalarField) -> ScalarDerivatives {
    let m = fp.dim();
    let n = fp.n;
    let uj = u.jet(&fp.point, 2);
    let grad: Vec<Jet> = (0..m).map(|p| uj.d(p)).collect();
    let e: Vec<Vec<Jet>> = fp.frame.iter().map(|r| r.iter().map(|c| c.truncate(1)).collect()).collect();
    // E_a(u) as jets of order 1.
    let eu: Vec<Jet> = e.iter().map(|ea| crate::jet::dot(ea, &grad)).collect();
    let ev: Vec<Vec<f64>> = fp.frame.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
    let real_second: Vec<Vec<f64>> =
        (0..m).map(|a| (0..m).map(|b| ev[a].iter().zip(eu[b].gradient()).map(|(x, g)| x * g).sum()).collect()).collect();
    let z = complex_frame(n);
    let first: Vec<C64> = (0..m).map(|a| (0..m).map(|i| z[a][i] * eu[i].value()).sum()).collect();
    let second: Vec<Vec<C64>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let mut s = c(0.0);
                    for i in 0..m {
                        for j in 0..m {
                            s += z[a][i] * z[b][j] * real_second[i][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    ScalarDerivatives { value: uj.value(), first, second }
}

/// `∇_{\bar b} u_a = T_{\bar b}(u_a) - Γ^μ_{\bar b a} u_μ` at `[a][b]` (1-based `a`, `b`).
pub fn complex_hessian(n: usize, gamma: &[C64], d: &ScalarDerivatives) -> Vec<Vec<C64>> {
    let m = 2 * n + 1;
    let mut h = vec![vec![c(0.0); n + 1]; n + 1];
    for a in 1..=n {
        for b in 1..=n {
            let bb = bar(n, b);
            let mut s = d.second[bb][a];
            for mu in 1..=n {
                s -= gamma[idx3(m, mu, bb, a)] * d.first[mu];
            }
            h[a][b] = s;
        }
    }
    h
}

/// `∇_a u_{\bar b} = T_a(u_{\bar b}) - Γ^{\bar μ}_{a \bar b} u_{\bar μ}`.
fn mixed_hessian_conjugate(n: usize, gamma: &[C64], d: &ScalarDerivatives) -> Vec<Vec<C64>> {
    let m = 2 * n + 1;
    let mut h = vec![vec![c(0.0); n + 1]; n + 1];
    for a in 1..=n {
        for b in 1..=n {
            let bb = bar(n, b);
            let mut s = d.second[a][bb];
            for mu in 1..=n {
                s -= gamma[idx3(m, bar(n, mu), a, bb)] * d.first[bar(n, mu)];
            }
            h[a][b] = s;
        }
    }
    h
}

/// Largest entry of `∇_{\bar b} u_a - ∇_a u_{\bar b} - 2i δ_{ab} u_0`.
pub fn commutation_residual(model: &ChartModel, x: &[f64], u: &ScalarField) -> Result<f64> {
    let cp = connection_packet(model, x, 0)?;
    let n = cp.n();
    let gamma = frame_coefficients(&cp);
    let d = scalar_derivatives(&cp.frame, u);
    let h1 = complex_hessian(n, &gamma, &d);
    let h2 = mixed_hessian_conjugate(n, &gamma, &d);
    let mut worst: f64 = 0.0;
    for a in 1..=n {
        for b in 1..=n {
            let delta = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((h1[a][b] - h2[a][b] - I * 2.0 * delta * d.first[0]).norm());
        }
    }
    Ok(worst)
}

/// Discrepancies between the directly solved connection of `e^{2u} θ` and
/// the closed-form conformal corrections, one entry per formula.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConformalDiscrepancy {
    pub holomorphic: f64,
    pub mixed: f64,
    pub reeb: f64,
}

impl ConformalDiscrepancy {
    pub fn max(&self) -> f64 {
        self.holomorphic.max(self.mixed).max(self.reeb)
    }
}

pub fn conformal_coefficients_check(base: &ChartModel, u: &ScalarField, x: &[f64]) -> Result<ConformalDiscrepancy> {
    let n = base.cr_dim();
    let m = base.dim();
    let hat = conformal(base.clone(), u.clone(), "u");
    let bcp = connection_packet(base, x, 1)?;
    let hcp = connection_packet(&hat, x, 1)?;
    let g = frame_coefficients(&bcp);
    let hat_reeb = hcp.frame.reeb_values();
    let gh = coefficients_in_frame(&hcp, &bcp.frame, &hat_reeb)?;
    let d = scalar_derivatives(&bcp.frame, u);
    let hess = complex_hessian(n, &g, &d);
    let e2u = (2.0 * d.value).exp();
    let ua = |a: usize| d.first[a];
    // u^a = g^{a\bar b} u_{\bar b} = u_{\bar a}.
    let up = |a: usize| d.first[bar(n, a)];
    let upbar = |a: usize| d.first[a];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = ConformalDiscrepancy::default();
    for al in 1..=n {
        for ga in 1..=n {
            for be in 1..=n {
                let pred = g[idx3(m, al, ga, be)] + (ua(ga) * delta(al, be) + ua(be) * delta(al, ga)) * 2.0;
                out.holomorphic = out.holomorphic.max((gh[idx3(m, al, ga, be)] - pred).norm());
                let gbar = bar(n, ga);
                let pred = g[idx3(m, al, gbar, be)] - up(al) * 2.0 * delta(be, ga);
                out.mixed = out.mixed.max((gh[idx3(m, al, gbar, be)] - pred).norm());
            }
        }
    }
    for ga in 1..=n {
        for al in 1..=n {
            let mut inner = hess[al][ga] - ua(al) * up(ga) * 2.0;
            for rho in 1..=n {
                inner += upbar(rho) * g[idx3(m, ga, bar(n, rho), al)] - up(rho) * g[idx3(m, ga, rho, al)];
            }
            let pred = g[idx3(m, ga, 0, al)] + d.first[0] * 2.0 * delta(al, ga) + I * inner;
            out.reeb = out.reeb.max((gh[idx3(m, ga, 0, al)] * e2u - pred).norm());
        }
    }
    Ok(out)
}

/// Both sides of the conformal law for the holomorphic sectional curvature
/// of the plane spanned by a horizontal `X` (chart components). Returns
/// `(left, right, |imaginary part of right|)`, all in the complex-frame
/// normalization, where `H` is twice the value in the crate's normalization.
pub fn conformal_curvature_sides(base: &ChartModel, u: &ScalarField, x: &[f64], plane: &[f64]) -> Result<(f64, f64, f64)> {
    let n = base.cr_dim();
    let hat = conformal(base.clone(), u.clone(), "u");
    let bcv = curvature_packet(base, x, 0)?;
    let hcv = curvature_packet(&hat, x, 0)?;
    let xb = bcv.conn.frame.to_frame(plane);
    let xh = hcv.conn.frame.to_frame(plane);
    if xb[0].abs() > 1e-10 * (1.0 + xb.iter().map(|v| v * v).sum::<f64>().sqrt()) {
        return Err(GeometryError::NotHorizontal { theta: xb[0] });
    }
    let h = 2.0 * holomorphic_sectional(&bcv, &xb)?;
    let hh = 2.0 * holomorphic_sectional(&hcv, &xh)?;
    let g = frame_coefficients(&bcv.conn);
    let d = scalar_derivatives(&bcv.conn.frame, u);
    let hess = complex_hessian(n, &g, &d);
    // X = Z + \bar Z with Z = ξ^a T_a.
    let xi: Vec<C64> = (1..=n).map(|a| Complex::new(xb[a], xb[n + a]) * 0.5).collect();
    let norm = xi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let eta: Vec<C64> = xi.iter().map(|v| v / norm).collect();
    let mut uu = c(0.0);
    for a in 1..=n {
        uu += d.first[a] * d.first[bar(n, a)];
    }
    let mut hterm = c(0.0);
    for a in 1..=n {
        for b in 1..=n {
            hterm += hess[a][b] * eta[a - 1] * eta[b - 1].conj();
        }
    }
    let rhs = c(h) + I * 2.0 * d.first[0] - uu * 2.0 - hterm * 2.0;
    let lhs = (2.0 * d.value).exp() * hh;
    Ok((lhs, rhs.re, rhs.im.abs()))
}

pub const CONFORMAL_COEFFICIENT_TOLERANCE: f64 = 1e-6;
pub const CONFORMAL_CURVATURE_TOLERANCE: f64 = 1e-5;
pub const REALITY_TOLERANCE: f64 = 1e-8;

/// Coefficient and curvature rows for one rescaling.
pub fn conformal_report(base: &ChartModel, u: &ScalarField, label: &str, points: &[Vec<f64>], planes: usize, seed: u64) -> ExperimentReport {
    let mut rep = ExperimentReport::new("conformal", format!("{} with u={label}", base.id()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in points {
        match conformal_coefficients_check(base, u, x) {
            Ok(d) => {
                rep.push(CheckRow::check("conformal-holomorphic-coefficients", x, d.holomorphic, CONFORMAL_COEFFICIENT_TOLERANCE));
                rep.push(CheckRow::check("conformal-mixed-coefficients", x, d.mixed, CONFORMAL_COEFFICIENT_TOLERANCE));
                rep.push(CheckRow::check("conformal-reeb-coefficients", x, d.reeb, CONFORMAL_COEFFICIENT_TOLERANCE));
            }
            Err(e) => rep.push(CheckRow::error("conformal-coefficients", x, &e)),
        }
        let fp = match crate::frame::frame_packet(base, x, 0) {
            Ok(fp) => fp,
            Err(e) => {
                rep.push(CheckRow::error("conformal-curvature", x, &e));
                continue;
            }
        };
        for _ in 0..planes {
            let v = random_vector(&mut rng, base.dim(), Domain::Horizontal);
            let plane = fp.from_frame(&v);
            match conformal_curvature_sides(base, u, x, &plane) {
                Ok((l, r, im)) => {
                    rep.push(CheckRow::check("conformal-curvature", x, (l - r).abs(), CONFORMAL_CURVATURE_TOLERANCE));
                    rep.push(CheckRow::check("conformal-curvature-reality", x, im, REALITY_TOLERANCE));
                }
                Err(e) => rep.push(CheckRow::error("conformal-curvature", x, &e)),
            }
        }
    }
    rep
}

/// Tangential Cauchy-Riemann residual `max_a |T_{\bar a}(u + iv)|`.
pub fn cr_residual(fp: &FramePacket, u: &ScalarField, v: &ScalarField) -> f64 {
    let n = fp.n;
    let du = scalar_derivatives(fp, u);
    let dv = scalar_derivatives(fp, v);
    (1..=n).map(|a| (du.first[bar(n, a)] + I * dv.first[bar(n, a)]).norm()).fold(0.0, f64::max)
}

pub const CR_TOLERANCE: f64 = 1e-8;

/// Residual of `∇_{\bar b} u_a = (i u_0 - v_0) g_{a\bar b}` for a CR
/// function `u + iv`. Fails if `u + iv` is not CR.
pub fn pluriharmonic_hessian_residual(model: &ChartModel, x: &[f64], u: &ScalarField, v: &ScalarField) -> Result<f64> {
    let cp = connection_packet(model, x, 0)?;
    let cr = cr_residual(&cp.frame, u, v);
    if cr > CR_TOLERANCE {
        return Err(GeometryError::NotCr { residual: cr });
    }
    let n = cp.n();
    let gamma = frame_coefficients(&cp);
    let du = scalar_derivatives(&cp.frame, u);
    let dv = scalar_derivatives(&cp.frame, v);
    let h = complex_hessian(n, &gamma, &du);
    let mut worst: f64 = 0.0;
    for a in 1..=n {
        for b in 1..=n {
            let delta = if a == b { 1.0 } else { 0.0 };
            let rhs = (I * du.first[0] - dv.first[0]) * delta;
            worst = worst.max((h[a][b] - rhs).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg, sphere};

    #[test]
    fn frame_round_trip() {
        let z = complex_frame(2);
        for (a, za) in z.iter().enumerate() {
            let back = to_complex(2, za);
            for (b, v) in back.iter().enumerate() {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((v - c(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn heisenberg_complex_coefficients_vanish() {
        let cp = connection_packet(&heisenberg(1), &[0.1, 0.2, 0.3], 0).unwrap();
        assert!(frame_coefficients(&cp).iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn coordinate_route_matches_frame_route() {
        let s = sphere(1);
        let x = s.base_point();
        let cp = connection_packet(&s, &x, 1).unwrap();
        let a = frame_coefficients(&cp);
        let b = coefficients_in_frame(&cp, &cp.frame, &cp.frame.reeb_values()).unwrap();
        let m = 3;
        for k in 0..m {
            for i in 0..m {
                for j in 1..m {
                    let u = idx3(m, k, i, j);
                    assert!((a[u] - b[u]).norm() < 1e-9, "{k} {i} {j}: {} vs {}", a[u], b[u]);
                }
            }
        }
    }

    fn formula(g: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> ScalarField {
        ScalarField::Formula(std::sync::Arc::new(g))
    }

    fn sphere_component(n: usize, k: usize) -> ScalarField {
        formula(move |x| crate::models::Sphere::standard(n).embed(x)[k].clone())
    }

    /// CR functions `u + iv` on the Heisenberg group and on spheres.
    fn cr_cases() -> Vec<(ChartModel, ScalarField, ScalarField)> {
        vec![
            (heisenberg(1), ScalarField::coordinate(0, 3), ScalarField::coordinate(1, 3)),
            (heisenberg(1), formula(|x| &x[0].square() - &x[1].square()), formula(|x| &(&x[0] * &x[1]) * 2.0)),
            (heisenberg(1), ScalarField::coordinate(2, 3), formula(|x| &x[0].square() + &x[1].square())),
            (heisenberg(2), ScalarField::coordinate(2, 5), ScalarField::coordinate(3, 5)),
            (heisenberg(1), ScalarField::Constant(0.3), ScalarField::Constant(-1.0)),
            (sphere(1), sphere_component(1, 0), sphere_component(1, 1)),
            (sphere(1), sphere_component(1, 2), sphere_component(1, 3)),
            (sphere(2), sphere_component(2, 2), sphere_component(2, 3)),
        ]
    }

    #[test]
    fn lee_identity_on_cr_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (model, u, v) in cr_cases() {
            for _ in 0..3 {
                let x = model.sample_point(&mut rng);
                let r = pluriharmonic_hessian_residual(&model, &x, &u, &v).unwrap();
                assert!(r < 1e-9, "{} at {x:?}: {r}", model.id());
            }
        }
    }

    #[test]
    fn non_cr_function_is_rejected() {
        let h = heisenberg(1);
        let x = ScalarField::coordinate(0, 3);
        let err = pluriharmonic_hessian_residual(&h, &[0.1, 0.2, 0.3], &x, &x).unwrap_err();
        assert!(matches!(err, GeometryError::NotCr { residual } if (residual - 0.5f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn commutation_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let scalars = [
            ScalarField::coordinate(2, 3),
            formula(|x| &(&x[0] * &x[2]) + &x[1].square()),
            formula(|x| (&x[0] + &(&x[1] * &x[2])).sin()),
        ];
        for model in [heisenberg(1), sphere(1)] {
            for u in &scalars {
                let x = model.sample_point(&mut rng);
                let r = commutation_residual(&model, &x, u).unwrap();
                assert!(r < 1e-9, "{}: {r}", model.id());
            }
        }
    }

    #[test]
    fn constant_rescaling_doubles_curvature() {
        let u = ScalarField::Constant(-(2f64.ln()) / 2.0);
        let model = crate::models::conformal(sphere(1), u, "c");
        let points = vec![model.base_point(), vec![0.2, -0.1, 0.3]];
        let h = crate::spaceform::measured_constant(&model, &points, 1).unwrap();
        assert!((h - 2.0).abs() < 1e-8, "{h}");
    }
}
