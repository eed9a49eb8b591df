//! Second fundamental form of pseudohermitian immersions.
//!
//! Everything is expressed in the adapted orthonormal frames of source and
//! target (Webster metric), so `g` and `g'` are Euclidean on frame
//! components and `J`, `J'` act by the standard block rule. Pushforwards of
//! the source frame and the normal basis are carried as first-order jets in
//! the source coordinates; ambient covariant derivatives along the map are
//! then `E_i(ξ^a) + Γ'^a_{bc} (f_* E_i)^b ξ^c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::connection::connection_packet;
use crate::curvature::{curvature_packet, vectors, CurvaturePacket};
use crate::error::{GeometryError, Result};
use crate::identities::{random_vector, Domain};
use crate::jet::{self, Jet};
use crate::models::ImmersionMap;
use crate::report::{CheckRow, ExperimentReport};

/// Tolerance of the pullback, CR and Reeb-normal gates.
pub const GATE_TOLERANCE: f64 = 1e-10;
/// Tolerance of the tangential-part check of the Gauss formula.
pub const GAUSS_FORMULA_TOLERANCE: f64 = 1e-6;
pub const DUALITY_TOLERANCE: f64 = 1e-7;
pub const PROJECTION_TOLERANCE: f64 = 1e-10;
pub const FUNDAMENTAL_TOLERANCE: f64 = 1e-6;
pub const CURVATURE_TOLERANCE: f64 = 1e-5;
/// Size of the deliberate perturbation of `α` in the negative controls.
pub const PERTURBATION: f64 = 1e-2;
/// Residual a perturbed `α` must exceed.
pub const NEGATIVE_CONTROL_THRESHOLD: f64 = 1e-3;

/// Residuals of the three defining conditions of a pseudohermitian immersion.
#[derive(Clone, Debug, PartialEq)]
pub struct GateResiduals {
    /// `|f*θ' - θ|`.
    pub pullback: f64,
    /// `|f_* J X - J' f_* X|` over the horizontal frame, with `θ'(f_* X)`.
    pub cr: f64,
    /// Normal component of `T'`.
    pub reeb_normal: f64,
}

/// Second fundamental form data at a point, in frame components.
#[derive(Clone, Debug)]
pub struct ImmersionPacket {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    /// Source CR dimension.
    pub n: usize,
    /// Target CR dimension.
    pub n_target: usize,
    /// `pushforward[i]` = target frame components of `f_* E_i`.
    pub pushforward: Vec<Vec<f64>>,
    /// g'-orthonormal basis of the normal space.
    pub normal: Vec<Vec<f64>>,
    /// `alpha[i][j]` = `α(f)(E_i, E_j)`.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// `weingarten[r][l][i]` = `E_l`-component of `a_{ξ_r} E_i`.
    pub weingarten: Vec<Vec<Vec<f64>>>,
    pub gates: GateResiduals,
    /// Tangential part of `∇'_{f_*E_i} f_*E_j` against `f_* ∇_{E_i} E_j`.
    pub gauss_residual: f64,
    /// `g'(α(X, Y), ξ) - g(a_ξ X, Y)` on frame vectors.
    pub duality_residual: f64,
    /// Idempotency and completeness of the tangent/normal split.
    pub projection_residual: f64,
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn jet_dot(a: &[Jet], b: &[Jet]) -> Jet {
    jet::dot(a, b)
}

/// Orthonormalizes jets vectors (Euclidean) in order.
fn orthonormalize(vs: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let mut out: Vec<Vec<Jet>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for u in &out {
            let c = jet_dot(&w, u);
            for (wk, uk) in w.iter_mut().zip(u) {
                *wk -= &(&c * uk);
            }
        }
        let inv = jet_dot(&w, &w).sqrt().recip();
        out.push(w.iter().map(|c| c * &inv).collect());
    }
    out
}

/// Gram-Schmidt against `span` with greedy pivoting over the coordinate axes:
/// at each step the axis with the largest residual is kept.
fn normal_basis(span: &[Vec<Jet>], dim: usize, count: usize) -> Result<Vec<Vec<Jet>>> {
    let proto = span[0][0].zero_like();
    let mut basis: Vec<Vec<Jet>> = span.to_vec();
    let mut normals = Vec::with_capacity(count);
    let mut used = vec![false; dim];
    for _ in 0..count {
        let mut best: Option<(usize, Vec<Jet>, f64)> = None;
        for a in (0..dim).filter(|&a| !used[a]) {
            let mut w: Vec<Jet> = (0..dim).map(|k| proto.const_like(if k == a { 1.0 } else { 0.0 })).collect();
            for u in &basis {
                let c = jet_dot(&w, u);
                for (wk, uk) in w.iter_mut().zip(u) {
                    *wk -= &(&c * uk);
                }
            }
            let norm = jet_dot(&w, &w).value().sqrt();
            if best.as_ref().is_none_or(|b| norm > b.2 + 1e-12) {
                best = Some((a, w, norm));
            }
        }
        let (a, w, norm) = best.ok_or_else(|| GeometryError::Invalid("normal space is rank deficient".into()))?;
        if norm < 1e-6 {
            return Err(GeometryError::Invalid(format!("normal space is rank deficient (residual {norm:.3e})")));
        }
        used[a] = true;
        let inv = jet_dot(&w, &w).sqrt().recip();
        let w: Vec<Jet> = w.iter().map(|c| c * &inv).collect();
        basis.push(w.clone());
        normals.push(w);
    }
    Ok(normals)
}

/// Checks the immersion gates and builds the second fundamental form.
pub fn second_fundamental_form(imm: &ImmersionMap, x: &[f64]) -> Result<ImmersionPacket> {
    let src = connection_packet(&imm.source, x, 0)?;
    let n = imm.source.cr_dim();
    let ms = imm.source.dim();
    let nt = imm.target.cr_dim();
    let mt = imm.target.dim();
    let phi = imm.jets(x, 2);
    let image = jet::values(&phi);
    let tgt = connection_packet(&imm.target, &image, 0)?;
    let phi1: Vec<Jet> = phi.iter().map(|f| f.truncate(1)).collect();
    let coframe_t: Vec<Vec<Jet>> = tgt.frame.coframe.iter().map(|row| row.iter().map(|c| c.truncate(1).compose(&phi1)).collect()).collect();
    let df: Vec<Vec<Jet>> = phi.iter().map(|f| (0..ms).map(|p| f.d(p)).collect()).collect();
    let e_src = &src.frame.frame;
    // Target frame components of f_* E_j as jets in the source coordinates.
    let pushed: Vec<Vec<Jet>> = (0..ms)
        .map(|j| {
            let coord: Vec<Jet> = (0..mt).map(|k| jet_dot(&df[k], &e_src[j])).collect();
            (0..mt).map(|a| jet_dot(&coframe_t[a], &coord)).collect()
        })
        .collect();
    let t: Vec<Vec<f64>> = pushed.iter().map(|v| jet::values(v)).collect();

    let theta_s = src.frame.theta_values();
    let theta_t = tgt.frame.theta_values();
    let pull: Vec<f64> = (0..ms).map(|p| (0..mt).map(|k| theta_t[k] * df[k][p].value()).sum()).collect();
    let scale = 1.0 + theta_s.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let pullback = max_abs(&pull, &theta_s) / scale;
    if pullback > GATE_TOLERANCE {
        return Err(GeometryError::NotPseudohermitian { residual: pullback });
    }
    let mut cr: f64 = 0.0;
    for a in 1..ms {
        let ja = vectors::apply_j(n, &vectors::basis(ms, a));
        let pushed_ja: Vec<f64> = (0..mt).map(|c| (0..ms).map(|i| ja[i] * t[i][c]).sum()).collect();
        cr = cr.max(max_abs(&pushed_ja, &vectors::apply_j(nt, &t[a]))).max(t[a][0].abs());
    }
    if cr > GATE_TOLERANCE {
        return Err(GeometryError::NotCr { residual: cr });
    }

    let tangent = orthonormalize(&pushed);
    let normal_jets = normal_basis(&tangent, mt, 2 * (nt - n))?;
    let normal: Vec<Vec<f64>> = normal_jets.iter().map(|v| jet::values(v)).collect();
    let tangent_v: Vec<Vec<f64>> = tangent.iter().map(|v| jet::values(v)).collect();
    let project = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; mt];
        for u in &tangent_v {
            let c = vectors::dot(v, u);
            for (o, uk) in out.iter_mut().zip(u) {
                *o += c * uk;
            }
        }
        out
    };
    let reeb = vectors::basis(mt, 0);
    let reeb_normal = vectors::dot(&reeb, &reeb) - vectors::dot(&project(&reeb), &project(&reeb));
    let reeb_normal = reeb_normal.abs().sqrt();
    if reeb_normal > GATE_TOLERANCE {
        return Err(GeometryError::Invalid(format!("target Reeb field has normal component {reeb_normal:.3e}")));
    }
    let mut projection_residual: f64 = 0.0;
    for a in 0..mt {
        let e = vectors::basis(mt, a);
        let p = project(&e);
        let pp = project(&p);
        let mut complete = p.clone();
        for xi in &normal {
            let c = vectors::dot(&e, xi);
            for (o, xk) in complete.iter_mut().zip(xi) {
                *o += c * xk;
            }
        }
        projection_residual = projection_residual.max(max_abs(&pp, &p)).max(max_abs(&complete, &e));
    }

    // Tangent coordinates: f_* E_l components of a target vector.
    let gram = nalgebra::DMatrix::from_fn(ms, ms, |i, j| vectors::dot(&t[i], &t[j]));
    let gram_inv = gram.try_inverse().ok_or_else(|| GeometryError::Invalid("pushforward is not injective".into()))?;
    let tangential = |v: &[f64]| -> Vec<f64> {
        let rhs: Vec<f64> = t.iter().map(|ti| vectors::dot(v, ti)).collect();
        (0..ms).map(|l| (0..ms).map(|q| gram_inv[(l, q)] * rhs[q]).sum()).collect()
    };
    let ambient_derivative = |i: usize, field: &[Jet]| -> Vec<f64> {
        let ei: Vec<f64> = e_src[i].iter().map(Jet::value).collect();
        (0..mt)
            .map(|a| {
                let d: f64 = field[a].gradient().iter().zip(&ei).map(|(g, v)| g * v).sum();
                let mut s = d;
                for b in 0..mt {
                    for c in 0..mt {
                        s += tgt.gamma_value(a, b, c) * t[i][b] * field[c].value();
                    }
                }
                s
            })
            .collect()
    };

    let mut alpha = vec![vec![vec![0.0; mt]; ms]; ms];
    let mut gauss_residual: f64 = 0.0;
    for i in 0..ms {
        for j in 0..ms {
            let d = ambient_derivative(i, &pushed[j]);
            let c = tangential(&d);
            for l in 0..ms {
                gauss_residual = gauss_residual.max((c[l] - src.gamma_value(l, i, j)).abs());
            }
            let tan: Vec<f64> = (0..mt).map(|a| (0..ms).map(|l| c[l] * t[l][a]).sum()).collect();
            alpha[i][j] = d.iter().zip(&tan).map(|(p, q)| p - q).collect();
        }
    }
    let mut weingarten = Vec::with_capacity(normal.len());
    for xi in &normal_jets {
        let mut a_xi = vec![vec![0.0; ms]; ms];
        for i in 0..ms {
            let d = ambient_derivative(i, xi);
            let c = tangential(&d);
            for l in 0..ms {
                a_xi[l][i] = -c[l];
            }
        }
        weingarten.push(a_xi);
    }
    let mut duality_residual: f64 = 0.0;
    for (r, xi) in normal.iter().enumerate() {
        for i in 0..ms {
            for j in 0..ms {
                duality_residual = duality_residual.max((vectors::dot(&alpha[i][j], xi) - weingarten[r][j][i]).abs());
            }
        }
    }
    Ok(ImmersionPacket {
        point: x.to_vec(),
        image,
        n,
        n_target: nt,
        pushforward: t,
        normal,
        alpha,
        weingarten,
        gates: GateResiduals { pullback, cr, reeb_normal },
        gauss_residual,
        duality_residual,
        projection_residual,
    })
}

impl ImmersionPacket {
    fn ms(&self) -> usize {
        2 * self.n + 1
    }

    fn mt(&self) -> usize {
        2 * self.n_target + 1
    }

    /// `α(X, Y)` for source frame components.
    pub fn alpha_of(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mt()];
        for i in 0..self.ms() {
            for j in 0..self.ms() {
                let s = x[i] * y[j];
                if s != 0.0 {
                    for (o, a) in out.iter_mut().zip(&self.alpha[i][j]) {
                        *o += s * a;
                    }
                }
            }
        }
        out
    }

    /// `Q(X) = α(T, X)`.
    pub fn q_of(&self, x: &[f64]) -> Vec<f64> {
        self.alpha_of(&vectors::basis(self.ms(), 0), x)
    }

    /// `f_* X` in target frame components.
    pub fn push(&self, x: &[f64]) -> Vec<f64> {
        (0..self.mt()).map(|a| (0..self.ms()).map(|i| x[i] * self.pushforward[i][a]).sum()).collect()
    }

    fn j(&self, x: &[f64]) -> Vec<f64> {
        vectors::apply_j(self.n, x)
    }

    fn j_target(&self, v: &[f64]) -> Vec<f64> {
        vectors::apply_j(self.n_target, v)
    }

    /// Copy with `α(E_i, E_j)` shifted by `delta` along the first normal.
    pub fn perturbed(&self, i: usize, j: usize, delta: f64) -> Self {
        let mut p = self.clone();
        for (a, xi) in p.alpha[i][j].iter_mut().zip(&self.normal[0]) {
            *a += delta * xi;
        }
        p
    }

    /// Residual of the Weingarten duality for the current `α`.
    pub fn duality(&self) -> f64 {
        let ms = self.ms();
        let mut worst: f64 = 0.0;
        for (r, xi) in self.normal.iter().enumerate() {
            for i in 0..ms {
                for j in 0..ms {
                    worst = worst.max((vectors::dot(&self.alpha[i][j], xi) - self.weingarten[r][j][i]).abs());
                }
            }
        }
        worst
    }

    /// `|α(X, JY) - J' α(X, Y)|`.
    pub fn fund1(&self, x: &[f64], y: &[f64]) -> f64 {
        vectors_norm(&sub(&self.alpha_of(x, &self.j(y)), &self.j_target(&self.alpha_of(x, y))))
    }

    /// `|α(JX, Y) - J' α(X, Y) + θ(X) J' Q Y|`.
    pub fn fund2(&self, x: &[f64], y: &[f64]) -> f64 {
        let lhs = self.alpha_of(&self.j(x), y);
        let mut rhs = self.j_target(&self.alpha_of(x, y));
        let jq = self.j_target(&self.q_of(y));
        for (r, q) in rhs.iter_mut().zip(&jq) {
            *r -= x[0] * q;
        }
        vectors_norm(&sub(&lhs, &rhs))
    }

    /// `|α(JX, JY) + α(X, Y) - θ(X) Q Y|`.
    pub fn fund3(&self, x: &[f64], y: &[f64]) -> f64 {
        let lhs = self.alpha_of(&self.j(x), &self.j(y));
        let a = self.alpha_of(x, y);
        let q = self.q_of(y);
        let r: Vec<f64> = (0..self.mt()).map(|k| lhs[k] + a[k] - x[0] * q[k]).collect();
        vectors_norm(&r)
    }

    /// `|α(Y, X) - α(X, Y) + 2(θ ∧ Q)(X, Y)|` with
    /// `2(θ ∧ Q)(X, Y) = θ(X) Q Y - θ(Y) Q X`.
    pub fn symm(&self, x: &[f64], y: &[f64]) -> f64 {
        let yx = self.alpha_of(y, x);
        let xy = self.alpha_of(x, y);
        let qy = self.q_of(y);
        let qx = self.q_of(x);
        let r: Vec<f64> = (0..self.mt()).map(|k| yx[k] - xy[k] + x[0] * qy[k] - y[0] * qx[k]).collect();
        vectors_norm(&r)
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn vectors_norm(a: &[f64]) -> f64 {
    vectors::dot(a, a).sqrt()
}

/// Rows for the immersion gates and the packet invariants.
pub fn packet_rows(p: &ImmersionPacket) -> Vec<CheckRow> {
    let x = &p.point;
    let k = p.n_target - p.n;
    vec![
        CheckRow::check("pullback-gate", x, p.gates.pullback, GATE_TOLERANCE),
        CheckRow::check("cr-gate", x, p.gates.cr, GATE_TOLERANCE),
        CheckRow::check("reeb-normal-gate", x, p.gates.reeb_normal, GATE_TOLERANCE),
        CheckRow::check("gauss-formula", x, p.gauss_residual, GAUSS_FORMULA_TOLERANCE),
        CheckRow::check("weingarten-duality", x, p.duality_residual, DUALITY_TOLERANCE),
        CheckRow::check("tangent-normal-split", x, p.projection_residual, PROJECTION_TOLERANCE),
        CheckRow::check("normal-dimension", x, (p.normal.len() as f64 - 2.0 * k as f64).abs(), 0.0),
    ]
}

/// Structure identities of the second fundamental form over random `X, Y` with Reeb components; the first pair uses `X = T`.
pub fn fundamental_form_check(p: &ImmersionPacket, tuples: usize, seed: u64) -> ExperimentReport {
    let ms = p.ms();
    let x0 = &p.point;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ExperimentReport::new("fundamental-form", format!("n={}->{}", p.n, p.n_target));
    let reeb = vectors::basis(ms, 0);
    for k in 0..tuples.max(1) {
        let x = if k == 0 { reeb.clone() } else { random_vector(&mut rng, ms, Domain::Full) };
        let y = random_vector(&mut rng, ms, Domain::Full);
        let r1 = p.fund1(&x, &y);
        let r2 = p.fund2(&x, &y);
        let r3 = p.fund3(&x, &y);
        rep.push(CheckRow::check("fund-1", x0, r1, FUNDAMENTAL_TOLERANCE));
        let row = CheckRow::check("fund-2", x0, r2, FUNDAMENTAL_TOLERANCE);
        rep.push(if x[0].abs() > 1e-3 { row.with_note(format!("theta(X) = {:.3}, Q term active", x[0])) } else { row });
        rep.push(CheckRow::check("fund-3", x0, r3, FUNDAMENTAL_TOLERANCE));
        rep.push(CheckRow::check("fund-symmetry", x0, p.symm(&x, &y), FUNDAMENTAL_TOLERANCE));
        // fund3 follows from fund2 at (X, JY) and fund1 at (X, Y), (T, Y).
        let bound = p.fund2(&x, &p.j(&y)) + p.fund1(&x, &y) + x[0].abs() * p.fund1(&reeb, &y);
        rep.push(CheckRow::check("fund-3-implied", x0, (r3 - bound).max(0.0), 1e-8));
        let xh = random_vector(&mut rng, ms, Domain::Horizontal);
        let yh = random_vector(&mut rng, ms, Domain::Horizontal);
        let asym = vectors_norm(&sub(&p.alpha_of(&xh, &yh), &p.alpha_of(&yh, &xh)));
        rep.push(CheckRow::check("alpha-horizontal-symmetry", x0, asym, FUNDAMENTAL_TOLERANCE));
    }
    rep
}

/// Right-hand side of the Gauss equation for the current `α`.
fn gauss_rhs(p: &ImmersionPacket, source_r: f64, v: &[Vec<f64>]) -> f64 {
    let (w, z, x, y) = (&v[0], &v[1], &v[2], &v[3]);
    source_r + vectors::dot(&p.alpha_of(x, z), &p.alpha_of(y, w)) - vectors::dot(&p.alpha_of(y, z), &p.alpha_of(x, w))
}

struct Curvatures {
    source: CurvaturePacket,
    target: CurvaturePacket,
}

impl Curvatures {
    fn at(imm: &ImmersionMap, p: &ImmersionPacket) -> Result<Self> {
        Ok(Self { source: curvature_packet(&imm.source, &p.point, 0)?, target: curvature_packet(&imm.target, &p.image, 0)? })
    }
}

fn gauss_rows(p: &ImmersionPacket, c: &Curvatures, tuples: usize, seed: u64) -> ExperimentReport {
    let ms = p.ms();
    let x = &p.point;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ExperimentReport::new("gauss-equation", format!("n={}->{}", p.n, p.n_target));
    rep.extend(packet_rows(p));
    let perturbed = p.perturbed(1, 1, PERTURBATION);
    let mut curv_perturbed: f64 = 0.0;
    for _ in 0..tuples.max(1) {
        let v: Vec<Vec<f64>> = (0..4).map(|_| random_vector(&mut rng, ms, Domain::Full)).collect();
        let lhs = c.target.eval(&p.push(&v[0]), &p.push(&v[1]), &p.push(&v[2]), &p.push(&v[3]));
        let r = c.source.eval(&v[0], &v[1], &v[2], &v[3]);
        rep.push(CheckRow::check("gauss-equation", x, (lhs - gauss_rhs(p, r, &v)).abs(), CURVATURE_TOLERANCE));
        curv_perturbed = curv_perturbed.max((lhs - gauss_rhs(&perturbed, r, &v)).abs());
    }
    let e1 = vectors::basis(ms, 1);
    rep.push(CheckRow::negative_control("perturbed-alpha-duality", x, perturbed.duality(), NEGATIVE_CONTROL_THRESHOLD));
    let fund1 = perturbed.fund1(&e1, &e1).max(perturbed.fund1(&e1, &p.j(&e1)));
    rep.push(CheckRow::negative_control("perturbed-alpha-fund1", x, fund1, NEGATIVE_CONTROL_THRESHOLD));
    // The α-product terms are quadratic and antisymmetrized, so a single
    // perturbed component on top of α = 0 leaves them unchanged.
    rep.set_value("perturbed-gauss-equation", curv_perturbed);
    let alpha_max = p.alpha.iter().flatten().flatten().fold(0.0_f64, |a, b| a.max(b.abs()));
    rep.set_value("alpha-max", alpha_max);
    rep
}

fn monotonicity_rows(p: &ImmersionPacket, c: &Curvatures, planes: usize, seed: u64) -> ExperimentReport {
    let ms = p.ms();
    let x = &p.point;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ExperimentReport::new("monotonicity", format!("n={}->{}", p.n, p.n_target));
    for k in 0..planes.max(1) {
        let xv = random_unit(&mut rng, ms, Domain::Horizontal);
        let full = random_vector(&mut rng, ms, Domain::Full);
        for (id, v) in [("monotonicity-identity-horizontal", &xv), ("monotonicity-identity", &full)] {
            let fx = p.push(v);
            let jfx = p.j_target(&fx);
            let lhs = c.target.eval(&fx, &jfx, &fx, &jfx);
            let jv = p.j(v);
            let a = p.alpha_of(v, v);
            let rhs = c.source.eval(v, &jv, v, &jv) + 2.0 * vectors::dot(&a, &a) - 2.0 * v[0] * vectors::dot(&a, &p.q_of(v));
            rep.push(CheckRow::check(id, x, (lhs - rhs).abs(), CURVATURE_TOLERANCE));
        }
        let fx = p.push(&xv);
        let jfx = p.j_target(&fx);
        let jx = p.j(&xv);
        let h = c.source.eval(&xv, &jx, &xv, &jx) / 4.0;
        let h_target = c.target.eval(&fx, &jfx, &fx, &jfx) / (4.0 * vectors::dot(&fx, &fx).powi(2));
        let a = p.alpha_of(&xv, &xv);
        let slack = vectors::dot(&a, &a) / 2.0;
        let note = format!("H = {h:.6}, H' = {h_target:.6}");
        rep.push(CheckRow::check("monotonicity-inequality", x, (h - h_target).max(0.0), CURVATURE_TOLERANCE).with_note(note));
        rep.push(CheckRow::check("monotonicity-slack", x, (h_target - h - slack).abs(), CURVATURE_TOLERANCE));
        rep.set_value(format!("h-source-{k}"), h);
        rep.set_value(format!("h-target-{k}"), h_target);
    }
    rep
}

/// Both sides of the Gauss equation over random 4-tuples, together with the
/// packet invariants and the α-perturbation controls.
pub fn gauss_equation_check(imm: &ImmersionMap, x: &[f64], tuples: usize, seed: u64) -> Result<ExperimentReport> {
    let p = second_fundamental_form(imm, x)?;
    let c = Curvatures::at(imm, &p)?;
    let mut rep = gauss_rows(&p, &c, tuples, seed);
    rep.model = imm.label.clone();
    Ok(rep)
}

/// Curvature monotonicity identity and inequality over random holomorphic planes.
pub fn monotonicity_check(imm: &ImmersionMap, x: &[f64], planes: usize, seed: u64) -> Result<ExperimentReport> {
    let p = second_fundamental_form(imm, x)?;
    let c = Curvatures::at(imm, &p)?;
    let mut rep = monotonicity_rows(&p, &c, planes, seed);
    rep.model = imm.label.clone();
    Ok(rep)
}

/// All immersion checks at one point.
pub fn immersion_check(imm: &ImmersionMap, x: &[f64], tuples: usize, planes: usize, seed: u64) -> Result<ExperimentReport> {
    let p = second_fundamental_form(imm, x)?;
    let c = Curvatures::at(imm, &p)?;
    let mut rep = ExperimentReport::new("immersion", imm.label.clone());
    rep.absorb(gauss_rows(&p, &c, tuples, seed), "");
    rep.absorb(fundamental_form_check(&p, tuples, seed ^ 0x5eed), "");
    rep.absorb(monotonicity_rows(&p, &c, planes, seed ^ 0xface), "");
    Ok(rep)
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize, domain: Domain) -> Vec<f64> {
    let v = random_vector(rng, m, domain);
    let norm = vectors::dot(&v, &v).sqrt();
    v.iter().map(|c| c / norm).collect()
}

/// Immersion report over several points.
pub fn immersion_report(imm: &ImmersionMap, points: &[Vec<f64>], tuples: usize, planes: usize, seed: u64) -> ExperimentReport {
    let mut rep = ExperimentReport::new("immersion", imm.label.clone());
    for (k, x) in points.iter().enumerate() {
        match immersion_check(imm, x, tuples, planes, seed.wrapping_add(k as u64)) {
            Ok(r) => rep.absorb(r, &format!("p{k}-")),
            Err(e) => rep.push(CheckRow::error("immersion", x, &e)),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{immersion_standard, sphere, ImmersionFamily};
    use std::sync::Arc;

    #[test]
    fn totally_geodesic_inclusions_have_vanishing_alpha() {
        for fam in [ImmersionFamily::SphereInSphere, ImmersionFamily::HeisenbergInHeisenberg] {
            let imm = immersion_standard(1, 2, fam).unwrap();
            let x = imm.source.base_point();
            let p = second_fundamental_form(&imm, &x).unwrap();
            let worst = p.alpha.iter().flatten().flatten().fold(0.0_f64, |a, b| a.max(b.abs()));
            assert!(worst < 1e-7, "{fam:?}: {worst}");
            assert_eq!(p.normal.len(), 2);
        }
    }

    fn scaled(factor: f64) -> ImmersionMap {
        let map: crate::models::ChartMap = Arc::new(move |x: &[Jet]| {
            let mut out: Vec<Jet> = x[..2].iter().map(|c| c * factor).collect();
            out.push(x[0].const_like(0.0));
            out.push(x[0].const_like(0.0));
            out.push(&x[2] * factor);
            out
        });
        ImmersionMap::new(sphere(1), sphere(2), map, "scaled").unwrap()
    }

    #[test]
    fn scaled_sphere_chart_is_rejected() {
        let x = [0.1, -0.2, 0.05];
        assert!(second_fundamental_form(&scaled(1.0), &x).is_ok());
        match second_fundamental_form(&scaled(1.1), &x) {
            Err(GeometryError::NotPseudohermitian { residual }) => assert!(residual > 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reeb_argument_marks_q_term_active() {
        let imm = immersion_standard(1, 2, ImmersionFamily::HeisenbergInHeisenberg).unwrap();
        let p = second_fundamental_form(&imm, &[0.3, -0.1, 0.2]).unwrap();
        let rep = fundamental_form_check(&p, 3, 1);
        assert!(rep.all_pass());
        let fund2: Vec<_> = rep.rows_with_id("fund-2").collect();
        assert!(fund2[0].note.as_deref().is_some_and(|n| n.contains("active")));
    }

    #[test]
    fn perturbed_alpha_breaks_linear_identities() {
        let imm = immersion_standard(1, 2, ImmersionFamily::SphereInSphere).unwrap();
        let p = second_fundamental_form(&imm, &[0.2, 0.1, -0.3]).unwrap();
        let q = p.perturbed(1, 1, PERTURBATION);
        assert!(q.duality() > NEGATIVE_CONTROL_THRESHOLD);
        let e1 = vectors::basis(3, 1);
        assert!(q.fund1(&e1, &e1).max(q.fund1(&e1, &[0.0, 0.0, 1.0])) > NEGATIVE_CONTROL_THRESHOLD);
    }

    #[test]
    fn same_dimension_is_rejected() {
        assert!(immersion_standard(2, 2, ImmersionFamily::SphereInSphere).is_err());
    }
}
