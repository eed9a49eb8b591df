//! Curvature of pseudohermitian space forms: the reconstructed tensor, the
//! tensor `R_0`, the Ricci law, and the chain of identities satisfied by
//! `L = R - 4c R_0` on the horizontal bundle.
//!
//! The formulas carry `A` terms whose coefficients are written in the
//! [`Normalization::HalfLevi`] view, so they are evaluated there. The
//! constant `c` passed in is always the holomorphic sectional curvature of
//! the crate's own normalization; it is converted to the view internally.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::{self, curvature_packet, idx4, vectors};
use crate::error::{GeometryError, Result};
use crate::identities::{random_vector, Domain, Normalization, Tensors};
use crate::models::ChartModel;
use crate::report::{CheckRow, ExperimentReport};

/// View the printed space-form formulas are evaluated in.
pub const SPACE_FORM_VIEW: Normalization = Normalization::HalfLevi;

/// Holomorphic sectional curvature constant as seen in a view.
pub fn view_constant(c: f64, view: Normalization) -> f64 {
    c / view.horizontal_scale()
}

/// `R_0(X, Y, Z, W)`.
pub fn r0(t: &Tensors, v: Normalization, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let g = |p: &[f64], q: &[f64]| t.g(v, p, q);
    let om = |p: &[f64], q: &[f64]| t.omega(v, p, q);
    0.25 * (g(x, z) * g(y, w) - g(x, w) * g(y, z) + om(x, z) * om(y, w) - om(x, w) * om(y, z) + 2.0 * om(x, y) * om(z, w))
}

/// The space-form expression for `R(X, Y, Z, W)` with constant `c` (in the view).
pub fn space_form_value(t: &Tensors, v: Normalization, c: f64, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let g = |p: &[f64], q: &[f64]| t.g(v, p, q);
    let om = |p: &[f64], q: &[f64]| t.omega(v, p, q);
    let a = |p: &[f64], q: &[f64]| t.a(v, p, q);
    let j = |p: &[f64]| t.j(p);
    c * (2.0 * om(x, y) * om(z, w) + g(x, z) * g(y, w) - g(x, w) * g(y, z) + om(x, z) * om(y, w) - om(x, w) * om(y, z))
        + g(x, z) * a(y, &j(w))
        - g(x, w) * a(y, &j(z))
        + g(y, w) * a(x, &j(z))
        - g(y, z) * a(x, &j(w))
        + om(x, z) * a(y, w)
        - om(x, w) * a(y, z)
        + om(y, w) * a(x, z)
        - om(y, z) * a(x, w)
}

/// Both tensors over the frame, zero whenever an index is the Reeb direction.
#[derive(Clone, Debug)]
pub struct SpaceFormTensor {
    pub m: usize,
    pub view: Normalization,
    pub c: f64,
    pub space_form: Vec<f64>,
    pub r0: Vec<f64>,
}

pub fn space_form_tensor(t: &Tensors, view: Normalization, c: f64) -> SpaceFormTensor {
    let m = t.m;
    let cv = view_constant(c, view);
    let mut sf = vec![0.0; m * m * m * m];
    let mut r = vec![0.0; m * m * m * m];
    let e = |a| vectors::basis(m, a);
    for a in 1..m {
        for b in 1..m {
            for c2 in 1..m {
                for d in 1..m {
                    let (x, y, z, w) = (e(a), e(b), e(c2), e(d));
                    sf[idx4(m, a, b, c2, d)] = space_form_value(t, view, cv, &x, &y, &z, &w);
                    r[idx4(m, a, b, c2, d)] = r0(t, view, &x, &y, &z, &w);
                }
            }
        }
    }
    SpaceFormTensor { m, view, c, space_form: sf, r0: r }
}

/// Largest componentwise gap between the curvature (in the view) and the
/// space-form tensor over horizontal indices.
pub fn space_form_residual(t: &Tensors, sf: &SpaceFormTensor) -> f64 {
    let m = t.m;
    let s = sf.view.horizontal_scale();
    let mut worst: f64 = 0.0;
    for a in 1..m {
        for b in 1..m {
            for c in 1..m {
                for d in 1..m {
                    let u = idx4(m, a, b, c, d);
                    worst = worst.max((s * t.r[u] - sf.space_form[u]).abs());
                }
            }
        }
    }
    worst
}

/// Holomorphic sectional curvature over random planes at one point:
/// `(mean, max - min)`.
pub fn holomorphic_spread(t: &Tensors, rng: &mut ChaCha8Rng, planes: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for _ in 0..planes {
        let x = random_vector(rng, t.m, Domain::Horizontal);
        let jx = t.j(&x);
        let h = t.r4(Normalization::Webster, &x, &jx, &x, &jx) / 4.0;
        lo = lo.min(h);
        hi = hi.max(h);
        sum += h;
    }
    (sum / planes as f64, hi - lo)
}

/// Ricci law and scalar curvature of a space form at one point:
/// `(Ric residual on H, ρ, expected ρ)`.
pub fn ricci_law(t: &Tensors, c: f64) -> (f64, f64, f64) {
    let view = SPACE_FORM_VIEW;
    let cv = view_constant(c, view);
    let m = t.m;
    let n = t.n as f64;
    let e = |a| vectors::basis(m, a);
    let mut worst: f64 = 0.0;
    for a in 1..m {
        for b in 1..m {
            let ric: f64 = (0..m).map(|k| t.r[idx4(m, k, a, k, b)]).sum();
            let expected = 2.0 * cv * (n + 1.0) * t.g(view, &e(a), &e(b)) + 2.0 * (n - 1.0) * t.a(view, &e(a), &t.j(&e(b)));
            worst = worst.max((ric - expected).abs());
        }
    }
    let mut rho = 0.0;
    for a in 1..=t.n {
        let b = a + t.n;
        rho += 0.5 * (0..m).map(|k| t.r[idx4(m, k, a, k, a)] + t.r[idx4(m, k, b, k, b)]).sum::<f64>();
    }
    (worst, rho, 2.0 * c * n * (n + 1.0))
}

/// `Ric(X, Y)` for the packet, re-exported for reports.
pub fn ricci_matrix(model: &ChartModel, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(curvature::ricci(&curvature_packet(model, x, 0)?))
}

/// `L = R - 4c R_0` in the space-form view.
struct Defect<'a> {
    t: &'a Tensors,
    c: f64,
}

impl Defect<'_> {
    fn l(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let v = SPACE_FORM_VIEW;
        self.t.r4(v, x, y, z, w) - 4.0 * self.c * r0(self.t, v, x, y, z, w)
    }
    fn g(&self, x: &[f64], y: &[f64]) -> f64 {
        self.t.g(SPACE_FORM_VIEW, x, y)
    }
    fn om(&self, x: &[f64], y: &[f64]) -> f64 {
        self.t.omega(SPACE_FORM_VIEW, x, y)
    }
    fn a(&self, x: &[f64], y: &[f64]) -> f64 {
        self.t.a(SPACE_FORM_VIEW, x, y)
    }
    fn aj(&self, x: &[f64], y: &[f64]) -> f64 {
        self.a(x, &self.t.j(y))
    }
    fn j(&self, x: &[f64]) -> Vec<f64> {
        self.t.j(x)
    }
}

type ChainRow = fn(&Defect, &[f64], &[f64], &[f64], &[f64]) -> f64;

fn chain_a2(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let l = d.l(x, y, z, w);
    (l + d.l(y, x, z, w)).abs().max((l + d.l(x, y, w, z)).abs())
}

fn chain_b2(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let rhs = d.l(z, w, x, y) - 2.0 * d.om(y, z) * d.a(x, w) + 2.0 * d.om(y, w) * d.a(x, z) - 2.0 * d.om(x, w) * d.a(y, z)
        + 2.0 * d.om(x, z) * d.a(y, w);
    (d.l(x, y, z, w) - rhs).abs()
}

fn chain_c2(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let lhs = d.l(x, y, z, w) + d.l(x, z, w, y) + d.l(x, w, y, z);
    let rhs = -2.0 * (d.om(y, z) * d.a(w, x) + d.om(z, w) * d.a(y, x) + d.om(w, y) * d.a(z, x));
    (lhs - rhs).abs()
}

fn chain_d2i(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    (d.l(&d.j(x), &d.j(y), z, w) - d.l(x, y, z, w)).abs()
}

fn chain_d2ii(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let rhs = d.l(x, y, z, w) + 2.0 * d.om(y, z) * d.a(x, w) - 2.0 * d.om(y, w) * d.a(x, z) + 2.0 * d.om(x, w) * d.a(y, z)
        - 2.0 * d.om(x, z) * d.a(y, w)
        + 2.0 * d.g(y, z) * d.aj(x, w)
        - 2.0 * d.g(y, w) * d.aj(x, z)
        + 2.0 * d.g(x, w) * d.aj(y, z)
        - 2.0 * d.g(x, z) * d.aj(y, w);
    (d.l(x, y, &d.j(z), &d.j(w)) - rhs).abs()
}

fn chain_holomorphic(d: &Defect, x: &[f64], _y: &[f64], _z: &[f64], _w: &[f64]) -> f64 {
    let jx = d.j(x);
    d.l(x, &jx, x, &jx).abs()
}

fn chain_k_tensor(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let (jy, jz, jw) = (d.j(y), d.j(z), d.j(w));
    let lhs = d.l(x, &jy, z, &jw) + d.l(x, &jz, y, &jw) + d.l(x, &jw, y, &jz);
    let rhs = 2.0 * d.om(y, w) * d.a(x, z) + 2.0 * d.om(x, w) * d.a(y, z) + 2.0 * d.om(y, x) * d.a(z, w)
        + 2.0 * d.g(x, w) * d.aj(y, z)
        - 2.0 * d.g(y, z) * d.aj(x, w)
        + 2.0 * d.g(z, w) * d.aj(x, y)
        - 2.0 * d.g(x, y) * d.aj(z, w);
    (lhs - rhs).abs()
}

fn chain_sectional(d: &Defect, x: &[f64], y: &[f64], _z: &[f64], _w: &[f64]) -> f64 {
    let rhs = d.g(x, x) * d.aj(y, y) - 2.0 * d.g(x, y) * d.aj(x, y) + d.g(y, y) * d.aj(x, x);
    (d.l(x, y, x, y) - rhs).abs()
}

fn chain_reconstruction(d: &Defect, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let rhs = d.om(x, z) * d.a(y, w) - d.om(y, z) * d.a(x, w) + d.om(y, w) * d.a(x, z) - d.om(x, w) * d.a(y, z)
        + d.g(x, z) * d.aj(y, w)
        - d.g(y, z) * d.aj(x, w)
        + d.g(y, w) * d.aj(x, z)
        - d.g(x, w) * d.aj(y, z);
    (d.l(x, y, z, w) - rhs).abs()
}

/// Chain rows: id, residual function.
const CHAIN: &[(&str, ChainRow)] = &[
    ("defect-antisymmetry", chain_a2),
    ("defect-pair-symmetry", chain_b2),
    ("defect-first-bianchi", chain_c2),
    ("defect-j-invariance", chain_d2i),
    ("defect-j-pair-rule", chain_d2ii),
    ("defect-holomorphic", chain_holomorphic),
    ("defect-k-tensor", chain_k_tensor),
    ("defect-sectional", chain_sectional),
    ("defect-reconstruction", chain_reconstruction),
];

pub const CHAIN_TOLERANCE: f64 = 1e-5;
/// A wrong constant must push the holomorphic row above this.
pub const NEGATIVE_CONTROL_THRESHOLD: f64 = 0.05;
/// Spread of `H` over sampled planes tolerated for a constant-curvature model.
pub const CONSTANT_H_TOLERANCE: f64 = 1e-6;

/// Measures `c` on a model, failing unless `H` is constant over the samples.
pub fn measured_constant(model: &ChartModel, points: &[Vec<f64>], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::new();
    for x in points {
        let t = Tensors::from_packet(&curvature_packet(model, x, 0)?)?;
        let (mean, spread) = holomorphic_spread(&t, &mut rng, 8);
        if spread > CONSTANT_H_TOLERANCE {
            return Err(GeometryError::Invalid(format!(
                "{} is not of constant holomorphic sectional curvature: spread {spread:.3e} at {x:?}",
                model.id()
            )));
        }
        values.push(mean);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > CONSTANT_H_TOLERANCE {
        return Err(GeometryError::Invalid(format!("{} has point-dependent H: {lo} .. {hi}", model.id())));
    }
    Ok(values.iter().sum::<f64>() / values.len().max(1) as f64)
}

/// Rows of the chain for `L = R - 4cR_0` at the given points. The model must
/// have constant `H` (checked); `c` itself is taken as given so that a wrong
/// constant can be fed in as a control.
pub fn appendix_chain_check(model: &ChartModel, c: f64, points: &[Vec<f64>], tuples: usize, seed: u64) -> Result<ExperimentReport> {
    measured_constant(model, points, seed)?;
    let mut rep = ExperimentReport::new("appendix-chain", model.id());
    rep.set_value("c", c);
    for (pi, x) in points.iter().enumerate() {
        let t = Tensors::from_packet(&curvature_packet(model, x, 0)?)?;
        let d = Defect { t: &t, c: view_constant(c, SPACE_FORM_VIEW) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(pi as u64);
        let mut worst = vec![0.0f64; CHAIN.len()];
        for _ in 0..tuples {
            let v: Vec<Vec<f64>> = (0..4).map(|_| random_vector(&mut rng, t.m, Domain::Horizontal)).collect();
            for (k, (_, f)) in CHAIN.iter().enumerate() {
                worst[k] = worst[k].max(f(&d, &v[0], &v[1], &v[2], &v[3]));
            }
        }
        for (k, (id, _)) in CHAIN.iter().enumerate() {
            rep.push(CheckRow::check(*id, x, worst[k], CHAIN_TOLERANCE));
        }
    }
    Ok(rep)
}

/// Largest `|L(X, JX, X, JX)|` over random unit `X`, for a possibly wrong `c`.
pub fn holomorphic_defect(model: &ChartModel, c: f64, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    let t = Tensors::from_packet(&curvature_packet(model, x, 0)?)?;
    let d = Defect { t: &t, c: view_constant(c, SPACE_FORM_VIEW) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v = random_vector(&mut rng, t.m, Domain::Horizontal);
        worst = worst.max(chain_holomorphic(&d, &v, &v, &v, &v));
    }
    Ok(worst)
}

pub const SPACE_FORM_TOLERANCE: f64 = 1e-5;
pub const RICCI_TOLERANCE: f64 = 1e-4;

/// Space-form tensor, Ricci law and scalar curvature on a constant-`H` model.
pub fn space_form_check(model: &ChartModel, points: &[Vec<f64>], seed: u64) -> Result<ExperimentReport> {
    let c = measured_constant(model, points, seed)?;
    let mut rep = ExperimentReport::new("space-form", model.id());
    rep.set_value("c", c);
    for x in points {
        let t = Tensors::from_packet(&curvature_packet(model, x, 0)?)?;
        let sf = space_form_tensor(&t, SPACE_FORM_VIEW, c);
        rep.push(CheckRow::check("space-form-tensor", x, space_form_residual(&t, &sf), SPACE_FORM_TOLERANCE));
        let (ric, rho, expected) = ricci_law(&t, c);
        rep.push(CheckRow::check("ricci-law", x, ric, RICCI_TOLERANCE));
        rep.push(CheckRow::check("scalar-curvature", x, (rho - expected).abs(), RICCI_TOLERANCE));
        rep.set_value("rho", rho);
    }
    Ok(rep)
}

/// Holomorphic and Riemannian sectional curvature over random planes, with
/// curvature and torsion norms. Rows compare `H` against `expected` when given.
pub fn curvature_sweep(model: &ChartModel, points: &[Vec<f64>], planes: usize, seed: u64, expected: Option<f64>, tolerance: f64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("curvature-sweep", model.id());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut h_lo, mut h_hi, mut h_sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    let (mut k_lo, mut k_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut r_norm, mut tau_norm) = (0.0_f64, 0.0_f64);
    for x in points {
        let cv = curvature_packet(model, x, 0)?;
        let t = Tensors::from_packet(&cv)?;
        r_norm = r_norm.max(cv.norm());
        for a in 0..t.m {
            let tau = t.tau_of(&vectors::basis(t.m, a));
            tau_norm = tau_norm.max(vectors::dot(&tau, &tau).sqrt());
        }
        for _ in 0..planes {
            let v = random_vector(&mut rng, t.m, Domain::Horizontal);
            let h = curvature::holomorphic_sectional(&cv, &v)?;
            h_lo = h_lo.min(h);
            h_hi = h_hi.max(h);
            h_sum += h;
            count += 1;
            if let Some(e) = expected {
                rep.push(CheckRow::check("holomorphic-sectional", x, (h - e).abs(), tolerance));
            }
            let u = random_vector(&mut rng, t.m, Domain::Full);
            let w = random_vector(&mut rng, t.m, Domain::Full);
            let un: Vec<f64> = u.iter().map(|c| c / vectors::dot(&u, &u).sqrt()).collect();
            let proj = vectors::dot(&w, &un);
            let w: Vec<f64> = w.iter().zip(&un).map(|(a, b)| a - proj * b).collect();
            let wn: Vec<f64> = w.iter().map(|c| c / vectors::dot(&w, &w).sqrt()).collect();
            let k = curvature::sectional(&cv, &un, &wn)?;
            k_lo = k_lo.min(k);
            k_hi = k_hi.max(k);
        }
    }
    if count > 0 {
        rep.set_value("h-min", h_lo);
        rep.set_value("h-max", h_hi);
        rep.set_value("h-mean", h_sum / count as f64);
        rep.set_value("k-min", k_lo);
        rep.set_value("k-max", k_hi);
    }
    rep.set_value("curvature-norm-max", r_norm);
    rep.set_value("torsion-norm-max", tau_norm);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg, sphere};

    fn tensors(model: &ChartModel) -> Tensors {
        Tensors::from_packet(&curvature_packet(model, &model.base_point(), 0).unwrap()).unwrap()
    }

    #[test]
    fn torsion_free_space_form_is_four_c_r0() {
        let t = tensors(&sphere(1));
        let sf = space_form_tensor(&t, SPACE_FORM_VIEW, 1.0);
        let cv = view_constant(1.0, SPACE_FORM_VIEW);
        for (a, b) in sf.space_form.iter().zip(&sf.r0) {
            assert!((a - 4.0 * cv * b).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_matches_space_form() {
        let s = sphere(1);
        let t = tensors(&s);
        let sf = space_form_tensor(&t, SPACE_FORM_VIEW, 1.0);
        assert!(space_form_residual(&t, &sf) < 1e-10);
    }

    #[test]
    fn heisenberg_ricci_vanishes() {
        let t = tensors(&heisenberg(2));
        let (ric, rho, expected) = ricci_law(&t, 0.0);
        assert!(ric < 1e-12 && rho.abs() < 1e-12 && expected == 0.0);
    }
}
