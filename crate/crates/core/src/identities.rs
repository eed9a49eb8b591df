//! Tensor identities of the Tanaka-Webster connection, evaluated on random
//! tuples in the adapted orthonormal frame.
//!
//! Formulas in the literature come in two normalizations of the exterior
//! derivative. [`Normalization::Webster`] uses `dθ` without a `1/2`, which is
//! the convention of the rest of the crate: the horizontal torsion is
//! `T_∇(X, Y) = -Ω(X, Y) T` and `g = dθ(·, J·)`. [`Normalization::HalfLevi`]
//! uses `dθ` with a `1/2`; then `g`, `Ω` and `A` are halved on the horizontal
//! bundle, `g(T, T) = 1` is unchanged and `T_∇ = 2(θ ∧ τ - Ω ⊗ T)`. The
//! connection and the curvature operator do not depend on the choice; only
//! the lowered tensors do. Every identity below is coded as printed and takes
//! the view it should be read in.

use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connection::idx3;
use crate::curvature::{curvature_packet, idx4, vectors, CurvaturePacket};
use crate::error::Result;
use crate::jet::Jet;
use crate::models::ChartModel;
use crate::report::{CheckRow, ExperimentReport};
use crate::spaceform::r0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    Webster,
    HalfLevi,
}

impl Normalization {
    /// Factor applied to `g` on the horizontal bundle.
    pub fn horizontal_scale(self) -> f64 {
        match self {
            Normalization::Webster => 1.0,
            Normalization::HalfLevi => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Normalization::Webster => "webster",
            Normalization::HalfLevi => "half-levi",
        }
    }
}

/// Values of the tensors needed by the identities, at one point.
#[derive(Clone, Debug)]
pub struct Tensors {
    pub n: usize,
    pub m: usize,
    pub point: Vec<f64>,
    /// `R(E_a, E_b, E_c, E_d)` in the Webster normalization.
    pub r: Vec<f64>,
    /// `τ(E_b)^a` at `[a][b]`.
    pub tau: Vec<Vec<f64>>,
    /// `(∇_{E_u} τ)(E_b)^a` at `[u][a][b]`.
    pub dtau: Vec<Vec<Vec<f64>>>,
    /// `T_∇(E_i, E_j)^k` at `idx3(m, k, i, j)`.
    pub torsion: Vec<f64>,
    /// `(∇_{E_u} T_∇)(E_i, E_j)^k` at `u * m^3 + idx3(m, k, i, j)`.
    pub dtorsion: Vec<f64>,
    /// `(∇_{E_u} R)_{abcd}` at `u * m^4 + idx4`, when available.
    pub dr: Option<Vec<f64>>,
    /// `Γ^k_{ij}` at `idx3`.
    pub gamma: Vec<f64>,
}

impl Tensors {
    pub fn from_packet(cv: &CurvaturePacket) -> Result<Self> {
        let cp = &cv.conn;
        let m = cp.dim();
        let n = cp.n();
        let e: Vec<Vec<Jet>> = cp.frame.frame.clone();
        let gamma: Vec<f64> = cp.gamma.iter().map(Jet::value).collect();
        let gv = |k, i, j| gamma[idx3(m, k, i, j)];
        let tor_j: Vec<Jet> = (0..m * m * m)
            .map(|u| {
                let k = u / (m * m);
                let i = (u / m) % m;
                let j = u % m;
                cp.torsion_jet(k, i, j)
            })
            .collect();
        let torsion: Vec<f64> = tor_j.iter().map(Jet::value).collect();
        let tv = |k, i, j| torsion[idx3(m, k, i, j)];
        let mut dtorsion = vec![0.0; m * m * m * m];
        for u in 0..m {
            let eu: Vec<Jet> = e[u].iter().map(|c| c.truncate(cp.order)).collect();
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let mut v = tor_j[idx3(m, k, i, j)].directional(&eu).value();
                        for l in 0..m {
                            v += gv(k, u, l) * tv(l, i, j);
                            v -= gv(l, u, i) * tv(k, l, j);
                            v -= gv(l, u, j) * tv(k, i, l);
                        }
                        dtorsion[u * m * m * m + idx3(m, k, i, j)] = v;
                    }
                }
            }
        }
        let tau: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| tv(a, 0, b)).collect()).collect();
        let dtau: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|u| (0..m).map(|a| (0..m).map(|b| dtorsion[u * m * m * m + idx3(m, a, 0, b)]).collect()).collect())
            .collect();
        let dr = if cv.order >= 1 { Some(cv.nabla()?) } else { None };
        Ok(Tensors { n, m, point: cv.point().to_vec(), r: cv.values(), tau, dtau, torsion, dtorsion, dr, gamma })
    }

    pub fn theta(&self, x: &[f64]) -> f64 {
        x[0]
    }

    pub fn j(&self, x: &[f64]) -> Vec<f64> {
        vectors::apply_j(self.n, x)
    }

    pub fn g(&self, v: Normalization, x: &[f64], y: &[f64]) -> f64 {
        x[0] * y[0] + v.horizontal_scale() * (1..self.m).map(|a| x[a] * y[a]).sum::<f64>()
    }

    pub fn omega(&self, v: Normalization, x: &[f64], y: &[f64]) -> f64 {
        v.horizontal_scale() * vectors::dot(x, &self.j(y))
    }

    pub fn tau_of(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m).map(|a| (0..self.m).map(|b| self.tau[a][b] * x[b]).sum()).collect()
    }

    pub fn a(&self, v: Normalization, x: &[f64], y: &[f64]) -> f64 {
        self.g(v, x, &self.tau_of(y))
    }

    /// Curvature operator `R(Z, W) Y` in frame components.
    pub fn r_op(&self, z: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for b in 0..m {
            if y[b] == 0.0 {
                continue;
            }
            for c in 0..m {
                if z[c] == 0.0 {
                    continue;
                }
                for d in 0..m {
                    let s = y[b] * z[c] * w[d];
                    if s == 0.0 {
                        continue;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        *o += s * self.r[idx4(m, a, b, c, d)];
                    }
                }
            }
        }
        out
    }

    /// `R(X, Y, Z, W) = g(R(Z, W) Y, X)` in the given view.
    pub fn r4(&self, v: Normalization, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        self.g(v, &self.r_op(z, w, y), x)
    }

    pub fn torsion_of(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        s += self.torsion[idx3(m, k, i, j)] * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn dtorsion_of(&self, u: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|k| {
                let mut s = 0.0;
                for p in 0..m {
                    for i in 0..m {
                        for j in 0..m {
                            s += self.dtorsion[p * m * m * m + idx3(m, k, i, j)] * u[p] * x[i] * y[j];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `(∇_U τ) Y`.
    pub fn dtau_of(&self, u: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|a| {
                let mut s = 0.0;
                for p in 0..m {
                    for b in 0..m {
                        s += self.dtau[p][a][b] * u[p] * y[b];
                    }
                }
                s
            })
            .collect()
    }

    /// `S(X, Y) = (∇_X τ) Y - (∇_Y τ) X`.
    pub fn s_of(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        sub(&self.dtau_of(x, y), &self.dtau_of(y, x))
    }

    /// `(∇_U R)(X, Y, Z, W)` in the Webster view.
    pub fn dr4(&self, u: &[f64], x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> Option<f64> {
        let dr = self.dr.as_ref()?;
        let m = self.m;
        let mut s = 0.0;
        for p in 0..m {
            if u[p] == 0.0 {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            s += u[p] * x[a] * y[b] * z[c] * w[d] * dr[p * m * m * m * m + idx4(m, a, b, c, d)];
                        }
                    }
                }
            }
        }
        Some(s)
    }

    pub fn reeb(&self) -> Vec<f64> {
        vectors::basis(self.m, 0)
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale(s: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Which vectors an identity is stated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Horizontal,
    Full,
}

/// A named tensor identity.
#[derive(Clone, Copy)]
pub struct Identity {
    pub id: &'static str,
    pub domain: Domain,
    pub arity: usize,
    /// Normalization the identity is stated in.
    pub view: Normalization,
    pub tolerance: f64,
    /// Residual of the identity on the given vectors.
    pub residual: fn(&Tensors, Normalization, &[Vec<f64>]) -> Option<f64>,
}

/// Uniform random vector on the unit sphere of the relevant subspace.
pub fn random_vector(rng: &mut ChaCha8Rng, m: usize, domain: Domain) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        if domain == Domain::Horizontal {
            v[0] = 0.0;
        }
        let nv = norm(&v);
        if nv > 0.1 && nv <= 1.0 {
            return scale(1.0 / nv, &v);
        }
    }
}

/// `T_∇(X, Y) = -Ω(X, Y) T` for horizontal `X, Y`.
fn horizontal_torsion(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let lhs = t.torsion_of(&a[0], &a[1]);
    let rhs = scale(-t.omega(v, &a[0], &a[1]), &t.reeb());
    Some(norm(&sub(&lhs, &rhs)))
}

/// `T_∇ = 2(θ ∧ τ - Ω ⊗ T)` with `(θ ∧ τ)(X, Y) = (θ(X) τY - θ(Y) τX)/2`.
fn torsion_decomposition(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y) = (&a[0], &a[1]);
    let wedge = scale(0.5, &sub(&scale(t.theta(x), &t.tau_of(y)), &scale(t.theta(y), &t.tau_of(x))));
    let rhs = scale(2.0, &sub(&wedge, &scale(t.omega(v, x, y), &t.reeb())));
    Some(norm(&sub(&t.torsion_of(x, y), &rhs)))
}

/// `τ J + J τ = 0`, `τ T = 0`, `A` symmetric.
fn pure_torsion(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y) = (&a[0], &a[1]);
    let r1 = norm(&add(&t.tau_of(&t.j(x)), &t.j(&t.tau_of(x))));
    let r2 = norm(&t.tau_of(&t.reeb()));
    let r3 = (t.a(v, x, y) - t.a(v, y, x)).abs();
    Some(r1.max(r2).max(r3))
}

/// Antisymmetry in each pair.
fn antisymmetry(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let r = t.r4(v, x, y, z, w);
    Some((r + t.r4(v, y, x, z, w)).abs().max((r + t.r4(v, x, y, w, z)).abs()))
}

/// Pair symmetry up to torsion terms.
fn pair_symmetry(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let om = |p: &[f64], q: &[f64]| t.omega(v, p, q);
    let aa = |p: &[f64], q: &[f64]| t.a(v, p, q);
    let lhs = t.r4(v, x, y, z, w);
    let rhs = t.r4(v, z, w, x, y) - 2.0 * om(y, z) * aa(x, w) + 2.0 * om(y, w) * aa(x, z) - 2.0 * om(x, w) * aa(y, z)
        + 2.0 * om(x, z) * aa(y, w);
    Some((lhs - rhs).abs())
}

/// First Bianchi identity on the horizontal bundle.
fn first_bianchi(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let om = |p: &[f64], q: &[f64]| t.omega(v, p, q);
    let aa = |p: &[f64], q: &[f64]| t.a(v, p, q);
    let lhs = t.r4(v, x, y, z, w) + t.r4(v, x, z, w, y) + t.r4(v, x, w, y, z);
    let rhs = -2.0 * (om(y, z) * aa(w, x) + om(z, w) * aa(y, x) + om(w, y) * aa(z, x));
    Some((lhs - rhs).abs())
}

/// First Bianchi identity with torsion on the full tangent space:
/// `𝔖 R(X, Y) Z = 𝔖 { T(T(X, Y), Z) + (∇_X T)(Y, Z) }`.
fn first_bianchi_torsion(t: &Tensors, _v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z) = (&a[0], &a[1], &a[2]);
    let cyc = [(x, y, z), (y, z, x), (z, x, y)];
    let mut lhs = vec![0.0; t.m];
    let mut rhs = vec![0.0; t.m];
    for (p, q, r) in cyc {
        lhs = add(&lhs, &t.r_op(p, q, r));
        rhs = add(&rhs, &t.torsion_of(&t.torsion_of(p, q), r));
        rhs = add(&rhs, &t.dtorsion_of(p, q, r));
    }
    Some(norm(&sub(&lhs, &rhs)))
}

/// `R(JX, JY, Z, W) = R(X, Y, Z, W)` on the horizontal bundle.
fn j_invariance(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    Some((t.r4(v, &t.j(x), &t.j(y), z, w) - t.r4(v, x, y, z, w)).abs())
}

/// `(X ∧ Y) Z = g(Z, X) Y - g(Z, Y) X`.
fn wedge_op(t: &Tensors, v: Normalization, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    sub(&scale(t.g(v, z, x), y), &scale(t.g(v, z, y), x))
}

/// The operator `𝒪 = τ^2 + 2Jτ - I`.
fn o_op(t: &Tensors, x: &[f64]) -> Vec<f64> {
    let tx = t.tau_of(x);
    sub(&add(&t.tau_of(&tx), &scale(2.0, &t.j(&tx))), x)
}

/// `(θ ∧ 𝒪)(X, Y) = (θ(X) 𝒪Y - θ(Y) 𝒪X) / 2`.
fn theta_wedge_o(t: &Tensors, x: &[f64], y: &[f64]) -> Vec<f64> {
    scale(0.5, &sub(&scale(t.theta(x), &o_op(t, y)), &scale(t.theta(y), &o_op(t, x))))
}

/// Curvature with the pairs exchanged, expressed through `L = τ + J`, `S` and `𝒪`.
fn pair_exchange_full(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let l = |p: &[f64]| add(&t.tau_of(p), &t.j(p));
    let g = |p: &[f64], q: &[f64]| t.g(v, p, q);
    let th = |p: &[f64]| t.theta(p);
    let lhs = g(&t.r_op(x, y, z), w);
    let mut rhs = g(&t.r_op(w, z, y), x);
    rhs -= g(&wedge_op(t, v, &l(x), &l(y), z), w);
    rhs += g(&wedge_op(t, v, &l(w), &l(z), y), x);
    rhs += g(&t.s_of(x, y), z) * th(w);
    rhs -= g(&t.s_of(w, z), y) * th(x);
    rhs -= th(z) * g(&t.s_of(x, y), w);
    rhs += th(y) * g(&t.s_of(w, z), x);
    rhs += 2.0 * g(&theta_wedge_o(t, x, y), z) * th(w);
    rhs -= 2.0 * g(&theta_wedge_o(t, w, z), y) * th(x);
    rhs -= 2.0 * th(z) * g(&theta_wedge_o(t, x, y), w);
    rhs += 2.0 * th(y) * g(&theta_wedge_o(t, w, z), x);
    Some((lhs - rhs).abs())
}

/// `g(R(T, Y) Z, W) = g(Y, S(Z, W))`.
fn reeb_curvature(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (y, z, w) = (&a[0], &a[1], &a[2]);
    let lhs = t.g(v, &t.r_op(&t.reeb(), y, z), w);
    let rhs = t.g(v, y, &t.s_of(z, w));
    Some((lhs - rhs).abs())
}

/// Second Bianchi identity with torsion:
/// `𝔖_{UZW} (∇_U R)(X, Y, Z, W) = -𝔖_{UZW} g(R(T_∇(U, Z), W) Y, X)`.
fn second_bianchi(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (u, x, y, z, w) = (&a[0], &a[1], &a[2], &a[3], &a[4]);
    let s = v.horizontal_scale();
    let cyc = [(u, z, w), (z, w, u), (w, u, z)];
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (p, q, r) in cyc {
        lhs += s * t.dr4(p, x, y, q, r)?;
        rhs -= t.g(v, &t.r_op(&t.torsion_of(p, q), r, y), x);
    }
    Some((lhs - rhs).abs())
}

/// Connection compatibility consequences: `∇T = 0`, `∇θ = 0`.
fn reeb_parallel(t: &Tensors, _v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let m = t.m;
    let x = &a[0];
    let mut worst: f64 = 0.0;
    for k in 0..m {
        // (∇_X T)^k = Σ_i X^i Γ^k_{i0}; (∇_X θ)(E_j) = -Σ_i X^i Γ^0_{ij}.
        let nt: f64 = (0..m).map(|i| x[i] * t.gamma[idx3(m, k, i, 0)]).sum();
        let nth: f64 = (0..m).map(|i| x[i] * t.gamma[idx3(m, 0, i, k)]).sum();
        worst = worst.max(nt.abs());
        if k > 0 {
            worst = worst.max(nth.abs());
        }
    }
    Some(worst)
}

/// `R_0` symmetries: antisymmetry, pair symmetry, Bianchi, J-invariance.
fn r0_antisymmetry(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let r = r0(t, v, x, y, z, w);
    Some((r + r0(t, v, y, x, z, w)).abs().max((r + r0(t, v, x, y, w, z)).abs()))
}

fn r0_pair_symmetry(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    Some((r0(t, v, x, y, z, w) - r0(t, v, z, w, x, y)).abs())
}

fn r0_first_bianchi(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    Some((r0(t, v, x, y, z, w) + r0(t, v, x, z, w, y) + r0(t, v, x, w, y, z)).abs())
}

fn r0_j_invariance(t: &Tensors, v: Normalization, a: &[Vec<f64>]) -> Option<f64> {
    let (x, y, z, w) = (&a[0], &a[1], &a[2], &a[3]);
    let r = r0(t, v, x, y, z, w);
    let first = (r0(t, v, &t.j(x), &t.j(y), z, w) - r).abs();
    let second = (r0(t, v, x, y, &t.j(z), &t.j(w)) - r).abs();
    Some(first.max(second))
}

const WEB: Normalization = Normalization::Webster;
const HALF: Normalization = Normalization::HalfLevi;

/// Tolerance for pointwise algebraic identities.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-7;
/// Tolerance for identities involving one derivative of the connection data.
pub const FIRST_DERIVATIVE_TOLERANCE: f64 = 1e-5;
/// Tolerance for the second Bianchi identity.
pub const SECOND_BIANCHI_TOLERANCE: f64 = 1e-4;

pub static IDENTITIES: &[Identity] = &[
    Identity { id: "horizontal-torsion", domain: Domain::Horizontal, arity: 2, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: horizontal_torsion },
    Identity { id: "torsion-decomposition", domain: Domain::Full, arity: 2, view: HALF, tolerance: ALGEBRAIC_TOLERANCE, residual: torsion_decomposition },
    Identity { id: "pure-torsion", domain: Domain::Horizontal, arity: 2, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: pure_torsion },
    Identity { id: "reeb-parallel", domain: Domain::Full, arity: 1, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: reeb_parallel },
    Identity { id: "curvature-antisymmetry", domain: Domain::Full, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: antisymmetry },
    Identity { id: "curvature-pair-symmetry", domain: Domain::Horizontal, arity: 4, view: HALF, tolerance: 1e-6, residual: pair_symmetry },
    Identity { id: "first-bianchi-horizontal", domain: Domain::Horizontal, arity: 4, view: HALF, tolerance: 1e-6, residual: first_bianchi },
    Identity { id: "first-bianchi-torsion", domain: Domain::Full, arity: 3, view: WEB, tolerance: FIRST_DERIVATIVE_TOLERANCE, residual: first_bianchi_torsion },
    Identity { id: "curvature-j-invariance", domain: Domain::Horizontal, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: j_invariance },
    Identity { id: "pair-exchange-full", domain: Domain::Full, arity: 4, view: HALF, tolerance: FIRST_DERIVATIVE_TOLERANCE, residual: pair_exchange_full },
    Identity { id: "reeb-curvature", domain: Domain::Horizontal, arity: 3, view: WEB, tolerance: FIRST_DERIVATIVE_TOLERANCE, residual: reeb_curvature },
    Identity { id: "second-bianchi", domain: Domain::Full, arity: 5, view: WEB, tolerance: SECOND_BIANCHI_TOLERANCE, residual: second_bianchi },
    Identity { id: "r0-antisymmetry", domain: Domain::Horizontal, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: r0_antisymmetry },
    Identity { id: "r0-pair-symmetry", domain: Domain::Horizontal, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: r0_pair_symmetry },
    Identity { id: "r0-first-bianchi", domain: Domain::Horizontal, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: r0_first_bianchi },
    Identity { id: "r0-j-invariance", domain: Domain::Horizontal, arity: 4, view: WEB, tolerance: ALGEBRAIC_TOLERANCE, residual: r0_j_invariance },
];

pub fn identity(id: &str) -> Option<&'static Identity> {
    IDENTITIES.iter().find(|i| i.id == id)
}

/// Largest residual of an identity over `tuples` random tuples.
pub fn max_residual(t: &Tensors, ident: &Identity, view: Normalization, rng: &mut ChaCha8Rng, tuples: usize) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..tuples {
        let args: Vec<Vec<f64>> = (0..ident.arity).map(|_| random_vector(rng, t.m, ident.domain)).collect();
        worst = worst.max((ident.residual)(t, view, &args)?);
    }
    Some(worst)
}

/// Runs every identity at every point on `tuples` random tuples. Each point
/// draws from its own stream of the seeded generator, so rows do not depend
/// on scheduling.
pub fn identity_suite(model: &ChartModel, points: &[Vec<f64>], tuples: usize, seed: u64) -> ExperimentReport {
    let per_point: Vec<(Vec<CheckRow>, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(pi, x)| {
            let tensors = curvature_packet(model, x, 1).and_then(|cv| Tensors::from_packet(&cv));
            let t = match tensors {
                Ok(t) => t,
                Err(e) => return (IDENTITIES.iter().map(|i| CheckRow::error(i.id, x, &e)).collect(), 0.0),
            };
            let tau_norm = t.tau.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            let rows = IDENTITIES
                .iter()
                .enumerate()
                .map(|(k, ident)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((pi * IDENTITIES.len() + k) as u64);
                    match max_residual(&t, ident, ident.view, &mut rng, tuples) {
                        Some(r) => CheckRow::check(ident.id, x, r, ident.tolerance).with_note(ident.view.label()),
                        None => CheckRow::check(ident.id, x, f64::INFINITY, ident.tolerance).with_note("missing curvature derivative"),
                    }
                })
                .collect();
            (rows, tau_norm)
        })
        .collect();
    let mut rep = ExperimentReport::new("identity-suite", model.id());
    let tau_max = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    rep.extend(per_point.into_iter().flat_map(|p| p.0));
    rep.set_value("tau-norm-max", tau_max);
    rep
}
