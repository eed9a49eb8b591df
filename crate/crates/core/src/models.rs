//! Chart models of pseudohermitian manifolds.
//!
//! Every model supplies, in one real chart of dimension `2n + 1`, the contact
//! form and a local frame of the CR bundle, both as jets so that any number of
//! derivatives is available. Hypersurface models are written through their
//! embedding in `C^{n+1}`: the contact form is a pullback and the CR frame is
//! obtained by solving the tangency equations pointwise (in jet arithmetic).
//!
//! Coordinates are ordered `(x_1, y_1, ..., x_n, y_n, s)` with `z_j = x_j + i y_j`
//! and a last real coordinate `s` whose meaning depends on the model.

use std::fmt;
use std::sync::Arc;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};
use crate::jet::{self, Jet};

/// Complex vector field `re + i im` in chart coordinates.
#[derive(Clone, Debug)]
pub struct CrVector {
    pub re: Vec<Jet>,
    pub im: Vec<Jet>,
}

/// Raw geometric data of a chart model.
pub trait ChartGeometry: Send + Sync + fmt::Debug {
    /// CR dimension `n`; the chart has `2n + 1` real coordinates.
    fn cr_dim(&self) -> usize;
    /// Components `θ_p` as jets of the given order about `x`.
    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet>;
    /// A frame `T_1, ..., T_n` of the CR bundle, as jets of the given order.
    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector>;
    fn in_domain(&self, x: &[f64]) -> bool;
    /// A point well inside the domain, for randomized checks.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// A fixed interior reference point.
    fn base_point(&self) -> Vec<f64>;
}

/// A registered chart model.
#[derive(Clone)]
pub struct ChartModel {
    id: String,
    geom: Arc<dyn ChartGeometry>,
}

impl fmt::Debug for ChartModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartModel").field("id", &self.id).finish()
    }
}

impl ChartModel {
    pub fn new(id: impl Into<String>, geom: Arc<dyn ChartGeometry>) -> Self {
        ChartModel { id: id.into(), geom }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cr_dim(&self) -> usize {
        self.geom.cr_dim()
    }

    pub fn dim(&self) -> usize {
        2 * self.geom.cr_dim() + 1
    }

    pub fn geometry(&self) -> &Arc<dyn ChartGeometry> {
        &self.geom
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) || !self.geom.in_domain(x) {
            return Err(GeometryError::OutOfDomain { model: self.id.clone(), point: x.to_vec() });
        }
        Ok(())
    }

    pub fn theta(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check_domain(x)?;
        Ok(self.geom.theta(x, order))
    }

    pub fn cr_frame(&self, x: &[f64], order: usize) -> Result<Vec<CrVector>> {
        self.check_domain(x)?;
        Ok(self.geom.cr_frame(x, order))
    }

    pub fn theta_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(jet::values(&self.theta(x, 0)?))
    }

    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.geom.sample_point(rng)
    }

    pub fn base_point(&self) -> Vec<f64> {
        self.geom.base_point()
    }
}

/// Smooth real function on a chart, used for conformal changes `θ̂ = e^{2u} θ`.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    /// `constant + Σ coeffs[p] x_p`.
    Affine { constant: f64, coeffs: Vec<f64> },
    /// Arbitrary formula evaluated on coordinate jets.
    Formula(Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Affine { constant, coeffs } => write!(f, "Affine({constant}, {coeffs:?})"),
            ScalarField::Formula(_) => write!(f, "Formula"),
        }
    }
}

impl ScalarField {
    /// The coordinate function `x_p` (zero based).
    pub fn coordinate(p: usize, dim: usize) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[p] = 1.0;
        ScalarField::Affine { constant: 0.0, coeffs }
    }

    /// Evaluates on coordinate jets.
    pub fn eval(&self, x: &[Jet]) -> Jet {
        match self {
            ScalarField::Constant(c) => x[0].const_like(*c),
            ScalarField::Affine { constant, coeffs } => {
                let mut acc = x[0].const_like(*constant);
                for (c, xp) in coeffs.iter().zip(x) {
                    acc.axpy(*c, xp);
                }
                acc
            }
            ScalarField::Formula(f) => f(x),
        }
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        self.eval(&Jet::seed(x, order))
    }
}

/// `(re, im)` of complex numbers held as jets.
#[derive(Clone)]
struct CJet {
    re: Jet,
    im: Jet,
}

fn cmul(a: &CJet, b: &CJet) -> CJet {
    CJet { re: &(&a.re * &b.re) - &(&a.im * &b.im), im: &(&a.re * &b.im) + &(&a.im * &b.re) }
}

/// Vector `Σ a_j ∂/∂z_j` written in real ambient coordinates `(x_1, y_1, ...)`.
fn holomorphic_vector(coeffs: &[CJet]) -> (Vec<Jet>, Vec<Jet>) {
    let mut re = Vec::with_capacity(2 * coeffs.len());
    let mut im = Vec::with_capacity(2 * coeffs.len());
    for a in coeffs {
        re.push(a.re.scale(0.5));
        re.push(a.im.scale(0.5));
        im.push(a.im.scale(0.5));
        im.push(a.re.scale(-0.5));
    }
    (re, im)
}

/// Pulls ambient tangent vectors back through `Φ` by solving `DΦ V = Z`
/// in the least-squares sense (exact for tangent `Z`).
fn pull_back_vectors(jac: &[Vec<Jet>], ambient: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let big = jac.len();
    let m = jac[0].len();
    let normal: Vec<Vec<Jet>> = (0..m)
        .map(|p| {
            (0..m)
                .map(|q| {
                    let col_p: Vec<Jet> = (0..big).map(|a| jac[a][p].clone()).collect();
                    let col_q: Vec<Jet> = (0..big).map(|a| jac[a][q].clone()).collect();
                    jet::dot(&col_p, &col_q)
                })
                .collect()
        })
        .collect();
    let rhs: Vec<Vec<Jet>> = (0..m)
        .map(|p| {
            let col_p: Vec<Jet> = (0..big).map(|a| jac[a][p].clone()).collect();
            ambient.iter().map(|z| jet::dot(&col_p, z)).collect()
        })
        .collect();
    let sol = jet::solve(&normal, &rhs).expect("embedding jacobian has full rank");
    (0..ambient.len()).map(|k| (0..m).map(|p| sol[p][k].clone()).collect()).collect()
}

/// Jacobian `∂Φ^a/∂x_p` as jets of one lower order than `phi`.
fn jacobian(phi: &[Jet], m: usize) -> Vec<Vec<Jet>> {
    phi.iter().map(|f| (0..m).map(|p| f.d(p)).collect()).collect()
}

/// Pullback of `Σ_j w_j (x_j dy_j - y_j dx_j)` through `Φ` (ambient pairs).
fn pull_back_rotation_form(phi: &[Jet], weights: &[f64], m: usize) -> Vec<Jet> {
    let jac = jacobian(phi, m);
    let order = phi[0].order() - 1;
    (0..m)
        .map(|p| {
            let mut acc = phi[0].truncate(order).zero_like();
            for (j, w) in weights.iter().enumerate() {
                let (xj, yj) = (&phi[2 * j], &phi[2 * j + 1]);
                let t = &(xj * &jac[2 * j + 1][p]) - &(yj * &jac[2 * j][p]);
                acc.axpy(*w, &t);
            }
            acc
        })
        .collect()
}

fn ambient_point(phi: &[Jet], j: usize) -> CJet {
    CJet { re: phi[2 * j].clone(), im: phi[2 * j + 1].clone() }
}

fn conj(a: &CJet) -> CJet {
    CJet { re: a.re.clone(), im: -&a.im }
}

fn uniform_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 <= 1.0 && r2 > 1e-6 {
            return v.iter().map(|a| a * radius).collect();
        }
    }
}

/// Heisenberg group `H_n` with `θ = dt + 2 Σ (x_j dy_j - y_j dx_j)` and
/// `T_j = ∂/∂z_j + i z̄_j ∂/∂t`.
#[derive(Debug, Clone)]
pub struct Heisenberg {
    pub n: usize,
}

impl ChartGeometry for Heisenberg {
    fn cr_dim(&self) -> usize {
        self.n
    }

    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let s = Jet::seed(x, order);
        let m = 2 * self.n + 1;
        let mut th: Vec<Jet> = (0..m).map(|_| s[0].zero_like()).collect();
        for j in 0..self.n {
            th[2 * j] = s[2 * j + 1].scale(-2.0);
            th[2 * j + 1] = s[2 * j].scale(2.0);
        }
        th[m - 1] = s[0].const_like(1.0);
        th
    }

    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector> {
        let s = Jet::seed(x, order);
        let m = 2 * self.n + 1;
        (0..self.n)
            .map(|j| {
                let mut re: Vec<Jet> = (0..m).map(|_| s[0].zero_like()).collect();
                let mut im = re.clone();
                re[2 * j] = s[0].const_like(0.5);
                re[m - 1] = s[2 * j + 1].clone();
                im[2 * j + 1] = s[0].const_like(-0.5);
                im[m - 1] = s[2 * j].clone();
                CrVector { re, im }
            })
            .collect()
    }

    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..2 * self.n + 1).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn base_point(&self) -> Vec<f64> {
        vec![0.0; 2 * self.n + 1]
    }
}

/// Overall factor applied to the hypersurface contact forms written as
/// `(i/2)(∂̄ - ∂)|z|^2` and `i(∂̄ - ∂) r`. With exterior derivatives taken
/// without a `1/2` (so that the horizontal torsion is `dθ(X, Y) T`), the
/// choice `1/2` puts the unit sphere at holomorphic sectional curvature one.
pub const HYPERSURFACE_CONTACT_SCALE: f64 = 0.5;

/// Sphere `S^{2n+1}` through inverse stereographic projection from the point
/// `w = -i`, with contact form a positive multiple of `(i/2)(∂̄ - ∂)|z|^2`,
/// optionally divided by `Σ a_j |z_j|^2` (weighted sphere).
#[derive(Debug, Clone)]
pub struct Sphere {
    pub n: usize,
    pub weights: Option<Vec<f64>>,
    pub scale: f64,
}

impl Sphere {
    pub fn standard(n: usize) -> Self {
        Sphere { n, weights: None, scale: HYPERSURFACE_CONTACT_SCALE }
    }

    pub fn weighted(weights: Vec<f64>) -> Self {
        Sphere { n: weights.len() - 1, weights: Some(weights), scale: HYPERSURFACE_CONTACT_SCALE }
    }

    /// Embedding in `R^{2n+2}` as jets.
    pub fn embed(&self, u: &[Jet]) -> Vec<Jet> {
        let mut s2 = u[0].zero_like();
        for uj in u {
            s2 += &uj.square();
        }
        let inv = (&s2 + 1.0).recip();
        let mut out: Vec<Jet> = u.iter().map(|uj| &(uj * &inv) * 2.0).collect();
        out.push(&(&(-&s2) + 1.0) * &inv);
        out
    }

    /// Ambient point for a chart point.
    pub fn embed_values(&self, u: &[f64]) -> Vec<f64> {
        jet::values(&self.embed(&Jet::seed(u, 0)))
    }
}

impl ChartGeometry for Sphere {
    fn cr_dim(&self) -> usize {
        self.n
    }

    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let m = 2 * self.n + 1;
        let phi = self.embed(&Jet::seed(x, order + 1));
        let th = pull_back_rotation_form(&phi, &vec![self.scale; self.n + 1], m);
        match &self.weights {
            None => th,
            Some(a) => {
                let phi = self.embed(&Jet::seed(x, order));
                let mut q = phi[0].zero_like();
                for (j, aj) in a.iter().enumerate() {
                    q.axpy(*aj, &(&phi[2 * j].square() + &phi[2 * j + 1].square()));
                }
                let inv = q.recip();
                th.iter().map(|t| t * &inv).collect()
            }
        }
    }

    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector> {
        let m = 2 * self.n + 1;
        let phi = self.embed(&Jet::seed(x, order + 1));
        let jac = jacobian(&phi, m);
        let pt: Vec<CJet> = (0..=self.n).map(|j| ambient_point(&phi, j)).map(|c| CJet {
            re: c.re.truncate(order),
            im: c.im.truncate(order),
        }).collect();
        let w = &pt[self.n];
        let zero = CJet { re: w.re.zero_like(), im: w.re.zero_like() };
        let mut ambient = Vec::new();
        for a in 0..self.n {
            // w̄ ∂/∂z_a - z̄_a ∂/∂w
            let mut coeffs = vec![zero.clone(); self.n + 1];
            coeffs[a] = conj(w);
            let za = conj(&pt[a]);
            coeffs[self.n] = CJet { re: -&za.re, im: -&za.im };
            let (re, im) = holomorphic_vector(&coeffs);
            ambient.push(re);
            ambient.push(im);
        }
        let pulled = pull_back_vectors(&jac, &ambient);
        pulled.chunks(2).map(|c| CrVector { re: c[0].clone(), im: c[1].clone() }).collect()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        let r2: f64 = x.iter().map(|a| a * a).sum();
        if r2 > 100.0 {
            return false;
        }
        let y = self.embed_values(x);
        let w2 = y[2 * self.n].powi(2) + y[2 * self.n + 1].powi(2);
        if w2 < 1e-2 {
            return false;
        }
        match &self.weights {
            Some(a) => a.iter().all(|&v| v > 0.0),
            None => true,
        }
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        uniform_ball(rng, 2 * self.n + 1, 0.5)
    }

    fn base_point(&self) -> Vec<f64> {
        let mut p = vec![0.0; 2 * self.n + 1];
        p[0] = 0.1;
        p
    }
}

/// Sign of the quadric `Q_±(c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricSign {
    Plus,
    Minus,
}

impl QuadricSign {
    pub fn value(self) -> f64 {
        match self {
            QuadricSign::Plus => 1.0,
            QuadricSign::Minus => -1.0,
        }
    }
}

/// Quadric `Q_±(c) = { Σ g_j |z_j|^2 ± (|w|^2 - c) = 0 }` with diagonal
/// positive `g`, in the chart `(z, φ)` with `w = ρ(z) e^{iφ}`, and contact
/// form a positive multiple of `i g (z dz̄ - z̄ dz) ± i (w dw̄ - w̄ dw)`.
#[derive(Debug, Clone)]
pub struct Quadric {
    pub n: usize,
    pub sign: QuadricSign,
    pub c: f64,
    pub g: Vec<f64>,
    pub scale: f64,
}

impl Quadric {
    pub fn new(n: usize, sign: QuadricSign, c: f64) -> Self {
        Quadric { n, sign, c, g: vec![1.0; n], scale: HYPERSURFACE_CONTACT_SCALE }
    }

    fn hermitian(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|j| self.g[j] * (x[2 * j].powi(2) + x[2 * j + 1].powi(2))).sum()
    }

    pub fn embed(&self, x: &[Jet]) -> Vec<Jet> {
        let mut q = x[0].zero_like();
        for j in 0..self.n {
            q.axpy(self.g[j], &(&x[2 * j].square() + &x[2 * j + 1].square()));
        }
        // |w|^2 = c ∓ q
        let rho = (&q.scale(-self.sign.value()) + self.c).sqrt();
        let phi = &x[2 * self.n];
        let mut out: Vec<Jet> = x[..2 * self.n].to_vec();
        out.push(&rho * &phi.cos());
        out.push(&rho * &phi.sin());
        out
    }
}

impl ChartGeometry for Quadric {
    fn cr_dim(&self) -> usize {
        self.n
    }

    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let m = 2 * self.n + 1;
        let phi = self.embed(&Jet::seed(x, order + 1));
        let mut w: Vec<f64> = self.g.iter().map(|g| 2.0 * self.scale * g).collect();
        w.push(2.0 * self.scale * self.sign.value());
        pull_back_rotation_form(&phi, &w, m)
    }

    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector> {
        let m = 2 * self.n + 1;
        let phi = self.embed(&Jet::seed(x, order + 1));
        let jac = jacobian(&phi, m);
        let pt: Vec<CJet> = (0..=self.n)
            .map(|j| ambient_point(&phi, j))
            .map(|c| CJet { re: c.re.truncate(order), im: c.im.truncate(order) })
            .collect();
        let w = &pt[self.n];
        let zero = CJet { re: w.re.zero_like(), im: w.re.zero_like() };
        let sgn = self.sign.value();
        let mut ambient = Vec::new();
        for a in 0..self.n {
            // ±w̄ ∂/∂z_a - g_a z̄_a ∂/∂w
            let mut coeffs = vec![zero.clone(); self.n + 1];
            let wb = conj(w);
            coeffs[a] = CJet { re: wb.re.scale(sgn), im: wb.im.scale(sgn) };
            let za = conj(&pt[a]);
            coeffs[self.n] = CJet { re: za.re.scale(-self.g[a]), im: za.im.scale(-self.g[a]) };
            let _ = cmul;
            let (re, im) = holomorphic_vector(&coeffs);
            ambient.push(re);
            ambient.push(im);
        }
        let pulled = pull_back_vectors(&jac, &ambient);
        pulled.chunks(2).map(|c| CrVector { re: c[0].clone(), im: c[1].clone() }).collect()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        let q = self.hermitian(x);
        let rho2 = self.c - self.sign.value() * q;
        rho2 > 1e-3 * self.c && x[2 * self.n].abs() < 10.0
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let radius = match self.sign {
            QuadricSign::Plus => 0.5 * (self.c / self.g.iter().cloned().fold(0.0, f64::max)).sqrt(),
            QuadricSign::Minus => 0.6,
        };
        let mut p = uniform_ball(rng, 2 * self.n, radius);
        p.push(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        p
    }

    fn base_point(&self) -> Vec<f64> {
        let mut p = vec![0.0; 2 * self.n + 1];
        p[0] = 0.1 * self.c.sqrt();
        p
    }
}

/// Conformal change `θ̂ = e^{2u} θ` of a base model (same CR structure).
#[derive(Debug, Clone)]
pub struct Conformal {
    pub base: ChartModel,
    pub u: ScalarField,
}

impl ChartGeometry for Conformal {
    fn cr_dim(&self) -> usize {
        self.base.cr_dim()
    }

    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let th = self.base.geometry().theta(x, order);
        let f = self.u.jet(x, order).scale(2.0).exp();
        th.iter().map(|t| t * &f).collect()
    }

    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector> {
        self.base.geometry().cr_frame(x, order)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.base.geometry().in_domain(x)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.base.sample_point(rng)
    }

    fn base_point(&self) -> Vec<f64> {
        self.base.base_point()
    }
}

pub fn heisenberg(n: usize) -> ChartModel {
    ChartModel::new(format!("heisenberg:n={n}"), Arc::new(Heisenberg { n }))
}

pub fn sphere(n: usize) -> ChartModel {
    ChartModel::new(format!("sphere:n={n}"), Arc::new(Sphere::standard(n)))
}

pub fn weighted_sphere(weights: Vec<f64>) -> Result<ChartModel> {
    if weights.len() < 2 || weights.iter().any(|&a| !(a > 0.0)) {
        return Err(GeometryError::Invalid("weights must be positive and at least two".into()));
    }
    let id = format!(
        "weighted-sphere:a={}",
        weights.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
    );
    Ok(ChartModel::new(id, Arc::new(Sphere::weighted(weights))))
}

pub fn quadric(n: usize, sign: QuadricSign, c: f64) -> Result<ChartModel> {
    if !(c > 0.0) {
        return Err(GeometryError::Invalid(format!("quadric constant must be positive, got {c}")));
    }
    let s = match sign {
        QuadricSign::Plus => '+',
        QuadricSign::Minus => '-',
    };
    Ok(ChartModel::new(format!("quadric:{s},c={c},n={n}"), Arc::new(Quadric::new(n, sign, c))))
}

pub fn conformal(base: ChartModel, u: ScalarField, u_label: &str) -> ChartModel {
    let id = format!("conformal:u={u_label},base={}", base.id());
    ChartModel::new(id, Arc::new(Conformal { base, u }))
}

/// Chart map between two models, evaluated on coordinate jets.
pub type ChartMap = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;

/// Smooth map from a source chart into a target chart of larger CR dimension.
/// Whether it is a pseudohermitian immersion is checked pointwise by the
/// immersion gates, not at construction.
#[derive(Clone)]
pub struct ImmersionMap {
    pub source: ChartModel,
    pub target: ChartModel,
    pub map: ChartMap,
    pub label: String,
}

impl fmt::Debug for ImmersionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionMap").field("label", &self.label).finish()
    }
}

impl ImmersionMap {
    pub fn new(source: ChartModel, target: ChartModel, map: ChartMap, label: impl Into<String>) -> Result<Self> {
        if target.cr_dim() <= source.cr_dim() {
            return Err(GeometryError::Codimension { source_dim: source.cr_dim(), target_dim: target.cr_dim() });
        }
        Ok(ImmersionMap { source, target, map, label: label.into() })
    }

    /// CR codimension `k`.
    pub fn codimension(&self) -> usize {
        self.target.cr_dim() - self.source.cr_dim()
    }

    /// Image of a chart point.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        jet::values(&(self.map)(&Jet::seed(x, 0)))
    }

    /// Image as jets of the given order in the source coordinates.
    pub fn jets(&self, x: &[f64], order: usize) -> Vec<Jet> {
        (self.map)(&Jet::seed(x, order))
    }
}

/// Families of standard immersions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImmersionFamily {
    /// Equatorial `S^{2m+1} ⊂ S^{2n+1}`, `(z, w) -> (z, 0, w)`.
    SphereInSphere,
    /// `H_m -> H_n`, `(z, t) -> (z, 0, t)`.
    HeisenbergInHeisenberg,
}

/// The linear inclusion `(z, s) -> (z, 0, s)` between charts of CR
/// dimensions `m < n`.
pub fn immersion_standard(m: usize, n: usize, family: ImmersionFamily) -> Result<ImmersionMap> {
    if m == 0 || m >= n {
        return Err(GeometryError::Invalid(format!("standard immersion needs 1 <= m < n, got m = {m}, n = {n}")));
    }
    let (source, target, name) = match family {
        ImmersionFamily::SphereInSphere => (sphere(m), sphere(n), "sphere"),
        ImmersionFamily::HeisenbergInHeisenberg => (heisenberg(m), heisenberg(n), "heisenberg"),
    };
    let map: ChartMap = Arc::new(move |x: &[Jet]| {
        let zero = x[0].zero_like();
        let mut out: Vec<Jet> = x[..2 * m].to_vec();
        out.extend(std::iter::repeat_n(zero, 2 * (n - m)));
        out.push(x[2 * m].clone());
        out
    });
    ImmersionMap::new(source, target, map, format!("{name}:{m}->{n}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_theta_at_reference_point() {
        let th = heisenberg(1).theta_values(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(th, vec![0.0, 2.0, 1.0]);
    }

    #[test]
    fn cr_frames_are_annihilated_by_theta() {
        let models = [heisenberg(2), sphere(1), sphere(2), quadric(1, QuadricSign::Minus, 0.5).unwrap()];
        for m in &models {
            let x = m.base_point();
            let th = m.theta(&x, 1).unwrap();
            for t in m.cr_frame(&x, 1).unwrap() {
                for part in [&t.re, &t.im] {
                    let v = jet::dot(&th, part);
                    for c in v.coefficients() {
                        assert!(c.abs() < 1e-13, "{}: {c}", m.id());
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_embedding_lands_on_the_sphere() {
        let s = Sphere::standard(2);
        let y = s.embed_values(&[0.3, -0.2, 0.1, 0.4, -0.25]);
        let r2: f64 = y.iter().map(|a| a * a).sum();
        assert!((r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadric_embedding_satisfies_equation() {
        for sign in [QuadricSign::Plus, QuadricSign::Minus] {
            let q = Quadric::new(1, sign, 0.5);
            let x = [0.2, -0.1, 0.7];
            let y = jet::values(&q.embed(&Jet::seed(&x, 0)));
            let z2 = y[0] * y[0] + y[1] * y[1];
            let w2 = y[2] * y[2] + y[3] * y[3];
            assert!((z2 + sign.value() * (w2 - 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_weights_reproduce_the_sphere() {
        let a = weighted_sphere(vec![1.0, 1.0]).unwrap();
        let b = sphere(1);
        let x = [0.2, 0.3, -0.1];
        let ta = a.theta_values(&x).unwrap();
        let tb = b.theta_values(&x).unwrap();
        for (p, q) in ta.iter().zip(&tb) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_domain_is_reported() {
        let q = quadric(1, QuadricSign::Plus, 0.5).unwrap();
        assert!(matches!(q.theta(&[1.0, 0.0, 0.0], 0), Err(GeometryError::OutOfDomain { .. })));
    }
}
