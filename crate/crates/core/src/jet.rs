//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function about a base
//! point, in `nvars` variables, up to total degree `order`. Arithmetic and the
//! elementary functions propagate all partial derivatives exactly (up to
//! rounding), so a chart model written once over jets yields its derivatives
//! to any order that the caller asks for.
//!
//! Monomials are kept in graded order, so the coefficients of a lower-order
//! jet form a prefix of those of a higher-order one. Binary operations truncate
//! to the smaller of the two orders; differentiation lowers the order by one.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Largest number of variables supported by the shared tables.
pub const MAX_VARS: usize = 9;
/// Largest total degree supported by the shared tables.
pub const MAX_ORDER: usize = 5;

/// Monomial bookkeeping shared by every jet in a given number of variables.
pub struct JetTables {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    degree: Vec<u8>,
    /// `prefix[d]` = number of monomials of degree `<= d`.
    prefix: Vec<usize>,
    /// Product triples `(i, j, k)` with `mono_i * mono_j = mono_k`, sorted by degree of `k`.
    mul: Vec<(u32, u32, u32)>,
    /// `mul_prefix[d]` = number of product triples whose result has degree `<= d`.
    mul_prefix: Vec<usize>,
    /// For variable `p` and monomial `k`: index of `mono_k * x_p` (if within `MAX_ORDER`).
    up: Vec<Vec<Option<u32>>>,
    /// For monomial `k > 0`: `(parent, var)` with `mono_k = mono_parent * x_var`.
    parent: Vec<(u32, u8)>,
}

impl JetTables {
    fn build(nvars: usize) -> Self {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut degree = Vec::new();
        let mut prefix = Vec::new();
        for d in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            enumerate(nvars, d, 0, &mut cur, &mut exps);
            while degree.len() < exps.len() {
                degree.push(d as u8);
            }
            prefix.push(exps.len());
        }
        let index_of = |e: &[u8; MAX_VARS]| -> Option<u32> {
            let d: usize = e.iter().map(|&v| v as usize).sum();
            if d > MAX_ORDER {
                return None;
            }
            let lo = if d == 0 { 0 } else { prefix[d - 1] };
            (lo..prefix[d]).find(|&k| exps[k] == *e).map(|k| k as u32)
        };
        let n = exps.len();
        let mut up = vec![vec![None; n]; nvars];
        for (p, row) in up.iter_mut().enumerate() {
            for (k, slot) in row.iter_mut().enumerate() {
                let mut e = exps[k];
                e[p] += 1;
                *slot = index_of(&e);
            }
        }
        let mut parent = vec![(0u32, 0u8); n];
        for k in 1..n {
            let p = (0..nvars).find(|&p| exps[k][p] > 0).unwrap();
            let mut e = exps[k];
            e[p] -= 1;
            parent[k] = (index_of(&e).unwrap(), p as u8);
        }
        let mut mul = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let d = degree[i] as usize + degree[j] as usize;
                if d > MAX_ORDER {
                    continue;
                }
                let mut e = exps[i];
                for p in 0..nvars {
                    e[p] += exps[j][p];
                }
                mul.push((i as u32, j as u32, index_of(&e).unwrap()));
            }
        }
        mul.sort_by_key(|&(_, _, k)| (degree[k as usize], k));
        let mut mul_prefix = Vec::new();
        for d in 0..=MAX_ORDER {
            mul_prefix.push(mul.iter().filter(|t| degree[t.2 as usize] as usize <= d).count());
        }
        JetTables { nvars, exps, degree, prefix, mul, mul_prefix, up, parent }
    }

    fn len(&self, order: usize) -> usize {
        self.prefix[order]
    }
}

fn enumerate(nvars: usize, rem: usize, pos: usize, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if pos + 1 == nvars || nvars == 0 {
        if nvars > 0 {
            cur[pos] = rem as u8;
            out.push(*cur);
            cur[pos] = 0;
        } else if rem == 0 {
            out.push(*cur);
        }
        return;
    }
    for k in (0..=rem).rev() {
        cur[pos] = k as u8;
        enumerate(nvars, rem - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

static TABLES: [OnceLock<JetTables>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];

/// Shared monomial tables for `nvars` variables.
pub fn tables(nvars: usize) -> &'static JetTables {
    assert!(nvars <= MAX_VARS, "jets support at most {MAX_VARS} variables");
    TABLES[nvars].get_or_init(|| JetTables::build(nvars))
}

/// Truncated Taylor polynomial about a base point.
#[derive(Clone)]
pub struct Jet {
    tab: &'static JetTables,
    order: usize,
    coef: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.tab.nvars)
            .field("order", &self.order)
            .field("coef", &self.coef)
            .finish()
    }
}

impl Jet {
    /// Constant function.
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let tab = tables(nvars);
        let mut coef = vec![0.0; tab.len(order)];
        coef[0] = value;
        Jet { tab, order, coef }
    }

    /// The coordinate function `x_p` expanded about `x_p = value`.
    pub fn variable(nvars: usize, order: usize, value: f64, p: usize) -> Self {
        assert!(p < nvars);
        let mut j = Self::constant(nvars, order, value);
        if order >= 1 {
            let k = j.tab.up[p][0].unwrap() as usize;
            j.coef[k] = 1.0;
        }
        j
    }

    /// Coordinate jets for every variable at the base point `x`.
    pub fn seed(x: &[f64], order: usize) -> Vec<Jet> {
        (0..x.len()).map(|p| Jet::variable(x.len(), order, x[p], p)).collect()
    }

    /// Builds a jet from raw Taylor coefficients (graded monomial order).
    pub fn from_coefficients(nvars: usize, order: usize, coef: Vec<f64>) -> Self {
        let tab = tables(nvars);
        assert_eq!(coef.len(), tab.len(order));
        Jet { tab, order, coef }
    }

    pub fn nvars(&self) -> usize {
        self.tab.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// Zero jet with the same shape.
    pub fn zero_like(&self) -> Self {
        Jet { tab: self.tab, order: self.order, coef: vec![0.0; self.coef.len()] }
    }

    /// Constant jet with the same shape.
    pub fn const_like(&self, value: f64) -> Self {
        let mut z = self.zero_like();
        z.coef[0] = value;
        z
    }

    /// Drops all terms above degree `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Jet { tab: self.tab, order, coef: self.coef[..self.tab.len(order)].to_vec() }
    }

    /// Partial derivative `∂f/∂x_alpha` for a multi-index `alpha`, at the base point.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        let d: usize = alpha.iter().map(|&a| a as usize).sum();
        if d > self.order {
            return f64::NAN;
        }
        let lo = if d == 0 { 0 } else { self.tab.prefix[d - 1] };
        for k in lo..self.tab.prefix[d] {
            if self.tab.exps[k][..self.tab.nvars] == alpha[..self.tab.nvars] {
                let fact: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
                return self.coef[k] * fact;
            }
        }
        0.0
    }

    /// First partial derivatives at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.tab.nvars)
            .map(|p| if self.order >= 1 { self.coef[self.tab.up[p][0].unwrap() as usize] } else { f64::NAN })
            .collect()
    }

    /// The partial derivative `∂f/∂x_p` as a jet of one lower order.
    pub fn d(&self, p: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate a jet of order 0");
        let order = self.order - 1;
        let n = self.tab.len(order);
        let mut coef = vec![0.0; n];
        let exps = &self.tab.exps;
        for (k, c) in coef.iter_mut().enumerate() {
            let src = self.tab.up[p][k].unwrap() as usize;
            *c = self.coef[src] * (exps[k][p] as f64 + 1.0);
        }
        Jet { tab: self.tab, order, coef }
    }

    /// Directional derivative `Σ_p v_p ∂f/∂x_p`.
    pub fn directional(&self, v: &[Jet]) -> Jet {
        let mut acc = self.const_like(0.0).truncate(self.order - 1);
        for (p, vp) in v.iter().enumerate() {
            acc += &(vp * &self.d(p));
        }
        acc
    }

    /// Multiplies in place by a scalar.
    pub fn scale(&self, s: f64) -> Jet {
        Jet { tab: self.tab, order: self.order, coef: self.coef.iter().map(|c| c * s).collect() }
    }

    fn same_family(&self, other: &Jet) {
        debug_assert_eq!(self.tab.nvars, other.tab.nvars, "jets in different variable counts");
    }

    /// `self + s * other`.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        self.same_family(other);
        if other.order < self.order {
            self.order = other.order;
            self.coef.truncate(self.tab.len(self.order));
        }
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += s * b;
        }
    }

    /// Applies a univariate function given its scaled derivatives
    /// `taylor[k] = f^(k)(a0) / k!`.
    fn compose_univariate(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coef[0] = 0.0;
        let mut acc = self.const_like(taylor[self.order]);
        for k in (0..self.order).rev() {
            acc = &acc * &delta;
            acc.coef[0] += taylor[k];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut p = 1.0 / a;
        for k in 0..=self.order {
            t.push(if k % 2 == 0 { p } else { -p });
            p /= a;
        }
        self.compose_univariate(&t)
    }

    pub fn powf(&self, e: f64) -> Jet {
        let a = self.value();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            t.push(binom * a.powf(e - k as f64));
            binom *= (e - k as f64) / (k as f64 + 1.0);
        }
        self.compose_univariate(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let ea = self.value().exp();
        let t: Vec<f64> = (0..=self.order).map(|k| ea / factorial(k)).collect();
        self.compose_univariate(&t)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut t = vec![a.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * a.powi(k as i32)));
        }
        self.compose_univariate(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose_univariate(&t)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose_univariate(&t)
    }

    pub fn square(&self) -> Jet {
        self * self
    }

    /// Evaluates this polynomial on inner jets: `f(g_1, ..., g_n)` where the
    /// constant terms of the `g_p` are the base point of `self`.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.tab.nvars);
        let order = inner.iter().map(|g| g.order).min().unwrap_or(0).min(self.order);
        let proto = inner[0].truncate(order);
        let deltas: Vec<Jet> = inner
            .iter()
            .map(|g| {
                let mut d = g.truncate(order);
                d.coef[0] = 0.0;
                d
            })
            .collect();
        let n = self.tab.len(order);
        let mut monos: Vec<Jet> = Vec::with_capacity(n);
        monos.push(proto.const_like(1.0));
        let mut acc = proto.const_like(self.coef[0]);
        for k in 1..n {
            let (par, var) = self.tab.parent[k];
            let m = &monos[par as usize] * &deltas[var as usize];
            acc.axpy(self.coef[k], &m);
            monos.push(m);
        }
        acc
    }

    /// Evaluates the polynomial at the displacement `h` from its base point.
    pub fn eval_at(&self, h: &[f64]) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.coef.len() {
            let mut term = self.coef[k];
            for (p, hp) in h.iter().enumerate().take(self.tab.nvars) {
                term *= hp.powi(self.tab.exps[k][p] as i32);
            }
            sum += term;
        }
        sum
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn mul_jets(a: &Jet, b: &Jet) -> Jet {
    a.same_family(b);
    let order = a.order.min(b.order);
    let tab = a.tab;
    let mut coef = vec![0.0; tab.len(order)];
    let na = tab.len(order);
    for &(i, j, k) in &tab.mul[..tab.mul_prefix[order]] {
        let (i, j) = (i as usize, j as usize);
        if i < na && j < na {
            coef[k as usize] += a.coef[i] * b.coef[j];
        }
    }
    let _ = tab.degree.len();
    Jet { tab, order, coef }
}

fn add_jets(a: &Jet, b: &Jet, sb: f64) -> Jet {
    a.same_family(b);
    let order = a.order.min(b.order);
    let n = a.tab.len(order);
    let coef = (0..n).map(|k| a.coef[k] + sb * b.coef[k]).collect();
    Jet { tab: a.tab, order, coef }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        add_jets(self, rhs, 1.0)
    }
}
impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        add_jets(self, rhs, -1.0)
    }
}
impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        mul_jets(self, rhs)
    }
}
impl Add<Jet> for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        add_jets(&self, &rhs, 1.0)
    }
}
impl Sub<Jet> for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        add_jets(&self, &rhs, -1.0)
    }
}
impl Mul<Jet> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        mul_jets(&self, &rhs)
    }
}
impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut j = self.clone();
        j.coef[0] += rhs;
        j
    }
}
impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coef[0] += rhs;
        self
    }
}
impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.axpy(1.0, rhs);
    }
}
impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.axpy(-1.0, rhs);
    }
}

/// Sum of products `Σ a_i b_i`.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = (&a[0] * &b[0]).zero_like();
    for (x, y) in a.iter().zip(b) {
        acc += &(x * y);
    }
    acc
}

/// Square matrix of jets, row-major.
pub type JetMatrix = Vec<Vec<Jet>>;

/// Solves `A X = B` by Gaussian elimination with partial pivoting chosen on
/// the base-point values. Returns `None` if a pivot vanishes.
pub fn solve(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Option<JetMatrix> {
    let n = a.len();
    let mut a: JetMatrix = a.to_vec();
    let mut b: JetMatrix = b.to_vec();
    let scale = a.iter().flatten().map(|x| x.value().abs()).fold(0.0_f64, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        if a[piv][col].value().abs() <= 1e-14 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for row in col + 1..n {
            let f = &a[row][col] * &inv;
            if f.coefficients().iter().all(|&c| c == 0.0) {
                continue;
            }
            for k in col..n {
                let t = &f * &a[col][k];
                a[row][k] -= &t;
            }
            for k in 0..b[row].len() {
                let t = &f * &b[col][k];
                b[row][k] -= &t;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = a[col][col].recip();
        for k in 0..b[col].len() {
            let mut v = b[col][k].clone();
            for j in col + 1..n {
                let t = &a[col][j] * &b[j][k];
                v -= &t;
            }
            b[col][k] = &v * &inv;
        }
    }
    Some(b)
}

/// Matrix inverse via [`solve`].
pub fn inverse(a: &[Vec<Jet>]) -> Option<JetMatrix> {
    let n = a.len();
    let proto = &a[0][0];
    let id: JetMatrix =
        (0..n).map(|i| (0..n).map(|j| proto.const_like(if i == j { 1.0 } else { 0.0 })).collect()).collect();
    solve(a, &id)
}

/// Matrix-vector product.
pub fn mat_vec(a: &[Vec<Jet>], v: &[Jet]) -> Vec<Jet> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// Base-point values of a vector of jets.
pub fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Central-difference partial derivatives for functions known only by samples.
pub mod fd {
    /// Step used for a fourth-order central stencil.
    pub fn step(scale: f64) -> f64 {
        f64::EPSILON.powf(0.2) * scale.max(1.0)
    }

    fn stencil(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
        (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
    }

    /// Derivative of a univariate function at 0 using a fourth-order stencil
    /// and one Richardson level (`h` and `h/2`).
    pub fn derivative(f: &dyn Fn(f64) -> f64, scale: f64) -> f64 {
        let h = step(scale);
        let d1 = stencil(f, h);
        let d2 = stencil(f, h / 2.0);
        (16.0 * d2 - d1) / 15.0
    }

    /// Partial derivative of `f` at `x` along coordinate `p`.
    pub fn partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], p: usize) -> f64 {
        let scale = x[p].abs();
        derivative(
            &|t| {
                let mut y = x.to_vec();
                y[p] += t;
                f(&y)
            },
            scale,
        )
    }

    /// Directional derivative of a vector-valued function.
    pub fn directional_vec(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], v: &[f64], len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| {
                derivative(
                    &|t| {
                        let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
                        f(&y)[i]
                    },
                    1.0,
                )
            })
            .collect()
    }
}
