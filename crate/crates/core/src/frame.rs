//! Contact data at a point: Reeb field, complex structure, Webster metric and
//! an adapted orthonormal frame, all carried as jets.
//!
//! Conventions: `dθ(X, Y) = X θ(Y) - Y θ(X) - θ([X, Y])`, `g(X, Y) = dθ(X, JY)`
//! on the horizontal bundle, `g(T, T) = 1`, `Ω = -dθ`. The adapted frame is
//! `E_0 = T`, `E_1..E_n` obtained by unitary Gram-Schmidt from the model's CR
//! frame, and `E_{n+a} = J E_a`.

use nalgebra::DMatrix;

use crate::error::{GeometryError, Result};
use crate::jet::{self, Jet, JetMatrix};
use crate::models::ChartModel;

/// Condition number above which the contact form is declared degenerate.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct FramePacket {
    pub point: Vec<f64>,
    pub n: usize,
    /// Jet order of everything except `theta` (which carries one more).
    pub order: usize,
    pub theta: Vec<Jet>,
    /// `dθ(∂_p, ∂_q)`.
    pub dtheta: JetMatrix,
    pub reeb: Vec<Jet>,
    /// `(J V)^p = J[p][q] V^q`.
    pub j: JetMatrix,
    /// Webster metric `g_{pq}`.
    pub metric: JetMatrix,
    /// `frame[a][p] = E_a^p`.
    pub frame: JetMatrix,
    /// `coframe[a][p]`: the dual basis, `V = Σ_a (coframe[a] · V) E_a`.
    pub coframe: JetMatrix,
    /// Real and imaginary parts of the model's CR frame, `2 Re T_a` and `-2 Im T_a`.
    pub cr_real: Vec<(Vec<Jet>, Vec<Jet>)>,
    /// Condition number of the Reeb system at the point.
    pub condition: f64,
    /// Smallest eigenvalue of the Levi form on the model frame.
    pub levi_min: f64,
}

impl FramePacket {
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn frame_values(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |p, a| self.frame[a][p].value())
    }

    pub fn metric_values(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |p, q| self.metric[p][q].value())
    }

    pub fn j_values(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |p, q| self.j[p][q].value())
    }

    pub fn theta_values(&self) -> Vec<f64> {
        jet::values(&self.theta)
    }

    pub fn reeb_values(&self) -> Vec<f64> {
        jet::values(&self.reeb)
    }

    /// Frame components of a coordinate vector.
    pub fn to_frame(&self, v: &[f64]) -> Vec<f64> {
        self.coframe.iter().map(|row| row.iter().zip(v).map(|(c, x)| c.value() * x).sum()).collect()
    }

    /// Coordinate vector from frame components.
    pub fn from_frame(&self, c: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m).map(|p| (0..m).map(|a| c[a] * self.frame[a][p].value()).sum()).collect()
    }
}

fn svd_condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Builds the frame packet with frame jets of the given order.
pub fn frame_packet(model: &ChartModel, x: &[f64], order: usize) -> Result<FramePacket> {
    let n = model.cr_dim();
    let m = 2 * n + 1;
    let theta = model.theta(x, order + 1)?;
    let cr = model.cr_frame(x, order)?;
    let th = |p: usize| theta[p].truncate(order);

    let dtheta: JetMatrix =
        (0..m).map(|p| (0..m).map(|q| &theta[q].d(p) - &theta[p].d(q)).collect()).collect();

    // Reeb field: θ(T) = 1, dθ(T, ·) = 0, by normal equations on the stacked system.
    let rows: Vec<Vec<Jet>> = std::iter::once((0..m).map(th).collect::<Vec<_>>())
        .chain((0..m).map(|q| (0..m).map(|p| dtheta[p][q].clone()).collect()))
        .collect();
    let rhs: Vec<Jet> = std::iter::once(theta[0].const_like(1.0).truncate(order))
        .chain((0..m).map(|_| theta[0].zero_like().truncate(order)))
        .collect();
    let amat = DMatrix::from_fn(m + 1, m, |i, p| rows[i][p].value());
    let condition = svd_condition(&amat);
    if !(condition <= CONDITION_LIMIT) {
        return Err(GeometryError::DegenerateContact { point: x.to_vec(), condition });
    }
    let normal: JetMatrix = (0..m)
        .map(|p| {
            (0..m)
                .map(|q| {
                    let mut acc = rows[0][p].zero_like();
                    for r in &rows {
                        acc += &(&r[p] * &r[q]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let nrhs: JetMatrix = (0..m)
        .map(|p| {
            let mut acc = rows[0][p].zero_like();
            for (r, b) in rows.iter().zip(&rhs) {
                acc += &(&r[p] * b);
            }
            vec![acc]
        })
        .collect();
    let reeb: Vec<Jet> = jet::solve(&normal, &nrhs)
        .ok_or_else(|| GeometryError::DegenerateContact { point: x.to_vec(), condition })?
        .into_iter()
        .map(|mut r| r.remove(0))
        .collect();

    // Real horizontal frame X_a = 2 Re T_a, J X_a = -2 Im T_a.
    let cr_real: Vec<(Vec<Jet>, Vec<Jet>)> = cr
        .iter()
        .map(|t| (t.re.iter().map(|c| c.scale(2.0)).collect(), t.im.iter().map(|c| c.scale(-2.0)).collect()))
        .collect();

    // J = F J0 F^{-1} with F = [T | X_a | J X_a].
    let mut fcols: Vec<Vec<Jet>> = vec![reeb.clone()];
    for (xa, _) in &cr_real {
        fcols.push(xa.clone());
    }
    for (_, ya) in &cr_real {
        fcols.push(ya.clone());
    }
    let fmat: JetMatrix = (0..m).map(|p| (0..m).map(|a| fcols[a][p].clone()).collect()).collect();
    let fvals = DMatrix::from_fn(m, m, |p, a| fmat[p][a].value());
    if !(svd_condition(&fvals) <= CONDITION_LIMIT) {
        return Err(GeometryError::DegenerateFrame { point: x.to_vec() });
    }
    let finv = jet::inverse(&fmat).ok_or_else(|| GeometryError::DegenerateFrame { point: x.to_vec() })?;
    // J0 maps column index a to: 0 -> 0, a -> n + a, n + a -> -a.
    let j: JetMatrix = (0..m)
        .map(|p| {
            (0..m)
                .map(|q| {
                    let mut acc = fmat[0][0].zero_like();
                    for a in 0..n {
                        // F J0 e_{1+a} = Y_a ; F J0 e_{1+n+a} = -X_a
                        acc += &(&fmat[p][1 + n + a] * &finv[1 + a][q]);
                        acc -= &(&fmat[p][1 + a] * &finv[1 + n + a][q]);
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let metric: JetMatrix = (0..m)
        .map(|p| {
            (0..m)
                .map(|q| {
                    let mut acc = &th(p) * &th(q);
                    for r in 0..m {
                        acc += &(&dtheta[p][r] * &j[r][q]);
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let g = |u: &[Jet], v: &[Jet]| -> Jet {
        let mut acc = u[0].zero_like();
        for p in 0..m {
            for q in 0..m {
                acc += &(&(&u[p] * &metric[p][q]) * &v[q]);
            }
        }
        acc
    };
    let apply_j = |v: &[Jet]| -> Vec<Jet> { jet::mat_vec(&j, v) };

    // Levi form positivity on the model frame.
    let mut gram = DMatrix::zeros(2 * n, 2 * n);
    let hvecs: Vec<&Vec<Jet>> = cr_real.iter().map(|c| &c.0).chain(cr_real.iter().map(|c| &c.1)).collect();
    for a in 0..2 * n {
        for b in 0..2 * n {
            gram[(a, b)] = g(hvecs[a], hvecs[b]).value();
        }
    }
    let gram_sym = (&gram + gram.transpose()) * 0.5;
    let levi_min = gram_sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let levi_max = gram_sym.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max);
    if !(levi_min > 1e-10 * levi_max.max(1e-300)) {
        return Err(GeometryError::LeviNotPositive { point: x.to_vec(), min_eigenvalue: levi_min });
    }

    // Unitary Gram-Schmidt.
    let mut horiz: Vec<Vec<Jet>> = Vec::with_capacity(n);
    let mut horiz_j: Vec<Vec<Jet>> = Vec::with_capacity(n);
    for (xa, _) in &cr_real {
        let mut v = xa.clone();
        for (e, je) in horiz.iter().zip(&horiz_j) {
            let c1 = g(xa, e);
            let c2 = g(xa, je);
            for p in 0..m {
                let t = &(&c1 * &e[p]) + &(&c2 * &je[p]);
                v[p] -= &t;
            }
        }
        let norm = g(&v, &v);
        if !(norm.value() > 0.0) {
            return Err(GeometryError::DegenerateFrame { point: x.to_vec() });
        }
        let inv = norm.sqrt().recip();
        let e: Vec<Jet> = v.iter().map(|c| c * &inv).collect();
        let je = apply_j(&e);
        horiz.push(e);
        horiz_j.push(je);
    }
    let mut frame: JetMatrix = vec![reeb.clone()];
    frame.extend(horiz);
    frame.extend(horiz_j);
    let emat: JetMatrix = (0..m).map(|p| (0..m).map(|a| frame[a][p].clone()).collect()).collect();
    let coframe = jet::inverse(&emat).ok_or_else(|| GeometryError::DegenerateFrame { point: x.to_vec() })?;

    Ok(FramePacket {
        point: x.to_vec(),
        n,
        order,
        theta,
        dtheta,
        reeb,
        j,
        metric,
        frame,
        coframe,
        cr_real,
        condition,
        levi_min,
    })
}

/// Lie bracket `[X, Y]^p = X^q ∂_q Y^p - Y^q ∂_q X^p` (one order lower).
pub fn lie_bracket(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    (0..x.len()).map(|p| &y[p].directional(x) - &x[p].directional(y)).collect()
}

/// Lie derivative of a one-form: `(ℒ_X α)_p = ∂_p(α(X)) + X^q (∂_q α_p - ∂_p α_q)`.
pub fn lie_derivative_form(x: &[Jet], alpha: &[Jet]) -> Vec<Jet> {
    let m = x.len();
    let contraction = jet::dot(x, alpha);
    (0..m)
        .map(|p| {
            let mut acc = contraction.d(p);
            for q in 0..m {
                let d = &alpha[p].d(q) - &alpha[q].d(p);
                acc += &(&x[q].truncate(d.order()) * &d);
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg, quadric, sphere, QuadricSign};

    #[test]
    fn heisenberg_dtheta_block() {
        let fp = frame_packet(&heisenberg(1), &[0.3, -0.2, 0.5], 1).unwrap();
        assert!((fp.dtheta[0][1].value() - 4.0).abs() < 1e-14);
        assert!((fp.dtheta[1][0].value() + 4.0).abs() < 1e-14);
        let t = fp.reeb_values();
        assert!(t[0].abs() < 1e-14 && t[1].abs() < 1e-14 && (t[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal_and_adapted() {
        for model in [heisenberg(2), sphere(1), quadric(1, QuadricSign::Minus, 0.5).unwrap()] {
            let x = model.base_point();
            let fp = frame_packet(&model, &x, 1).unwrap();
            let e = fp.frame_values();
            let g = fp.metric_values();
            let gram = e.transpose() * &g * &e;
            let id = DMatrix::<f64>::identity(fp.dim(), fp.dim());
            assert!((gram - id).abs().max() < 1e-12, "{}", model.id());
            let jm = fp.j_values();
            let jj = &jm * &jm;
            // J^2 = -1 on H, J T = 0.
            for a in 1..fp.dim() {
                let v = e.column(a);
                let w = &jj * v + v;
                assert!(w.abs().max() < 1e-12);
            }
            assert!((&jm * e.column(0)).abs().max() < 1e-12);
            // g symmetric
            assert!((&g - g.transpose()).abs().max() < 1e-12);
        }
    }
}
