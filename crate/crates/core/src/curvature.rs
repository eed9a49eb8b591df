//! Curvature of the Tanaka-Webster connection and derived scalars.
//!
//! The four-tensor is `R(X, Y, Z, W) = g(R(Z, W) Y, X)` with
//! `R(Z, W) = [∇_Z, ∇_W] - ∇_{[Z, W]}`; with this sign the standard sphere has
//! positive holomorphic sectional curvature, so no extra calibration factor is
//! applied (see [`CURVATURE_SIGN`]).

use crate::connection::{self, idx3, j_frame, ConnectionPacket};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::models::ChartModel;

/// Global sign multiplying the curvature tensor, fixed once so that the
/// standard sphere comes out positive.
pub const CURVATURE_SIGN: f64 = 1.0;

#[inline]
pub fn idx4(m: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * m + b) * m + c) * m + d
}

/// Curvature data at a point.
#[derive(Clone, Debug)]
pub struct CurvaturePacket {
    pub conn: ConnectionPacket,
    /// Jet order of `riemann`.
    pub order: usize,
    /// `R(E_a, E_b, E_c, E_d)` at `idx4(m, a, b, c, d)`.
    pub riemann: Vec<Jet>,
}

/// Curvature packet whose tensor components carry jets of the given order
/// (order 1 is enough for the second Bianchi identity).
pub fn curvature_packet(model: &ChartModel, x: &[f64], order: usize) -> Result<CurvaturePacket> {
    let cp = connection::connection_packet(model, x, order + 1)?;
    Ok(curvature_from_connection(cp))
}

pub fn curvature_from_connection(cp: ConnectionPacket) -> CurvaturePacket {
    let m = cp.dim();
    let order = cp.order - 1;
    let e: Vec<Vec<Jet>> = cp.frame.frame.iter().map(|r| r.iter().map(|c| c.truncate(cp.order)).collect()).collect();
    let gt = |k, i, j| cp.gamma[idx3(m, k, i, j)].truncate(order);
    // E_i(Γ^p_{jk})
    let mut dg: Vec<Vec<Jet>> = Vec::with_capacity(m);
    for i in 0..m {
        dg.push((0..m * m * m).map(|u| cp.gamma[u].directional(&e[i])).collect());
    }
    let zero = cp.gamma[0].truncate(order).zero_like();
    let mut riemann = vec![zero.clone(); m * m * m * m];
    for p in 0..m {
        for k in 0..m {
            for i in 0..m {
                for j in i + 1..m {
                    let mut v = &dg[i][idx3(m, p, j, k)] - &dg[j][idx3(m, p, i, k)];
                    for l in 0..m {
                        v += &(&gt(l, j, k) * &gt(p, i, l));
                        v -= &(&gt(l, i, k) * &gt(p, j, l));
                        let c = cp.structure[idx3(m, l, i, j)].truncate(order);
                        v -= &(&c * &gt(p, l, k));
                    }
                    let v = v.scale(CURVATURE_SIGN);
                    riemann[idx4(m, p, k, j, i)] = -&v;
                    riemann[idx4(m, p, k, i, j)] = v;
                }
            }
        }
    }
    CurvaturePacket { conn: cp, order, riemann }
}

impl CurvaturePacket {
    pub fn dim(&self) -> usize {
        self.conn.dim()
    }

    pub fn n(&self) -> usize {
        self.conn.n()
    }

    pub fn point(&self) -> &[f64] {
        self.conn.point()
    }

    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[idx4(self.dim(), a, b, c, d)].value()
    }

    /// All tensor values.
    pub fn values(&self) -> Vec<f64> {
        self.riemann.iter().map(Jet::value).collect()
    }

    /// `R(X, Y, Z, W)` for frame-component vectors.
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for a in 0..m {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..m {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..m {
                    if z[c] == 0.0 {
                        continue;
                    }
                    for d in 0..m {
                        s += x[a] * y[b] * z[c] * w[d] * self.r(a, b, c, d);
                    }
                }
            }
        }
        s
    }

    /// Frobenius norm of the tensor.
    pub fn norm(&self) -> f64 {
        self.riemann.iter().map(|v| v.value().powi(2)).sum::<f64>().sqrt()
    }

    /// Covariant derivative `(∇_{E_u} R)_{abcd}`; needs tensor jets of order >= 1.
    pub fn nabla(&self) -> Result<Vec<f64>> {
        if self.order < 1 {
            return Err(GeometryError::Invalid("covariant derivative of curvature needs jets of order 1".into()));
        }
        let m = self.dim();
        let cp = &self.conn;
        let e: Vec<Vec<Jet>> = cp.frame.frame.iter().map(|r| r.iter().map(|c| c.truncate(self.order)).collect()).collect();
        let mut out = vec![0.0; m * m * m * m * m];
        for u in 0..m {
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let mut v = self.riemann[idx4(m, a, b, c, d)].directional(&e[u]).value();
                            for p in 0..m {
                                v -= cp.gamma_value(p, u, a) * self.r(p, b, c, d);
                                v -= cp.gamma_value(p, u, b) * self.r(a, p, c, d);
                                v -= cp.gamma_value(p, u, c) * self.r(a, b, p, d);
                                v -= cp.gamma_value(p, u, d) * self.r(a, b, c, p);
                            }
                            out[u * m * m * m * m + idx4(m, a, b, c, d)] = v;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Frame-component vector helpers in an adapted orthonormal frame.
pub mod vectors {
    use super::j_frame;

    pub fn apply_j(n: usize, v: &[f64]) -> Vec<f64> {
        let m = v.len();
        (0..m).map(|k| (0..m).map(|j| j_frame(n, k, j) * v[j]).sum()).collect()
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// `Ω(X, Y) = -dθ(X, Y) = g(X, J Y)` on frame components.
    pub fn omega(n: usize, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &apply_j(n, b))
    }

    pub fn basis(m: usize, a: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[a] = 1.0;
        v
    }
}

/// Holomorphic sectional curvature `H(X) = R(X, JX, X, JX) / (4 |X|^4)` for a
/// horizontal vector given by frame components.
pub fn holomorphic_sectional(cv: &CurvaturePacket, x: &[f64]) -> Result<f64> {
    if x[0].abs() > 1e-10 * (1.0 + vectors::dot(x, x).sqrt()) {
        return Err(GeometryError::NotHorizontal { theta: x[0] });
    }
    let jx = vectors::apply_j(cv.n(), x);
    let nx = vectors::dot(x, x);
    Ok(cv.eval(x, &jx, x, &jx) / (4.0 * nx * nx))
}

/// Sectional curvature `R(u, v, u, v)` of a g-orthonormal pair.
pub fn sectional(cv: &CurvaturePacket, u: &[f64], v: &[f64]) -> Result<f64> {
    let defect = (vectors::dot(u, u) - 1.0).abs().max((vectors::dot(v, v) - 1.0).abs()).max(vectors::dot(u, v).abs());
    if defect > 1e-10 {
        return Err(GeometryError::NotOrthonormal { defect });
    }
    Ok(cv.eval(u, v, u, v))
}

/// Ricci tensor `Ric(X, Y) = trace(Z -> R(Z, Y) X)` in the frame.
pub fn ricci(cv: &CurvaturePacket) -> Vec<Vec<f64>> {
    let m = cv.dim();
    (0..m)
        .map(|x| (0..m).map(|y| (0..m).map(|a| cv.r(a, x, a, y)).sum()).collect())
        .collect()
}

/// Webster scalar curvature `ρ = g^{αβ̄} R_{αβ̄}`, with `T_α = (E_α - i J E_α)/2`
/// and `g_{αβ̄} = δ/2`. Returns `(ρ, imaginary part)`.
pub fn webster_scalar(cv: &CurvaturePacket) -> (f64, f64) {
    let n = cv.n();
    let ric = ricci(cv);
    let mut re = 0.0;
    let mut im = 0.0;
    for a in 1..=n {
        let b = a + n;
        re += 0.5 * (ric[a][a] + ric[b][b]);
        im += 0.5 * (ric[a][b] - ric[b][a]);
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg, sphere};

    #[test]
    fn heisenberg_is_flat() {
        let cv = curvature_packet(&heisenberg(1), &[0.3, 0.1, -0.2], 0).unwrap();
        assert!(cv.norm() < 1e-10);
    }

    #[test]
    fn sphere_holomorphic_curvature_positive() {
        let s = sphere(1);
        let cv = curvature_packet(&s, &s.base_point(), 0).unwrap();
        let h = holomorphic_sectional(&cv, &[0.0, 1.0, 0.0]).unwrap();
        assert!((h - 1.0).abs() < 1e-8, "H = {h}");
    }
}
