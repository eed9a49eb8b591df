//! The Tanaka-Webster connection.
//!
//! In the adapted orthonormal frame `E_0 = T, E_a, E_{n+a} = J E_a` the
//! metric and `J` have constant components, so the defining axioms
//! (horizontal bundle parallel, `∇g = 0`, `∇J = 0`, no horizontal torsion on
//! horizontal pairs, `τ J + J τ = 0`) form a linear system for the
//! connection coefficients `Γ^k_{ij}` (`∇_{E_i} E_j = Γ^k_{ij} E_k`) whose
//! right-hand side is linear in the structure functions `[E_i, E_j] =
//! c^k_{ij} E_k`. The system depends only on `n`; its rank is checked by SVD,
//! it is solved once through the normal equations, and the solution operator
//! is applied to the jets of the structure functions at every point, which
//! gives the jets of `Γ`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{GeometryError, Result};
use crate::frame::{self, lie_bracket, FramePacket};
use crate::jet::{self, Jet};
use crate::models::ChartModel;

/// Pointwise residual allowed for the axioms.
pub const AXIOM_TOLERANCE: f64 = 1e-8;

/// Flat index of a three-index array of side `m`.
#[inline]
pub fn idx3(m: usize, k: usize, i: usize, j: usize) -> usize {
    (k * m + i) * m + j
}

/// `J` in the adapted frame: `J E_j = Σ_k jf(k, j) E_k`.
pub fn j_frame(n: usize, k: usize, j: usize) -> f64 {
    if j >= 1 && j <= n && k == j + n {
        1.0
    } else if j > n && k == j - n {
        -1.0
    } else {
        0.0
    }
}

type SparseRow = Vec<(usize, f64)>;

/// The axiom system `M Γ = C c` for a given CR dimension.
pub struct AxiomSystem {
    pub n: usize,
    pub rank: usize,
    lhs: Vec<SparseRow>,
    rhs: Vec<SparseRow>,
    /// Solution operator `Γ_u = Σ solution[u] (v, w) c_v`.
    solution: Vec<SparseRow>,
}

impl AxiomSystem {
    fn build(n: usize) -> Self {
        let m = 2 * n + 1;
        let jf = |k, j| j_frame(n, k, j);
        let u = |k, i, j| idx3(m, k, i, j);
        let mut lhs: Vec<SparseRow> = Vec::new();
        let mut rhs: Vec<SparseRow> = Vec::new();
        let mut push = |l: SparseRow, r: SparseRow| {
            lhs.push(l.into_iter().filter(|e| e.1 != 0.0).collect());
            rhs.push(r.into_iter().filter(|e| e.1 != 0.0).collect());
        };
        // Horizontal bundle is parallel.
        for i in 0..m {
            for j in 1..m {
                push(vec![(u(0, i, j), 1.0)], vec![]);
            }
        }
        // Metric.
        for i in 0..m {
            for j in 0..m {
                for k in j..m {
                    if j == k {
                        push(vec![(u(k, i, j), 2.0)], vec![]);
                    } else {
                        push(vec![(u(k, i, j), 1.0), (u(j, i, k), 1.0)], vec![]);
                    }
                }
            }
        }
        // ∇J = 0: Σ_l J(l, j) Γ^k_{il} - Σ_l Γ^l_{ij} J(k, l) = 0.
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut row = Vec::new();
                    for l in 0..m {
                        if jf(l, j) != 0.0 {
                            row.push((u(k, i, l), jf(l, j)));
                        }
                        if jf(k, l) != 0.0 {
                            row.push((u(l, i, j), -jf(k, l)));
                        }
                    }
                    push(row, vec![]);
                }
            }
        }
        // Horizontal torsion of horizontal pairs vanishes.
        for a in 1..m {
            for b in a + 1..m {
                for k in 1..m {
                    push(vec![(u(k, a, b), 1.0), (u(k, b, a), -1.0)], vec![(u(k, a, b), 1.0)]);
                }
            }
        }
        // τ J + J τ = 0 with τ(E_b)^k = Γ^k_{0b} - Γ^k_{b0} - c^k_{0b}.
        for b in 1..m {
            for k in 0..m {
                let mut l_row = Vec::new();
                let mut r_row = Vec::new();
                for l in 0..m {
                    let s = jf(l, b);
                    if s != 0.0 {
                        l_row.push((u(k, 0, l), s));
                        l_row.push((u(k, l, 0), -s));
                        r_row.push((u(k, 0, l), s));
                    }
                    let t = jf(k, l);
                    if t != 0.0 {
                        l_row.push((u(l, 0, b), t));
                        l_row.push((u(l, b, 0), -t));
                        r_row.push((u(l, 0, b), t));
                    }
                }
                push(l_row, r_row);
            }
        }
        let unknowns = m * m * m;
        let mm = DMatrix::from_fn(lhs.len(), unknowns, |r, c| {
            lhs[r].iter().filter(|e| e.0 == c).map(|e| e.1).sum::<f64>()
        });
        let cm = DMatrix::from_fn(rhs.len(), unknowns, |r, c| {
            rhs[r].iter().filter(|e| e.0 == c).map(|e| e.1).sum::<f64>()
        });
        let svd = mm.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
        // Full column rank: solve the normal equations by Cholesky.
        let mtm = mm.transpose() * &mm;
        let chol = mtm.cholesky().expect("normal matrix is positive definite");
        let g = chol.solve(&(mm.transpose() * cm));
        let solution = (0..unknowns)
            .map(|r| (0..unknowns).filter_map(|c| {
                let v = g[(r, c)];
                // Entries are small rationals; round-off below 1e-13 is noise.
                if v.abs() > 1e-13 { Some((c, v)) } else { None }
            }).collect())
            .collect();
        AxiomSystem { n, rank, lhs, rhs, solution }
    }

    pub fn unknowns(&self) -> usize {
        let m = 2 * self.n + 1;
        m * m * m
    }

    /// Maximum absolute residual of `M Γ - C c` on base-point values.
    pub fn residual(&self, gamma: &[f64], c: &[f64]) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| {
                let a: f64 = l.iter().map(|&(k, v)| v * gamma[k]).sum();
                let b: f64 = r.iter().map(|&(k, v)| v * c[k]).sum();
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

static SYSTEMS: OnceLock<Mutex<HashMap<usize, &'static AxiomSystem>>> = OnceLock::new();

/// Axiom system for CR dimension `n` (built once, then shared read-only).
pub fn axiom_system(n: usize) -> &'static AxiomSystem {
    let map = SYSTEMS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("axiom system cache");
    guard.entry(n).or_insert_with(|| Box::leak(Box::new(AxiomSystem::build(n))))
}

/// Connection data at a point.
#[derive(Clone, Debug)]
pub struct ConnectionPacket {
    pub frame: FramePacket,
    /// Jet order of `gamma` and `structure`.
    pub order: usize,
    /// `c^k_{ij}` at `idx3(m, k, i, j)`.
    pub structure: Vec<Jet>,
    /// `Γ^k_{ij}` at `idx3(m, k, i, j)`.
    pub gamma: Vec<Jet>,
    pub residual: f64,
}

/// Solves for the connection with coefficient jets of the given order.
pub fn connection_packet(model: &ChartModel, x: &[f64], order: usize) -> Result<ConnectionPacket> {
    let fp = frame::frame_packet(model, x, order + 1)?;
    connection_from_frame(fp)
}

pub fn connection_from_frame(fp: FramePacket) -> Result<ConnectionPacket> {
    let n = fp.n;
    let m = fp.dim();
    let order = fp.order - 1;
    let sys = axiom_system(n);
    if sys.rank != sys.unknowns() {
        return Err(GeometryError::ConnectionRank { rank: sys.rank, expected: sys.unknowns() });
    }
    let proto = fp.frame[0][0].truncate(order).zero_like();
    let mut structure = vec![proto.clone(); m * m * m];
    for i in 0..m {
        for j in i + 1..m {
            let br = lie_bracket(&fp.frame[i], &fp.frame[j]);
            for k in 0..m {
                let co: Vec<Jet> = fp.coframe[k].iter().map(|c| c.truncate(order)).collect();
                let v = jet::dot(&co, &br);
                structure[idx3(m, k, j, i)] = -&v;
                structure[idx3(m, k, i, j)] = v;
            }
        }
    }
    let gamma: Vec<Jet> = sys
        .solution
        .iter()
        .map(|row| {
            let mut acc = proto.clone();
            for &(v, w) in row {
                acc.axpy(w, &structure[v]);
            }
            acc
        })
        .collect();
    let gv = jet::values(&gamma);
    let cv = jet::values(&structure);
    let scale = 1.0 + cv.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let residual = sys.residual(&gv, &cv) / scale;
    if !(residual <= AXIOM_TOLERANCE) {
        return Err(GeometryError::ConnectionResidual { point: fp.point.clone(), residual });
    }
    Ok(ConnectionPacket { frame: fp, order, structure, gamma, residual })
}

impl ConnectionPacket {
    pub fn n(&self) -> usize {
        self.frame.n
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn point(&self) -> &[f64] {
        &self.frame.point
    }

    pub fn gamma_value(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[idx3(self.dim(), k, i, j)].value()
    }

    /// Torsion components `T_∇(E_i, E_j)^k` as jets.
    pub fn torsion_jet(&self, k: usize, i: usize, j: usize) -> Jet {
        let m = self.dim();
        &(&self.gamma[idx3(m, k, i, j)] - &self.gamma[idx3(m, k, j, i)]) - &self.structure[idx3(m, k, i, j)]
    }

    /// Torsion values, `t[idx3(m, k, i, j)] = T_∇(E_i, E_j)^k`.
    pub fn torsion(&self) -> Vec<f64> {
        let m = self.dim();
        let mut t = vec![0.0; m * m * m];
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    t[idx3(m, k, i, j)] = self.torsion_jet(k, i, j).value();
                }
            }
        }
        t
    }

    /// Pseudohermitian torsion `τ` in the frame: `τ(E_b) = Σ_a tau[a][b] E_a`.
    pub fn tau(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..m).map(|a| (0..m).map(|b| self.torsion_jet(a, 0, b).value()).collect()).collect()
    }

    /// Frobenius norm of `τ` on the horizontal bundle.
    pub fn tau_norm(&self) -> f64 {
        self.tau().iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Coordinate Christoffel symbols `∇_{∂_p} ∂_q = Γc^k_{pq} ∂_k` as jets of
    /// the same order as `gamma`.
    pub fn coordinate_gamma_jets(&self) -> Vec<Jet> {
        let m = self.dim();
        let o = self.order;
        let e: Vec<Vec<Jet>> = self.frame.frame.iter().map(|r| r.iter().map(|c| c.truncate(o)).collect()).collect();
        let f = &self.frame.coframe;
        let fo: Vec<Vec<Jet>> = f.iter().map(|r| r.iter().map(|c| c.truncate(o)).collect()).collect();
        let mut out = vec![self.gamma[0].zero_like(); m * m * m];
        // Frame-to-coordinate contraction: Σ_{a,b,c} f^a_q f^b_p Γ^c_{ba} e^k_c.
        // First W^c_{pq} = Σ_{a,b} f^b_p f^a_q Γ^c_{ba}.
        for p in 0..m {
            for q in 0..m {
                for c in 0..m {
                    let mut w = self.gamma[0].zero_like();
                    for a in 0..m {
                        for b in 0..m {
                            let g = &self.gamma[idx3(m, c, b, a)];
                            if g.coefficients().iter().all(|v| *v == 0.0) {
                                continue;
                            }
                            w += &(&(&fo[b][p] * &fo[a][q]) * g);
                        }
                    }
                    for k in 0..m {
                        out[idx3(m, k, p, q)] += &(&e[c][k] * &w);
                    }
                }
                for a in 0..m {
                    let dfa = f[a][q].d(p);
                    for k in 0..m {
                        out[idx3(m, k, p, q)] += &(&e[a][k] * &dfa);
                    }
                }
            }
        }
        out
    }

    pub fn coordinate_gamma(&self) -> Vec<f64> {
        jet::values(&self.coordinate_gamma_jets())
    }

    /// Covariant derivative `∇_X Y` in frame components, for `Y` given by its
    /// frame components at the point and their derivative along `X`.
    pub fn covariant_frame(&self, x: &[f64], y: &[f64], dy_along_x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|k| {
                let mut s = dy_along_x[k];
                for i in 0..m {
                    for j in 0..m {
                        s += self.gamma_value(k, i, j) * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{conformal, heisenberg, sphere, ScalarField};

    #[test]
    fn axiom_system_has_full_rank() {
        for n in 1..=3 {
            let sys = axiom_system(n);
            assert_eq!(sys.rank, sys.unknowns(), "n = {n}");
        }
    }

    #[test]
    fn heisenberg_connection_is_flat_frame() {
        let cp = connection_packet(&heisenberg(1), &[0.2, 0.4, -0.3], 1).unwrap();
        let gmax = cp.gamma.iter().map(|g| g.value().abs()).fold(0.0, f64::max);
        assert!(gmax < 1e-12, "{gmax}");
        assert!(cp.tau_norm() < 1e-12);
        // Horizontal torsion: T(E_1, E_2) = dθ(E_1, E_2) T = T.
        let t = cp.torsion();
        assert!((t[idx3(3, 0, 1, 2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reeb_field_is_parallel() {
        let model = conformal(heisenberg(1), ScalarField::coordinate(0, 3), "x1");
        let cp = connection_packet(&model, &[0.2, 0.4, -0.3], 0).unwrap();
        let m = 3;
        for i in 0..m {
            for k in 0..m {
                assert!(cp.gamma_value(k, i, 0).abs() < 1e-12);
            }
        }
        assert!(cp.tau_norm() > 1e-3);
    }

    #[test]
    fn sphere_is_sasakian() {
        let cp = connection_packet(&sphere(2), &sphere(2).base_point(), 0).unwrap();
        assert!(cp.tau_norm() < 1e-10);
    }
}
