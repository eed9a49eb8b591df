//! Infinitesimal pseudohermitian transformations.
//!
//! A vector field `X` qualifies when `ℒ_X θ = 0` and its flow preserves
//! `T_{1,0}(M)`. With `T_a = (P - iQ)/2`, `Q = JP`, the second condition
//! reads `π_H [X, Q] = J [X, P]`, where `π_H` removes the `T` component.

use std::sync::Arc;

use crate::curvature::vectors;
use crate::error::Result;
use crate::frame::{frame_packet, lie_bracket, lie_derivative_form};
use crate::jet::{self, Jet};
use crate::models::ChartModel;
use crate::report::{CheckRow, ExperimentReport};

/// Tolerance of both conditions.
pub const PSH_TOLERANCE: f64 = 1e-7;

/// A vector field in chart coordinates, evaluated on coordinate jets.
#[derive(Clone)]
pub struct VectorField {
    pub label: String,
    field: Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField").field("label", &self.label).finish()
    }
}

impl VectorField {
    pub fn new(label: impl Into<String>, field: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        Self { label: label.into(), field: Arc::new(field) }
    }

    /// Components as jets of the given order at `x`.
    pub fn jets(&self, x: &[f64], order: usize) -> Vec<Jet> {
        (self.field)(&Jet::seed(x, order))
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        jet::values(&self.jets(x, 0))
    }
}

/// Residuals of the two conditions at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PshResiduals {
    /// Largest component of `ℒ_X θ`.
    pub lie_theta: f64,
    /// Webster norm of `π_H [X, Q] - J [X, P]`, maximized over the CR frame.
    pub cr: f64,
}

/// Residuals of `ℒ_X θ = 0` and of CR preservation at `x`.
pub fn psh_residuals(model: &ChartModel, field: &VectorField, x: &[f64]) -> Result<PshResiduals> {
    let fp = frame_packet(model, x, 1)?;
    let m = model.dim();
    let xf = field.jets(x, 2);
    let lie = lie_derivative_form(&xf, &fp.theta);
    let lie_theta = lie.iter().fold(0.0_f64, |a, c| a.max(c.value().abs()));
    let theta = fp.theta_values();
    let reeb = fp.reeb_values();
    let metric: Vec<Vec<f64>> = fp.metric.iter().map(|row| jet::values(row)).collect();
    let j: Vec<Vec<f64>> = fp.j.iter().map(|row| jet::values(row)).collect();
    let horizontal = |w: Vec<f64>| -> Vec<f64> {
        let c = vectors::dot(&theta, &w);
        w.iter().zip(&reeb).map(|(a, t)| a - c * t).collect()
    };
    let mut cr: f64 = 0.0;
    for (p, q) in &fp.cr_real {
        let bp = horizontal(jet::values(&lie_bracket(&xf, p)));
        let bq = horizontal(jet::values(&lie_bracket(&xf, q)));
        let jbp: Vec<f64> = (0..m).map(|r| vectors::dot(&j[r], &bp)).collect();
        let diff: Vec<f64> = bq.iter().zip(&jbp).map(|(a, b)| a - b).collect();
        let gd: Vec<f64> = (0..m).map(|r| vectors::dot(&metric[r], &diff)).collect();
        cr = cr.max(vectors::dot(&diff, &gd).max(0.0).sqrt());
    }
    Ok(PshResiduals { lie_theta, cr })
}

/// Checks both conditions at every point; the field passes when all rows do.
pub fn is_infinitesimal_psh(model: &ChartModel, field: &VectorField, points: &[Vec<f64>]) -> ExperimentReport {
    let mut rep = ExperimentReport::new("psh-checker", format!("{} / {}", model.id(), field.label));
    let (mut worst_lie, mut worst_cr) = (0.0_f64, 0.0_f64);
    for x in points {
        match psh_residuals(model, field, x) {
            Ok(r) => {
                worst_lie = worst_lie.max(r.lie_theta);
                worst_cr = worst_cr.max(r.cr);
                rep.push(CheckRow::check("lie-derivative-theta", x, r.lie_theta, PSH_TOLERANCE));
                rep.push(CheckRow::check("cr-preservation", x, r.cr, PSH_TOLERANCE));
            }
            Err(e) => rep.push(CheckRow::error("psh", x, &e)),
        }
    }
    rep.set_value("max-lie-derivative-theta", worst_lie);
    rep.set_value("max-cr-residual", worst_cr);
    rep
}

/// Coordinate field `∂_p` on an `m`-dimensional chart.
pub fn coordinate_field(m: usize, p: usize, label: impl Into<String>) -> VectorField {
    VectorField::new(label, move |x: &[Jet]| (0..m).map(|q| x[0].const_like(if q == p { 1.0 } else { 0.0 })).collect())
}

/// Reeb field, rotation and the two left-invariant translations of the
/// Heisenberg group `H_1` with `θ = dt + 2(x dy - y dx)`, coordinates `(x, y, t)`.
pub fn heisenberg_psh_fields() -> Vec<VectorField> {
    vec![
        coordinate_field(3, 2, "d_t"),
        VectorField::new("x d_y - y d_x", |x: &[Jet]| vec![-&x[1], x[0].clone(), x[0].const_like(0.0)]),
        VectorField::new("d_x - 2y d_t", |x: &[Jet]| vec![x[0].const_like(1.0), x[0].const_like(0.0), &x[1] * -2.0]),
        VectorField::new("d_y + 2x d_t", |x: &[Jet]| vec![x[0].const_like(0.0), x[0].const_like(1.0), &x[0] * 2.0]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heisenberg;

    fn points() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0, 0.0], vec![0.3, -0.7, 0.2], vec![-1.1, 0.4, 2.0]]
    }

    #[test]
    fn heisenberg_symmetries_pass() {
        let h = heisenberg(1);
        for f in heisenberg_psh_fields() {
            let rep = is_infinitesimal_psh(&h, &f, &points());
            assert!(rep.all_pass(), "{}: {:?}", f.label, rep.values);
        }
    }

    #[test]
    fn plain_translation_fails_on_theta() {
        let h = heisenberg(1);
        let r = psh_residuals(&h, &coordinate_field(3, 0, "d_x"), &[0.0, 0.0, 0.0]).unwrap();
        // ℒ_{∂x} θ = d(-2y) + 4 dy = 2 dy.
        assert!((r.lie_theta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_preserves_cr_but_not_theta() {
        // (x, y, t) -> (λx, λy, λ²t) is CR and scales θ by λ².
        let f = VectorField::new("dilation", |x: &[Jet]| vec![x[0].clone(), x[1].clone(), &x[2] * 2.0]);
        let r = psh_residuals(&heisenberg(1), &f, &[0.2, 0.1, -0.3]).unwrap();
        assert!(r.cr < 1e-12);
        assert!(r.lie_theta > 1e-2);
    }

    #[test]
    fn bracket_identities() {
        let x = [0.3, -0.2, 0.5];
        let dx = coordinate_field(3, 0, "d_x").jets(&x, 2);
        let dy = coordinate_field(3, 1, "d_y").jets(&x, 2);
        assert!(jet::values(&lie_bracket(&dx, &dy)).iter().all(|c| c.abs() < 1e-15));

        let fp = frame_packet(&heisenberg(1), &x, 1).unwrap();
        let (p, q) = &fp.cr_real[0];
        let br = jet::values(&lie_bracket(p, q));
        assert!(vectors::dot(&fp.theta_values(), &br).abs() > 1.0);

        let reeb = coordinate_field(3, 2, "d_t").jets(&x, 2);
        assert!(jet::values(&lie_derivative_form(&reeb, &fp.theta)).iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn lie_derivative_of_bracket() {
        let h = heisenberg(1);
        let x = [0.3, -0.2, 0.5];
        let theta = h.theta(&x, 3).unwrap();
        let a = VectorField::new("a", |x: &[Jet]| vec![&x[1] * &x[2], x[0].sin(), &x[0] * &x[1]]).jets(&x, 3);
        let b = VectorField::new("b", |x: &[Jet]| vec![x[2].exp(), &x[0] * &x[0], x[1].cos()]).jets(&x, 3);
        let lhs = jet::values(&lie_derivative_form(&lie_bracket(&a, &b), &theta));
        let ab = lie_derivative_form(&a, &lie_derivative_form(&b, &theta));
        let ba = lie_derivative_form(&b, &lie_derivative_form(&a, &theta));
        for k in 0..3 {
            assert!((lhs[k] - (ab[k].value() - ba[k].value())).abs() < 1e-12);
        }
    }
}
