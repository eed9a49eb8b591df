#![allow(dead_code)]

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phlab::jet::Jet;
use phlab::models::{self, ChartGeometry, ChartModel, CrVector, QuadricSign, ScalarField};

/// Every model family, with a few parameter choices each.
pub fn all_models() -> Vec<ChartModel> {
    vec![
        models::heisenberg(1),
        models::heisenberg(2),
        models::sphere(1),
        models::sphere(2),
        models::quadric(1, QuadricSign::Plus, 0.5).unwrap(),
        models::quadric(1, QuadricSign::Minus, 0.5).unwrap(),
        models::quadric(2, QuadricSign::Minus, 1.0).unwrap(),
        models::weighted_sphere(vec![1.0, 2.0]).unwrap(),
        models::weighted_sphere(vec![1.0, 2.0, 3.0]).unwrap(),
        models::conformal(models::sphere(1), ScalarField::coordinate(0, 3), "x"),
        models::conformal(models::heisenberg(2), ScalarField::Affine { constant: 0.1, coeffs: vec![0.2, -0.3, 0.0, 0.5, 0.1] }, "affine"),
    ]
}

/// Base point followed by `count - 1` seeded samples.
pub fn points(model: &ChartModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::once(model.base_point()).chain((1..count).map(|_| model.sample_point(&mut rng))).collect()
}

/// The same CR structure and contact form with the CR frame replaced by
/// `T'_a = ρ(x) e^{iφ(x)} Σ_b M_ab T_b` for a constant invertible complex `M`.
#[derive(Debug)]
pub struct Reframed {
    pub base: ChartModel,
    /// `(re, im)` of `M`, row major.
    pub mix: Vec<(f64, f64)>,
}

impl Reframed {
    pub fn model(base: ChartModel) -> ChartModel {
        let n = base.cr_dim();
        let mix = (0..n * n)
            .map(|k| {
                let (a, b) = (k / n, k % n);
                if a == b {
                    (1.0, 0.2 * a as f64)
                } else {
                    (0.3, -0.4 + 0.1 * a as f64)
                }
            })
            .collect();
        let id = format!("reframed:{}", base.id());
        ChartModel::new(id, Arc::new(Reframed { base, mix }))
    }
}

impl ChartGeometry for Reframed {
    fn cr_dim(&self) -> usize {
        self.base.cr_dim()
    }

    fn theta(&self, x: &[f64], order: usize) -> Vec<Jet> {
        self.base.geometry().theta(x, order)
    }

    fn cr_frame(&self, x: &[f64], order: usize) -> Vec<CrVector> {
        let n = self.cr_dim();
        let old = self.base.geometry().cr_frame(x, order);
        let c = Jet::seed(x, order);
        let m = c.len();
        let phase = &(&(&c[0] * 0.7) + &(&c[m - 1] * 0.2)) + 0.3;
        let scale = &(&c[1] * &c[1]) * 0.1 + 1.0;
        let (fr, fi) = (&phase.cos() * &scale, &phase.sin() * &scale);
        (0..n)
            .map(|a| {
                let mut re = vec![c[0].zero_like(); m];
                let mut im = vec![c[0].zero_like(); m];
                for (b, t) in old.iter().enumerate() {
                    let (mr, mi) = self.mix[a * n + b];
                    let cr = &fr * mr - &fi * mi;
                    let ci = &fr * mi + &fi * mr;
                    for p in 0..m {
                        re[p] += &(&(&cr * &t.re[p]) - &(&ci * &t.im[p]));
                        im[p] += &(&(&cr * &t.im[p]) + &(&ci * &t.re[p]));
                    }
                }
                CrVector { re, im }
            })
            .collect()
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

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
