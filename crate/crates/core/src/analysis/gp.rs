//! One-dimensional Gaussian process regression with a squared-exponential
//! kernel plus observation noise.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel hyperparameters in normalized units (inputs and targets are
/// standardized before fitting).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub signal_var: f64,
    pub length_scale: f64,
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub restarts: usize,
    pub max_iters: u64,
    /// Lower bound on the noise variance, normalized units.
    pub min_noise_var: f64,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 400,
            min_noise_var: 1e-6,
            seed: 0,
        }
    }
}

const JITTER: [f64; 6] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2];
const LOG_BOUNDS: (f64, f64) = (-14.0, 10.0);

#[derive(Debug, Clone)]
pub struct GpFit {
    x: Vec<f64>,
    y: Vec<f64>,
    x_mean: f64,
    x_scale: f64,
    y_mean: f64,
    y_scale: f64,
    pub hyper: GpHyper,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn kernel(h: &GpHyper, a: f64, b: f64) -> f64 {
    let d = a - b;
    h.signal_var * (-0.5 * d * d / (h.length_scale * h.length_scale)).exp()
}

fn gram(h: &GpHyper, xs: &[f64]) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| kernel(h, xs[i], xs[j]) + if i == j { h.noise_var } else { 0.0 })
}

/// Cholesky with growing diagonal jitter, relative to the largest diagonal entry.
fn cholesky_jittered(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let scale = m.diagonal().max().max(1e-300);
    for j in JITTER {
        let mut mj = m.clone();
        for i in 0..mj.nrows() {
            mj[(i, i)] += j * scale;
        }
        if let Some(c) = Cholesky::new(mj) {
            return Ok(c);
        }
    }
    Err(Error::Gp("kernel matrix not positive definite after jitter".into()))
}

fn neg_log_marginal(h: &GpHyper, xs: &[f64], ys: &DVector<f64>) -> Result<f64> {
    let chol = cholesky_jittered(gram(h, xs))?;
    let alpha = chol.solve(ys);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let n = xs.len() as f64;
    Ok(0.5 * ys.dot(&alpha) + log_det + 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

struct Objective<'a> {
    xs: &'a [f64],
    ys: &'a DVector<f64>,
    min_noise: f64,
}

impl Objective<'_> {
    fn hyper(&self, p: &[f64]) -> GpHyper {
        GpHyper {
            signal_var: p[0].exp(),
            length_scale: p[1].exp(),
            noise_var: p[2].exp() + self.min_noise,
        }
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        // Out-of-box points get a penalty that grows with the distance, so the
        // simplex is pushed back inside.
        let excess: f64 = p.iter().map(|v| (LOG_BOUNDS.0 - v).max(0.0) + (v - LOG_BOUNDS.1).max(0.0)).sum();
        if excess > 0.0 {
            return Ok(1e10 * (1.0 + excess));
        }
        Ok(neg_log_marginal(&self.hyper(p), self.xs, self.ys).unwrap_or(1e10))
    }
}

fn standardize(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("GP needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Gp("non-finite training point".into()));
    }
    let x0 = points[0].0;
    if points.iter().all(|(x, _)| *x == x0) {
        return Err(Error::InsufficientData("GP inputs must not all be equal".into()));
    }
    Ok(())
}

impl GpFit {
    /// Fits hyperparameters by maximizing the log marginal likelihood from
    /// several random starting points.
    pub fn fit(points: &[(f64, f64)], cfg: &GpConfig) -> Result<Self> {
        check_points(points)?;
        let (xs, ys, norm) = normalize(points);
        let yv = DVector::from_vec(ys.clone());
        let obj = Objective {
            xs: &xs,
            ys: &yv,
            min_noise: cfg.min_noise_var,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..cfg.restarts.max(1) {
            // First start is a sensible default, the rest are random.
            let start = if k == 0 {
                vec![0.0, 0.0, (0.1f64).ln()]
            } else {
                vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..1.5), rng.random_range(-8.0..0.0)]
            };
            let simplex: Vec<Vec<f64>> = (0..=3)
                .map(|i| {
                    let mut p = start.clone();
                    if i > 0 {
                        p[i - 1] += 1.0;
                    }
                    p
                })
                .collect();
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-8)
                .map_err(|e| Error::Gp(e.to_string()))?;
            let res = Executor::new(
                Objective {
                    xs: &xs,
                    ys: &yv,
                    min_noise: cfg.min_noise_var,
                },
                solver,
            )
            .configure(|s| s.max_iters(cfg.max_iters))
            .run();
            let Ok(res) = res else { continue };
            let state = res.state();
            let (Some(p), cost) = (state.get_best_param(), state.get_best_cost()) else {
                continue;
            };
            if cost.is_finite() && best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, p.clone()));
            }
        }
        let (_, p) = best.ok_or_else(|| Error::Gp("hyperparameter search failed".into()))?;
        Self::build(points, norm, obj.hyper(&p))
    }

    /// Conditions on the points with fixed hyperparameters (normalized units).
    pub fn with_hyper(points: &[(f64, f64)], hyper: GpHyper) -> Result<Self> {
        check_points(points)?;
        let (_, _, norm) = normalize(points);
        Self::build(points, norm, hyper)
    }

    fn build(points: &[(f64, f64)], norm: [f64; 4], hyper: GpHyper) -> Result<Self> {
        let [x_mean, x_scale, y_mean, y_scale] = norm;
        let xs: Vec<f64> = points.iter().map(|p| (p.0 - x_mean) / x_scale).collect();
        let ys = DVector::from_iterator(points.len(), points.iter().map(|p| (p.1 - y_mean) / y_scale));
        let chol = cholesky_jittered(gram(&hyper, &xs))?;
        let alpha = chol.solve(&ys);
        Ok(Self {
            x: points.iter().map(|p| p.0).collect(),
            y: points.iter().map(|p| p.1).collect(),
            x_mean,
            x_scale,
            y_mean,
            y_scale,
            hyper,
            chol,
            alpha,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    /// Smallest and largest training input.
    pub fn x_range(&self) -> (f64, f64) {
        let lo = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn norm_x(&self, x: f64) -> f64 {
        (x - self.x_mean) / self.x_scale
    }

    fn cross(&self, xq: &[f64]) -> DMatrix<f64> {
        let n = self.x.len();
        DMatrix::from_fn(n, xq.len(), |i, j| {
            kernel(&self.hyper, self.norm_x(self.x[i]), self.norm_x(xq[j]))
        })
    }

    pub fn mean(&self, x: f64) -> f64 {
        let k = self.cross(&[x]);
        self.y_mean + self.y_scale * k.column(0).dot(&self.alpha)
    }

    /// Posterior variance of the latent function (observation noise excluded).
    pub fn variance(&self, x: f64) -> f64 {
        let k = self.cross(&[x]);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular solve");
        let var = self.hyper.signal_var - v.column(0).norm_squared();
        self.y_scale * self.y_scale * var.max(0.0)
    }

    /// Draws `n` joint posterior samples of the latent function at `xq`.
    pub fn sample<R: Rng + ?Sized>(&self, xq: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let k = self.cross(xq);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular solve");
        let m = xq.len();
        let xn: Vec<f64> = xq.iter().map(|&x| self.norm_x(x)).collect();
        let kss = DMatrix::from_fn(m, m, |i, j| kernel(&self.hyper, xn[i], xn[j]));
        let cov = kss - v.transpose() * &v;
        let cov = (&cov + cov.transpose()) * 0.5;
        let l = cholesky_jittered(cov)?.l();
        let mean: Vec<f64> = (0..m).map(|j| k.column(j).dot(&self.alpha)).collect();
        Ok((0..n)
            .map(|_| {
                let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let f = &l * z;
                (0..m).map(|j| self.y_mean + self.y_scale * (mean[j] + f[j])).collect()
            })
            .collect())
    }
}

fn normalize(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>, [f64; 4]) {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (xm, xsd) = standardize(&xs);
    let (ym, ysd) = standardize(&ys);
    (
        xs.iter().map(|x| (x - xm) / xsd).collect(),
        ys.iter().map(|y| (y - ym) / ysd).collect(),
        [xm, xsd, ym, ysd],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64, 2.0 * i as f64)).collect()
    }

    #[test]
    fn recovers_a_line_between_points() {
        let gp = GpFit::fit(&line(11), &GpConfig::default()).unwrap();
        for i in 0..10 {
            let x = i as f64 + 0.5;
            assert!((gp.mean(x) - 2.0 * x).abs() < 1e-3, "x={x} mean={} {:?}", gp.mean(x), gp.hyper);
        }
    }

    #[test]
    fn interpolates_without_noise() {
        let pts = vec![(0.0, 1.0), (1.0, 3.0), (2.5, -1.0), (4.0, 0.5)];
        let h = GpHyper {
            signal_var: 1.0,
            length_scale: 0.7,
            noise_var: 1e-12,
        };
        let gp = GpFit::with_hyper(&pts, h).unwrap();
        for (x, y) in pts {
            assert!((gp.mean(x) - y).abs() < 1e-6);
            assert!(gp.variance(x) < 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(GpFit::fit(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)], &GpConfig::default()).is_err());
        assert!(GpFit::fit(&[(1.0, 0.0), (2.0, 1.0)], &GpConfig::default()).is_err());
    }

    #[test]
    fn order_of_points_does_not_matter() {
        let pts = vec![(0.0, 0.3), (1.0, 0.9), (2.0, 1.1), (3.0, 1.8), (4.0, 2.2), (5.0, 2.1)];
        let mut rev = pts.clone();
        rev.reverse();
        let a = GpFit::fit(&pts, &GpConfig::default()).unwrap();
        let b = GpFit::fit(&rev, &GpConfig::default()).unwrap();
        for x in [0.5, 2.2, 4.7] {
            assert!((a.mean(x) - b.mean(x)).abs() < 1e-4);
        }
    }

    #[test]
    fn samples_centre_on_the_mean() {
        let pts = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5), (3.0, 1.5)];
        let gp = GpFit::fit(&pts, &GpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = gp.sample(&[1.5], 4000, &mut rng).unwrap();
        let m = s.iter().map(|v| v[0]).sum::<f64>() / s.len() as f64;
        let sd = gp.variance(1.5).sqrt();
        assert!((m - gp.mean(1.5)).abs() < 4.0 * sd / (s.len() as f64).sqrt() + 1e-9);
    }
}
