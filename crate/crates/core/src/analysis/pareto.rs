//! Comparing methods on the contacts / R̂ plane.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::GpFit;
use crate::error::Result;

/// Grid used to scan for crossings and to draw posterior functions.
const GRID: usize = 200;

/// First `x` in `[lo, hi]` where `f(x) = level`, found by scanning for a sign
/// change and bisecting inside it.
pub fn first_crossing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, level: f64) -> Option<f64> {
    let g = |x: f64| f(x) - level;
    let step = (hi - lo) / GRID as f64;
    let mut a = lo;
    let mut ga = g(a);
    if ga == 0.0 {
        return Some(a);
    }
    for i in 1..=GRID {
        let b = if i == GRID { hi } else { lo + step * i as f64 };
        let gb = g(b);
        if gb == 0.0 {
            return Some(b);
        }
        if ga.signum() != gb.signum() {
            let (mut l, mut r, mut gl) = (a, b, ga);
            for _ in 0..100 {
                let m = 0.5 * (l + r);
                let gm = g(m);
                if gm == 0.0 || r - l < 1e-12 {
                    return Some(m);
                }
                if gm.signum() == gl.signum() {
                    l = m;
                    gl = gm;
                } else {
                    r = m;
                }
            }
            return Some(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    None
}

/// Advantage of method A over method B: B's R̂ minus one at the contact level
/// where A reaches R̂ = 1. `None` when A's mean never crosses 1 inside the
/// range both fits were trained on.
pub fn delta_rhat_fn(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let x = first_crossing(&a, lo, hi, 1.0)?;
    // a(x) is 1 up to bisection tolerance; subtracting it keeps A vs A at 0.
    Some((x, b(x) - a(x)))
}

fn shared_range(a: &GpFit, b: &GpFit) -> Option<(f64, f64)> {
    let (a0, a1) = a.x_range();
    let (b0, b1) = b.x_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    (hi > lo).then_some((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRhat {
    /// Contact level where A's mean R̂ is 1.
    pub crossing: f64,
    pub delta: f64,
    /// 95% interval from posterior function draws; draws without a crossing
    /// are left out.
    pub ci: Option<(f64, f64)>,
    pub draws_used: usize,
}

pub fn delta_rhat(a: &GpFit, b: &GpFit) -> Option<(f64, f64)> {
    let (lo, hi) = shared_range(a, b)?;
    delta_rhat_fn(|x| a.mean(x), |x| b.mean(x), lo, hi)
}

/// [`delta_rhat`] plus an interval from `n_draws` posterior samples of both fits.
pub fn delta_rhat_with_ci(a: &GpFit, b: &GpFit, n_draws: usize, seed: u64) -> Result<Option<DeltaRhat>> {
    let Some((lo, hi)) = shared_range(a, b) else {
        return Ok(None);
    };
    let Some((crossing, delta)) = delta_rhat_fn(|x| a.mean(x), |x| b.mean(x), lo, hi) else {
        return Ok(None);
    };
    let grid: Vec<f64> = (0..=GRID).map(|i| lo + (hi - lo) * i as f64 / GRID as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sa = a.sample(&grid, n_draws, &mut rng)?;
    let sb = b.sample(&grid, n_draws, &mut rng)?;
    let mut deltas: Vec<f64> = sa
        .iter()
        .zip(&sb)
        .filter_map(|(fa, fb)| {
            let interp = |f: &[f64], x: f64| {
                let t = ((x - lo) / (hi - lo) * GRID as f64).clamp(0.0, GRID as f64);
                let i = (t.floor() as usize).min(GRID - 1);
                let w = t - i as f64;
                f[i] * (1.0 - w) + f[i + 1] * w
            };
            delta_rhat_fn(|x| interp(fa, x), |x| interp(fb, x), lo, hi).map(|(_, d)| d)
        })
        .collect();
    deltas.sort_by(f64::total_cmp);
    let ci = (deltas.len() >= 2).then(|| (quantile(&deltas, 0.025), quantile(&deltas, 0.975)));
    Ok(Some(DeltaRhat {
        crossing,
        delta,
        ci,
        draws_used: deltas.len(),
    }))
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}
