//! Piecewise-linear effective viral load.

use serde::{Deserialize, Serialize};

/// Knots `(onset, 0) -> (peak, h) -> (plateau_start, p) -> (plateau_end, p) -> (end, 0)`,
/// with times in days since the start of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViralLoadCurve {
    pub onset: f64,
    pub peak: f64,
    pub plateau_start: f64,
    pub plateau_end: f64,
    pub end: f64,
    pub peak_height: f64,
    pub plateau_height: f64,
}

impl ViralLoadCurve {
    /// Symmetric triangle on `[a, b]` with height `h`; handy in tests and benches.
    pub fn triangle(a: f64, b: f64, h: f64) -> Self {
        let m = 0.5 * (a + b);
        Self {
            onset: a,
            peak: m,
            plateau_start: b,
            plateau_end: b,
            end: b,
            peak_height: h,
            plateau_height: 0.0,
        }
    }

    fn knots(&self) -> [(f64, f64); 5] {
        [
            (self.onset, 0.0),
            (self.peak, self.peak_height),
            (self.plateau_start, self.plateau_height),
            (self.plateau_end, self.plateau_height),
            (self.end, 0.0),
        ]
    }

    pub fn is_valid(&self) -> bool {
        let k = self.knots();
        k.windows(2).all(|w| w[0].0 <= w[1].0)
            && (0.0..=1.0).contains(&self.peak_height)
            && (0.0..=self.peak_height).contains(&self.plateau_height)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.knots();
        if t <= k[0].0 || t >= k[4].0 {
            return 0.0;
        }
        for w in k.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if t <= x1 {
                if x1 == x0 {
                    return y1;
                }
                return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
            }
        }
        0.0
    }

    /// Exact integral over `[t0, t1]` (days).
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let k = self.knots();
        let mut total = 0.0;
        for w in k.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let a = t0.max(x0);
            let b = t1.min(x1);
            if b <= a || x1 <= x0 {
                continue;
            }
            let f = |t: f64| y0 + (y1 - y0) * (t - x0) / (x1 - x0);
            total += 0.5 * (b - a) * (f(a) + f(b));
        }
        total
    }

    /// Time of the maximum.
    pub fn argmax(&self) -> f64 {
        self.peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve() -> impl Strategy<Value = ViralLoadCurve> {
        (0.0f64..5.0, 0.1f64..3.0, 0.0f64..3.0, 0.0f64..10.0, 0.1f64..10.0, 0.05f64..1.0, 0.0f64..1.0).prop_map(
            |(o, a, b, c, d, h, p)| ViralLoadCurve {
                onset: o,
                peak: o + a,
                plateau_start: o + a + b,
                plateau_end: o + a + b + c,
                end: o + a + b + c + d,
                peak_height: h,
                plateau_height: h * p,
            },
        )
    }

    /// Composite Simpson quadrature, used as an independent route.
    fn simpson(c: &ViralLoadCurve, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = c.eval(a) + c.eval(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * c.eval(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn before_onset_is_zero() {
        let c = ViralLoadCurve::triangle(2.0, 6.0, 1.0);
        assert_eq!(c.integral(0.0, 2.0), 0.0);
        assert_eq!(c.integral(6.0, 9.0), 0.0);
        assert_eq!(c.eval(1.0), 0.0);
    }

    #[test]
    fn triangle_area() {
        let c = ViralLoadCurve::triangle(0.0, 2.0, 1.0);
        assert!((c.integral(0.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((c.integral(-5.0, 5.0) - 1.0).abs() < 1e-15);
        assert!((c.integral(0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn additive_over_adjacent_intervals(c in curve(), a in -1.0f64..30.0, x in 0.0f64..1.0, len in 0.0f64..20.0) {
            let b = a + x * len;
            let e = a + len;
            let whole = c.integral(a, e);
            prop_assert!((whole - c.integral(a, b) - c.integral(b, e)).abs() < 1e-12);
            prop_assert!(whole >= 0.0);
        }

        #[test]
        fn agrees_with_quadrature(c in curve(), a in -1.0f64..30.0, len in 0.01f64..20.0) {
            // Simpson is exact on each linear piece; the error comes only from
            // panels straddling a kink and shrinks quadratically with n.
            let q = simpson(&c, a, a + len, 20_000);
            prop_assert!((c.integral(a, a + len) - q).abs() < 1e-6);
        }

        #[test]
        fn continuous_and_bounded(c in curve(), t in -1.0f64..40.0) {
            let v = c.eval(t);
            prop_assert!((0.0..=c.peak_height).contains(&v));
            let eps = 1e-9;
            prop_assert!((c.eval(t + eps) - v).abs() < 1e-6 || c.plateau_start - c.peak < 1e-6);
        }
    }
}
