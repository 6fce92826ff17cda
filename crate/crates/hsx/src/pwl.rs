//! Continuous piecewise-linear functions on the real line, constant outside
//! their knot span.  Used for the wave profile u and for relabeling maps.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    /// Knots (x, value) with strictly increasing x; at least one knot.
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::validation("knots", "need at least one knot"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::validation(
                    "knots",
                    format!("knot x-coordinates must strictly increase ({} !< {})", w[0].0, w[1].0),
                ));
            }
        }
        if knots.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::validation("knots", "knots must be finite"));
        }
        Ok(PiecewiseLinear { knots })
    }

    /// The constant function with a single anchor knot at x = 0.
    pub fn constant(v: f64) -> Self {
        PiecewiseLinear { knots: vec![(0.0, v)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn value_minus(&self) -> f64 {
        self.knots[0].1
    }

    pub fn value_plus(&self) -> f64 {
        self.knots[self.knots.len() - 1].1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        // Last knot with coordinate <= x.
        let idx = k.partition_point(|(xk, _)| *xk <= x) - 1;
        let (x0, v0) = k[idx];
        let (x1, v1) = k[idx + 1];
        v0 + (x - x0) * (v1 - v0) / (x1 - x0)
    }

    /// Slopes between consecutive knots (empty for a constant).
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Steepest descending slope, 0 when the function is nondecreasing.
    pub fn steepest_negative_slope(&self) -> f64 {
        self.slopes().into_iter().fold(0.0_f64, f64::min)
    }
}

/// A relabeling map: strictly increasing piecewise-linear homeomorphism with
/// f - id compactly supported, acting as the identity outside its knots.
#[derive(Clone, Debug)]
pub struct Relabeling {
    f: PiecewiseLinear,
    alpha: f64,
}

impl Relabeling {
    /// Validates strict monotonicity and that f equals the identity at (and
    /// hence beyond) its first and last knots.
    pub fn new(f: PiecewiseLinear) -> Result<Self> {
        let slopes = f.slopes();
        if slopes.iter().any(|s| *s <= 0.0) {
            return Err(Error::NotMonotone(format!(
                "minimum slope {:.3e}",
                slopes.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        let k = f.knots();
        let first_dev = (k[0].1 - k[0].0).abs();
        let last_dev = (k[k.len() - 1].1 - k[k.len() - 1].0).abs();
        if k.len() > 1 && (first_dev > 1e-12 || last_dev > 1e-12) {
            return Err(Error::validation(
                "relabeling",
                "f - id must vanish at the first and last knots",
            ));
        }
        // W^{1,inf} size of f - id and of its inverse.  |f^{-1}(x) - x| takes
        // the same values as |f(xi) - xi|, and (f^{-1})' - 1 = (1 - f')/f'.
        let sup_dev = k.iter().map(|(x, v)| (v - x).abs()).fold(0.0_f64, f64::max);
        let sup_slope_dev = slopes.iter().map(|s| (s - 1.0).abs()).fold(0.0_f64, f64::max);
        let sup_inv_slope_dev = slopes
            .iter()
            .map(|s| ((1.0 - s) / s).abs())
            .fold(0.0_f64, f64::max);
        let alpha = sup_dev.max(sup_slope_dev) + sup_dev.max(sup_inv_slope_dev);
        Ok(Relabeling { f, alpha })
    }

    pub fn identity() -> Self {
        Relabeling {
            f: PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap(),
            alpha: 0.0,
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let k = self.f.knots();
        if k.len() == 1 || xi <= k[0].0 || xi >= k[k.len() - 1].0 {
            return xi; // identity outside the support of f - id
        }
        self.f.eval(xi)
    }

    /// Inverse map, solved segment by segment (slopes are strictly positive).
    pub fn eval_inverse(&self, x: f64) -> f64 {
        let k = self.f.knots();
        if k.len() == 1 || x <= k[0].1 || x >= k[k.len() - 1].1 {
            return x;
        }
        let idx = k.partition_point(|(_, v)| *v <= x) - 1;
        let (x0, v0) = k[idx];
        let (x1, v1) = k[idx + 1];
        x0 + (x - v0) * (x1 - x0) / (v1 - v0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inner(&self) -> &PiecewiseLinear {
        &self.f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let f = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, -1.0)]).unwrap();
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(0.5), -0.5);
        assert_eq!(f.eval(2.0), -1.0);
        assert_eq!(f.steepest_negative_slope(), -1.0);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn relabeling_requires_positive_slopes() {
        let flat = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 2.0)]).unwrap();
        assert!(matches!(Relabeling::new(flat), Err(Error::NotMonotone(_))));
    }

    #[test]
    fn relabeling_inverse_roundtrip() {
        let f = PiecewiseLinear::new(vec![(-1.0, -1.0), (0.0, 0.4), (2.0, 2.0)]).unwrap();
        let r = Relabeling::new(f).unwrap();
        for xi in [-5.0, -0.9, -0.3, 0.1, 0.8, 1.9, 4.0] {
            let x = r.eval(xi);
            assert!((r.eval_inverse(x) - xi).abs() < 1e-12);
        }
        assert!(r.alpha() > 0.0);
    }
}
