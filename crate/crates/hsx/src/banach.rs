//! Discrete realization of the asymptotically-constant function spaces.
//!
//! A function that tends to constants at ±∞ is stored as node samples on a
//! [`Grid`] together with its two tail constants.  Subtracting the tail
//! constants, blended by the partition of unity [`tail_weight_plus`] /
//! [`tail_weight_minus`], leaves a decaying interior part whose discrete
//! H¹ norm (trapezoid quadrature, central differences) plus the squared
//! tail constants gives the Hilbert norm used throughout the crate.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Tolerance for the agreement between end samples and tail constants.
pub const TOL_TAIL: f64 = 1e-9;

/// Smoothstep partition-of-unity weight selecting the +∞ tail.
///
/// 0 for ξ ≤ -1, 1 for ξ ≥ 1, and the C¹ cubic 3t² - 2t³ with t = (ξ+1)/2
/// in between.
pub fn tail_weight_plus(xi: f64) -> f64 {
    if xi <= -1.0 {
        0.0
    } else if xi >= 1.0 {
        1.0
    } else {
        let t = 0.5 * (xi + 1.0);
        t * t * (3.0 - 2.0 * t)
    }
}

/// Complementary weight selecting the -∞ tail: 1 - tail_weight_plus.
pub fn tail_weight_minus(xi: f64) -> f64 {
    1.0 - tail_weight_plus(xi)
}

/// Node samples of a function together with its values at ±∞.
///
/// The function is taken to be constant (equal to its tail values) outside
/// the grid, so the end samples must agree with the tails up to [`TOL_TAIL`].
#[derive(Clone, Debug, PartialEq)]
pub struct TailedFunction {
    pub samples: Vec<f64>,
    pub tail_minus: f64,
    pub tail_plus: f64,
}

impl TailedFunction {
    pub fn new(samples: Vec<f64>, tail_minus: f64, tail_plus: f64) -> Self {
        TailedFunction { samples, tail_minus, tail_plus }
    }

    pub fn zero(n: usize) -> Self {
        TailedFunction::new(vec![0.0; n], 0.0, 0.0)
    }

    fn check_compatible(&self, grid: &Grid) -> Result<()> {
        if self.samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a grid with {} nodes",
                self.samples.len(),
                grid.n()
            )));
        }
        let lo = (self.samples[0] - self.tail_minus).abs();
        let hi = (self.samples[grid.n() - 1] - self.tail_plus).abs();
        if lo > TOL_TAIL || hi > TOL_TAIL {
            return Err(Error::TailMismatch(format!(
                "end samples deviate from tails by ({lo:.3e}, {hi:.3e})"
            )));
        }
        Ok(())
    }

    /// Splits into (interior part, tail_plus, tail_minus); the interior part
    /// is samples minus the blended tails and decays at both grid ends.
    ///
    /// Fails with `TailMismatch` when the end samples disagree with the tail
    /// constants; use this for ingesting data that claims to be constant
    /// outside the grid.
    pub fn decompose(&self, grid: &Grid) -> Result<(Vec<f64>, f64, f64)> {
        self.check_compatible(grid)?;
        Ok(self.decompose_raw(grid))
    }

    /// As [`decompose`] but without the end-sample check.  Norms of solved
    /// quantities (relabeling directions decay exponentially in ξ and only
    /// approach their tails asymptotically) are taken on the representation
    /// as is.
    pub(crate) fn decompose_raw(&self, grid: &Grid) -> (Vec<f64>, f64, f64) {
        let a = self.tail_plus;
        let b = self.tail_minus;
        let bar = (0..grid.n())
            .map(|i| {
                let xi = grid.node(i);
                self.samples[i] - a * tail_weight_plus(xi) - b * tail_weight_minus(xi)
            })
            .collect();
        (bar, a, b)
    }

    /// Inverse of [`decompose`]: interior part plus blended tail constants.
    pub fn reconstruct(bar: &[f64], a: f64, b: f64, grid: &Grid) -> Self {
        let samples = (0..grid.n())
            .map(|i| {
                let xi = grid.node(i);
                bar[i] + a * tail_weight_plus(xi) + b * tail_weight_minus(xi)
            })
            .collect();
        TailedFunction::new(samples, b, a)
    }

    pub fn scale(&self, c: f64) -> Self {
        TailedFunction::new(
            self.samples.iter().map(|v| c * v).collect(),
            c * self.tail_minus,
            c * self.tail_plus,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        TailedFunction::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
            self.tail_minus - other.tail_minus,
            self.tail_plus - other.tail_plus,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        TailedFunction::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            self.tail_minus + other.tail_minus,
            self.tail_plus + other.tail_plus,
        )
    }
}

/// Central-difference derivative at nodes, one-sided at the two ends.
pub fn node_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    let n = samples.len();
    let mut d = vec![0.0; n];
    d[0] = (samples[1] - samples[0]) / h;
    d[n - 1] = (samples[n - 1] - samples[n - 2]) / h;
    for i in 1..n - 1 {
        d[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * h);
    }
    d
}

/// Forward-difference derivative per cell (length n-1); exact for data that
/// is piecewise linear between nodes.
pub fn cell_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    samples
        .windows(2)
        .map(|w| (w[1] - w[0]) / h)
        .collect()
}

fn trapezoid_dot(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    let n = grid.n();
    let h = grid.h();
    let mut s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for i in 1..n - 1 {
        s += a[i] * b[i];
    }
    s * h
}

/// Discrete H¹ inner product of two decaying node arrays.
pub fn h1_inner(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    let da = node_derivative(a, grid.h());
    let db = node_derivative(b, grid.h());
    trapezoid_dot(a, b, grid) + trapezoid_dot(&da, &db, grid)
}

/// Discrete H¹ norm squared of a decaying node array.
pub fn h1_norm_sq(bar: &[f64], grid: &Grid) -> f64 {
    h1_inner(bar, bar, grid)
}

/// A tangent or state triple (ζ-component, U-component, H-component).
///
/// The first two components carry two tail constants each; the H component
/// has its -∞ tail pinned to zero (cumulative energy vanishes at -∞) and
/// carries only the +∞ constant.
#[derive(Clone, Debug, PartialEq)]
pub struct BanachTriple {
    pub zeta: TailedFunction,
    pub u_comp: TailedFunction,
    pub h_comp: TailedFunction,
}

impl BanachTriple {
    pub fn new(zeta: TailedFunction, u_comp: TailedFunction, h_comp: TailedFunction) -> Result<Self> {
        if h_comp.tail_minus != 0.0 {
            return Err(Error::validation(
                "h_comp.tail_minus",
                "the cumulative-energy component must vanish at -infinity",
            ));
        }
        Ok(BanachTriple { zeta, u_comp, h_comp })
    }

    pub fn zero(n: usize) -> Self {
        BanachTriple {
            zeta: TailedFunction::zero(n),
            u_comp: TailedFunction::zero(n),
            h_comp: TailedFunction::zero(n),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        BanachTriple {
            zeta: self.zeta.scale(c),
            u_comp: self.u_comp.scale(c),
            h_comp: self.h_comp.scale(c),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        BanachTriple {
            zeta: self.zeta.sub(&other.zeta),
            u_comp: self.u_comp.sub(&other.u_comp),
            h_comp: self.h_comp.sub(&other.h_comp),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        BanachTriple {
            zeta: self.zeta.add(&other.zeta),
            u_comp: self.u_comp.add(&other.u_comp),
            h_comp: self.h_comp.add(&other.h_comp),
        }
    }

    /// Largest absolute node sample over the three components.
    pub fn sup_norm(&self) -> f64 {
        [&self.zeta, &self.u_comp, &self.h_comp]
            .iter()
            .flat_map(|f| f.samples.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Hilbert inner product of two triples: per component, the discrete H¹
/// product of the interior parts plus the products of the tail constants.
pub fn triple_inner(x: &BanachTriple, y: &BanachTriple, grid: &Grid) -> Result<f64> {
    let mut total = 0.0;
    for (fx, fy) in [
        (&x.zeta, &y.zeta),
        (&x.u_comp, &y.u_comp),
        (&x.h_comp, &y.h_comp),
    ] {
        if fx.samples.len() != grid.n() || fy.samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "({}, {}) samples on a grid with {} nodes",
                fx.samples.len(),
                fy.samples.len(),
                grid.n()
            )));
        }
        let (bar_x, ax, bx) = fx.decompose_raw(grid);
        let (bar_y, ay, by) = fy.decompose_raw(grid);
        total += h1_inner(&bar_x, &bar_y, grid) + ax * ay + bx * by;
    }
    Ok(total)
}

/// Hilbert norm of a triple.
pub fn triple_norm(x: &BanachTriple, grid: &Grid) -> Result<f64> {
    Ok(triple_inner(x, x, grid)?.max(0.0).sqrt())
}
