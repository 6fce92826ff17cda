use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid in the Lagrangian variable ξ.
///
/// The grid must strictly contain the interval [-1, 1] so that both
/// transition regions of the tail partition of unity lie inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    xi_min: f64,
    xi_max: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if !(xi_min < -1.0 && 1.0 < xi_max) {
            return Err(Error::validation(
                "grid",
                format!("grid [{xi_min}, {xi_max}] must strictly contain [-1, 1]"),
            ));
        }
        if n < 3 {
            return Err(Error::validation("grid.n", "need at least 3 nodes"));
        }
        let h = (xi_max - xi_min) / (n - 1) as f64;
        Ok(Grid { xi_min, xi_max, n, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// ξ coordinate of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        self.xi_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Midpoint of cell `i` (between nodes `i` and `i+1`).
    pub fn cell_mid(&self, i: usize) -> f64 {
        self.xi_min + (i as f64 + 0.5) * self.h
    }

    /// Trapezoid quadrature weights: h at interior nodes, h/2 at the ends.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.xi_min == other.xi_min && self.xi_max == other.xi_max && self.n == other.n
    }
}
