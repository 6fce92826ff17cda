//! Finite nonnegative Radon measures on the line: a purely atomic part plus
//! an absolutely continuous part with piecewise-linear, compactly supported
//! density.
//!
//! Density knots may repeat an x-coordinate to encode a jump, so piecewise
//! constant densities (squared slopes of a piecewise-linear profile) are
//! represented exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonMeasure {
    /// Atoms (position, mass) with strictly increasing positions and masses > 0.
    pub atoms: Vec<(f64, f64)>,
    /// Density knots (x, value); x nondecreasing, repeated x encodes a jump.
    /// The density vanishes at and outside the first and last knot.
    pub density_knots: Vec<(f64, f64)>,
    /// Prefix integrals of the density at each knot.
    #[serde(skip)]
    prefix: Vec<f64>,
}

impl RadonMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, density_knots: Vec<(f64, f64)>) -> Result<Self> {
        for w in atoms.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::validation("mu.atoms", "atom positions must strictly increase"));
            }
        }
        if atoms.iter().any(|(x, m)| !x.is_finite() || !(*m > 0.0)) {
            return Err(Error::validation("mu.atoms", "atom masses must be finite and positive"));
        }
        if !density_knots.is_empty() {
            if density_knots.len() < 2 {
                return Err(Error::validation("mu.density_knots", "need at least two knots"));
            }
            for w in density_knots.windows(2) {
                if !(w[1].0 >= w[0].0) {
                    return Err(Error::validation("mu.density_knots", "knot x must be nondecreasing"));
                }
            }
            if density_knots.iter().any(|(x, d)| !x.is_finite() || !(*d >= 0.0)) {
                return Err(Error::validation("mu.density_knots", "density must be finite and nonnegative"));
            }
            if density_knots[0].1 != 0.0 || density_knots[density_knots.len() - 1].1 != 0.0 {
                return Err(Error::validation(
                    "mu.density_knots",
                    "density must vanish at the first and last knot",
                ));
            }
        }
        let mut m = RadonMeasure { atoms, density_knots, prefix: Vec::new() };
        m.rebuild_prefix();
        Ok(m)
    }

    pub fn zero() -> Self {
        RadonMeasure { atoms: Vec::new(), density_knots: Vec::new(), prefix: Vec::new() }
    }

    pub fn single_atom(position: f64, mass: f64) -> Result<Self> {
        RadonMeasure::new(vec![(position, mass)], Vec::new())
    }

    /// Recomputes the prefix integrals (needed after deserialization).
    pub fn rebuild_prefix(&mut self) {
        let k = &self.density_knots;
        let mut prefix = Vec::with_capacity(k.len());
        let mut acc = 0.0;
        for i in 0..k.len() {
            if i > 0 {
                let (x0, d0) = k[i - 1];
                let (x1, d1) = k[i];
                acc += 0.5 * (d0 + d1) * (x1 - x0); // exact for linear density
            }
            prefix.push(acc);
        }
        self.prefix = prefix;
    }

    pub fn total_mass(&self) -> f64 {
        let atomic: f64 = self.atoms.iter().map(|(_, m)| m).sum();
        let ac = self.prefix.last().copied().unwrap_or(0.0);
        atomic + ac
    }

    /// Density value; at a jump knot the right limit is returned.
    pub fn density_at(&self, x: f64) -> f64 {
        let k = &self.density_knots;
        if k.is_empty() || x <= k[0].0 || x >= k[k.len() - 1].0 {
            return 0.0;
        }
        let idx = k.partition_point(|(xk, _)| *xk <= x) - 1;
        let (x0, d0) = k[idx];
        let (x1, d1) = k[idx + 1];
        if x1 == x0 {
            return d1;
        }
        d0 + (x - x0) * (d1 - d0) / (x1 - x0)
    }

    /// μ((-∞, x)): the open interval, so an atom sitting exactly at x is
    /// excluded.  Nondecreasing and left-continuous in x.
    pub fn cumulative(&self, x: f64) -> f64 {
        let atomic: f64 = self
            .atoms
            .iter()
            .take_while(|(p, _)| *p < x)
            .map(|(_, m)| m)
            .sum();
        atomic + self.density_integral(x)
    }

    fn density_integral(&self, x: f64) -> f64 {
        let k = &self.density_knots;
        if k.is_empty() || x <= k[0].0 {
            return 0.0;
        }
        if x >= k[k.len() - 1].0 {
            return self.prefix[k.len() - 1];
        }
        let idx = k.partition_point(|(xk, _)| *xk <= x) - 1;
        let (x0, d0) = k[idx];
        let dx_at = self.density_at(x);
        self.prefix[idx] + 0.5 * (d0 + dx_at) * (x - x0)
    }

    /// The monotone map G(x) = μ((-∞, x)) + x whose generalized inverse
    /// produces the characteristic coordinate.
    pub fn cumulative_plus_id(&self, x: f64) -> f64 {
        self.cumulative(x) + x
    }

    /// Smallest x carrying mass, if any.
    pub fn support_min(&self) -> Option<f64> {
        let a = self.atoms.first().map(|(p, _)| *p);
        let d = self.density_knots.first().map(|(x, _)| *x);
        match (a, d) {
            (Some(a), Some(d)) => Some(a.min(d)),
            (x, None) => x,
            (None, y) => y,
        }
    }

    pub fn support_max(&self) -> Option<f64> {
        let a = self.atoms.last().map(|(p, _)| *p);
        let d = self.density_knots.last().map(|(x, _)| *x);
        match (a, d) {
            (Some(a), Some(d)) => Some(a.max(d)),
            (x, None) => x,
            (None, y) => y,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density_knots.is_empty()
    }
}
