//! Eulerian states (u, μ), Lagrangian states X = (y, U, H), the class
//! predicates that make them admissible, relabelings, and the projection
//! onto the normalized slice y + H = id.

use serde::{Deserialize, Serialize};

use crate::banach::{cell_derivative, BanachTriple, TailedFunction};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::RadonMeasure;
use crate::pwl::{PiecewiseLinear, Relabeling};

/// Tolerance for nonnegativity of the discrete derivatives.
pub const TOL_MONO: f64 = 1e-12;
/// Relative tolerance for the energy relation y_ξ H_ξ = U_ξ².
pub const TOL_REL: f64 = 1e-8;
/// Tolerance for membership in the normalized slice y + H = id.
pub const TOL_ID: f64 = 1e-9;
/// Plateau threshold factor: cell increments below this multiple of h are
/// treated as exact plateaus (atoms) in the Eulerian reconstruction.
pub const EPS_PLATEAU_FACTOR: f64 = 1e-10;

/// A wave profile paired with its energy measure.  The absolutely continuous
/// part of the measure must equal the squared slope of the profile.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerianState {
    pub u: PiecewiseLinear,
    pub mu: RadonMeasure,
}

impl EulerianState {
    pub fn new(u: PiecewiseLinear, mu: RadonMeasure) -> Result<Self> {
        check_compatibility(&u, &mu)?;
        Ok(EulerianState { u, mu })
    }

    /// Constructor without the density check, for pairs reconstructed from
    /// relaxed characteristic data whose density may strictly dominate the
    /// squared slope on resampled cells.
    pub(crate) fn new_unchecked(u: PiecewiseLinear, mu: RadonMeasure) -> Self {
        EulerianState { u, mu }
    }

    /// The canonical lift u ↦ (u, u_x² dx) of a profile with no concentrated
    /// energy: the density is the squared slope, exact segment by segment.
    pub fn from_profile(u: PiecewiseLinear) -> Result<Self> {
        let mut knots: Vec<(f64, f64)> = Vec::new();
        let k = u.knots();
        for (seg, s) in u.slopes().into_iter().enumerate() {
            let d = s * s;
            let (x0, x1) = (k[seg].0, k[seg + 1].0);
            if d == 0.0 {
                if let Some(&(lx, lv)) = knots.last() {
                    if lv != 0.0 {
                        knots.push((lx, 0.0));
                    }
                }
                continue;
            }
            match knots.last().copied() {
                Some((lx, lv)) if lx == x0 => {
                    if lv != d {
                        knots.push((x0, d));
                    }
                }
                _ => {
                    knots.push((x0, 0.0));
                    knots.push((x0, d));
                }
            }
            knots.push((x1, d));
        }
        if let Some(&(lx, lv)) = knots.last() {
            if lv != 0.0 {
                knots.push((lx, 0.0));
            }
        }
        let mu = RadonMeasure::new(Vec::new(), knots)?;
        EulerianState::new(u, mu)
    }

    /// u ≡ 0 with no energy.
    pub fn still() -> Self {
        EulerianState {
            u: PiecewiseLinear::constant(0.0),
            mu: RadonMeasure::zero(),
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.mu.total_mass()
    }

    /// Smallest x where either the profile varies or the measure has mass.
    pub fn support_min(&self) -> Option<f64> {
        let uk = if self.u.knots().len() > 1 {
            Some(self.u.knots()[0].0)
        } else {
            None
        };
        match (uk, self.mu.support_min()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (x, None) => x,
            (None, y) => y,
        }
    }

    pub fn support_max(&self) -> Option<f64> {
        let uk = if self.u.knots().len() > 1 {
            Some(self.u.knots()[self.u.knots().len() - 1].0)
        } else {
            None
        };
        match (uk, self.mu.support_max()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

/// Checks μ_ac = u_x² dx segment by segment: on every interval between
/// consecutive breakpoints (u knots and density knots combined) the density
/// is linear and the squared slope constant, so comparing at the midpoint is
/// exact up to rounding.
fn check_compatibility(u: &PiecewiseLinear, mu: &RadonMeasure) -> Result<()> {
    let mut breaks: Vec<f64> = u.knots().iter().map(|(x, _)| *x).collect();
    breaks.extend(mu.density_knots.iter().map(|(x, _)| *x));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    if breaks.len() < 2 {
        if mu.density_knots.is_empty() {
            return Ok(());
        }
    }
    // Extend one segment beyond each end to catch density outside u's span.
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    if let Some(first) = breaks.first() {
        pts.push(first - 1.0);
    }
    pts.extend(breaks.iter().copied());
    if let Some(last) = breaks.last().copied() {
        pts.push(last + 1.0);
    }
    let slopes_of = |x: f64| {
        let k = u.knots();
        if k.len() < 2 || x <= k[0].0 || x >= k[k.len() - 1].0 {
            return 0.0;
        }
        let idx = k.partition_point(|(xk, _)| *xk <= x) - 1;
        (k[idx + 1].1 - k[idx].1) / (k[idx + 1].0 - k[idx].0)
    };
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let s = slopes_of(mid);
        let d = mu.density_at(mid);
        let defect = (d - s * s).abs();
        if defect > 1e-6 * (1.0 + s * s + d) {
            return Err(Error::NotInD(format!(
                "density {d:.6e} vs squared slope {:.6e} on ({}, {})",
                s * s,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

/// Asymptotic constants of a Lagrangian state; the -∞ tail of H is zero by
/// convention and not stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub zeta_minus: f64,
    pub zeta_plus: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub h_plus: f64,
}

impl Tails {
    pub fn identity() -> Self {
        Tails { zeta_minus: 0.0, zeta_plus: 0.0, u_minus: 0.0, u_plus: 0.0, h_plus: 0.0 }
    }
}

/// Grid-sampled characteristic triple X = (y, U, H) with tail constants.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianState {
    pub grid: Grid,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub tails: Tails,
}

impl LagrangianState {
    pub fn new(grid: Grid, y: Vec<f64>, u: Vec<f64>, h: Vec<f64>, tails: Tails) -> Result<Self> {
        let n = grid.n();
        if y.len() != n || u.len() != n || h.len() != n {
            return Err(Error::GridMismatch(format!(
                "component lengths ({}, {}, {}) vs {n} nodes",
                y.len(),
                u.len(),
                h.len()
            )));
        }
        Ok(LagrangianState { grid, y, u, h, tails })
    }

    /// The identity state (y, U, H) = (ξ, 0, 0).
    pub fn identity(grid: Grid) -> Self {
        let y = grid.nodes();
        let n = grid.n();
        LagrangianState { grid, y, u: vec![0.0; n], h: vec![0.0; n], tails: Tails::identity() }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn zeta(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.y[i] - self.grid.node(i)).collect()
    }

    pub fn h_infinity(&self) -> f64 {
        self.tails.h_plus
    }

    /// Cell (forward-difference) derivatives; exact for data that is
    /// piecewise linear between nodes.
    pub fn cell_derivatives(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.grid.h();
        (
            cell_derivative(&self.y, h),
            cell_derivative(&self.u, h),
            cell_derivative(&self.h, h),
        )
    }

    /// Evaluates y at an arbitrary ξ, extending by the constant-ζ tails.
    pub fn eval_y(&self, xi: f64) -> f64 {
        if xi <= self.grid.xi_min() {
            return xi + self.tails.zeta_minus;
        }
        if xi >= self.grid.xi_max() {
            return xi + self.tails.zeta_plus;
        }
        self.interp(&self.y, xi)
    }

    pub fn eval_u(&self, xi: f64) -> f64 {
        if xi <= self.grid.xi_min() {
            return self.tails.u_minus;
        }
        if xi >= self.grid.xi_max() {
            return self.tails.u_plus;
        }
        self.interp(&self.u, xi)
    }

    pub fn eval_h(&self, xi: f64) -> f64 {
        if xi <= self.grid.xi_min() {
            return 0.0;
        }
        if xi >= self.grid.xi_max() {
            return self.tails.h_plus;
        }
        self.interp(&self.h, xi)
    }

    fn interp(&self, samples: &[f64], xi: f64) -> f64 {
        let t = (xi - self.grid.xi_min()) / self.grid.h();
        let i = (t.floor() as usize).min(self.n() - 2);
        let frac = t - i as f64;
        samples[i] + frac * (samples[i + 1] - samples[i])
    }

    /// Difference of two states on the same grid as a tangent triple.
    pub fn sub(&self, other: &LagrangianState) -> Result<BanachTriple> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("state difference across grids".into()));
        }
        let zeta = TailedFunction::new(
            // y - y' equals ζ - ζ' since the identity part cancels.
            self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
            self.tails.zeta_minus - other.tails.zeta_minus,
            self.tails.zeta_plus - other.tails.zeta_plus,
        );
        let u_comp = TailedFunction::new(
            self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            self.tails.u_minus - other.tails.u_minus,
            self.tails.u_plus - other.tails.u_plus,
        );
        let h_comp = TailedFunction::new(
            self.h.iter().zip(&other.h).map(|(a, b)| a - b).collect(),
            0.0,
            self.tails.h_plus - other.tails.h_plus,
        );
        BanachTriple::new(zeta, u_comp, h_comp)
    }

    /// Convex combination (1-s)·self + s·other, nodewise and in the tails.
    pub fn lerp(&self, other: &LagrangianState, s: f64) -> Result<LagrangianState> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("state interpolation across grids".into()));
        }
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - s) * x + s * y).collect()
        };
        Ok(LagrangianState {
            grid: self.grid.clone(),
            y: mix(&self.y, &other.y),
            u: mix(&self.u, &other.u),
            h: mix(&self.h, &other.h),
            tails: Tails {
                zeta_minus: (1.0 - s) * self.tails.zeta_minus + s * other.tails.zeta_minus,
                zeta_plus: (1.0 - s) * self.tails.zeta_plus + s * other.tails.zeta_plus,
                u_minus: (1.0 - s) * self.tails.u_minus + s * other.tails.u_minus,
                u_plus: (1.0 - s) * self.tails.u_plus + s * other.tails.u_plus,
                h_plus: (1.0 - s) * self.tails.h_plus + s * other.tails.h_plus,
            },
        })
    }

    /// Number of plateau cells (y-increment below the plateau threshold);
    /// nonzero counts indicate concentrated energy at this instant.
    pub fn plateau_cells(&self) -> usize {
        let eps = EPS_PLATEAU_FACTOR * self.grid.h();
        self.y.windows(2).filter(|w| w[1] - w[0] < eps).count()
    }

    pub fn validate(&self) -> ClassReport {
        let (dy, du, dh) = self.cell_derivatives();
        let m = dy.len();
        let mut monotone = true;
        let mut relation_exact = true;
        let mut relation_dominates = true;
        let mut c_estimate = f64::INFINITY;
        let mut relation_defect = 0.0_f64;
        for i in 0..m {
            if dy[i] < -TOL_MONO || dh[i] < -TOL_MONO {
                monotone = false;
            }
            let sum = dy[i] + dh[i];
            c_estimate = c_estimate.min(sum);
            let defect = dy[i] * dh[i] - du[i] * du[i];
            let tol = TOL_REL * sum * sum;
            relation_defect = relation_defect.max(defect.abs());
            if defect.abs() > tol {
                relation_exact = false;
            }
            if defect < -tol {
                relation_dominates = false;
            }
        }
        if c_estimate <= 0.0 {
            monotone = false;
        }

        // Normalized slice: y + H agrees with the identity at every node and
        // in the tails.
        let mut identity_defect = 0.0_f64;
        for i in 0..self.n() {
            identity_defect =
                identity_defect.max((self.y[i] + self.h[i] - self.grid.node(i)).abs());
        }
        identity_defect = identity_defect
            .max(self.tails.zeta_minus.abs())
            .max((self.tails.zeta_plus + self.tails.h_plus).abs());
        let normalized = identity_defect <= TOL_ID;

        // W^{1,inf} size of w = y + H relative to the identity, plus the same
        // for its inverse ((w^{-1})' - 1 = (1 - w')/w' on each cell).
        let mut sup_dev = self.tails.zeta_minus.abs().max((self.tails.zeta_plus + self.tails.h_plus).abs());
        for i in 0..self.n() {
            sup_dev = sup_dev.max((self.y[i] + self.h[i] - self.grid.node(i)).abs());
        }
        let mut sup_slope = 0.0_f64;
        let mut sup_inv_slope = 0.0_f64;
        let mut invertible = true;
        for i in 0..m {
            let w = dy[i] + dh[i];
            sup_slope = sup_slope.max((w - 1.0).abs());
            if w <= 0.0 {
                invertible = false;
            } else {
                sup_inv_slope = sup_inv_slope.max(((1.0 - w) / w).abs());
            }
        }
        let alpha_estimate = if invertible {
            sup_dev.max(sup_slope) + sup_dev.max(sup_inv_slope)
        } else {
            f64::INFINITY
        };

        ClassReport {
            monotone,
            relation_exact,
            relation_dominates,
            normalized,
            alpha_estimate,
            c_estimate,
            relation_defect,
            identity_defect,
        }
    }
}

/// Discrete admissibility report for a Lagrangian state.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassReport {
    /// y_ξ ≥ 0 and H_ξ ≥ 0 with y_ξ + H_ξ bounded away from zero.
    pub monotone: bool,
    /// |y_ξ H_ξ - U_ξ²| within tolerance on every cell.
    pub relation_exact: bool,
    /// y_ξ H_ξ ≥ U_ξ² up to tolerance on every cell.
    pub relation_dominates: bool,
    /// y + H equals the identity at every node and in the tails.
    pub normalized: bool,
    /// W^{1,∞} size of y + H - id plus that of its inverse.
    pub alpha_estimate: f64,
    /// min over cells of y_ξ + H_ξ.
    pub c_estimate: f64,
    /// max over cells of |y_ξ H_ξ - U_ξ²|.
    pub relation_defect: f64,
    /// max deviation of y + H from the identity.
    pub identity_defect: f64,
}

impl ClassReport {
    /// Exact energy relation: conservative characteristic data.
    pub fn in_f(&self) -> bool {
        self.monotone && self.relation_exact
    }

    /// Relaxed relation y_ξ H_ξ ≥ U_ξ².
    pub fn in_g(&self) -> bool {
        self.monotone && self.relation_dominates
    }

    pub fn in_f0(&self) -> bool {
        self.in_f() && self.normalized
    }

    pub fn in_g0(&self) -> bool {
        self.in_g() && self.normalized
    }
}

/// Componentwise composition X ∘ f by piecewise-linear interpolation.
///
/// The relabeling acts as the identity outside its knots, so the tail
/// constants are unchanged.
pub fn relabel(x: &LagrangianState, f: &Relabeling) -> LagrangianState {
    let n = x.n();
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let eta = f.eval(x.grid.node(i));
        y.push(x.eval_y(eta));
        u.push(x.eval_u(eta));
        h.push(x.eval_h(eta));
    }
    LagrangianState { grid: x.grid.clone(), y, u, h, tails: x.tails }
}

/// Projects onto the normalized slice by relabeling with (y + H)^{-1},
/// computed per node by bisection on the piecewise-linear w = y + H.
///
/// The returned state satisfies y + H = id exactly at the nodes because H is
/// rebuilt as ξ - y after the inversion.
pub fn normalize(x: &LagrangianState) -> Result<LagrangianState> {
    let (dy, _, dh) = x.cell_derivatives();
    let min_w = dy
        .iter()
        .zip(&dh)
        .map(|(a, b)| a + b)
        .fold(f64::INFINITY, f64::min);
    if min_w <= 1e-14 {
        return Err(Error::NotInvertible(format!(
            "y + H has a cell slope of {min_w:.3e}"
        )));
    }
    let n = x.n();
    let w_at = |xi: f64| -> f64 {
        if xi <= x.grid.xi_min() {
            xi + x.tails.zeta_minus
        } else if xi >= x.grid.xi_max() {
            xi + x.tails.zeta_plus + x.tails.h_plus
        } else {
            x.interp(&x.y, xi) + x.interp(&x.h, xi)
        }
    };
    let dev = x
        .zeta()
        .iter()
        .zip(&x.h)
        .map(|(z, hh)| (z + hh).abs())
        .fold(0.0_f64, f64::max)
        .max(x.tails.zeta_minus.abs())
        .max((x.tails.zeta_plus + x.tails.h_plus).abs());
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.grid.node(i);
        let eta = bisect_increasing(|t| w_at(t), xi, xi - dev - 1.0, xi + dev + 1.0);
        let yi = x.eval_y(eta);
        y.push(yi);
        u.push(x.eval_u(eta));
        h.push(xi - yi);
    }
    let tails = Tails {
        zeta_minus: 0.0,
        zeta_plus: -x.tails.h_plus,
        u_minus: x.tails.u_minus,
        u_plus: x.tails.u_plus,
        h_plus: x.tails.h_plus,
    };
    LagrangianState::new(x.grid.clone(), y, u, h, tails)
}

/// Solves for sup{t : g(t) < target} with g nondecreasing, by bisection down
/// to adjacent floating-point numbers.  When g crosses the target exactly
/// the supremum is the crossing point itself, so the upper end is returned
/// in that case; this keeps plateau endpoints and identity regions exact.
pub fn bisect_increasing(g: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(g(lo) < target, "left bracket must satisfy g(lo) < target");
    debug_assert!(g(hi) >= target, "right bracket must satisfy g(hi) >= target");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(hi) == target {
        hi
    } else {
        lo
    }
}
