//! The two transforms between descriptions of a conservative state:
//! characteristics from an Eulerian pair (the generalized inverse of
//! μ((-∞,x)) + x) and the Eulerian pair reconstructed from characteristics
//! (push-forward of the cumulative-energy increments).

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::RadonMeasure;
use crate::pwl::PiecewiseLinear;
use crate::state::{bisect_increasing, EulerianState, LagrangianState, Tails, EPS_PLATEAU_FACTOR};

/// Builds the Lagrangian state of an Eulerian pair on the given grid.
///
/// Per node ξ the characteristic location is y(ξ) = sup{x : μ((-∞,x)) + x < ξ},
/// found by bisection on the exact cumulative; atoms of μ turn into exact
/// plateaus of y.  Then H = ξ - y and U = u(y).
pub fn to_lagrangian(state: &EulerianState, grid: &Grid) -> Result<LagrangianState> {
    let mu = &state.mu;
    let mass = mu.total_mass();

    // The data must fit strictly inside the grid: the ξ-interval occupied by
    // the support is [G(s_min), s_max + mass].
    if let (Some(smin), Some(smax)) = (state.support_min(), state.support_max()) {
        let xi_lo = mu.cumulative_plus_id(smin);
        let xi_hi = smax + mass;
        let margin = grid.h();
        if xi_lo < grid.xi_min() + margin || xi_hi > grid.xi_max() - margin {
            return Err(Error::DomainTooNarrow(format!(
                "support occupies xi in [{xi_lo}, {xi_hi}] on grid [{}, {}]",
                grid.xi_min(),
                grid.xi_max()
            )));
        }
    }

    let n = grid.n();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi = grid.node(i);
        let lo = xi - mass - 1.0;
        let hi = xi + 1.0;
        let mut yi = bisect_increasing(|x| mu.cumulative_plus_id(x), xi, lo, hi);
        if let Some(prev) = y.last().copied() {
            // Bisection is monotone up to one ulp; clamp exact inversions.
            if yi < prev {
                yi = prev;
            }
        }
        y.push(yi);
    }
    let h: Vec<f64> = (0..n).map(|i| grid.node(i) - y[i]).collect();
    let u: Vec<f64> = y.iter().map(|&x| state.u.eval(x)).collect();
    let tails = Tails {
        zeta_minus: 0.0,
        zeta_plus: -mass,
        u_minus: state.u.value_minus(),
        u_plus: state.u.value_plus(),
        h_plus: mass,
    };
    LagrangianState::new(grid.clone(), y, u, h, tails)
}

/// Reconstructs the Eulerian pair from a Lagrangian state.
///
/// Cells where y increases contribute density H_ξ/y_ξ on (y_i, y_{i+1});
/// maximal runs of plateau cells contribute one atom carrying the cumulative
/// energy picked up across the run.  The profile u interpolates the node
/// values (y_i, U_i) with plateau duplicates collapsed.
///
/// States satisfying the exact energy relation reconstruct to a compatible
/// pair (density equals the squared slope).  Relaxed states, e.g. exact data
/// resampled on a grid whose nodes miss a profile kink, are accepted too;
/// there the reconstructed density dominates the squared slope on the
/// affected cells and the pair is returned without the compatibility check.
pub fn to_eulerian(x: &LagrangianState) -> Result<EulerianState> {
    let report = x.validate();
    if !report.in_g() {
        return Err(Error::NotInF(format!(
            "energy relation defect {:.3e}, c = {:.3e}",
            report.relation_defect, report.c_estimate
        )));
    }
    let exact = report.in_f();
    let n = x.n();
    let eps = EPS_PLATEAU_FACTOR * x.grid.h();
    let mass_floor = 1e-14 * (1.0 + x.h_infinity().abs());

    let mut atoms: Vec<(f64, f64)> = Vec::new();
    // Density segments (x0, x1, d) in increasing order.
    let mut segments: Vec<(f64, f64, f64)> = Vec::new();
    let mut points: Vec<(f64, f64)> = vec![(x.y[0], x.u[0])];

    let mut i = 0;
    while i < n - 1 {
        let dy = x.y[i + 1] - x.y[i];
        if dy < eps {
            // Maximal plateau run starting at i.
            let start = i;
            let mut j = i;
            while j < n - 1 && x.y[j + 1] - x.y[j] < eps {
                j += 1;
            }
            let mass = x.h[j] - x.h[start];
            if mass > mass_floor {
                let pos = 0.5 * (x.y[start] + x.y[j]);
                atoms.push((pos, mass));
            }
            i = j;
        } else {
            // Increments at the level of a few ulps of the node values are
            // rounding noise from H = ξ - y, not energy; snapping them keeps
            // the reconstructed support tight (total mass moves by far less
            // than the conservation tolerance).
            let dh_raw = x.h[i + 1] - x.h[i];
            let noise = 4.0 * f64::EPSILON * (x.h[i].abs() + x.y[i].abs() + 1.0);
            let dh = if dh_raw.abs() <= noise { 0.0 } else { dh_raw };
            let d = dh / dy;
            if let Some(last) = segments.last_mut() {
                if last.1 == x.y[i] && (last.2 - d).abs() <= 1e-12 * (1.0 + d.abs()) {
                    last.1 = x.y[i + 1];
                } else {
                    segments.push((x.y[i], x.y[i + 1], d));
                }
            } else {
                segments.push((x.y[i], x.y[i + 1], d));
            }
            points.push((x.y[i + 1], x.u[i + 1]));
            i += 1;
        }
        if x.y[i] > points.last().unwrap().0 + eps {
            points.push((x.y[i], x.u[i]));
        }
    }

    let u = build_profile(points, x.tails);
    let mu = build_measure(atoms, segments)?;
    if exact {
        EulerianState::new(u, mu)
    } else {
        Ok(EulerianState::new_unchecked(u, mu))
    }
}

fn build_profile(mut points: Vec<(f64, f64)>, tails: Tails) -> PiecewiseLinear {
    // Collapse collinear interior points.
    let mut k: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        while k.len() >= 2 {
            let a = k[k.len() - 2];
            let b = k[k.len() - 1];
            let s1 = (b.1 - a.1) / (b.0 - a.0);
            let s2 = (p.1 - b.1) / (p.0 - b.0);
            if (s1 - s2).abs() <= 1e-12 * (1.0 + s1.abs()) {
                k.pop();
            } else {
                break;
            }
        }
        k.push(p);
    }
    // Trim flat leading/trailing segments: the function is constant beyond
    // its first and last kink anyway.
    while k.len() >= 2 && (k[0].1 - k[1].1).abs() <= 1e-14 * (1.0 + k[0].1.abs()) {
        k.remove(0);
    }
    while k.len() >= 2 {
        let m = k.len();
        if (k[m - 1].1 - k[m - 2].1).abs() <= 1e-14 * (1.0 + k[m - 1].1.abs()) {
            k.pop();
        } else {
            break;
        }
    }
    if k.len() == 1 {
        return PiecewiseLinear::constant(tails.u_minus);
    }
    PiecewiseLinear::new(k).expect("reconstructed knots are sorted")
}

fn build_measure(atoms: Vec<(f64, f64)>, segments: Vec<(f64, f64, f64)>) -> Result<RadonMeasure> {
    let mut knots: Vec<(f64, f64)> = Vec::new();
    for (x0, x1, d) in segments {
        if d <= 0.0 {
            continue;
        }
        match knots.last().copied() {
            Some((lx, lv)) if lx == x0 => {
                if (lv - d).abs() > 0.0 {
                    knots.push((x0, d)); // jump at the shared boundary
                }
            }
            Some(_) | None => {
                // Close the previous block and open a new one from zero.
                if let Some(&(lx, lv)) = knots.last() {
                    if lv != 0.0 {
                        knots.push((lx, 0.0));
                    }
                    debug_assert!(lx <= x0);
                }
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
    RadonMeasure::new(atoms, knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::RadonMeasure;
    use crate::pwl::PiecewiseLinear;

    fn grid(n: usize) -> Grid {
        Grid::new(-2.0, 4.0, n).unwrap()
    }

    /// Independent dense-scan oracle for the generalized inverse.
    fn y_scan(mu: &RadonMeasure, xi: f64, lo: f64, hi: f64) -> f64 {
        let m = 2_000_000;
        let mut best = lo;
        for j in 0..=m {
            let x = lo + (hi - lo) * j as f64 / m as f64;
            if mu.cumulative_plus_id(x) < xi {
                best = x;
            }
        }
        best
    }

    #[test]
    fn identity_data_maps_to_identity_state() {
        let g = grid(181);
        let x = to_lagrangian(&EulerianState::still(), &g).unwrap();
        for i in 0..g.n() {
            assert!((x.y[i] - g.node(i)).abs() < 1e-12);
            assert_eq!(x.u[i], 0.0);
            assert!(x.h[i].abs() < 1e-12);
        }
        assert!(x.validate().in_f0());
    }

    #[test]
    fn unit_atom_produces_exact_plateau() {
        let g = grid(181);
        let s = EulerianState::new(
            PiecewiseLinear::constant(0.0),
            RadonMeasure::single_atom(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let x = to_lagrangian(&s, &g).unwrap();
        for i in 0..g.n() {
            let xi = g.node(i);
            let expect = if xi <= 0.0 {
                xi
            } else if xi <= 1.0 {
                0.0
            } else {
                xi - 1.0
            };
            assert!(
                (x.y[i] - expect).abs() < 1e-12,
                "xi = {xi}: y = {} expect {expect}",
                x.y[i]
            );
            assert!((x.h[i] - (xi - expect)).abs() < 1e-12);
        }
        assert!(x.validate().in_f0());
    }

    #[test]
    fn generalized_inverse_matches_dense_scan() {
        let mu = RadonMeasure::new(
            vec![(-0.4, 0.5), (0.9, 0.25)],
            vec![(0.0, 0.0), (0.25, 1.2), (0.5, 0.0)],
        )
        .unwrap();
        for xi in [-1.3, -0.4, -0.1, 0.3, 0.6, 1.1, 1.9, 2.4] {
            let exact = bisect_increasing(|x| mu.cumulative_plus_id(x), xi, xi - 3.0, xi + 1.0);
            let scan = y_scan(&mu, xi, xi - 3.0, xi + 1.0);
            assert!(
                (exact - scan).abs() < 5e-6,
                "xi = {xi}: bisect {exact} vs scan {scan}"
            );
        }
    }

    fn breaking_state() -> EulerianState {
        let u = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, -1.0)]).unwrap();
        let mu = RadonMeasure::new(
            Vec::new(),
            vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)],
        )
        .unwrap();
        EulerianState::new(u, mu).unwrap()
    }

    #[test]
    fn steepening_profile_has_closed_form_characteristics() {
        let g = grid(301);
        let x = to_lagrangian(&breaking_state(), &g).unwrap();
        for i in 0..g.n() {
            let xi = g.node(i);
            let (ye, he, ue) = if xi <= 0.0 {
                (xi, 0.0, 0.0)
            } else if xi <= 2.0 {
                (0.5 * xi, 0.5 * xi, -0.5 * xi)
            } else {
                (xi - 1.0, 1.0, -1.0)
            };
            assert!((x.y[i] - ye).abs() < 1e-12, "y at xi = {xi}");
            assert!((x.h[i] - he).abs() < 1e-12, "H at xi = {xi}");
            assert!((x.u[i] - ue).abs() < 1e-12, "U at xi = {xi}");
        }
    }

    #[test]
    fn too_narrow_grid_is_rejected() {
        let g = Grid::new(-1.5, 1.5, 61).unwrap();
        assert!(matches!(
            to_lagrangian(&breaking_state(), &g),
            Err(Error::DomainTooNarrow(_))
        ));
    }

    #[test]
    fn identity_state_reconstructs_to_still() {
        let g = grid(101);
        let s = to_eulerian(&LagrangianState::identity(g)).unwrap();
        assert!(s.mu.is_zero());
        assert_eq!(s.u.eval(1.7), 0.0);
    }

    #[test]
    fn plateau_pushes_forward_to_atom() {
        let g = grid(181);
        let s0 = EulerianState::new(
            PiecewiseLinear::constant(0.0),
            RadonMeasure::single_atom(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let x = to_lagrangian(&s0, &g).unwrap();
        let s1 = to_eulerian(&x).unwrap();
        assert_eq!(s1.mu.atoms.len(), 1);
        let (pos, mass) = s1.mu.atoms[0];
        assert!(pos.abs() < 1e-12);
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(s1.mu.density_knots.is_empty());
    }

    #[test]
    fn pushforward_cumulative_matches_direct_cell_sum() {
        // Oracle from the definition of the push-forward: the mass below x is
        // the integral of H_xi over {xi : y(xi) < x}, accumulated cell by cell.
        let g = grid(301);
        let x = to_lagrangian(&breaking_state(), &g).unwrap();
        let s = to_eulerian(&x).unwrap();
        for target in [-0.6, 0.1, 0.3, 0.77, 1.4] {
            let mut oracle = 0.0;
            for i in 0..g.n() - 1 {
                let (y0, y1) = (x.y[i], x.y[i + 1]);
                let dh = x.h[i + 1] - x.h[i];
                if y1 <= target {
                    oracle += dh;
                } else if y0 < target {
                    oracle += dh * (target - y0) / (y1 - y0);
                }
            }
            let got = s.mu.cumulative(target);
            assert!(
                (got - oracle).abs() < 1e-10,
                "x = {target}: cumulative {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn roundtrip_recovers_breaking_state_at_nodes() {
        let g = grid(301);
        let s0 = breaking_state();
        let x = to_lagrangian(&s0, &g).unwrap();
        let s1 = to_eulerian(&x).unwrap();
        for i in 0..g.n() {
            let xi = x.y[i];
            assert!((s1.u.eval(xi) - s0.u.eval(xi)).abs() < 1e-10);
            assert!((s1.mu.cumulative(xi) - s0.mu.cumulative(xi)).abs() < 1e-10);
        }
        // Total pushed-forward mass equals the cumulative energy at +infinity.
        assert!((s1.mu.total_mass() - x.h_infinity()).abs() < 1e-12);
    }

    #[test]
    fn relation_violation_is_rejected_by_reconstruction() {
        let g = grid(61);
        let n = g.n();
        // U with a slope but no energy: U_ξ² > y_ξ H_ξ = 0.
        let u: Vec<f64> = (0..n).map(|i| 0.1 * (g.node(i) - g.xi_min())).collect();
        let u_plus = u[n - 1];
        let x = LagrangianState::new(
            g.clone(),
            g.nodes(),
            u,
            vec![0.0; n],
            Tails { zeta_minus: 0.0, zeta_plus: 0.0, u_minus: 0.0, u_plus, h_plus: 0.0 },
        )
        .unwrap();
        assert!(matches!(to_eulerian(&x), Err(Error::NotInF(_))));
    }

    #[test]
    fn resampled_kink_reconstructs_in_relaxed_mode() {
        // A grid whose nodes miss the profile kinks: the characteristic data
        // is only in the relaxed class, but the reconstruction still matches
        // the original profile and cumulative energy at the nodes.
        let g = Grid::new(-2.0, 4.0, 302).unwrap(); // 301 cells, kinks off-node
        let s0 = breaking_state();
        let x = to_lagrangian(&s0, &g).unwrap();
        let rep = x.validate();
        assert!(rep.in_g0() && !rep.in_f());
        let s1 = to_eulerian(&x).unwrap();
        for i in 0..g.n() {
            let pos = x.y[i];
            assert!((s1.u.eval(pos) - s0.u.eval(pos)).abs() < 1e-10);
            assert!((s1.mu.cumulative(pos) - s0.mu.cumulative(pos)).abs() < 1e-10);
        }
    }
}
