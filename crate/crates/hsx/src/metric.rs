//! Path-length metric on the normalized slice.
//!
//! The distance between two normalized states is the infimum over connecting
//! paths of the integrated quotient seminorm of the path tangent.  The
//! infimum is never attained numerically; this module produces certified
//! upper bounds: the straight segment (valid because the normalized class is
//! convex) refined by coordinate descent over interior control points, with
//! Gauss-Legendre quadrature of the seminorm along each segment.

use rayon::prelude::*;
use serde::Serialize;

use crate::banach::triple_norm;
use crate::error::{Error, Result};
use crate::galerkin::{quotient_seminorm, split_tangent};
use crate::grid::Grid;
use crate::state::{EulerianState, LagrangianState};
use crate::transform::to_lagrangian;

/// Piecewise-straight path through normalized control states.
#[derive(Clone, Debug)]
pub struct CurvePath {
    pub controls: Vec<LagrangianState>,
    /// Gauss-Legendre points per segment (1 = midpoint rule).
    pub quad_points: usize,
}

/// Refinement budget for the distance upper bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefineBudget {
    /// Maximum number of interior control points (0 = straight segment only).
    pub interior_controls: usize,
    /// Gauss-Legendre points per segment.
    pub quad_points: usize,
}

impl Default for RefineBudget {
    fn default() -> Self {
        RefineBudget { interior_controls: 0, quad_points: 3 }
    }
}

impl RefineBudget {
    pub fn straight() -> Self {
        RefineBudget::default()
    }

    pub fn with_controls(interior_controls: usize) -> Self {
        RefineBudget { interior_controls, quad_points: 3 }
    }
}

/// Gauss-Legendre nodes and weights on (0, 1); weights sum to 1.
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    assert!(q >= 1);
    let mut out = Vec::with_capacity(q);
    for i in 0..q {
        // Newton iteration on the Legendre polynomial from the Chebyshev guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    if q == 1 {
        return (x, 1.0);
    }
    let dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn check_normalized(x: &LagrangianState, what: &str) -> Result<()> {
    let rep = x.validate();
    if !rep.in_g0() {
        return Err(Error::NotInG0(format!(
            "{what}: identity defect {:.3e}, relation defect {:.3e}, monotone {}",
            rep.identity_defect, rep.relation_defect, rep.monotone
        )));
    }
    Ok(())
}

/// Integrated quotient seminorm of the path tangent.
///
/// Each segment has constant tangent (difference of its endpoints); the
/// integrand is the seminorm of that tangent at the interpolated state,
/// integrated by Gauss-Legendre quadrature.
pub fn path_length(path: &CurvePath) -> Result<f64> {
    if path.controls.len() < 2 {
        return Err(Error::validation("path", "need at least two controls"));
    }
    for (k, c) in path.controls.iter().enumerate() {
        check_normalized(c, &format!("control {k}"))?;
    }
    let rule = gauss_legendre(path.quad_points.max(1));
    let mut total = 0.0;
    for seg in path.controls.windows(2) {
        total += segment_length(&seg[0], &seg[1], &rule)?;
    }
    Ok(total)
}

fn segment_length(
    a: &LagrangianState,
    b: &LagrangianState,
    rule: &[(f64, f64)],
) -> Result<f64> {
    let tangent = b.sub(a)?;
    let mut acc = 0.0;
    for &(sigma, w) in rule {
        let state = a.lerp(b, sigma)?;
        acc += w * quotient_seminorm(&state, &tangent)?;
    }
    Ok(acc)
}

/// A certified upper bound for the path distance with its witnessing path.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub d_upper: f64,
    pub path: CurvePath,
}

/// Upper bound on the path distance between two normalized states.
///
/// Starts from the straight segment, then refines by doubling the segment
/// count (interior controls 0, 1, 3, 7, ... up to the budget) and running
/// coordinate descent over the interior controls; the reported value is the
/// minimum over all evaluated paths, so it is nonincreasing in the budget.
pub fn distance_upper(
    x0: &LagrangianState,
    x1: &LagrangianState,
    budget: &RefineBudget,
) -> Result<DistanceResult> {
    check_normalized(x0, "endpoint 0")?;
    check_normalized(x1, "endpoint 1")?;
    if !x0.grid.same_as(&x1.grid) {
        return Err(Error::GridMismatch("distance endpoints on different grids".into()));
    }
    let rule = gauss_legendre(budget.quad_points.max(1));

    let mut best_path = CurvePath {
        controls: vec![x0.clone(), x1.clone()],
        quad_points: budget.quad_points,
    };
    let mut best = segment_length(x0, x1, &rule)?;

    let mut controls = vec![x0.clone(), x1.clone()];
    while controls.len() - 2 < budget.interior_controls {
        controls = subdivide(&controls)?;
        if controls.len() - 2 > budget.interior_controls {
            break;
        }
        optimize_controls(&mut controls, &rule)?;
        let candidate = CurvePath { controls: controls.clone(), quad_points: budget.quad_points };
        let value = path_length(&candidate)?;
        if value < best {
            best = value;
            best_path = candidate;
        }
    }
    Ok(DistanceResult { d_upper: best, path: best_path })
}

fn subdivide(controls: &[LagrangianState]) -> Result<Vec<LagrangianState>> {
    let mut out = Vec::with_capacity(controls.len() * 2 - 1);
    for w in controls.windows(2) {
        out.push(w[0].clone());
        out.push(w[0].lerp(&w[1], 0.5)?);
    }
    out.push(controls[controls.len() - 1].clone());
    Ok(out)
}

/// One-dimensional search: coarse scan then golden-section refinement
/// between the neighbours of the best sample.
fn line_search(mut eval: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    const COARSE: usize = 7;
    let mut best_t = 0.0;
    let mut best_v = eval(0.0)?;
    let mut samples = Vec::with_capacity(COARSE + 1);
    samples.push((0.0, best_v));
    for k in 0..=COARSE {
        let t = lo + (hi - lo) * k as f64 / COARSE as f64;
        if t == 0.0 {
            continue;
        }
        let v = eval(t)?;
        samples.push((t, v));
        if v < best_v {
            best_v = v;
            best_t = t;
        }
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let idx = samples.iter().position(|&(t, _)| t == best_t).unwrap();
    let mut a = if idx == 0 { samples[0].0 } else { samples[idx - 1].0 };
    let mut b = if idx + 1 == samples.len() { samples[idx].0 } else { samples[idx + 1].0 };
    let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
    for _ in 0..12 {
        let m1 = a + phi * (b - a);
        let m2 = b - phi * (b - a);
        let v1 = eval(m1)?;
        let v2 = eval(m2)?;
        if v1 < v2 {
            b = m2;
        } else {
            a = m1;
        }
        let mid = 0.5 * (a + b);
        let vm = eval(mid)?;
        if vm < best_v {
            best_v = vm;
            best_t = mid;
        }
    }
    Ok((best_t, best_v))
}

/// Slice-preserving perturbation of one control: y moves by θ·w, U by θ·v
/// and H is rebuilt as id - y, so the normalized identity is exact.
fn perturbed(
    base: &LagrangianState,
    w: &[f64],
    v: &[f64],
    theta: f64,
) -> LagrangianState {
    let n = base.n();
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let yi = base.y[i] + theta * w[i];
        y.push(yi);
        u.push(base.u[i] + theta * v[i]);
        h.push(base.grid.node(i) - yi);
    }
    LagrangianState { grid: base.grid.clone(), y, u, h, tails: base.tails }
}

/// Largest |θ| ≤ cap keeping every cell of the perturbed control feasible
/// (derivatives in the convex class), found by bisection on the predicate.
fn feasible_extent(
    base: &LagrangianState,
    w: &[f64],
    v: &[f64],
    cap: f64,
    positive: bool,
) -> f64 {
    let feasible = |theta: f64| -> bool {
        let trial = perturbed(base, w, v, theta);
        let (dy, du, dh) = trial.cell_derivatives();
        for i in 0..dy.len() {
            if dy[i] < 0.0 || dh[i] < 0.0 {
                return false;
            }
            if dy[i] * dh[i] - du[i] * du[i] < 0.0 {
                return false;
            }
        }
        true
    };
    let sign = if positive { 1.0 } else { -1.0 };
    if feasible(sign * cap) {
        return sign * cap;
    }
    let mut lo = 0.0;
    let mut hi = cap;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if feasible(sign * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    sign * lo * 0.999
}

fn optimize_controls(controls: &mut Vec<LagrangianState>, rule: &[(f64, f64)]) -> Result<()> {
    let m = controls.len();
    if m <= 2 {
        return Ok(());
    }
    const SWEEPS: usize = 3;
    for _ in 0..SWEEPS {
        let mut improved = false;
        for i in 1..m - 1 {
            let local = |c: &LagrangianState| -> Result<f64> {
                Ok(segment_length(&controls[i - 1], c, rule)?
                    + segment_length(c, &controls[i + 1], rule)?)
            };
            let current = local(&controls[i])?;

            // Chord move: convex combination toward the neighbour midpoint,
            // feasible for θ in [0, 1] by convexity of the class.
            let mid = controls[i - 1].lerp(&controls[i + 1], 0.5)?;
            let (t_chord, v_chord) =
                line_search(|t| local(&controls[i].lerp(&mid, t)?), 0.0, 1.0)?;

            // Transverse move: slice projection of the two adjacent segment
            // residuals, searched over the feasible step interval.
            let dir = transverse_direction(controls, i, rule)?;
            let mut best_trans = (0.0, current);
            if let Some((w, v)) = dir {
                let span = feasible_extent(&controls[i], &w, &v, 1.0, true)
                    - feasible_extent(&controls[i], &w, &v, 1.0, false);
                if span > 1e-12 {
                    let lo = feasible_extent(&controls[i], &w, &v, 1.0, false);
                    let hi = feasible_extent(&controls[i], &w, &v, 1.0, true);
                    let (t, val) =
                        line_search(|t| local(&perturbed(&controls[i], &w, &v, t)), lo, hi)?;
                    if val < best_trans.1 {
                        best_trans = (t, val);
                    }
                }
                let tol = 1e-12 * (1.0 + current);
                if v_chord < best_trans.1 - tol && v_chord < current - tol {
                    controls[i] = controls[i].lerp(&mid, t_chord)?;
                    improved = true;
                } else if best_trans.1 < current - tol {
                    controls[i] = perturbed(&controls[i], &w, &v, best_trans.0);
                    improved = true;
                }
            } else if v_chord < current - 1e-12 * (1.0 + current) {
                controls[i] = controls[i].lerp(&mid, t_chord)?;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Average transverse residual of the two segments touching control i,
/// projected onto the slice (ζ and H move oppositely) and pinned at the
/// grid ends so tails are untouched.
fn transverse_direction(
    controls: &[LagrangianState],
    i: usize,
    _rule: &[(f64, f64)],
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let mid_in = controls[i - 1].lerp(&controls[i], 0.5)?;
    let mid_out = controls[i].lerp(&controls[i + 1], 0.5)?;
    let tan_in = controls[i].sub(&controls[i - 1])?;
    let tan_out = controls[i + 1].sub(&controls[i])?;
    let r_in = split_tangent(&mid_in, &tan_in)?.residual;
    let r_out = split_tangent(&mid_out, &tan_out)?.residual;
    let n = controls[i].n();
    let mut w = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut scale = 0.0_f64;
    for j in 0..n {
        let rz = 0.5 * (r_in.zeta.samples[j] + r_out.zeta.samples[j]);
        let rh = 0.5 * (r_in.h_comp.samples[j] + r_out.h_comp.samples[j]);
        let ru = 0.5 * (r_in.u_comp.samples[j] + r_out.u_comp.samples[j]);
        w[j] = 0.5 * (rz - rh);
        v[j] = ru;
        scale = scale.max(w[j].abs()).max(v[j].abs());
    }
    if scale < 1e-15 {
        return Ok(None);
    }
    // Normalize so the feasibility search operates on O(1) steps, and pin
    // the ends so tail compatibility is preserved exactly.
    for j in 0..n {
        w[j] /= scale;
        v[j] /= scale;
    }
    w[0] = 0.0;
    v[0] = 0.0;
    w[n - 1] = 0.0;
    v[n - 1] = 0.0;
    Ok(Some((w, v)))
}

/// Distance upper bound between Eulerian pairs through their characteristic
/// representatives.
pub fn distance_eulerian(
    s0: &EulerianState,
    s1: &EulerianState,
    grid: &Grid,
    budget: &RefineBudget,
) -> Result<DistanceResult> {
    let x0 = to_lagrangian(s0, grid)?;
    let x1 = to_lagrangian(s1, grid)?;
    distance_upper(&x0, &x1, budget)
}

/// One pair/time entry of the stability certificate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateRow {
    pub pair_id: usize,
    pub t: f64,
    pub d0: f64,
    pub dt: f64,
    /// None when the pair is degenerate (d0 ≈ 0, ratio 0/0 skipped).
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzCertificate {
    pub rows: Vec<CertificateRow>,
    /// Smallest C with every ratio ≤ e^{Ct} (0 when the flow contracts).
    pub fitted_c: f64,
}

/// Evolves each normalized pair, renormalizes, and tabulates the growth of
/// the distance bound; the fitted constant is the smallest C making every
/// ratio ≤ e^{Ct}.
pub fn lipschitz_certificate(
    pairs: &[(LagrangianState, LagrangianState)],
    times: &[f64],
    budget: &RefineBudget,
) -> Result<LipschitzCertificate> {
    use crate::evolution::evolve;
    use crate::state::normalize;

    let per_pair: Vec<Result<Vec<CertificateRow>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_id, (a, b))| {
            let d0 = distance_upper(a, b, budget)?.d_upper;
            let scale = triple_norm(&a.sub(b)?, &a.grid)?;
            let degenerate = d0 <= 1e-12 * (1.0 + scale);
            let mut rows = Vec::with_capacity(times.len());
            for &t in times {
                let at = normalize(&evolve(a, t)?)?;
                let bt = normalize(&evolve(b, t)?)?;
                let dt = distance_upper(&at, &bt, budget)?.d_upper;
                let ratio = if degenerate { None } else { Some(dt / d0) };
                rows.push(CertificateRow { pair_id, t, d0, dt, ratio });
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_pair {
        rows.extend(r?);
    }
    let fitted_c = rows
        .iter()
        .filter_map(|r| r.ratio.map(|q| (q.ln() / r.t.max(1e-12)).max(0.0)))
        .fold(0.0_f64, f64::max);
    Ok(LipschitzCertificate { rows, fitted_c })
}

/// Largest node deviation between two states over the three components.
pub fn sup_node_distance(a: &LagrangianState, b: &LagrangianState) -> Result<f64> {
    Ok(a.sub(b)?.sup_norm())
}

/// Samples the relabeling curve s ↦ X₀((1-s)·id + s·f) on the grid of X₀.
pub fn relabeling_curve_state(
    x0: &LagrangianState,
    f: &crate::pwl::Relabeling,
    s: f64,
) -> LagrangianState {
    let n = x0.n();
    let grid = &x0.grid;
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let xi = grid.node(i);
        let eta = (1.0 - s) * xi + s * f.eval(xi);
        y.push(x0.eval_y(eta));
        u.push(x0.eval_u(eta));
        h.push(x0.eval_h(eta));
    }
    LagrangianState { grid: grid.clone(), y, u, h, tails: x0.tails }
}
