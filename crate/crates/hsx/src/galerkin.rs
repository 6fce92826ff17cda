//! Weak solve for the best relabeling direction.
//!
//! Given a state X and a tangent V, the direction g minimizing
//! ‖V - g·X_ξ‖ over scalar functions g solves the coercive variational
//! problem  ⟨g X_ξ, h X_ξ⟩ = ⟨V, h X_ξ⟩  for every h in the discrete space
//! spanned by the nodal hat functions together with the two tail blend
//! functions.  In that basis the Gram matrix is pentadiagonal plus a rank-2
//! border, so assembly and the Cholesky/Schur solve both run in O(n).

use serde::Serialize;

use crate::banach::{
    h1_inner, node_derivative, tail_weight_minus, tail_weight_plus, triple_norm, BanachTriple,
    TailedFunction,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::LagrangianState;

/// Pentadiagonal bands of the discrete H¹ Gram matrix of the hat basis
/// (trapezoid mass plus central-difference stiffness).
struct H1Bands {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl H1Bands {
    fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let w = grid.trapezoid_weights();
        let h = grid.h();
        let mut d0 = w.clone();
        let mut d1 = vec![0.0; n.saturating_sub(1)];
        let mut d2 = vec![0.0; n.saturating_sub(2)];
        // Rows of the derivative operator: one-sided at the ends, central
        // in the interior.
        let row = |i: usize| -> [(usize, f64); 2] {
            if i == 0 {
                [(0, -1.0 / h), (1, 1.0 / h)]
            } else if i == n - 1 {
                [(n - 2, -1.0 / h), (n - 1, 1.0 / h)]
            } else {
                [(i - 1, -0.5 / h), (i + 1, 0.5 / h)]
            }
        };
        for i in 0..n {
            let r = row(i);
            for &(j, a) in &r {
                for &(k, b) in &r {
                    if k < j {
                        continue;
                    }
                    match k - j {
                        0 => d0[j] += w[i] * a * b,
                        1 => d1[j] += w[i] * a * b,
                        2 => d2[j] += w[i] * a * b,
                        _ => unreachable!(),
                    }
                }
            }
        }
        H1Bands { d0, d1, d2 }
    }

    /// y = M x.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for j in 0..n {
            let mut s = self.d0[j] * x[j];
            if j >= 1 {
                s += self.d1[j - 1] * x[j - 1];
            }
            if j + 1 < n {
                s += self.d1[j] * x[j + 1];
            }
            if j >= 2 {
                s += self.d2[j - 2] * x[j - 2];
            }
            if j + 2 < n {
                s += self.d2[j] * x[j + 2];
            }
            out[j] = s;
        }
    }
}

/// Assembled normal equations for the relabeling-direction solve.
pub struct GalerkinSystem {
    n: usize,
    grid: Grid,
    /// Node (central-difference) derivatives of y, U, H.
    dy: Vec<f64>,
    du: Vec<f64>,
    dh: Vec<f64>,
    chi_p: Vec<f64>,
    chi_m: Vec<f64>,
    /// Hat-hat block bands (symmetric pentadiagonal).
    p0: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    /// Columns coupling the hats to the two tail blend functions.
    border: [Vec<f64>; 2],
    corner: [[f64; 2]; 2],
    h1: H1Bands,
}

impl GalerkinSystem {
    /// Assembles the matrix A with A_jk = ⟨φ_j X_ξ, φ_k X_ξ⟩ for the hat and
    /// tail-blend basis.
    pub fn assemble(x: &LagrangianState) -> Self {
        let grid = x.grid.clone();
        let n = grid.n();
        let h = grid.h();
        let dy = node_derivative(&x.y, h);
        let du = node_derivative(&x.u, h);
        let dh = node_derivative(&x.h, h);
        let chi_p: Vec<f64> = (0..n).map(|i| tail_weight_plus(grid.node(i))).collect();
        let chi_m: Vec<f64> = (0..n).map(|i| tail_weight_minus(grid.node(i))).collect();
        let h1 = H1Bands::new(&grid);

        // Hat-hat block: spikes share the same H¹ Gram matrix for all three
        // components, so P_jk = M_jk (dy_j dy_k + du_j du_k + dh_j dh_k).
        let coef = |j: usize, k: usize| dy[j] * dy[k] + du[j] * du[k] + dh[j] * dh[k];
        let mut p0 = vec![0.0; n];
        let mut p1 = vec![0.0; n - 1];
        let mut p2 = vec![0.0; n - 2];
        for j in 0..n {
            p0[j] = h1.d0[j] * coef(j, j);
            if j + 1 < n {
                p1[j] = h1.d1[j] * coef(j, j + 1);
            }
            if j + 2 < n {
                p2[j] = h1.d2[j] * coef(j, j + 2);
            }
        }

        // Interior parts of the products (tail blend) · X_ξ; the first
        // component sheds its tail constants, leaving χ±(y_ξ - 1).
        let bar_plus = [
            (0..n).map(|i| chi_p[i] * (dy[i] - 1.0)).collect::<Vec<_>>(),
            (0..n).map(|i| chi_p[i] * du[i]).collect::<Vec<_>>(),
            (0..n).map(|i| chi_p[i] * dh[i]).collect::<Vec<_>>(),
        ];
        let bar_minus = [
            (0..n).map(|i| chi_m[i] * (dy[i] - 1.0)).collect::<Vec<_>>(),
            (0..n).map(|i| chi_m[i] * du[i]).collect::<Vec<_>>(),
            (0..n).map(|i| chi_m[i] * dh[i]).collect::<Vec<_>>(),
        ];

        let mut border = [vec![0.0; n], vec![0.0; n]];
        let mut tmp = vec![0.0; n];
        for (which, bars) in [(0usize, &bar_plus), (1usize, &bar_minus)] {
            for (c, bar) in bars.iter().enumerate() {
                h1.apply(bar, &mut tmp);
                let comp: &[f64] = match c {
                    0 => &dy,
                    1 => &du,
                    _ => &dh,
                };
                for j in 0..n {
                    border[which][j] += comp[j] * tmp[j];
                }
            }
        }

        let mut corner = [[0.0; 2]; 2];
        for c in 0..3 {
            corner[0][0] += h1_inner(&bar_plus[c], &bar_plus[c], &grid);
            corner[0][1] += h1_inner(&bar_plus[c], &bar_minus[c], &grid);
            corner[1][1] += h1_inner(&bar_minus[c], &bar_minus[c], &grid);
        }
        // Tail constants of the first component: (0,1) for χ⁺·X_ξ and (1,0)
        // for χ⁻·X_ξ.
        corner[0][0] += 1.0;
        corner[1][1] += 1.0;
        corner[1][0] = corner[0][1];

        GalerkinSystem {
            n,
            grid,
            dy,
            du,
            dh,
            chi_p,
            chi_m,
            p0,
            p1,
            p2,
            border,
            corner,
            h1,
        }
    }

    /// Right-hand side b_j = ⟨V, φ_j X_ξ⟩ in the same basis.
    pub fn rhs(&self, v: &BanachTriple) -> Result<(Vec<f64>, [f64; 2])> {
        let n = self.n;
        if v.zeta.samples.len() != n {
            return Err(Error::GridMismatch(format!(
                "tangent has {} samples on a grid with {n} nodes",
                v.zeta.samples.len()
            )));
        }
        let (bar_z, a_z, b_z) = v.zeta.decompose_raw(&self.grid);
        let (bar_u, _, _) = v.u_comp.decompose_raw(&self.grid);
        let (bar_h, _, _) = v.h_comp.decompose_raw(&self.grid);

        let mut hat = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for (bar, comp) in [(&bar_z, &self.dy), (&bar_u, &self.du), (&bar_h, &self.dh)] {
            self.h1.apply(bar, &mut tmp);
            for j in 0..n {
                hat[j] += comp[j] * tmp[j];
            }
        }

        let bar_plus_z: Vec<f64> = (0..n).map(|i| self.chi_p[i] * (self.dy[i] - 1.0)).collect();
        let bar_plus_u: Vec<f64> = (0..n).map(|i| self.chi_p[i] * self.du[i]).collect();
        let bar_plus_h: Vec<f64> = (0..n).map(|i| self.chi_p[i] * self.dh[i]).collect();
        let bar_minus_z: Vec<f64> = (0..n).map(|i| self.chi_m[i] * (self.dy[i] - 1.0)).collect();
        let bar_minus_u: Vec<f64> = (0..n).map(|i| self.chi_m[i] * self.du[i]).collect();
        let bar_minus_h: Vec<f64> = (0..n).map(|i| self.chi_m[i] * self.dh[i]).collect();

        let tp = h1_inner(&bar_z, &bar_plus_z, &self.grid)
            + h1_inner(&bar_u, &bar_plus_u, &self.grid)
            + h1_inner(&bar_h, &bar_plus_h, &self.grid)
            + a_z;
        let tm = h1_inner(&bar_z, &bar_minus_z, &self.grid)
            + h1_inner(&bar_u, &bar_minus_u, &self.grid)
            + h1_inner(&bar_h, &bar_minus_h, &self.grid)
            + b_z;
        Ok((hat, [tp, tm]))
    }

    /// Cholesky of the hat block plus the Schur complement of the border.
    pub fn factor(&self) -> Result<GalerkinFactor<'_>> {
        let n = self.n;
        let mut l0 = vec![0.0; n];
        let mut l1 = vec![0.0; n.saturating_sub(1)];
        let mut l2 = vec![0.0; n.saturating_sub(2)];
        let scale = self.p0.iter().cloned().fold(0.0_f64, f64::max);
        for j in 0..n {
            let mut d = self.p0[j];
            if j >= 1 {
                d -= l1[j - 1] * l1[j - 1];
            }
            if j >= 2 {
                d -= l2[j - 2] * l2[j - 2];
            }
            if d <= 1e-14 * scale {
                return Err(Error::SingularSystem(format!(
                    "pivot {d:.3e} at row {j} (scale {scale:.3e})"
                )));
            }
            l0[j] = d.sqrt();
            if j + 1 < n {
                let mut v = self.p1[j];
                if j >= 1 {
                    v -= l2[j - 1] * l1[j - 1];
                }
                l1[j] = v / l0[j];
            }
            if j + 2 < n {
                l2[j] = self.p2[j] / l0[j];
            }
        }
        let factor_core = BandChol { l0, l1, l2 };
        let z = [
            factor_core.solve(&self.border[0]),
            factor_core.solve(&self.border[1]),
        ];
        let mut s = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = self.border[b]
                    .iter()
                    .zip(&z[a])
                    .map(|(x, y)| x * y)
                    .sum();
                s[a][b] = self.corner[a][b] - dot;
            }
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if s[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::SingularSystem(format!(
                "tail Schur complement not positive definite (det {det:.3e})"
            )));
        }
        Ok(GalerkinFactor { system: self, chol: factor_core, z, s, s_det: det })
    }

    /// A·v for the full bordered matrix (used by the eigenvalue diagnostic).
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let mut s = self.p0[j] * v[j];
            if j >= 1 {
                s += self.p1[j - 1] * v[j - 1];
            }
            if j + 1 < n {
                s += self.p1[j] * v[j + 1];
            }
            if j >= 2 {
                s += self.p2[j - 2] * v[j - 2];
            }
            if j + 2 < n {
                s += self.p2[j] * v[j + 2];
            }
            s += self.border[0][j] * v[n] + self.border[1][j] * v[n + 1];
            out[j] = s;
        }
        for a in 0..2 {
            let mut s = self.corner[a][0] * v[n] + self.corner[a][1] * v[n + 1];
            for j in 0..n {
                s += self.border[a][j] * v[j];
            }
            out[n + a] = s;
        }
    }

    /// G·v for the discrete E₂ Gram matrix (hats carry the H¹ bands, the two
    /// blend functions are orthonormal tail directions).
    fn apply_gram(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        self.h1.apply(&v[..n], &mut out[..n]);
        out[n] = v[n];
        out[n + 1] = v[n + 1];
    }

    #[cfg(test)]
    fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut a = vec![vec![0.0; n + 2]; n + 2];
        for j in 0..n {
            a[j][j] = self.p0[j];
            if j + 1 < n {
                a[j][j + 1] = self.p1[j];
                a[j + 1][j] = self.p1[j];
            }
            if j + 2 < n {
                a[j][j + 2] = self.p2[j];
                a[j + 2][j] = self.p2[j];
            }
            for t in 0..2 {
                a[j][n + t] = self.border[t][j];
                a[n + t][j] = self.border[t][j];
            }
        }
        for s in 0..2 {
            for t in 0..2 {
                a[n + s][n + t] = self.corner[s][t];
            }
        }
        a
    }
}

struct BandChol {
    l0: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandChol {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut z = vec![0.0; n];
        for j in 0..n {
            let mut s = b[j];
            if j >= 1 {
                s -= self.l1[j - 1] * z[j - 1];
            }
            if j >= 2 {
                s -= self.l2[j - 2] * z[j - 2];
            }
            z[j] = s / self.l0[j];
        }
        let mut x = vec![0.0; n];
        for j in (0..n).rev() {
            let mut s = z[j];
            if j + 1 < n {
                s -= self.l1[j] * x[j + 1];
            }
            if j + 2 < n {
                s -= self.l2[j] * x[j + 2];
            }
            x[j] = s / self.l0[j];
        }
        x
    }
}

pub struct GalerkinFactor<'a> {
    system: &'a GalerkinSystem,
    chol: BandChol,
    z: [Vec<f64>; 2],
    s: [[f64; 2]; 2],
    s_det: f64,
}

impl GalerkinFactor<'_> {
    /// Solves the bordered system for (hat coefficients, tail coefficients).
    pub fn solve(&self, hat_rhs: &[f64], tail_rhs: [f64; 2]) -> (Vec<f64>, [f64; 2]) {
        let w = self.chol.solve(hat_rhs);
        let mut r = [0.0; 2];
        for a in 0..2 {
            let dot: f64 = self.system.border[a].iter().zip(&w).map(|(x, y)| x * y).sum();
            r[a] = tail_rhs[a] - dot;
        }
        let x_tail = [
            (self.s[1][1] * r[0] - self.s[0][1] * r[1]) / self.s_det,
            (self.s[0][0] * r[1] - self.s[1][0] * r[0]) / self.s_det,
        ];
        let mut x_hat = w;
        for j in 0..x_hat.len() {
            x_hat[j] -= self.z[0][j] * x_tail[0] + self.z[1][j] * x_tail[1];
        }
        (x_hat, x_tail)
    }
}

/// Outcome of the tangent split V = g·X_ξ + R.
#[derive(Clone, Debug)]
pub struct TangentSplit {
    /// The minimizing relabeling direction g.
    pub direction: TailedFunction,
    /// The transverse remainder R = V - g·X_ξ.
    pub residual: BanachTriple,
    /// ‖R‖, the quotient seminorm of V at X.
    pub residual_norm: f64,
}

/// The product g·X_ξ as a tangent triple (node derivatives of X, blended
/// tail constants of g on the first component).
pub fn relabeling_tangent(x: &LagrangianState, g: &TailedFunction) -> BanachTriple {
    let h = x.grid.h();
    let dy = node_derivative(&x.y, h);
    let du = node_derivative(&x.u, h);
    let dh = node_derivative(&x.h, h);
    let n = x.n();
    let zeta = TailedFunction::new(
        (0..n).map(|i| g.samples[i] * dy[i]).collect(),
        g.tail_minus,
        g.tail_plus,
    );
    let u_comp = TailedFunction::new((0..n).map(|i| g.samples[i] * du[i]).collect(), 0.0, 0.0);
    let h_comp = TailedFunction::new((0..n).map(|i| g.samples[i] * dh[i]).collect(), 0.0, 0.0);
    BanachTriple { zeta, u_comp, h_comp }
}

/// Splits a tangent into its best relabeling direction and the transverse
/// remainder by solving the coercive normal equations.
pub fn split_tangent(x: &LagrangianState, v: &BanachTriple) -> Result<TangentSplit> {
    let system = GalerkinSystem::assemble(x);
    let factor = system.factor()?;
    let (hat_rhs, tail_rhs) = system.rhs(v)?;
    let (coef, tails) = factor.solve(&hat_rhs, tail_rhs);
    let n = system.n;
    let samples: Vec<f64> = (0..n)
        .map(|i| coef[i] + tails[0] * system.chi_p[i] + tails[1] * system.chi_m[i])
        .collect();
    let direction = TailedFunction::new(samples, tails[1], tails[0]);
    let g_tangent = relabeling_tangent(x, &direction);
    let residual = v.sub(&g_tangent);
    let residual_norm = triple_norm(&residual, &x.grid)?;
    Ok(TangentSplit { direction, residual, residual_norm })
}

/// The quotient seminorm |||V|||_X = ‖V - g(X,V)·X_ξ‖.
pub fn quotient_seminorm(x: &LagrangianState, v: &BanachTriple) -> Result<f64> {
    Ok(split_tangent(x, v)?.residual_norm)
}

/// Coercivity diagnostic: smallest generalized eigenvalue of the assembled
/// form against the discrete E₂ Gram matrix, with the quantities the
/// coercivity constant depends on.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoercivityReport {
    pub lambda_min: f64,
    /// Hilbert-norm proxy for the state (state plus derivative triple).
    pub state_norm_proxy: f64,
    /// sup over cells of 1/(y_ξ + H_ξ).
    pub inverse_slope_sup: f64,
}

pub fn coercivity_diagnostic(x: &LagrangianState) -> Result<CoercivityReport> {
    let system = GalerkinSystem::assemble(x);
    let factor = system.factor()?;
    let m = system.n + 2;
    let mut v = vec![1.0; m];
    let mut gv = vec![0.0; m];
    let mut av = vec![0.0; m];
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        system.apply_gram(&v, &mut gv);
        let (hat, tail) = factor.solve(&gv[..system.n], [gv[system.n], gv[system.n + 1]]);
        let mut w = hat;
        w.push(tail[0]);
        w.push(tail[1]);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in w.iter_mut() {
            *x /= norm;
        }
        system.apply(&w, &mut av);
        system.apply_gram(&w, &mut gv);
        let num: f64 = w.iter().zip(&av).map(|(a, b)| a * b).sum();
        let den: f64 = w.iter().zip(&gv).map(|(a, b)| a * b).sum();
        let rho = num / den;
        let done = (lambda - rho).abs() <= 1e-12 * rho.abs();
        lambda = rho;
        v = w;
        if done {
            break;
        }
    }

    let (dy, _, dh) = x.cell_derivatives();
    let inverse_slope_sup = dy
        .iter()
        .zip(&dh)
        .map(|(a, b)| 1.0 / (a + b))
        .fold(0.0_f64, f64::max);
    let n = x.n();
    let state_triple = BanachTriple::new(
        TailedFunction::new(x.zeta(), x.tails.zeta_minus, x.tails.zeta_plus),
        TailedFunction::new(x.u.clone(), x.tails.u_minus, x.tails.u_plus),
        TailedFunction::new(x.h.clone(), 0.0, x.tails.h_plus),
    )?;
    let h = x.grid.h();
    let deriv_triple = BanachTriple::new(
        TailedFunction::new(
            node_derivative(&x.y, h).iter().map(|d| d - 1.0).collect(),
            0.0,
            0.0,
        ),
        TailedFunction::new(node_derivative(&x.u, h), 0.0, 0.0),
        TailedFunction::new({ let mut d = node_derivative(&x.h, h); d[0] = 0.0; d[n-1] = 0.0; d }, 0.0, 0.0),
    )?;
    let a = triple_norm(&state_triple, &x.grid)?;
    let b = triple_norm(&deriv_triple, &x.grid)?;
    Ok(CoercivityReport {
        lambda_min: lambda,
        state_norm_proxy: (a * a + b * b).sqrt(),
        inverse_slope_sup,
    })
}
