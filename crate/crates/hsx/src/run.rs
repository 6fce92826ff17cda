//! Experiment drivers behind the CLI: simulate, metric, lipschitz, converge,
//! validate.  Each driver writes its artifacts plus a manifest and returns
//! the list of files produced.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{breaking_time, evolve, Trajectory};
use crate::galerkin::coercivity_diagnostic;
use crate::grid::Grid;
use crate::io;
use crate::metric::{distance_upper, lipschitz_certificate, RefineBudget};
use crate::scenario::random_normalized_state;
use crate::state::{ClassReport, LagrangianState};
use crate::transform::{to_eulerian, to_lagrangian};

#[derive(Debug)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest {
    version: String,
    kind: String,
    scenario: Option<String>,
    grid: Grid,
    times: Vec<f64>,
    seed: u64,
    budget: usize,
    quad_points: usize,
    tolerances: Tolerances,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Tolerances {
    tail: f64,
    monotone: f64,
    relation: f64,
    identity: f64,
    plateau_factor: f64,
}

impl Tolerances {
    fn current() -> Self {
        Tolerances {
            tail: crate::banach::TOL_TAIL,
            monotone: crate::state::TOL_MONO,
            relation: crate::state::TOL_REL,
            identity: crate::state::TOL_ID,
            plateau_factor: crate::state::EPS_PLATEAU_FACTOR,
        }
    }
}

/// Builds a rayon pool capped by HSX_THREADS (if set) and runs the driver
/// for the configured experiment kind inside it.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let pool = thread_pool()?;
    pool.install(|| dispatch(config))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HSX_THREADS") {
        let k: usize = v
            .parse()
            .map_err(|_| Error::validation("HSX_THREADS", "must be a positive integer"))?;
        if k > 0 {
            builder = builder.num_threads(k);
        }
    }
    builder
        .build()
        .map_err(|e| Error::Parse(format!("thread pool: {e}")))
}

fn dispatch(config: &RunConfig) -> Result<RunSummary> {
    std::fs::create_dir_all(&config.out)?;
    let files = match config.kind {
        ExperimentKind::Simulate => simulate(config)?,
        ExperimentKind::Metric => metric(config)?,
        ExperimentKind::Lipschitz => lipschitz(config)?,
        ExperimentKind::Converge => converge(config)?,
        ExperimentKind::Validate => validate(config)?,
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind.as_str().to_string(),
        scenario: config.scenario.as_ref().map(|s| s.name.to_string()),
        grid: config.grid.clone(),
        times: config.times.clone(),
        seed: config.seed,
        budget: config.budget,
        quad_points: config.quad_points,
        tolerances: Tolerances::current(),
        files: files
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    };
    let manifest_path = config.out.join("manifest.json");
    io::write_json(&manifest_path, &manifest)?;
    let mut all = files;
    all.push(manifest_path);
    Ok(RunSummary { kind: config.kind, files: all })
}

fn simulate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let state = config.primary_state()?;
    let x0 = to_lagrangian(&state, &config.grid)?;
    preflight_roundtrip(&state, &x0)?;

    // The trajectory always starts at t = 0 so the seed snapshot is on disk.
    let mut times = config.times.clone();
    if times[0] > 0.0 {
        times.insert(0, 0.0);
    }
    let traj = Trajectory::new(&x0, &times)?;
    let mut files = Vec::new();
    let mut snapshots = Vec::new();
    for (k, t) in traj.times.iter().enumerate() {
        let stem = format!("snapshot_{k:03}_lagrangian");
        files.extend(io::write_lagrangian_snapshot(&config.out, &stem, traj.state_at(k))?);
        let eul = to_eulerian(traj.state_at(k))?;
        let stem_e = format!("snapshot_{k:03}_eulerian");
        files.extend(io::write_eulerian_snapshot(&config.out, &stem_e, &eul)?);
        snapshots.push(format!("{stem}.csv"));
        let _ = t;
    }
    let index = io::TrajectoryIndex {
        times: traj.times.clone(),
        h_infinity: traj.h_infinity,
        grid: config.grid.clone(),
        snapshots,
    };
    let index_path = config.out.join("index.json");
    io::write_json(&index_path, &index)?;
    files.push(index_path);
    Ok(files)
}

fn preflight_roundtrip(state: &crate::state::EulerianState, x0: &LagrangianState) -> Result<()> {
    let rep = x0.validate();
    if !rep.in_g0() {
        return Err(Error::NotInF(format!(
            "characteristic data failed validation: {rep:?}"
        )));
    }
    let back = to_eulerian(x0)?;
    for i in (0..x0.n()).step_by(16) {
        let pos = x0.y[i];
        if (back.u.eval(pos) - state.u.eval(pos)).abs() > 1e-10 {
            return Err(Error::NotInD(format!("round trip drifted at x = {pos}")));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricReport {
    d_upper: f64,
    diff_norm: f64,
    path_controls: usize,
    quadrature: usize,
    grid: Grid,
    timings: TimingReport,
}

#[derive(Serialize)]
struct TimingReport {
    seconds: f64,
}

fn metric(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let a = config.primary_state()?;
    let b = config.secondary_state()?;
    let xa = to_lagrangian(&a, &config.grid)?;
    let xb = to_lagrangian(&b, &config.grid)?;
    let budget = RefineBudget { interior_controls: config.budget, quad_points: config.quad_points };
    let start = Instant::now();
    let result = distance_upper(&xa, &xb, &budget)?;
    let seconds = start.elapsed().as_secs_f64();
    let diff_norm = crate::banach::triple_norm(&xa.sub(&xb)?, &config.grid)?;
    let report = MetricReport {
        d_upper: result.d_upper,
        diff_norm,
        path_controls: result.path.controls.len().saturating_sub(2),
        quadrature: config.quad_points,
        grid: config.grid.clone(),
        timings: TimingReport { seconds },
    };
    let path = config.out.join("metric_report.json");
    io::write_json(&path, &report)?;
    Ok(vec![path])
}

/// Seeded pairs of random normalized states for the certificate.
pub fn certificate_pairs(
    seed: u64,
    count: usize,
    grid: &Grid,
    roughness: f64,
) -> Vec<(LagrangianState, LagrangianState)> {
    (0..count)
        .map(|i| {
            let base = seed.wrapping_mul(1009).wrapping_add(2 * i as u64);
            (
                random_normalized_state(base, grid, roughness),
                random_normalized_state(base.wrapping_add(1), grid, roughness),
            )
        })
        .collect()
}

fn lipschitz(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let pairs = certificate_pairs(config.seed, config.pairs, &config.grid, config.roughness);
    let budget = RefineBudget { interior_controls: config.budget, quad_points: config.quad_points };
    let cert = lipschitz_certificate(&pairs, &config.times, &budget)?;
    let path = config.out.join("lipschitz_certificate.csv");
    io::write_certificate_csv(&path, &cert)?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct ConvergenceRow {
    n: usize,
    h: f64,
    err_u: f64,
    err_mu: f64,
}

/// Convergence study against the scenario's closed-form solution on a ladder
/// of grids.  The grid end points are offset by irrational-looking margins so
/// profile kinks never sit exactly on nodes, which would short-circuit the
/// interpolation error this driver measures.
fn converge(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let scenario = config
        .scenario
        .clone()
        .ok_or_else(|| Error::validation("scenario", "convergence runs need a named scenario"))?;
    let exact = scenario
        .exact
        .ok_or_else(|| Error::validation("scenario", "scenario has no exact solution"))?;
    let ladder = config.grid_ladder.clone();
    let xi_min = scenario.default_grid.xi_min() - 0.0371;
    let xi_max = scenario.default_grid.xi_max() + 0.0529;

    let rows: Vec<Result<ConvergenceRow>> = ladder
        .par_iter()
        .map(|&n| {
            let grid = Grid::new(xi_min, xi_max, n)?;
            let x0 = to_lagrangian(&scenario.initial, &grid)?;
            let mut err_u = 0.0_f64;
            let mut err_mu = 0.0_f64;
            for &t in &config.times {
                let xt = evolve(&x0, t)?;
                let st = to_eulerian(&xt)?;
                let mu_exact = exact.mu(t)?;
                // Fixed evaluation window independent of n: the grid image
                // ends are set by the exact tail constants.
                let lo = xi_min + xt.tails.zeta_minus + 0.05;
                let hi = xi_max + xt.tails.zeta_plus - 0.05;
                let m = 2048;
                for j in 0..=m {
                    let x = lo + (hi - lo) * j as f64 / m as f64;
                    err_u = err_u.max((st.u.eval(x) - exact.u(t, x)).abs());
                    err_mu = err_mu.max((st.mu.cumulative(x) - mu_exact.cumulative(x)).abs());
                }
            }
            Ok(ConvergenceRow { n, h: grid.h(), err_u, err_mu })
        })
        .collect();
    let rows: Vec<ConvergenceRow> = rows.into_iter().collect::<Result<_>>()?;

    let path = config.out.join("convergence.csv");
    {
        use std::io::Write;
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "n,h,err_u,err_mu,order_u")?;
        for (k, r) in rows.iter().enumerate() {
            let order = if k == 0 {
                String::new()
            } else {
                let p = &rows[k - 1];
                ((p.err_u / r.err_u).ln() / (p.h / r.h).ln()).to_string()
            };
            writeln!(f, "{},{},{},{},{order}", r.n, r.h, r.err_u, r.err_mu)?;
        }
    }

    for w in rows.windows(2) {
        if !(w[1].err_u < w[0].err_u) {
            return Err(Error::validation(
                "grid_ladder",
                format!(
                    "profile error did not decrease: {} (n = {}) vs {} (n = {})",
                    w[1].err_u, w[1].n, w[0].err_u, w[0].n
                ),
            ));
        }
    }
    Ok(vec![path])
}

#[derive(Serialize)]
struct ValidateReport {
    class: ClassReport,
    breaking_time: f64,
    total_energy: f64,
    plateau_cells: usize,
    roundtrip_u_error: f64,
    roundtrip_mu_error: f64,
    coercivity_lambda_min: f64,
}

fn validate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let state = config.primary_state()?;
    let x = to_lagrangian(&state, &config.grid)?;
    let rep = x.validate();
    let back = to_eulerian(&x)?;
    let mut err_u = 0.0_f64;
    let mut err_mu = 0.0_f64;
    for i in 0..x.n() {
        let pos = x.y[i];
        err_u = err_u.max((back.u.eval(pos) - state.u.eval(pos)).abs());
        err_mu = err_mu.max((back.mu.cumulative(pos) - state.mu.cumulative(pos)).abs());
    }
    let report = ValidateReport {
        class: rep,
        breaking_time: breaking_time(&state),
        total_energy: state.total_energy(),
        plateau_cells: x.plateau_cells(),
        roundtrip_u_error: err_u,
        roundtrip_mu_error: err_mu,
        coercivity_lambda_min: coercivity_diagnostic(&x)?.lambda_min,
    };
    let path = config.out.join("validate_report.json");
    io::write_json(&path, &report)?;
    Ok(vec![path])
}
