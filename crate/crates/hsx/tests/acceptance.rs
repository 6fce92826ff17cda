//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see the table).
//!
//! Two checks are expected to fail and are kept failing on purpose; they
//! encode a reference closed form for the steepening-ramp scenario that
//! solves the one-sided normalization u_t + u u_x = (1/2)∫_{-∞}^x u_x² dx,
//! while the characteristic system implemented here (and the other
//! criteria) integrate the symmetric form with source
//! (1/4)(∫_{-∞}^x - ∫_x^∞)u_x² dx.  The two flows differ by the frame map
//! (t, x, u) -> (t, x - E t²/8, u - E t/4) at total energy E; companion
//! tests verify the frame-corrected statements to the stated tolerances.

use std::sync::OnceLock;
use std::time::Instant;

use hsx::banach::triple_norm;
use hsx::evolution::{evolve, weak_residual, TestFunction, Trajectory};
use hsx::grid::Grid;
use hsx::metric::{
    distance_eulerian, distance_upper, lipschitz_certificate, sup_node_distance, RefineBudget,
};
use hsx::pwl::PiecewiseLinear;
use hsx::run::certificate_pairs;
use hsx::scenario::{random_normalized_state, random_relabeling, scenario_by_name};
use hsx::state::{normalize, relabel, EulerianState, LagrangianState};
use hsx::transform::{to_eulerian, to_lagrangian};

fn report(id: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// The quoted closed form for the steepening ramp: 2x/(t-2) on the fan
/// (0, (2-t)²/4), (t-2)/2 beyond, 0 for x ≤ 0.
fn quoted_ramp_profile(t: f64, x: f64) -> f64 {
    let tau = t - 2.0;
    if x <= 0.0 || tau == 0.0 {
        0.0
    } else if x < 0.25 * tau * tau {
        2.0 * x / tau
    } else {
        0.5 * tau
    }
}

fn breaking_states(n: usize, times: &[f64]) -> (Vec<LagrangianState>, Vec<f64>) {
    let s = scenario_by_name("breaking").unwrap();
    let grid = s.grid_with(n).unwrap();
    let x0 = to_lagrangian(&s.initial, &grid).unwrap();
    let mut seconds = Vec::new();
    let states = times
        .iter()
        .map(|&t| {
            let clock = Instant::now();
            let xt = evolve(&x0, t).unwrap();
            seconds.push(clock.elapsed().as_secs_f64());
            xt
        })
        .collect();
    (states, seconds)
}

#[test]
fn criterion_01_breaking_profile_matches_quoted_closed_form() {
    let times = [0.5, 1.0, 1.9, 2.5, 3.0];
    let (states, seconds) = breaking_states(4096, &times);
    let mut max_err = 0.0_f64;
    for (k, xt) in states.iter().enumerate() {
        let st = to_eulerian(xt).unwrap();
        for i in 0..xt.n() {
            let x = xt.y[i];
            max_err = max_err.max((st.u.eval(x) - quoted_ramp_profile(times[k], x)).abs());
        }
    }
    let max_seconds = seconds.iter().cloned().fold(0.0, f64::max);
    let pass = max_err <= 1e-6 && max_seconds < 1.0;
    report(
        "01 breaking vs quoted profile",
        pass,
        &format!("sup error {max_err:.3e} (tolerance 1e-6), slowest evolve {max_seconds:.3}s"),
    );
    assert!(
        pass,
        "sup error {max_err:.3e} against the quoted profile; the flow solved here drifts by \
         (E t²/8, E t/4) relative to that frame — see criterion 01s for the frame-corrected \
         comparison, which passes at 1e-6"
    );
}

#[test]
fn criterion_01s_breaking_profile_matches_frame_corrected_form() {
    let times = [0.5, 1.0, 1.9, 2.5, 3.0];
    let (states, seconds) = breaking_states(4096, &times);
    let exact = scenario_by_name("breaking").unwrap().exact.unwrap();
    let mut max_err = 0.0_f64;
    for (k, xt) in states.iter().enumerate() {
        let st = to_eulerian(xt).unwrap();
        for i in 0..xt.n() {
            let x = xt.y[i];
            max_err = max_err.max((st.u.eval(x) - exact.u(times[k], x)).abs());
        }
    }
    let max_seconds = seconds.iter().cloned().fold(0.0, f64::max);
    let pass = max_err <= 1e-6 && max_seconds < 1.0;
    report(
        "01s breaking vs frame-corrected profile",
        pass,
        &format!("sup error {max_err:.3e} (tolerance 1e-6), slowest evolve {max_seconds:.3}s"),
    );
    assert!(pass, "sup error {max_err:.3e}");
}

#[test]
fn criterion_02_energy_concentrates_into_unit_atom_at_origin() {
    let (states, _) = breaking_states(4096, &[2.0]);
    let st = to_eulerian(&states[0]).unwrap();
    let single = st.mu.atoms.len() == 1 && st.mu.density_knots.is_empty();
    let (pos, mass) = st.mu.atoms.first().copied().unwrap_or((f64::NAN, f64::NAN));
    let sup_u = states[0].u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let pass = single && pos.abs() <= 1e-9 && (mass - 1.0).abs() <= 1e-9 && sup_u <= 1e-9;
    report(
        "02 unit atom at origin, flat profile",
        pass,
        &format!(
            "atoms {}, position {pos:.6}, mass {mass:.12}, sup|u| {sup_u:.6}",
            st.mu.atoms.len()
        ),
    );
    assert!(
        pass,
        "atom at {pos} with mass {mass}, sup|u| = {sup_u}; in the frame of the flow solved \
         here the concentration point is (t, x) = (2, -1/2) with u ≡ -1/2 — see criterion 02s"
    );
}

#[test]
fn criterion_02s_energy_concentrates_at_drifted_point() {
    let (states, _) = breaking_states(4096, &[2.0]);
    let st = to_eulerian(&states[0]).unwrap();
    let single = st.mu.atoms.len() == 1 && st.mu.density_knots.is_empty();
    let (pos, mass) = st.mu.atoms.first().copied().unwrap_or((f64::NAN, f64::NAN));
    let sup_dev = states[0]
        .u
        .iter()
        .fold(0.0_f64, |m, v| m.max((v + 0.5).abs()));
    let pass =
        single && (pos + 0.5).abs() <= 1e-9 && (mass - 1.0).abs() <= 1e-9 && sup_dev <= 1e-9;
    report(
        "02s unit atom at (2, -1/2), profile ≡ -1/2",
        pass,
        &format!("position {pos:.12}, mass {mass:.12}, sup|u + 1/2| {sup_dev:.3e}"),
    );
    assert!(pass, "atom ({pos}, {mass}), sup deviation {sup_dev}");
}

#[test]
fn criterion_03_concentrated_atom_opens_exact_fan() {
    let s = scenario_by_name("dirac8").unwrap();
    let grid = s.grid_with(4097).unwrap(); // 4096 cells; plateau ends on nodes
    let x0 = to_lagrangian(&s.initial, &grid).unwrap();
    let mut max_err = 0.0_f64;
    for t in [0.5, 1.0, 2.0] {
        let xt = evolve(&x0, t).unwrap();
        let st = to_eulerian(&xt).unwrap();
        for i in 0..xt.n() {
            let x = xt.y[i];
            let expect = (2.0 * x / t).clamp(-2.0 * t, 2.0 * t);
            max_err = max_err.max((st.u.eval(x) - expect).abs());
        }
    }
    let pass = max_err <= 1e-10;
    report(
        "03 dirac fan node-exact",
        pass,
        &format!("sup node error {max_err:.3e} (tolerance 1e-10)"),
    );
    assert!(pass, "sup node error {max_err:.3e}");
}

/// Scenario suite on kink-aligned grids plus seeded random states.
fn conservation_suite() -> Vec<(String, LagrangianState)> {
    let mut suite = Vec::new();
    for (name, n) in [("breaking", 1024), ("dirac8", 1025), ("twochar", 1021), ("still", 257)] {
        let s = scenario_by_name(name).unwrap();
        let g = s.grid_with(n).unwrap();
        suite.push((name.to_string(), to_lagrangian(&s.initial, &g).unwrap()));
    }
    let g = Grid::new(-2.0, 4.0, 257).unwrap();
    for seed in 0..5 {
        suite.push((
            format!("random-{seed}"),
            random_normalized_state(seed, &g, 0.5),
        ));
    }
    suite
}

const SUITE_TIMES: [f64; 8] = [0.0, 0.5, 1.0, 1.9, 2.0, 2.5, 3.0, 5.0];

#[test]
fn criterion_04_energy_conserved_bitwise_and_relation_drift_tiny() {
    let mut worst_drift = 0.0_f64;
    let mut bitwise = true;
    for (name, x0) in conservation_suite() {
        let traj = Trajectory::new(&x0, &SUITE_TIMES).unwrap();
        for k in 0..traj.times.len() {
            let xt = traj.state_at(k);
            bitwise &= xt.h_infinity().to_bits() == x0.h_infinity().to_bits();
            bitwise &= xt
                .h
                .iter()
                .zip(&x0.h)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            let d = traj.invariant_defect(k);
            worst_drift = worst_drift.max(d.rel_defect_drift);
        }
        let _ = name;
    }
    let pass = bitwise && worst_drift <= 1e-12;
    report(
        "04 conservation",
        pass,
        &format!("H∞ bitwise identical: {bitwise}, relation drift {worst_drift:.3e} (tolerance 1e-12)"),
    );
    assert!(pass, "bitwise {bitwise}, drift {worst_drift:.3e}");
}

#[test]
fn criterion_05_slope_sum_respects_exponential_lower_bound() {
    let mut worst = f64::INFINITY;
    for (_, x0) in conservation_suite() {
        let traj = Trajectory::new(&x0, &SUITE_TIMES).unwrap();
        for k in 0..traj.times.len() {
            worst = worst.min(traj.invariant_defect(k).gronwall_margin);
        }
    }
    let pass = worst >= -1e-12;
    report(
        "05 exponential slope bound",
        pass,
        &format!("worst margin {worst:.3e} (must be ≥ -1e-12)"),
    );
    assert!(pass, "worst margin {worst:.3e}");
}

#[test]
fn criterion_06_distance_bounded_by_norm_on_random_pairs() {
    let g = Grid::new(-2.0, 4.0, 257).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..50u64 {
        let a = random_normalized_state(2000 + 2 * i, &g, 0.5);
        let b = random_normalized_state(2001 + 2 * i, &g, 0.5);
        let d = distance_upper(&a, &b, &RefineBudget::straight())
            .unwrap()
            .d_upper;
        let norm = triple_norm(&a.sub(&b).unwrap(), &g).unwrap();
        worst = worst.max(d - norm);
    }
    let pass = worst <= 1e-9;
    report(
        "06 distance ≤ norm",
        pass,
        &format!("worst (d - ‖ΔX‖) = {worst:.3e} over 50 pairs (tolerance 1e-9)"),
    );
    assert!(pass, "worst excess {worst:.3e}");
}

struct RelabelingStudy {
    /// Per pair: (d at coarse budget/grid, d at fine, ‖ΔX‖ at fine,
    /// sup-node distance at fine, path length of the fine witness).
    rows: Vec<(f64, f64, f64, f64)>,
}

fn relabeling_study() -> &'static RelabelingStudy {
    static STUDY: OnceLock<RelabelingStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        let mut rows = Vec::new();
        for pair in 0..10u64 {
            let mut d = [0.0_f64; 2];
            let mut fine_norm = 0.0;
            let mut fine_sup = 0.0;
            for (k, (n, budget)) in [(2048usize, 4usize), (4096, 8)].into_iter().enumerate() {
                let g = Grid::new(-2.0, 4.0, n).unwrap();
                let x0 = random_normalized_state(500 + pair, &g, 0.35);
                let f = random_relabeling(pair, &g, 0.3);
                let x1 = normalize(&relabel(&x0, &f)).unwrap();
                let result =
                    distance_upper(&x0, &x1, &RefineBudget::with_controls(budget)).unwrap();
                d[k] = result.d_upper;
                if k == 1 {
                    fine_norm = triple_norm(&x0.sub(&x1).unwrap(), &g).unwrap();
                    fine_sup = sup_node_distance(&x0, &x1).unwrap();
                }
            }
            rows.push((d[0], d[1], fine_norm, fine_sup));
        }
        RelabelingStudy { rows }
    })
}

#[test]
fn criterion_07a_relabeled_pair_distance_decays_under_refinement() {
    let study = relabeling_study();
    let worst_decay = study
        .rows
        .iter()
        .map(|r| r.0 / r.1)
        .fold(f64::INFINITY, f64::min);
    let pass = worst_decay >= 1.5;
    report(
        "07a relabeling degeneracy decay",
        pass,
        &format!("worst decay factor {worst_decay:.2} under grid+budget doubling (need ≥ 1.5)"),
    );
    assert!(pass, "worst decay {worst_decay:.2}");
}

#[test]
fn criterion_07b_relabeled_pair_distance_small_against_norm() {
    let study = relabeling_study();
    let worst_ratio = study
        .rows
        .iter()
        .map(|r| r.1 / r.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = worst_ratio <= 0.05;
    report(
        "07b relabeling degeneracy absolute",
        pass,
        &format!("worst d/‖ΔX‖ = {worst_ratio:.3} at n = 4096, budget 8 (target 0.05)"),
    );
    assert!(
        pass,
        "worst d/‖ΔX‖ = {worst_ratio:.3}: for pairs already on the normalized slice the \
         difference has opposite ζ- and H-components while every relabeling direction g·X_ξ \
         contributes g to their sum, so the quotient seminorm can remove at most about half \
         of such a tangent; the distance therefore tracks the norm (ratio ≈ 0.8-1.0) and \
         only the decay criterion 07a is attainable — see the decisions ledger"
    );
}

#[test]
fn criterion_08_stability_certificate_with_stable_fitted_constant() {
    let times = [0.5, 1.0, 2.0];
    let mut cs = Vec::new();
    let mut all_bounded = true;
    for n in [513usize, 1025] {
        let g = Grid::new(-2.0, 4.0, n).unwrap();
        let pairs = certificate_pairs(42, 20, &g, 0.3);
        let cert = lipschitz_certificate(&pairs, &times, &RefineBudget::straight()).unwrap();
        for row in &cert.rows {
            if let Some(ratio) = row.ratio {
                all_bounded &= ratio <= (cert.fitted_c * row.t).exp() + 1e-12;
            }
        }
        cs.push(cert.fitted_c);
    }
    let rel_change = (cs[1] - cs[0]).abs() / cs[0].max(cs[1]).max(1e-12);
    let pass = all_bounded && rel_change <= 0.2;
    report(
        "08 stability certificate",
        pass,
        &format!(
            "fitted C = {:.5} (n=513) vs {:.5} (n=1025), change {:.2}% (allowed 20%), all ratios ≤ e^(Ct): {all_bounded}",
            cs[0],
            cs[1],
            100.0 * rel_change
        ),
    );
    assert!(pass, "C values {cs:?}, change {rel_change:.3}");
}

#[test]
fn criterion_09_sup_distance_controlled_by_path_length() {
    let study = relabeling_study();
    let worst = study
        .rows
        .iter()
        .map(|r| r.3 - 2.0 * r.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = worst <= 1e-6;
    report(
        "09 sup-norm control",
        pass,
        &format!("worst (‖ΔX‖∞ - 2·length) = {worst:.3e} over the 10 study paths (tolerance 1e-6)"),
    );
    assert!(pass, "worst excess {worst:.3e}");
}

#[test]
fn criterion_10_weak_residual_refinement() {
    let s = scenario_by_name("breaking").unwrap();
    let bumps = [
        TestFunction::new(0.3, 0.4, 0.5, 0.5), // straddles t = 0: initial term active
        TestFunction::new(1.0, 0.6, 0.5, 0.4),
        TestFunction::new(1.5, -0.2, 0.4, 0.5),
        TestFunction::new(3.0, -0.8, 0.6, 0.6),
        TestFunction::new(2.0, 0.0, 0.5, 0.5), // the stated singular point
        TestFunction::new(2.0, -0.5, 0.5, 0.5), // concentration point of this flow
    ];
    let ladder = [(256usize, 25usize), (512, 50), (1024, 100), (2048, 200), (4096, 400)];
    let mut table = vec![Vec::new(); bumps.len()];
    for (n, m) in ladder {
        let g = s.grid_with(n + 1).unwrap();
        let x0 = to_lagrangian(&s.initial, &g).unwrap();
        let times: Vec<f64> = (0..=m).map(|k| 3.7 * k as f64 / m as f64).collect();
        let traj = Trajectory::new(&x0, &times).unwrap();
        for (b, phi) in bumps.iter().enumerate() {
            table[b].push(weak_residual(&traj, phi).unwrap().abs());
        }
    }
    let doublings = (ladder.len() - 1) as f64;
    let mut pass = true;
    let mut detail = String::new();
    for (b, vals) in table.iter().enumerate() {
        let finest = *vals.last().unwrap();
        let rate = (vals[0] / finest).powf(1.0 / doublings);
        // The modeled first-order decay is a floor; the time-exact solver
        // converges faster (quadrature error only), so no upper cap applies.
        let ok = finest <= 1e-3 && rate >= 1.4;
        pass &= ok;
        detail.push_str(&format!("bump {b}: final {finest:.2e}, rate {rate:.2}x/doubling; "));
    }
    report("10 weak-form residual", pass, detail.trim_end_matches("; "));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_11_roundtrip_and_semigroup() {
    let mut worst_rt = 0.0_f64;
    for (_, x0) in conservation_suite() {
        // The random states are only in the relaxed class; round-trip is
        // asserted for the exact scenario representatives.
        if !x0.validate().in_f0() {
            continue;
        }
        let s0 = to_eulerian(&x0).unwrap();
        let back = to_lagrangian(&s0, &x0.grid).unwrap();
        for i in 0..x0.n() {
            let pos = x0.y[i];
            worst_rt = worst_rt.max((s0.u.eval(pos) - back.eval_u(x0.grid.node(i))).abs());
            worst_rt = worst_rt.max((back.y[i] - x0.y[i]).abs());
            worst_rt = worst_rt.max((back.h[i] - x0.h[i]).abs());
        }
    }

    // Scenario states also round-trip through the Eulerian side exactly.
    for (name, n) in [("breaking", 1024), ("dirac8", 1025), ("twochar", 1021), ("still", 257)] {
        let s = scenario_by_name(name).unwrap();
        let g = s.grid_with(n).unwrap();
        let x = to_lagrangian(&s.initial, &g).unwrap();
        let back = to_eulerian(&x).unwrap();
        for i in 0..x.n() {
            let pos = x.y[i];
            worst_rt = worst_rt.max((back.u.eval(pos) - s.initial.u.eval(pos)).abs());
            worst_rt =
                worst_rt.max((back.mu.cumulative(pos) - s.initial.mu.cumulative(pos)).abs());
        }
    }

    let mut worst_semi = 0.0_f64;
    for (_, x0) in conservation_suite() {
        for (s, t) in [(0.4, 0.7), (1.3, 2.2)] {
            let a = evolve(&evolve(&x0, s).unwrap(), t).unwrap();
            let b = evolve(&x0, s + t).unwrap();
            for i in 0..x0.n() {
                worst_semi = worst_semi.max((a.y[i] - b.y[i]).abs());
                worst_semi = worst_semi.max((a.u[i] - b.u[i]).abs());
                worst_semi = worst_semi.max((a.h[i] - b.h[i]).abs());
            }
        }
    }
    let pass = worst_rt <= 1e-10 && worst_semi <= 1e-12;
    report(
        "11 round trip and semigroup",
        pass,
        &format!("round-trip error {worst_rt:.3e} (tol 1e-10), semigroup defect {worst_semi:.3e} (tol 1e-12)"),
    );
    assert!(pass, "roundtrip {worst_rt:.3e}, semigroup {worst_semi:.3e}");
}

#[test]
fn criterion_12_profile_lift_is_continuous() {
    use rand::{Rng, SeedableRng};
    let grid = Grid::new(-4.0, 6.0, 513).unwrap();
    let budget = RefineBudget::straight();
    let mut pass = true;
    let mut detail = String::new();
    for seq in 0..3u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7000 + seq);
        let mut draw_profile = |amp: f64| -> PiecewiseLinear {
            // A smooth compact profile sampled as a fixed piecewise-linear
            // function with kinks well inside the grid image.
            let c: f64 = rng.gen_range(-0.5..0.5);
            let w: f64 = rng.gen_range(0.6..1.2);
            let bump = |s: f64| {
                let a: f64 = s.abs();
                if a >= 1.0 {
                    0.0
                } else {
                    1.0 - 3.0 * s * s + 2.0 * a * a * a
                }
            };
            let knots: Vec<(f64, f64)> = (0..=64)
                .map(|k| {
                    let x = c - w + 2.0 * w * k as f64 / 64.0;
                    (x, amp * bump((x - c) / w))
                })
                .collect();
            PiecewiseLinear::new(knots).unwrap()
        };
        let base = draw_profile(0.4);
        let pert = draw_profile(0.3);
        let target = EulerianState::from_profile(base.clone()).unwrap();
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        let mut monotone = true;
        for k in 0..6 {
            let eps = 0.25_f64.powi(k) * 0.25;
            // base + eps * pert, sampled on the union of both knot sets.
            let mut xs: Vec<f64> = base
                .knots()
                .iter()
                .chain(pert.knots().iter())
                .map(|&(x, _)| x)
                .collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let knots: Vec<(f64, f64)> =
                xs.iter().map(|&x| (x, base.eval(x) + eps * pert.eval(x))).collect();
            let u_n = PiecewiseLinear::new(knots).unwrap();
            let s_n = EulerianState::from_profile(u_n).unwrap();
            let d = distance_eulerian(&s_n, &target, &grid, &budget)
                .unwrap()
                .d_upper;
            monotone &= d < prev;
            prev = d;
            last = d;
        }
        let ok = monotone && last <= 1e-3;
        pass &= ok;
        detail.push_str(&format!(
            "seq {seq}: monotone {monotone}, final d = {last:.2e}; "
        ));
    }
    report("12 continuity of the profile lift", pass, detail.trim_end_matches("; "));
    assert!(pass, "{detail}");
}
