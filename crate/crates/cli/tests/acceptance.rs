//! End-to-end acceptance checks. Each test covers one headline claim of
//! the toolkit, prints a single `acceptance N: PASS` line with its
//! measured margins, and enforces a wall-clock budget where the claim is
//! about speed. Tolerances are pinned here, not imported, so a library
//! change that silently loosens accuracy fails this suite.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use formctl::commands::{cmd_simulate, PolicyArg};
use formctl_core::poly;
use formctl_core::{
    assign_diagonal, build_closed_loop, cycle_equivalence, default_dt, init_protocol, simulate,
    solve_betas, verify_formation, BetaPolicy, CommGraph, LeaderLaw, OffsetTable, PencilGraph,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPECTRUM_TOL: f64 = 1e-6;
const KERNEL_TOL: f64 = 1e-9;
const EXACT_ROOT_TOL: f64 = 1e-9;
const PRINTED_ROOT_TOL: f64 = 1e-3;
const SETTLE_REL: f64 = 1e-3;
const RETARGET_TOL: f64 = 1e-3;
const TERMINAL_TOL: f64 = 1e-6;
const HALVING_RATIO: (f64, f64) = (12.0, 20.0);

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn budget(t0: Instant, limit: Duration, what: &str) {
    let took = t0.elapsed();
    assert!(took <= limit, "{what} took {took:?}, budget {limit:?}");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn complex_poles(poles: &[f64]) -> Vec<Complex64> {
    poles.iter().map(|&p| Complex64::new(p, 0.0)).collect()
}

/// Random tree rooted at agent `n` (every follower listens upward), with
/// optional extra upward edges when `extra_edge_prob > 0`.
fn random_rooted_dag(rng: &mut ChaCha8Rng, n: usize, extra_edge_prob: f64) -> CommGraph {
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = if rng.gen_bool(0.5) {
            n
        } else {
            rng.gen_range(i + 1..=n)
        };
        edges.push((parent, i));
        if extra_edge_prob > 0.0 && rng.gen_bool(extra_edge_prob) {
            let extra = rng.gen_range(i + 1..=n);
            if extra != parent {
                edges.push((extra, i));
            }
        }
    }
    CommGraph::new(n, n, &edges).expect("upward edges are always a rooted dag")
}

/// Signed magnitudes in [lo, hi], never zero.
fn random_formation(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.gen_range(lo..hi);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Distinct negative poles: a shuffled pick of well-separated slots plus
/// a small jitter, so placement is random but never nearly-defective.
fn random_poles(rng: &mut ChaCha8Rng, count: usize, slots: &[f64], jitter: f64) -> Vec<f64> {
    assert!(count <= slots.len());
    let mut idx: Vec<usize> = (0..slots.len()).collect();
    for k in (1..idx.len()).rev() {
        let j = rng.gen_range(0..=k);
        idx.swap(k, j);
    }
    idx[..count]
        .iter()
        .map(|&k| slots[k] + rng.gen_range(-jitter..jitter))
        .collect()
}

#[test]
fn acceptance_1_three_agent_consensus_gain_sets() {
    let t0 = Instant::now();
    // Two hand-assembled gain sets over the same three-agent graph
    // (agent 3 leads, all target positions equal), one with a relay
    // between agents 1 and 2, one with a pure chain.
    let relay = DMatrix::from_row_slice(
        3,
        3,
        &[
            -3.0,
            3.0,
            0.0,
            -2.0 / 3.0,
            -6.0,
            20.0 / 3.0,
            0.0,
            0.0,
            0.0,
        ],
    );
    let chain = DMatrix::from_row_slice(3, 3, &[-5.0, 5.0, 0.0, 0.0, -4.0, 4.0, 0.0, 0.0, 0.0]);
    let expected = [
        Complex64::new(-5.0, 0.0),
        Complex64::new(-4.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];

    for (tag, a) in [("relay", &relay), ("chain", &chain)] {
        let report = verify_formation(a, &[1.0, 1.0, 1.0], &expected[..2]).unwrap();
        assert!(
            report.max_spectrum_deviation <= EXACT_ROOT_TOL,
            "{tag}: spectrum off by {}",
            report.max_spectrum_deviation
        );
        assert_eq!(
            report.kernel_residual, 0.0,
            "{tag}: A * (1,1,1) must vanish exactly"
        );
        for (got, want) in report.spectrum.iter().zip(&expected) {
            assert!(
                (got - want).norm() <= EXACT_ROOT_TOL,
                "{tag}: root {got} vs {want}"
            );
        }
    }
    budget(t0, Duration::from_secs(1), "consensus pair");
    println!(
        "acceptance 1: PASS - both 3-agent gain sets give spectrum {{0,-4,-5}} within {EXACT_ROOT_TOL:.0e} \
         and an exactly zero kernel residual ({:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_2_cyclic_four_agent_characteristic_polynomial() {
    let t0 = Instant::now();
    let text = std::fs::read_to_string(repo_path("scenarios/cyclic_4x4.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);

    let coeffs = poly::char_poly(&a).unwrap();
    assert_eq!(coeffs, vec![1.0, 11.0, 40.0, 54.0, 0.0], "trace recursion");
    let by_matchings = PencilGraph::from_matrix(&a)
        .unwrap()
        .char_poly_by_matchings()
        .unwrap();
    assert_eq!(by_matchings, coeffs, "matching expansion disagrees");

    let roots = poly::roots(&coeffs).unwrap();
    let expected = [
        Complex64::new(-5.5377, 0.0),
        Complex64::new(-2.7312, -1.5140),
        Complex64::new(-2.7312, 1.5140),
        Complex64::new(0.0, 0.0),
    ];
    assert_eq!(roots.len(), expected.len());
    for (got, want) in roots.iter().zip(&expected) {
        assert!(
            (got - want).norm() <= PRINTED_ROOT_TOL,
            "root {got} vs {want}"
        );
    }
    assert_eq!(roots[3], Complex64::new(0.0, 0.0), "zero root must deflate exactly");

    let f = [2.0, -1.0, -2.0, 1.0];
    let report = verify_formation(&a, &f, &expected[..3]).unwrap();
    assert_eq!(report.kernel_residual, 0.0, "A * F must vanish exactly");

    budget(t0, Duration::from_secs(1), "cyclic 4x4");
    println!(
        "acceptance 2: PASS - char poly (1,11,40,54,0) exact on both paths, roots within \
         {PRINTED_ROOT_TOL:.0e}, ||A*F||_inf = 0 ({:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_3_five_agent_synthesis_two_gain_solutions() {
    let t0 = Instant::now();
    let g = CommGraph::new(5, 5, &[(5, 2), (5, 4), (2, 3), (4, 3), (3, 1), (4, 1)]).unwrap();
    let poles = [-3.0, -3.5, -4.0, -5.0];
    let f = [-3.0, 2.0, -2.0, -1.0, 1.0];
    let diag = assign_diagonal(&g, &poles).unwrap();

    let min_norm = solve_betas(&g, &diag, &f, &BetaPolicy::MinNorm).unwrap();
    let pins = [((1usize, 3usize), 4.0), ((3, 2), 1.0)].into_iter().collect();
    let pinned = solve_betas(&g, &diag, &f, &BetaPolicy::Pinned(pins)).unwrap();

    let a_min: Vec<((usize, usize), f64)> = min_norm.betas().collect();
    let b_pin: Vec<((usize, usize), f64)> = pinned.betas().collect();
    assert_ne!(a_min, b_pin, "the two solutions must be distinct");

    let expected = complex_poles(&poles);
    for (tag, gains) in [("min-norm", &min_norm), ("pinned", &pinned)] {
        let a = build_closed_loop(&g, gains).unwrap();
        let report = verify_formation(&a, &f, &expected).unwrap();
        assert!(
            report.kernel_residual < KERNEL_TOL,
            "{tag}: kernel residual {}",
            report.kernel_residual
        );
        assert!(
            report.max_spectrum_deviation <= SPECTRUM_TOL,
            "{tag}: spectrum off by {}",
            report.max_spectrum_deviation
        );
    }
    println!(
        "acceptance 3: PASS - five-agent graph admits two distinct gain sets, both with \
         spectrum {{0,-3,-3.5,-4,-5}} within {SPECTRUM_TOL:.0e} and kernel residual below \
         {KERNEL_TOL:.0e} ({:.2?})",
        t0.elapsed()
    );
}

/// Path-enumeration cycle finder, independent of the library's Kahn-based
/// check: try every simple path and report whether one closes on its start.
fn brute_force_has_cycle(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    fn extend(
        n: usize,
        edges: &BTreeSet<(usize, usize)>,
        start: usize,
        at: usize,
        seen: &mut [bool],
    ) -> bool {
        for next in 1..=n {
            if !edges.contains(&(at, next)) {
                continue;
            }
            if next == start {
                return true;
            }
            if seen[next] {
                continue;
            }
            seen[next] = true;
            if extend(n, edges, start, next, seen) {
                return true;
            }
            seen[next] = false;
        }
        false
    }
    (1..=n).any(|s| {
        let mut seen = vec![false; n + 1];
        seen[s] = true;
        extend(n, edges, s, s, &mut seen)
    })
}

#[test]
fn acceptance_4_cycles_match_matching_uniqueness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5504);
    let trials = 240;
    let mut cyclic = 0usize;
    let mut acyclic = 0usize;

    for _ in 0..trials {
        let n = rng.gen_range(2..=7);
        let p = rng.gen_range(0.05..0.45);
        let mut edges = BTreeSet::new();
        for i in 1..=n {
            for j in 1..=n {
                if i != j && rng.gen_bool(p) {
                    edges.insert((i, j));
                }
            }
        }
        let edge_list: Vec<(usize, usize)> = edges.iter().copied().collect();
        let g = CommGraph::new(n, rng.gen_range(1..=n), &edge_list).unwrap();

        let brute = brute_force_has_cycle(n, &edges);
        if brute {
            cyclic += 1;
        } else {
            acyclic += 1;
        }

        assert_eq!(g.is_acyclic(), !brute, "topological check vs brute force");
        let eq = cycle_equivalence(&g);
        assert!(eq.equivalent, "digraph/pencil cycle checks disagree");
        assert_eq!(eq.digraph_has_cycle, brute);
        assert_eq!(eq.pencil_has_cycle, brute);

        let unique_pm = match PencilGraph::from_structure(&g).perfect_matchings(2) {
            Ok(found) => found.len() == 1,
            Err(_) => false,
        };
        assert_eq!(unique_pm, !brute, "matching uniqueness vs brute force");
    }

    assert!(cyclic >= 40 && acyclic >= 40, "generator mix too lopsided");
    budget(t0, Duration::from_secs(30), "structural equivalence sweep");
    println!(
        "acceptance 4: PASS - {trials} random digraphs (n<=7, {cyclic} cyclic / {acyclic} acyclic): \
         acyclicity, unique perfect matching, and no alternating cycle all coincide with \
         brute-force path enumeration ({:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_5_random_placement_and_settling() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5505);
    let slots = [-1.2, -1.8, -2.4, -3.0, -3.6, -4.2, -4.8];
    let trials = 110;
    let mut worst_margin = 0.0f64;

    for _ in 0..trials {
        let n = rng.gen_range(3..=8);
        let g = random_rooted_dag(&mut rng, n, 0.3);
        let poles = random_poles(&mut rng, n - 1, &slots, 0.02);
        let f = random_formation(&mut rng, n, 0.9, 1.4);

        let diag = assign_diagonal(&g, &poles).unwrap();
        let gains = solve_betas(&g, &diag, &f, &BetaPolicy::MinNorm).unwrap();
        let a = build_closed_loop(&g, &gains).unwrap();
        let report = verify_formation(&a, &f, &complex_poles(&poles)).unwrap();
        assert!(report.kernel_ok, "kernel residual {}", report.kernel_residual);
        assert!(
            report.max_spectrum_deviation <= SPECTRUM_TOL,
            "placement off by {}",
            report.max_spectrum_deviation
        );

        let max_mag = poles.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let min_mag = poles.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
        let gain = 3.0 * max_mag;
        let dt = default_dt(max_mag.max(gain));
        let horizon = 10.0 / min_mag;
        let x0: Vec<f64> = f.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
        let law = LeaderLaw::Proportional {
            gain,
            target: f[n - 1],
        };
        let traj = simulate(&a, &x0, &law, dt, horizon).unwrap();
        let err = *traj.formation_error(&f).unwrap().last().unwrap();
        let tol = SETTLE_REL * f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < tol, "settling error {err} vs tolerance {tol}");
        worst_margin = worst_margin.max(err / tol);
    }

    budget(t0, Duration::from_secs(60), "random placement sweep");
    println!(
        "acceptance 5: PASS - {trials} random rooted acyclic scenarios: requested spectrum hit \
         within {SPECTRUM_TOL:.0e}, and states settled within {SETTLE_REL:.0e}*||F||_inf by \
         T=10/min|pole| (worst margin {worst_margin:.3} of budget, {:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_6_protocol_matches_centralized_on_trees() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5506);
    let trials = 110;

    for _ in 0..trials {
        let n = rng.gen_range(2..=9);
        let g = random_rooted_dag(&mut rng, n, 0.0);
        let poles: Vec<f64> = (0..n - 1).map(|_| -rng.gen_range(1.0..4.0)).collect();
        // Quarter-integer positions keep every offset sum exact in floating
        // point, so the distributed result can be compared bit for bit.
        let f: Vec<f64> = (0..n)
            .map(|_| loop {
                let k: i32 = rng.gen_range(-8..=8);
                if k.abs() >= 2 {
                    break f64::from(k) / 4.0;
                }
            })
            .collect();

        let diag = assign_diagonal(&g, &poles).unwrap();
        let centralized = solve_betas(&g, &diag, &f, &BetaPolicy::TreeUnique).unwrap();

        let offsets = OffsetTable::from_formation(&g, &f).unwrap();
        let mut run = init_protocol(&g, &offsets, &diag).unwrap();
        let outcome = run.run(f[n - 1]).unwrap();
        let distributed = run.gain_set().unwrap();

        let got: Vec<((usize, usize), f64)> = distributed.betas().collect();
        let want: Vec<((usize, usize), f64)> = centralized.betas().collect();
        assert_eq!(got, want, "distributed gains must match bit for bit");
        assert_eq!(
            Some(outcome.resolution_rounds),
            g.leader_eccentricity(),
            "resolution rounds must equal the leader's eccentricity"
        );
    }

    println!(
        "acceptance 6: PASS - {trials} random trees: distributed gains identical to the \
         closed-form solution (exact f64 equality) and resolution rounds equal to the \
         leader's eccentricity ({:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_7_hexagon_retarget_translates_formation() {
    let t0 = Instant::now();
    let scenario = repo_path("scenarios/hexagon_relay.toml");
    let out = std::env::temp_dir().join(format!("formctl_acceptance_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&out);

    let outcome = cmd_simulate(&scenario, PolicyArg::TreeUnique, None, None, &out).unwrap();
    assert_eq!(outcome.axes.len(), 2, "two coordinate axes");
    assert_eq!(outcome.snapshots.len(), 2, "one snapshot per segment");

    // Regular hexagon with side 2 before the move, leader at (3, -1.829).
    let first_x = [4.732, 4.732, 3.0, 1.268, 1.268, 3.0];
    let first_y = [-0.829, 1.171, 2.171, 1.171, -0.829, -1.829];
    let delta = [4.0, -2.0];
    let final_x: Vec<f64> = first_x.iter().map(|v| v + delta[0]).collect();
    let final_y: Vec<f64> = first_y.iter().map(|v| v + delta[1]).collect();

    for (axis, want) in outcome.axes.iter().zip([&final_x, &final_y]) {
        // The formation of the last segment is what the protocol resolved
        // after the retarget; the trajectory must land on it.
        assert!(
            max_abs_diff(&axis.formation, want) <= 1e-9,
            "axis {}: recomputed formation should be the first hexagon translated",
            axis.name
        );
        let landed = max_abs_diff(axis.trajectory.final_state(), want);
        assert!(
            landed <= RETARGET_TOL,
            "axis {}: final positions off by {landed}",
            axis.name
        );
        assert!(axis.settled, "axis {} did not settle", axis.name);
    }

    let path_svg = outcome
        .files
        .iter()
        .find(|p| p.file_name().is_some_and(|f| f == "hexagon_path.svg"))
        .expect("planar path plot is written for two-axis scenarios");
    let svg = std::fs::read_to_string(path_svg).unwrap();
    assert_eq!(
        svg.matches("class='formation'").count(),
        2,
        "path plot must show both hexagon snapshots"
    );

    budget(t0, Duration::from_secs(5), "hexagon retarget scenario");
    println!(
        "acceptance 7: PASS - hexagon scenario retargets mid-run, final positions translated \
         by (+4,-2) within {RETARGET_TOL:.0e}, gains recomputed between segments, and the \
         path plot carries both formation snapshots ({:.2?})",
        t0.elapsed()
    );
}

#[test]
fn acceptance_8_integrator_matches_matrix_exponential() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5508);
    let slots = [-1.0, -1.7, -2.4, -3.1];
    let mut worst_err = 0.0f64;
    let mut ratios = Vec::new();

    for _ in 0..6 {
        let n = rng.gen_range(3..=5);
        let g = random_rooted_dag(&mut rng, n, 0.3);
        let poles = random_poles(&mut rng, n - 1, &slots, 0.05);
        let f = random_formation(&mut rng, n, 0.9, 1.4);
        let diag = assign_diagonal(&g, &poles).unwrap();
        let gains = solve_betas(&g, &diag, &f, &BetaPolicy::MinNorm).unwrap();
        let a = build_closed_loop(&g, &gains).unwrap();

        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let max_mag = poles.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let dt = default_dt(max_mag);
        let horizon = 60.0 * dt;
        // t_off = 0 keeps the external input inert: free response only.
        let law = LeaderLaw::WithdrawAt {
            gain: 1.0,
            target: 0.0,
            t_off: 0.0,
        };

        let coarse = simulate(&a, &x0, &law, dt, horizon).unwrap();
        let fine = simulate(&a, &x0, &law, dt / 2.0, horizon).unwrap();
        let t_end = *coarse.times().last().unwrap();
        assert_eq!(t_end, *fine.times().last().unwrap(), "grids must share the endpoint");

        let exact = (a.clone() * t_end).exp() * DVector::from_column_slice(&x0);
        let err = |traj: &formctl_core::Trajectory| {
            traj.final_state()
                .iter()
                .zip(exact.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let coarse_err = err(&coarse);
        let fine_err = err(&fine);
        assert!(
            coarse_err < TERMINAL_TOL,
            "terminal error {coarse_err} at default step"
        );
        assert!(fine_err > 0.0, "fine grid error vanished; ratio undefined");
        let ratio = coarse_err / fine_err;
        assert!(
            (HALVING_RATIO.0..=HALVING_RATIO.1).contains(&ratio),
            "halving the step changed the error by {ratio}, expected ~16"
        );
        worst_err = worst_err.max(coarse_err);
        ratios.push(ratio);
    }

    println!(
        "acceptance 8: PASS - terminal error vs matrix exponential below {TERMINAL_TOL:.0e} at \
         the default step (worst {worst_err:.2e}); halving the step scaled the error by \
         {ratios:?}, consistent with fourth order ({:.2?})",
        t0.elapsed()
    );
}
