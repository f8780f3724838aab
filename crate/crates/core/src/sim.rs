//! Fixed-step integration of the closed loop and convergence diagnostics.
//!
//! The plant is `x' = A x + e_n v`, where the external input `v` enters
//! only at the last agent (the leader). A [`LeaderLaw`] drives the leader
//! toward its target and can withdraw the input mid-run; because the
//! leader row of a synthesized `A` is zero, a withdrawn leader holds its
//! position to the bit and the followers settle into formation around it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real-axis stability limit of the classical fourth-order Runge–Kutta
/// method; a step is rejected when `dt * max|eigenvalue|` exceeds it.
pub const RK4_STABILITY_LIMIT: f64 = 2.785;

const DT_MIN: f64 = 1e-4;
const DT_MAX: f64 = 1e-1;

/// Step size that resolves the fastest mode comfortably: `0.1 / max|λ|`,
/// clamped to `[1e-4, 1e-1]`.
pub fn default_dt(max_pole_magnitude: f64) -> f64 {
    if !max_pole_magnitude.is_finite() || max_pole_magnitude <= 0.0 {
        return DT_MAX;
    }
    (0.1 / max_pole_magnitude).clamp(DT_MIN, DT_MAX)
}

/// External input `v = gain * (target - x_leader)`, with three shutdown
/// policies. Withdrawal latches at a step boundary and is permanent, so
/// the right-hand side stays smooth inside every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeaderLaw {
    /// Input active over the whole horizon.
    Proportional { gain: f64, target: f64 },
    /// Input active on steps starting before `t_off`, zero from then on.
    WithdrawAt { gain: f64, target: f64, t_off: f64 },
    /// Input shuts off at the first step boundary where
    /// `|x_leader - target| <= tol`.
    WithdrawOnConverge { gain: f64, target: f64, tol: f64 },
}

impl LeaderLaw {
    pub fn gain(&self) -> f64 {
        match *self {
            LeaderLaw::Proportional { gain, .. }
            | LeaderLaw::WithdrawAt { gain, .. }
            | LeaderLaw::WithdrawOnConverge { gain, .. } => gain,
        }
    }

    pub fn target(&self) -> f64 {
        match *self {
            LeaderLaw::Proportional { target, .. }
            | LeaderLaw::WithdrawAt { target, .. }
            | LeaderLaw::WithdrawOnConverge { target, .. } => target,
        }
    }

    fn can_activate(&self) -> bool {
        !matches!(self, LeaderLaw::WithdrawAt { t_off, .. } if *t_off <= 0.0)
    }
}

/// A sampled run: uniform time grid, one state vector per sample, and the
/// leader input applied on the step starting at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    inputs: Vec<f64>,
    dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trajectory is never empty")
    }

    /// One agent's position over time (1-based agent index).
    pub fn agent_series(&self, agent: usize) -> Result<Vec<f64>> {
        let n = self.agent_count();
        if agent == 0 || agent > n {
            return Err(Error::IndexOutOfRange { index: agent, n });
        }
        Ok(self.states.iter().map(|x| x[agent - 1]).collect())
    }

    /// Per-sample max-norm deviation from a formation vector.
    pub fn formation_error(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.agent_count();
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        Ok(self
            .states
            .iter()
            .map(|x| {
                x.iter()
                    .zip(f)
                    .map(|(xi, fi)| (xi - fi).abs())
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    /// Appends a follow-on segment that was simulated from this
    /// trajectory's final state with the same step size. The segment's
    /// duplicate first sample is dropped and its clock is shifted to
    /// continue this one; the input actually applied at the junction is
    /// the segment's, since the law may have changed there.
    pub fn extend_with(&mut self, next: &Trajectory) -> Result<()> {
        if next.agent_count() != self.agent_count() {
            return Err(Error::DimensionMismatch {
                expected: self.agent_count(),
                got: next.agent_count(),
            });
        }
        if next.dt != self.dt {
            return Err(Error::InvalidStep { dt: next.dt });
        }
        let t_end = *self.times.last().expect("a trajectory is never empty");
        if let (Some(last), Some(&first)) = (self.inputs.last_mut(), next.inputs.first()) {
            *last = first;
        }
        for k in 1..next.len() {
            self.times.push(t_end + next.times[k]);
            self.states.push(next.states[k].clone());
            self.inputs.push(next.inputs[k]);
        }
        Ok(())
    }
}

fn spectral_bound(a: &DMatrix<f64>) -> f64 {
    match crate::synthesis::spectrum(a) {
        Ok(spec) => spec.iter().map(|z| z.norm()).fold(0.0, f64::max),
        // Root finding can fail on pathological inputs; every eigenvalue
        // is bounded by the max absolute row sum, so fall back to that.
        Err(_) => a
            .row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max),
    }
}

/// Integrates `x' = A x + e_n v` with classical fourth-order Runge–Kutta
/// at fixed step `dt` until the horizon is covered (the last sample lands
/// on the first grid point at or past `horizon`).
pub fn simulate(
    a: &DMatrix<f64>,
    x0: &[f64],
    law: &LeaderLaw,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidAgentCount { n: 0 });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidStep { dt });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidHorizon { horizon });
    }
    let gain = law.gain();
    if !gain.is_finite() || gain <= 0.0 {
        return Err(Error::InvalidLeaderGain { gain });
    }
    let mut max_eig = spectral_bound(a);
    if law.can_activate() {
        // While active, the input adds a pole at -gain to the leader.
        max_eig = max_eig.max(gain);
    }
    if dt * max_eig > RK4_STABILITY_LIMIT {
        return Err(Error::UnstableStep {
            dt,
            max_eig,
            product: dt * max_eig,
            bound: RK4_STABILITY_LIMIT,
        });
    }

    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let leader = n - 1;
    let target = law.target();

    let mut x = DVector::from_column_slice(x0);
    let mut withdrawn = false;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * dt;
        match law {
            LeaderLaw::Proportional { .. } => {}
            LeaderLaw::WithdrawAt { t_off, .. } => {
                if t >= *t_off {
                    withdrawn = true;
                }
            }
            LeaderLaw::WithdrawOnConverge { tol, target, .. } => {
                if (x[leader] - target).abs() <= *tol {
                    withdrawn = true;
                }
            }
        }
        let active = !withdrawn;
        times.push(t);
        states.push(x.as_slice().to_vec());
        inputs.push(if active { gain * (target - x[leader]) } else { 0.0 });
        if k == steps {
            break;
        }

        let deriv = |y: &DVector<f64>| {
            let mut dy = a * y;
            if active {
                dy[leader] += gain * (target - y[leader]);
            }
            dy
        };
        let k1 = deriv(&x);
        let k2 = deriv(&(&x + &k1 * (dt / 2.0)));
        let k3 = deriv(&(&x + &k2 * (dt / 2.0)));
        let k4 = deriv(&(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }

    Ok(Trajectory {
        times,
        states,
        inputs,
        dt,
    })
}

/// Axis-wise [`simulate`] over independent per-axis systems sharing one
/// time base (same `dt` and horizon for every axis).
pub fn simulate_nd(
    systems: &[DMatrix<f64>],
    x0: &[Vec<f64>],
    laws: &[LeaderLaw],
    dt: f64,
    horizon: f64,
) -> Result<Vec<Trajectory>> {
    if systems.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if x0.len() != systems.len() {
        return Err(Error::DimensionMismatch {
            expected: systems.len(),
            got: x0.len(),
        });
    }
    if laws.len() != systems.len() {
        return Err(Error::DimensionMismatch {
            expected: systems.len(),
            got: laws.len(),
        });
    }
    let n = systems[0].nrows();
    for a in systems {
        if a.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
    }
    systems
        .iter()
        .zip(x0)
        .zip(laws)
        .map(|((a, x), law)| simulate(a, x, law, dt, horizon))
        .collect()
}

/// Per-agent exponential decay rates fitted from a trajectory tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Fitted decay rate per agent in index order; `None` where the error
    /// signal sat at the numerical floor (nothing to fit).
    pub per_agent: Vec<Option<f64>>,
    /// Smallest fitted rate — the mode that dominates the tail.
    pub slowest: f64,
}

/// Fits `|x_i(t) - f_i| ~ c · exp(-r t)` per agent by least squares on the
/// log error over the second half of the trajectory. Call it on a run
/// whose input has been withdrawn (or whose leader is already on target),
/// so the tail is a pure sum of closed-loop modes.
pub fn fit_rates(traj: &Trajectory, f: &[f64]) -> Result<RateReport> {
    let n = traj.agent_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if traj.len() < 4 {
        return Err(Error::SignalBelowFloor);
    }
    let start = traj.len() / 2;
    let floor = 1e-12 * f.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut per_agent = Vec::with_capacity(n);
    for (i, fi) in f.iter().enumerate() {
        let pts: Vec<(f64, f64)> = (start..traj.len())
            .filter_map(|k| {
                let e = (traj.states[k][i] - fi).abs();
                (e > floor).then(|| (traj.times[k], e.ln()))
            })
            .collect();
        if pts.len() < 2 {
            per_agent.push(None);
            continue;
        }
        let m = pts.len() as f64;
        let st: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let stt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sty: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = m * stt - st * st;
        if denom <= 0.0 {
            per_agent.push(None);
            continue;
        }
        per_agent.push(Some(-(m * sty - st * sy) / denom));
    }

    let slowest = per_agent
        .iter()
        .flatten()
        .fold(f64::INFINITY, |acc, &r| acc.min(r));
    if !slowest.is_finite() {
        return Err(Error::SignalBelowFloor);
    }
    Ok(RateReport { per_agent, slowest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CommGraph;
    use crate::synthesis::{assign_diagonal, build_closed_loop, solve_betas, BetaPolicy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Input that is never active: the plant runs autonomously.
    fn no_input() -> LeaderLaw {
        LeaderLaw::WithdrawAt {
            gain: 1.0,
            target: 0.0,
            t_off: 0.0,
        }
    }

    fn chain_two() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0])
    }

    #[test]
    fn single_follower_tracks_the_leader_exponentially() {
        // Leader parked on target, follower starting at zero: the exact
        // solution is x_1(t) = 1 - exp(-t).
        let traj = simulate(&chain_two(), &[0.0, 1.0], &no_input(), 1e-3, 2.0).unwrap();
        let worst = traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, x)| (x[0] - (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst deviation {worst:e}");
        assert!(traj.states().iter().all(|x| x[1] == 1.0));
    }

    #[test]
    fn kernel_states_are_fixed_points() {
        // A annihilates (1,1,1) exactly, so every integrator stage sees a
        // zero derivative and the state never moves a bit.
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-3.0, 3.0, 0.0, -2.0 / 3.0, -6.0, 20.0 / 3.0, 0.0, 0.0, 0.0],
        );
        let traj = simulate(&a, &[1.0, 1.0, 1.0], &no_input(), 0.05, 5.0).unwrap();
        for x in traj.states() {
            assert_eq!(x.as_slice(), &[1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn formations_persist_without_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = rng.gen_range(3..=7usize);
            let mut edges = Vec::new();
            for i in 1..n {
                let parent = rng.gen_range(i + 1..=n);
                edges.push((parent, i));
                if rng.gen_bool(0.3) {
                    let extra = rng.gen_range(i + 1..=n);
                    if extra != parent {
                        edges.push((extra, i));
                    }
                }
            }
            let g = CommGraph::new(n, n, &edges).unwrap();
            let poles: Vec<f64> = (1..n).map(|_| -rng.gen_range(0.5..4.0)).collect();
            let gains = assign_diagonal(&g, &poles).unwrap();
            let f: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let full = solve_betas(&g, &gains, &f, &BetaPolicy::MinNorm).unwrap();
            let a = build_closed_loop(&g, &full).unwrap();
            let traj = simulate(&a, &f, &no_input(), default_dt(4.0), 5.0).unwrap();
            let drift = traj.formation_error(&f).unwrap();
            assert!(drift.iter().all(|&e| e < 1e-9));
        }
    }

    #[test]
    fn leader_freezes_after_withdrawal() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 0.0, 0.5, 0.0, -2.0, 1.0, 0.0, 0.0, 0.0],
        );
        let law = LeaderLaw::WithdrawAt {
            gain: 2.0,
            target: 4.0,
            t_off: 1.0,
        };
        let traj = simulate(&a, &[0.0, 0.0, 0.0], &law, 0.05, 3.0).unwrap();
        let leader: Vec<f64> = traj.agent_series(3).unwrap();
        let cut = traj.times().iter().position(|&t| t >= 1.0).unwrap();
        assert!(leader.windows(2).take(cut).all(|w| w[0] < w[1]));
        assert!(leader[cut..].iter().all(|&v| v == leader[cut]));
        assert!(traj.inputs()[cut..].iter().all(|&v| v == 0.0));
        assert!(traj.inputs()[..cut].iter().all(|&v| v > 0.0));
        // Withdrawn well before convergence, so it froze short of target.
        assert!(leader[cut] < 4.0);
    }

    #[test]
    fn input_withdraws_once_the_leader_settles() {
        let law = LeaderLaw::WithdrawOnConverge {
            gain: 3.0,
            target: 1.0,
            tol: 1e-6,
        };
        let traj = simulate(&chain_two(), &[0.0, 0.0], &law, 0.01, 10.0).unwrap();
        let leader = traj.agent_series(2).unwrap();
        let cut = leader
            .iter()
            .position(|&v| (v - 1.0).abs() <= 1e-6)
            .expect("leader should reach its target");
        assert!(leader[cut..].iter().all(|&v| v == leader[cut]));
        assert!(traj.inputs()[cut..].iter().all(|&v| v == 0.0));
        // The follower keeps converging to the frozen leader position.
        let follower = traj.agent_series(1).unwrap();
        assert!((follower.last().unwrap() - leader[cut]).abs() < 1e-4);
    }

    #[test]
    fn fixed_step_integration_matches_the_exact_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let n = rng.gen_range(3..=6usize);
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = if i == j {
                        -rng.gen_range(0.5..2.0)
                    } else {
                        rng.gen_range(-0.2..0.2)
                    };
                }
            }
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let horizon = 2.0;
            let dt = default_dt(2.0);
            let traj = simulate(&a, &x0, &no_input(), dt, horizon).unwrap();
            let t_end = *traj.times().last().unwrap();
            let exact = (a.clone() * t_end).exp() * DVector::from_column_slice(&x0);
            let err = traj
                .final_state()
                .iter()
                .zip(exact.iter())
                .map(|(got, want)| (got - want).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "terminal error {err:e} at dt={dt}");
        }
    }

    #[test]
    fn halving_the_step_scales_error_by_sixteen() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-2.0, 0.3, 0.1, 0.0, -1.0, 0.4, 0.2, 0.0, -1.5],
        );
        let x0 = [1.0, -0.5, 0.8];
        let horizon = 2.0;
        let terminal_error = |dt: f64| {
            let traj = simulate(&a, &x0, &no_input(), dt, horizon).unwrap();
            let t_end = *traj.times().last().unwrap();
            let exact = (a.clone() * t_end).exp() * DVector::from_column_slice(&x0);
            traj.final_state()
                .iter()
                .zip(exact.iter())
                .map(|(got, want)| (got - want).abs())
                .fold(0.0, f64::max)
        };
        let coarse = terminal_error(0.1);
        let fine = terminal_error(0.05);
        let ratio = coarse / fine;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "expected ~16x shrink, got {ratio:.1} ({coarse:e} -> {fine:e})"
        );
    }

    #[test]
    fn fitted_rate_recovers_a_single_pole() {
        let traj = simulate(&chain_two(), &[0.0, 1.0], &no_input(), 0.01, 6.0).unwrap();
        let report = fit_rates(&traj, &[1.0, 1.0]).unwrap();
        let rate = report.per_agent[0].unwrap();
        assert!((rate - 1.0).abs() < 0.01, "fitted {rate}");
        // The leader sits on target for the whole run: nothing to fit.
        assert_eq!(report.per_agent[1], None);
        assert_eq!(report.slowest, rate);
    }

    #[test]
    fn fit_rates_needs_signal_above_floor() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let traj = simulate(&a, &[1.0, 1.0], &no_input(), 0.01, 2.0).unwrap();
        assert_eq!(fit_rates(&traj, &[1.0, 1.0]).err(), Some(Error::SignalBelowFloor));
    }

    #[test]
    fn slowest_fitted_rate_tracks_the_dominant_mode() {
        let g = crate::graph::tests::five_agent_graph();
        let gains = assign_diagonal(&g, &[-3.0, -3.5, -4.0, -5.0]).unwrap();
        let f = [-3.0, 2.0, -2.0, -1.0, 1.0];
        let full = solve_betas(&g, &gains, &f, &BetaPolicy::MinNorm).unwrap();
        let a = build_closed_loop(&g, &full).unwrap();
        // Perturb the followers only; the leader starts on target so it
        // contributes no error signal under a withdrawn input.
        let x0 = [-3.4, 2.5, -1.7, -0.6, 1.0];
        let traj = simulate(&a, &x0, &no_input(), default_dt(5.0), 8.0).unwrap();
        let report = fit_rates(&traj, &f).unwrap();
        assert!(
            (report.slowest - 3.0).abs() < 0.15,
            "slowest {}",
            report.slowest
        );
        // Tail convergence is monotone once the dominant mode rules.
        let err = traj.formation_error(&f).unwrap();
        let tail = &err[3 * err.len() / 4..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn axes_integrate_independently_and_deterministically() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let law = LeaderLaw::Proportional {
            gain: 2.0,
            target: 1.5,
        };
        let axes = simulate_nd(
            &[a.clone(), a.clone()],
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[law, law],
            0.01,
            3.0,
        )
        .unwrap();
        assert_eq!(axes[0], axes[1]);
        let single = simulate(&a, &[0.0, 0.0], &law, 0.01, 3.0).unwrap();
        assert_eq!(axes[0], single);

        assert!(matches!(
            simulate_nd(std::slice::from_ref(&a), &[], &[law], 0.01, 1.0),
            Err(Error::DimensionMismatch { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn segments_stitch_with_a_continuous_time_base() {
        let a = chain_two();
        let law = LeaderLaw::Proportional {
            gain: 1.0,
            target: 2.0,
        };
        let mut first = simulate(&a, &[0.0, 0.0], &law, 0.1, 1.0).unwrap();
        let resume = first.final_state().to_vec();
        let law2 = LeaderLaw::Proportional {
            gain: 1.0,
            target: -1.0,
        };
        let second = simulate(&a, &resume, &law2, 0.1, 1.0).unwrap();
        first.extend_with(&second).unwrap();
        assert_eq!(first.len(), 21);
        assert!(first.times().windows(2).all(|w| w[1] > w[0]));
        let gaps: Vec<f64> = first.times().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|d| (d - 0.1).abs() < 1e-12));
        // The junction input reflects the second segment's law.
        assert!(first.inputs()[10] < 0.0);

        let mismatched = simulate(&a, &resume, &law2, 0.05, 1.0).unwrap();
        assert!(matches!(
            first.extend_with(&mismatched),
            Err(Error::InvalidStep { .. })
        ));
    }

    #[test]
    fn step_size_guards() {
        let a = DMatrix::from_row_slice(2, 2, &[-100.0, 1.0, 0.0, 0.0]);
        match simulate(&a, &[0.0, 0.0], &no_input(), 0.1, 1.0) {
            Err(Error::UnstableStep { max_eig, product, .. }) => {
                assert_eq!(max_eig, 100.0);
                assert!(product > RK4_STABILITY_LIMIT);
            }
            other => panic!("expected UnstableStep, got {other:?}"),
        }
        // An active law adds a pole at -gain, which can be the stiff one.
        let tame = chain_two();
        let hot = LeaderLaw::Proportional {
            gain: 1000.0,
            target: 1.0,
        };
        assert!(matches!(
            simulate(&tame, &[0.0, 0.0], &hot, 0.1, 1.0),
            Err(Error::UnstableStep { .. })
        ));

        assert!(matches!(
            simulate(&tame, &[0.0, 0.0], &no_input(), -0.1, 1.0),
            Err(Error::InvalidStep { .. })
        ));
        assert!(matches!(
            simulate(&tame, &[0.0, 0.0], &no_input(), 0.1, 0.0),
            Err(Error::InvalidHorizon { .. })
        ));
        assert!(matches!(
            simulate(&tame, &[0.0], &no_input(), 0.1, 1.0),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let bad_gain = LeaderLaw::Proportional {
            gain: 0.0,
            target: 1.0,
        };
        assert!(matches!(
            simulate(&tame, &[0.0, 0.0], &bad_gain, 0.1, 1.0),
            Err(Error::InvalidLeaderGain { .. })
        ));
    }

    #[test]
    fn default_step_clamps() {
        assert_eq!(default_dt(5.0), 0.1 / 5.0);
        assert_eq!(default_dt(0.0), 0.1);
        assert_eq!(default_dt(f64::INFINITY), 0.1);
        assert_eq!(default_dt(1e9), 1e-4);
        assert_eq!(default_dt(0.01), 0.1);
    }
}
