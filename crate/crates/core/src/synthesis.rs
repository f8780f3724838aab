//! Gain computation for the closed loop `x' = Ax + e_n v_n`.
//!
//! On an acyclic topology the diagonal of `A` *is* the spectrum, so pole
//! placement reduces to writing the desired poles on the diagonal
//! ([`assign_diagonal`]). The formation enters only through the inter-agent
//! gains: each follower row must satisfy `a_ii f_i + sum_j beta_ij f_j = 0`,
//! making the target vector an equilibrium ([`solve_betas`]). The two
//! computations never interact — the diagonal fixes the rates, the betas fix
//! the shape.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::pencil::{Matching, PencilGraph};
use crate::poly;

/// Max per-pole distance for a spectrum to count as matching.
pub const SPECTRUM_TOL: f64 = 1e-6;
/// Max `‖A·F‖∞` for the formation to count as an equilibrium.
pub const KERNEL_TOL: f64 = 1e-9;
/// Relative slack allowed when every gain in a row is pinned by the caller.
const PIN_TOL: f64 = 1e-9;

/// Complete description of a decentralized feedback design: closed-loop
/// diagonal entries per agent plus inter-agent gains on the graph edges.
///
/// The stored diagonal entry `a_ii` is the canonical quantity; the gain an
/// agent actually applies to its own state is the negation, see
/// [`GainSet::self_feedback`].
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    n: usize,
    leader: usize,
    diag: Vec<f64>,
    betas: BTreeMap<(usize, usize), f64>,
}

impl GainSet {
    /// Assembles a gain set from explicit values, for designs that come
    /// from outside the synthesis path (e.g. verifying a hand-written
    /// cyclic design). `diag` is in agent order; the leader entry must be
    /// zero. `betas` keys are `(listener, source)` pairs on graph edges.
    pub fn from_parts(
        g: &CommGraph,
        diag: &[f64],
        betas: &BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let n = g.agent_count();
        if diag.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: diag.len(),
            });
        }
        let leader = g.leader();
        if diag[leader - 1] != 0.0 {
            return Err(Error::StructuralViolation {
                reason: format!("leader (agent {leader}) diagonal entry must be 0"),
            });
        }
        for &(i, j) in betas.keys() {
            if i == leader {
                return Err(Error::StructuralViolation {
                    reason: format!("leader (agent {leader}) takes no feedback, got gain ({i}, {j})"),
                });
            }
            if !g.has_edge(j, i) {
                return Err(Error::StructuralViolation {
                    reason: format!("gain ({i}, {j}) has no matching edge {j} -> {i}"),
                });
            }
        }
        let mut full = vec![0.0; n + 1];
        full[1..].copy_from_slice(diag);
        Ok(GainSet {
            n,
            leader,
            diag: full,
            betas: betas.clone(),
        })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    /// Closed-loop diagonal entry `a_ii` (a pole of the system when the
    /// topology is acyclic). The leader's is always 0.
    pub fn diagonal(&self, agent: usize) -> f64 {
        self.diag[agent]
    }

    /// The gain the agent applies to its own state: `-a_ii`.
    pub fn self_feedback(&self, agent: usize) -> f64 {
        -self.diag[agent]
    }

    /// Gain agent `i` applies to the state of in-neighbor `j`, if assigned.
    pub fn beta(&self, i: usize, j: usize) -> Option<f64> {
        self.betas.get(&(i, j)).copied()
    }

    /// All assigned inter-agent gains, ascending by `(listener, source)`.
    pub fn betas(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.betas.iter().map(|(&k, &v)| (k, v))
    }

    /// Followers whose diagonal entry does not decay (`a_ii >= 0`); the
    /// design still verifies algebraically but will not converge.
    pub fn non_decaying_agents(&self) -> Vec<usize> {
        (1..=self.n)
            .filter(|&i| i != self.leader && self.diag[i] >= 0.0)
            .collect()
    }

    /// Largest pole magnitude — the stiffness that bounds integrator steps.
    pub fn max_pole_magnitude(&self) -> f64 {
        self.diag[1..].iter().fold(0.0, |m, d| f64::max(m, d.abs()))
    }
}

/// Writes the requested poles onto the follower diagonals: poles sorted
/// descending, followers in agent-index order; the leader gets 0. Requires
/// the topology under which diagonals are provably the spectrum — a
/// spanning tree rooted at the leader and no directed cycle.
pub fn assign_diagonal(g: &CommGraph, poles: &[f64]) -> Result<GainSet> {
    check_synthesis_structure(g)?;
    let followers = g.followers();
    if poles.len() != followers.len() {
        return Err(Error::PoleCountMismatch {
            expected: followers.len(),
            got: poles.len(),
        });
    }
    let mut sorted = poles.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let per_agent: BTreeMap<usize, f64> = followers.into_iter().zip(sorted).collect();
    assign_checked(g, per_agent)
}

/// Same contract as [`assign_diagonal`] but with a caller-chosen
/// agent-to-pole map, which must cover exactly the followers.
pub fn assign_diagonal_explicit(g: &CommGraph, per_agent: &BTreeMap<usize, f64>) -> Result<GainSet> {
    check_synthesis_structure(g)?;
    let followers = g.followers();
    if per_agent.len() != followers.len() {
        return Err(Error::PoleCountMismatch {
            expected: followers.len(),
            got: per_agent.len(),
        });
    }
    for &agent in per_agent.keys() {
        if agent == 0 || agent > g.agent_count() {
            return Err(Error::IndexOutOfRange {
                index: agent,
                n: g.agent_count(),
            });
        }
        if agent == g.leader() {
            return Err(Error::StructuralViolation {
                reason: format!("agent {agent} is the leader; its pole is structurally 0"),
            });
        }
    }
    assign_checked(g, per_agent.clone())
}

fn assign_checked(g: &CommGraph, per_agent: BTreeMap<usize, f64>) -> Result<GainSet> {
    let n = g.agent_count();
    let mut diag = vec![0.0; n + 1];
    for (agent, pole) in per_agent {
        if pole == 0.0 {
            return Err(Error::ZeroFollowerPole { agent });
        }
        diag[agent] = pole;
    }
    Ok(GainSet {
        n,
        leader: g.leader(),
        diag,
        betas: BTreeMap::new(),
    })
}

fn check_synthesis_structure(g: &CommGraph) -> Result<()> {
    if !g.has_rooted_spanning_tree() {
        return Err(Error::StructuralViolation {
            reason: format!(
                "agents {:?} are unreachable from the leader",
                g.unreachable_agents()
            ),
        });
    }
    if let Some(cycle) = g.find_cycle() {
        return Err(Error::StructuralViolation {
            reason: format!("directed cycle through agents {cycle:?}"),
        });
    }
    Ok(())
}

/// How to resolve follower rows with more than one in-neighbor, where the
/// single row equation no longer determines the gains.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPolicy {
    /// Demand single in-neighbors everywhere and use the closed form
    /// `beta_ij = -a_ii f_i / f_j`.
    TreeUnique,
    /// Smallest-norm solution of each row equation.
    MinNorm,
    /// Fix the given `(listener, source)` gains and solve the rest of each
    /// row by minimum norm.
    Pinned(BTreeMap<(usize, usize), f64>),
}

/// Smallest-norm solution of `sum_j beta_j * f_j = target` over the given
/// neighbor targets. The single-neighbor case divides directly so the tree
/// closed form and the distributed computation produce identical bits.
pub(crate) fn min_norm_row(
    agent: usize,
    target: f64,
    neighbors: &[(usize, f64)],
) -> Result<Vec<(usize, f64)>> {
    if let [(j, fj)] = *neighbors {
        if fj != 0.0 {
            return Ok(vec![(j, target / fj)]);
        }
        if target == 0.0 {
            return Ok(vec![(j, 0.0)]);
        }
        return Err(Error::RowUnsolvable {
            agent,
            reason: format!("sole in-neighbor {j} has target 0 but the row needs {target}"),
        });
    }
    let norm2: f64 = neighbors.iter().map(|&(_, fj)| fj * fj).sum();
    if norm2 == 0.0 {
        if target == 0.0 {
            return Ok(neighbors.iter().map(|&(j, _)| (j, 0.0)).collect());
        }
        return Err(Error::RowUnsolvable {
            agent,
            reason: "every in-neighbor target is 0 but the row is nonzero".into(),
        });
    }
    let scale = target / norm2;
    Ok(neighbors.iter().map(|&(j, fj)| (j, scale * fj)).collect())
}

/// Fills in the inter-agent gains so that the target vector `f` is an
/// equilibrium: every follower row satisfies
/// `a_ii f_i + sum_{j in N_i} beta_ij f_j = 0`.
///
/// Edges pointing at the leader are permitted in the graph description but
/// never receive a gain — the leader ignores all feedback.
pub fn solve_betas(
    g: &CommGraph,
    gains: &GainSet,
    f: &[f64],
    policy: &BetaPolicy,
) -> Result<GainSet> {
    let n = g.agent_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if gains.n != n || gains.leader != g.leader() {
        return Err(Error::StructuralViolation {
            reason: "gain set does not describe this graph".into(),
        });
    }
    if let BetaPolicy::Pinned(pins) = policy {
        for &(i, j) in pins.keys() {
            if i == g.leader() || !g.has_edge(j, i) {
                return Err(Error::PinnedInconsistent {
                    reason: format!("pinned gain ({i}, {j}) is not a follower-row edge"),
                });
            }
        }
    }

    let mut betas = BTreeMap::new();
    for i in g.followers() {
        let neighbors: Vec<(usize, f64)> = g
            .in_neighbors(i)
            .into_iter()
            .map(|j| (j, f[j - 1]))
            .collect();
        let target = -(gains.diagonal(i) * f[i - 1]);
        if neighbors.is_empty() {
            if target == 0.0 {
                continue;
            }
            return Err(Error::RowUnsolvable {
                agent: i,
                reason: "no in-neighbors but a nonzero row to satisfy".into(),
            });
        }
        let row = match policy {
            BetaPolicy::TreeUnique => {
                if neighbors.len() != 1 {
                    return Err(Error::PolicyMismatch {
                        agent: i,
                        in_degree: neighbors.len(),
                    });
                }
                min_norm_row(i, target, &neighbors)?
            }
            BetaPolicy::MinNorm => min_norm_row(i, target, &neighbors)?,
            BetaPolicy::Pinned(pins) => {
                let mut remaining = target;
                let mut free = Vec::new();
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &(j, fj) in &neighbors {
                    match pins.get(&(i, j)) {
                        Some(&pinned) => {
                            remaining -= pinned * fj;
                            row.push((j, pinned));
                        }
                        None => free.push((j, fj)),
                    }
                }
                if free.is_empty() {
                    if remaining.abs() > PIN_TOL * (1.0 + target.abs()) {
                        return Err(Error::PinnedInconsistent {
                            reason: format!(
                                "agent {i}: fully pinned row misses its target by {remaining:e}"
                            ),
                        });
                    }
                } else {
                    row.extend(min_norm_row(i, remaining, &free)?);
                }
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            }
        };
        for (j, beta) in row {
            betas.insert((i, j), beta);
        }
    }
    Ok(GainSet {
        n,
        leader: gains.leader,
        diag: gains.diag.clone(),
        betas,
    })
}

/// Assembles the closed-loop matrix: diagonal entries on the diagonal, each
/// gain `beta_ij` at `(i, j)`, zeros elsewhere; the leader row is zero.
pub fn build_closed_loop(g: &CommGraph, gains: &GainSet) -> Result<DMatrix<f64>> {
    let n = g.agent_count();
    if gains.n != n || gains.leader != g.leader() {
        return Err(Error::StructuralViolation {
            reason: "gain set does not describe this graph".into(),
        });
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 1..=n {
        a[(i - 1, i - 1)] = gains.diag[i];
    }
    for ((i, j), beta) in gains.betas() {
        if i == g.leader() || !g.has_edge(j, i) {
            return Err(Error::StructuralViolation {
                reason: format!("gain ({i}, {j}) has no matching edge {j} -> {i}"),
            });
        }
        a[(i - 1, j - 1)] = beta;
    }
    for (from, to) in g.edges() {
        if to != g.leader() && gains.beta(to, from).is_none() {
            return Err(Error::IncompleteGains { from, to });
        }
    }
    Ok(a)
}

/// Eigenvalues of `a`, sorted by real part then imaginary part.
///
/// When the off-diagonal pattern has no cycle the matrix is triangular up
/// to a relabeling, so the diagonal entries are returned verbatim — exact,
/// including repeated poles. Otherwise the characteristic polynomial is
/// expanded and its roots found numerically.
pub fn spectrum(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let pencil = PencilGraph::from_matrix(a)?;
    let acyclic = pencil
        .alternating_cycle(&Matching::diagonal(n))?
        .is_none();
    if acyclic {
        let mut eigs: Vec<Complex64> = (0..n).map(|i| Complex64::new(a[(i, i)], 0.0)).collect();
        eigs.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        Ok(eigs)
    } else {
        poly::roots(&poly::char_poly(a)?)
    }
}

/// `‖A·f‖∞` with a fixed ascending-column summation order, so designs whose
/// row sums cancel exactly in that order report a residual of exactly 0.
pub fn kernel_residual(a: &DMatrix<f64>, f: &[f64]) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: f.len(),
        });
    }
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        let mut acc = 0.0;
        for (j, fj) in f.iter().enumerate() {
            acc += a[(i, j)] * fj;
        }
        worst = f64::max(worst, acc.abs());
    }
    Ok(worst)
}

/// Everything needed to judge a design: is the formation an equilibrium,
/// and is the spectrum the requested one (follower poles plus the
/// structural 0)?
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub kernel_residual: f64,
    pub kernel_ok: bool,
    pub spectrum: Vec<Complex64>,
    /// Largest distance between a requested pole and its nearest computed
    /// pole under greedy pairing; infinite when the counts disagree.
    pub max_spectrum_deviation: f64,
    pub spectrum_matches: bool,
}

/// Checks `a` against the formation and the requested follower poles
/// (the leader's 0 is appended internally). Failures are reported, not
/// raised; only malformed inputs error.
pub fn verify_formation(
    a: &DMatrix<f64>,
    f: &[f64],
    follower_poles: &[Complex64],
) -> Result<VerifyReport> {
    let kernel = kernel_residual(a, f)?;
    let computed = spectrum(a)?;
    let mut expected = follower_poles.to_vec();
    expected.push(Complex64::new(0.0, 0.0));

    let deviation = if expected.len() == computed.len() {
        let mut pool = computed.clone();
        let mut worst = 0.0f64;
        for e in &expected {
            let (idx, dist) = pool
                .iter()
                .enumerate()
                .map(|(k, z)| (k, (z - e).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("pool drains in step with expected");
            worst = f64::max(worst, dist);
            pool.swap_remove(idx);
        }
        worst
    } else {
        f64::INFINITY
    };

    Ok(VerifyReport {
        kernel_residual: kernel,
        kernel_ok: kernel < KERNEL_TOL,
        spectrum: computed,
        max_spectrum_deviation: deviation,
        spectrum_matches: deviation <= SPECTRUM_TOL,
    })
}
