//! Distributed gain computation from relative offsets.
//!
//! No agent knows the absolute formation. Agent `i` holds only its own
//! diagonal entry and one offset `gamma_ij = f_i - f_j` per in-neighbor.
//! Targets flood outward from the leader in synchronous rounds
//! (`f_i = f_j + gamma_ij`), and each agent computes its own gain row the
//! moment every in-neighbor's target is known. Moving the whole formation
//! is then a single leader retarget: the offsets never change.
//!
//! Locality is structural: an [`AgentCore`] owns no reference to the rest
//! of the system — the only outside data it ever sees is the inbox of
//! resolved `(neighbor, target)` messages handed to it each round.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::synthesis::{min_norm_row, GainSet};

/// Two resolved in-neighbors must imply the same target within this
/// (relative) tolerance, or the offset data is declared corrupt.
const CONSISTENCY_TOL: f64 = 1e-9;

/// Sparse table of desired relative positions: `(i, j) -> f_i - f_j`,
/// stored for each in-neighbor `j` of each follower `i`, one axis at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTable {
    n: usize,
    gammas: BTreeMap<(usize, usize), f64>,
}

impl OffsetTable {
    pub fn new(n: usize, entries: &[((usize, usize), f64)]) -> Result<Self> {
        let mut gammas = BTreeMap::new();
        for &((i, j), gamma) in entries {
            for index in [i, j] {
                if index == 0 || index > n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if gammas.insert((i, j), gamma).is_some() {
                return Err(Error::DuplicateEdge { from: j, to: i });
            }
        }
        Ok(OffsetTable { n, gammas })
    }

    /// Derives the offsets a concrete formation induces on the graph's
    /// follower-row edges: `gamma_ij = f_i - f_j` for every edge `j -> i`.
    pub fn from_formation(g: &CommGraph, f: &[f64]) -> Result<Self> {
        let n = g.agent_count();
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let gammas = g
            .edges()
            .filter(|&(_, to)| to != g.leader())
            .map(|(from, to)| ((to, from), f[to - 1] - f[from - 1]))
            .collect();
        Ok(OffsetTable { n, gammas })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.gammas.get(&(i, j)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.gammas.iter().map(|(&k, &v)| (k, v))
    }

    /// Checks every identity the sparse table exposes: transitivity
    /// `gamma_ij + gamma_jk = gamma_ik` where all three are stored, and
    /// antisymmetry `gamma_ij = -gamma_ji` where both directions are.
    /// Offsets realizable by absolute positions violate neither.
    pub fn check_cocycle(&self) -> CocycleReport {
        let mut max_violation = 0.0f64;
        let mut checked = 0usize;
        for (&(i, j), &gij) in &self.gammas {
            if let Some(gji) = self.get(j, i) {
                max_violation = f64::max(max_violation, (gij + gji).abs());
                checked += 1;
            }
            for (&(j2, k), &gjk) in self.gammas.range((j, 0)..(j + 1, 0)) {
                debug_assert_eq!(j2, j);
                if let Some(gik) = self.get(i, k) {
                    max_violation = f64::max(max_violation, (gij + gjk - gik).abs());
                    checked += 1;
                }
            }
        }
        CocycleReport {
            max_violation,
            identities_checked: checked,
        }
    }
}

/// Result of [`OffsetTable::check_cocycle`]: the worst violation over all
/// checkable identities (0 when none are checkable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleReport {
    pub max_violation: f64,
    pub identities_checked: usize,
}

/// Everything one agent is allowed to know.
#[derive(Debug, Clone)]
struct AgentCore {
    id: usize,
    /// Own closed-loop diagonal entry.
    diag: f64,
    /// `(j, gamma_ij)` per in-neighbor, ascending by neighbor index.
    gammas: Vec<(usize, f64)>,
    target: Option<f64>,
    resolved_round: Option<usize>,
    betas: Option<Vec<(usize, f64)>>,
}

impl AgentCore {
    fn reset(&mut self) {
        self.target = None;
        self.resolved_round = None;
        self.betas = None;
    }

    fn gamma(&self, j: usize) -> f64 {
        self.gammas
            .iter()
            .find(|&&(nbr, _)| nbr == j)
            .map(|&(_, g)| g)
            .expect("inbox only carries in-neighbor messages")
    }

    /// One synchronous round as seen by this agent: `inbox` holds the
    /// targets of in-neighbors resolved in earlier rounds.
    fn step(&mut self, round: usize, inbox: &[(usize, f64)], events: &mut Vec<ProtocolEvent>) -> Result<bool> {
        let mut progressed = false;
        if self.target.is_none() {
            if let Some(&(j, fj)) = inbox.first() {
                self.target = Some(fj + self.gamma(j));
                self.resolved_round = Some(round);
                events.push(ProtocolEvent::Resolved {
                    round,
                    agent: self.id,
                    target: self.target.unwrap(),
                });
                progressed = true;
            }
        }
        if let Some(fi) = self.target {
            let spread = inbox
                .iter()
                .map(|&(j, fj)| (fj + self.gamma(j) - fi).abs())
                .fold(0.0, f64::max);
            if spread > CONSISTENCY_TOL * (1.0 + fi.abs()) {
                return Err(Error::InconsistentOffsets {
                    agent: self.id,
                    spread,
                });
            }
            if self.betas.is_none() && inbox.len() == self.gammas.len() {
                let row = min_norm_row(self.id, -(self.diag * fi), inbox)?;
                events.push(ProtocolEvent::GainsComputed {
                    round,
                    agent: self.id,
                    betas: row.clone(),
                });
                self.betas = Some(row);
                progressed = true;
            }
        }
        Ok(progressed)
    }

    fn complete(&self) -> bool {
        self.betas.is_some()
    }
}

/// One entry of a protocol run's event log.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolEvent {
    /// The agent learned its absolute target.
    Resolved { round: usize, agent: usize, target: f64 },
    /// The agent had every in-neighbor target and computed its gain row.
    GainsComputed {
        round: usize,
        agent: usize,
        betas: Vec<(usize, f64)>,
    },
}

/// Summary of one resolution sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Rounds until every agent knew its target (the flood depth).
    pub resolution_rounds: usize,
    /// Rounds until every gain row was computed (>= resolution_rounds).
    pub gain_rounds: usize,
    pub events: Vec<ProtocolEvent>,
}

/// A set of agents ready to resolve a formation from offsets.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    graph: CommGraph,
    cores: Vec<AgentCore>,
    last_target: Option<f64>,
}

/// Wires up the per-agent state. Every follower-row edge needs an offset;
/// deeper structural problems surface when the run stalls.
pub fn init_protocol(g: &CommGraph, offsets: &OffsetTable, gains: &GainSet) -> Result<ProtocolRun> {
    let n = g.agent_count();
    if offsets.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: offsets.size(),
        });
    }
    if gains.agent_count() != n || gains.leader() != g.leader() {
        return Err(Error::StructuralViolation {
            reason: "gain set does not describe this graph".into(),
        });
    }
    let mut cores = Vec::with_capacity(n + 1);
    cores.push(AgentCore {
        id: 0,
        diag: 0.0,
        gammas: Vec::new(),
        target: None,
        resolved_round: None,
        betas: None,
    }); // index 0 unused
    for i in 1..=n {
        let mut gammas = Vec::new();
        if i != g.leader() {
            for j in g.in_neighbors(i) {
                match offsets.get(i, j) {
                    Some(gamma) => gammas.push((j, gamma)),
                    None => return Err(Error::MissingOffset { from: j, to: i }),
                }
            }
        }
        cores.push(AgentCore {
            id: i,
            diag: gains.diagonal(i),
            gammas,
            target: None,
            resolved_round: None,
            betas: None,
        });
    }
    Ok(ProtocolRun {
        graph: g.clone(),
        cores,
        last_target: None,
    })
}

impl ProtocolRun {
    /// Floods the leader target through the graph in synchronous rounds.
    /// Round 0 resolves the leader; in round k every agent that can see a
    /// resolved in-neighbor adopts `f_j + gamma_ij` and, once all its
    /// in-neighbors are resolved, computes its gain row locally.
    pub fn run(&mut self, leader_target: f64) -> Result<RunOutcome> {
        for core in &mut self.cores[1..] {
            core.reset();
        }
        let leader = self.graph.leader();
        let mut events = Vec::new();
        {
            let core = &mut self.cores[leader];
            core.target = Some(leader_target);
            core.resolved_round = Some(0);
            core.betas = Some(Vec::new()); // the leader has no feedback row
            events.push(ProtocolEvent::Resolved {
                round: 0,
                agent: leader,
                target: leader_target,
            });
        }
        self.last_target = Some(leader_target);

        let mut resolution_rounds = 0;
        let mut gain_rounds = 0;
        for round in 1..=2 * self.cores.len() + 2 {
            if self.cores[1..].iter().all(AgentCore::complete) {
                break;
            }
            let broadcast: BTreeMap<usize, f64> = self.cores[1..]
                .iter()
                .filter_map(|c| c.target.map(|t| (c.id, t)))
                .collect();
            let mut progressed = false;
            for i in 1..=self.graph.agent_count() {
                if i == leader || self.cores[i].complete() {
                    continue;
                }
                let inbox: Vec<(usize, f64)> = self.cores[i]
                    .gammas
                    .iter()
                    .filter_map(|&(j, _)| broadcast.get(&j).map(|&fj| (j, fj)))
                    .collect();
                if self.cores[i].step(round, &inbox, &mut events)? {
                    progressed = true;
                    if self.cores[i].resolved_round == Some(round) {
                        resolution_rounds = round;
                    }
                    if self.cores[i].complete() {
                        gain_rounds = round;
                    }
                }
            }
            if !progressed {
                let stuck: Vec<usize> = self.cores[1..]
                    .iter()
                    .filter(|c| c.target.is_none())
                    .map(|c| c.id)
                    .collect();
                return Err(Error::Unreachable(stuck));
            }
        }
        Ok(RunOutcome {
            resolution_rounds,
            gain_rounds,
            events,
        })
    }

    /// Moves the whole formation by moving only the leader target: offsets
    /// and diagonal gains stay fixed, targets re-flood, every gain row is
    /// recomputed locally. The new targets are the old ones translated by
    /// the change in leader target.
    pub fn retarget(&mut self, new_leader_target: f64) -> Result<RunOutcome> {
        self.run(new_leader_target)
    }

    /// Resolved targets in agent order, once every agent has one.
    pub fn resolved_targets(&self) -> Option<Vec<f64>> {
        self.cores[1..].iter().map(|c| c.target).collect()
    }

    /// Assembles the distributed answers into one gain set, once complete.
    pub fn gain_set(&self) -> Result<GainSet> {
        let mut betas = BTreeMap::new();
        for core in &self.cores[1..] {
            match &core.betas {
                Some(row) => {
                    for &(j, beta) in row {
                        betas.insert((core.id, j), beta);
                    }
                }
                None => {
                    let j = core.gammas.first().map(|&(j, _)| j).unwrap_or(0);
                    return Err(Error::IncompleteGains {
                        from: j,
                        to: core.id,
                    });
                }
            }
        }
        let diag: Vec<f64> = self.cores[1..].iter().map(|c| c.diag).collect();
        GainSet::from_parts(&self.graph, &diag, &betas)
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }
}
