//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by graph construction, gain synthesis, the matching
/// oracle, the offset protocol, and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent count must be at least 2, got {n}")]
    InvalidAgentCount { n: usize },

    #[error("agent index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: usize, to: usize },

    #[error("self-loop on agent {agent} (self-feedback belongs to the gain set, not the graph)")]
    SelfLoop { agent: usize },

    #[error("directed cycle through agents {0:?}")]
    CycleDetected(Vec<usize>),

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("more than {limit} perfect matchings exist")]
    LimitExceeded { limit: usize },

    #[error("edge set is not a perfect matching of the bipartite graph: {reason}")]
    NotPerfectMatching { reason: String },

    #[error("matrix of size {n} exceeds the matching-enumeration guard (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("graph violates the synthesis hypotheses: {reason}")]
    StructuralViolation { reason: String },

    #[error("expected {expected} follower poles, got {got}")]
    PoleCountMismatch { expected: usize, got: usize },

    #[error("follower pole must be nonzero (agent {agent})")]
    ZeroFollowerPole { agent: usize },

    #[error("row of agent {agent} is unsolvable: {reason}")]
    RowUnsolvable { agent: usize, reason: String },

    #[error("tree-unique policy requires exactly one in-neighbor, agent {agent} has {in_degree}")]
    PolicyMismatch { agent: usize, in_degree: usize },

    #[error("pinned gains are inconsistent: {reason}")]
    PinnedInconsistent { reason: String },

    #[error("no gain assigned for edge {from} -> {to}")]
    IncompleteGains { from: usize, to: usize },

    #[error("no offset stored for edge {from} -> {to}")]
    MissingOffset { from: usize, to: usize },

    #[error("agents {0:?} never resolve a target (no path from the leader)")]
    Unreachable(Vec<usize>),

    #[error("offsets disagree at agent {agent}: targets via different in-neighbors differ by {spread}")]
    InconsistentOffsets { agent: usize, spread: f64 },

    #[error("step {dt} is unstable for eigenvalue magnitude {max_eig} (dt * |lambda| = {product} > {bound})")]
    UnstableStep {
        dt: f64,
        max_eig: f64,
        product: f64,
        bound: f64,
    },

    #[error("step size must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },

    #[error("horizon must be positive and finite, got {horizon}")]
    InvalidHorizon { horizon: f64 },

    #[error("leader input gain must be positive and finite, got {gain}")]
    InvalidLeaderGain { gain: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("error signal is already at the numerical floor; no rate can be fitted")]
    SignalBelowFloor,
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
