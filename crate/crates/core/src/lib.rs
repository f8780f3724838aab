//! Decentralized gain synthesis and simulation for leader-follower
//! formations of single-integrator agents.
//!
//! The pipeline: describe who listens to whom ([`graph`]), pick the
//! closed-loop poles and solve the per-agent gain equations ([`synthesis`]),
//! optionally let the agents compute their own gains from relative offsets
//! ([`protocol`]), integrate the closed loop ([`sim`]), and cross-check the
//! spectrum against a combinatorial determinant expansion ([`pencil`]).

pub mod error;
pub mod graph;
pub mod pencil;
pub mod poly;
pub mod protocol;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use graph::{CommGraph, StructuralReport};
pub use pencil::{cycle_equivalence, CycleEquivalence, Matching, PencilGraph};
pub use protocol::{init_protocol, OffsetTable, ProtocolEvent, ProtocolRun, RunOutcome};
pub use sim::{default_dt, fit_rates, simulate, simulate_nd, LeaderLaw, RateReport, Trajectory};
pub use synthesis::{
    assign_diagonal, assign_diagonal_explicit, build_closed_loop, solve_betas, spectrum,
    verify_formation, BetaPolicy, GainSet, VerifyReport,
};
