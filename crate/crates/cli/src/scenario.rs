//! Scenario files: one TOML document describing the graph, the pole set,
//! the formation per axis, and how to run the simulation.
//!
//! A formation axis is given either as absolute positions or as relative
//! offsets plus a leader target (exactly one of the two). Offset axes may
//! carry a retarget schedule: at each listed time the leader target moves
//! and the gain rows are recomputed by the distributed protocol.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use formctl_core::graph::CommGraph;
use formctl_core::protocol::OffsetTable;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    graph: GraphSection,
    /// Pole list assigned against agent index order (sorted internally).
    poles: Option<Vec<f64>>,
    /// Explicit agent -> pole pairs, for designs where the assignment
    /// order matters.
    poles_by_agent: Option<Vec<(usize, f64)>>,
    #[serde(rename = "axis")]
    axes: Vec<AxisSection>,
    #[serde(default)]
    sim: SimSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    agents: usize,
    leader: usize,
    /// `[from, to]` pairs: agent `to` listens to agent `from`.
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisSection {
    name: Option<String>,
    /// Absolute target positions, one per agent.
    positions: Option<Vec<f64>>,
    /// `[i, j, gamma]` entries: agent i's desired offset from in-neighbor j.
    offsets: Option<Vec<(usize, usize, f64)>>,
    leader_target: Option<f64>,
    /// `[time, new_target]` pairs, ascending times.
    retargets: Option<Vec<(f64, f64)>>,
    /// Initial positions (defaults to all zeros).
    initial: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: Option<f64>,
    horizon: Option<f64>,
    leader_gain: Option<f64>,
    withdraw_at: Option<f64>,
    withdraw_on_converge: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<String>,
    pub svg: Option<String>,
    pub path_svg: Option<String>,
    pub gains: Option<String>,
}

/// How the follower poles are matched to agents.
#[derive(Debug, Clone)]
pub enum PoleSpec {
    /// Sorted descending, then assigned to followers in index order.
    Sorted(Vec<f64>),
    /// One pole pinned to each follower explicitly.
    ByAgent(BTreeMap<usize, f64>),
}

impl PoleSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            PoleSpec::Sorted(v) => v.clone(),
            PoleSpec::ByAgent(m) => m.values().copied().collect(),
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values().iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    pub fn min_magnitude(&self) -> f64 {
        self.values()
            .iter()
            .fold(f64::INFINITY, |m, p| m.min(p.abs()))
    }
}

/// One spatial dimension of the formation.
#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub spec: FormationSpec,
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum FormationSpec {
    Absolute(Vec<f64>),
    Offsets {
        table: OffsetTable,
        leader_target: f64,
        retargets: Vec<(f64, f64)>,
    },
}

/// Leader-law selection prior to knowing the gain/target values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    Proportional,
    WithdrawAt(f64),
    WithdrawOnConverge(f64),
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub leader_gain: Option<f64>,
    pub law: LawKind,
}

/// A parsed and validated scenario.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub graph: CommGraph,
    pub poles: PoleSpec,
    pub axes: Vec<Axis>,
    pub sim: SimParams,
    pub output: OutputSection,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    validate(file, path)
}

fn validate(file: ScenarioFile, path: &Path) -> Result<Scenario, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));

    let n = file.graph.agents;
    let graph = CommGraph::new(n, file.graph.leader, &file.graph.edges)
        .map_err(|e| bad(format!("graph: {e}")))?;

    let poles = match (file.poles, file.poles_by_agent) {
        (Some(list), None) => {
            if list.len() != n - 1 {
                return Err(bad(format!(
                    "expected {} poles for {} agents, got {}",
                    n - 1,
                    n,
                    list.len()
                )));
            }
            PoleSpec::Sorted(list)
        }
        (None, Some(pairs)) => {
            let mut map = BTreeMap::new();
            for (agent, pole) in pairs {
                if map.insert(agent, pole).is_some() {
                    return Err(bad(format!("agent {agent} listed twice in poles_by_agent")));
                }
            }
            if map.len() != n - 1 {
                return Err(bad(format!(
                    "poles_by_agent must cover all {} followers, got {}",
                    n - 1,
                    map.len()
                )));
            }
            PoleSpec::ByAgent(map)
        }
        (None, None) => return Err(bad("one of poles / poles_by_agent is required".into())),
        (Some(_), Some(_)) => {
            return Err(bad("poles and poles_by_agent are mutually exclusive".into()))
        }
    };

    if file.axes.is_empty() {
        return Err(bad("at least one [[axis]] block is required".into()));
    }
    let mut axes = Vec::with_capacity(file.axes.len());
    for (k, axis) in file.axes.into_iter().enumerate() {
        let name = axis.name.unwrap_or_else(|| format!("axis{}", k + 1));
        let spec = match (axis.positions, axis.offsets) {
            (Some(positions), None) => {
                if axis.leader_target.is_some() || axis.retargets.is_some() {
                    return Err(bad(format!(
                        "axis {name}: leader_target/retargets only apply to offset axes"
                    )));
                }
                if positions.len() != n {
                    return Err(bad(format!(
                        "axis {name}: {} positions for {n} agents",
                        positions.len()
                    )));
                }
                FormationSpec::Absolute(positions)
            }
            (None, Some(entries)) => {
                let flat: Vec<((usize, usize), f64)> = entries
                    .iter()
                    .map(|&(i, j, gamma)| ((i, j), gamma))
                    .collect();
                let table = OffsetTable::new(n, &flat)
                    .map_err(|e| bad(format!("axis {name}: {e}")))?;
                let leader_target = axis.leader_target.ok_or_else(|| {
                    bad(format!("axis {name}: offset axes need a leader_target"))
                })?;
                let retargets = axis.retargets.unwrap_or_default();
                if retargets.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(bad(format!(
                        "axis {name}: retarget times must be strictly increasing"
                    )));
                }
                if retargets.first().is_some_and(|r| r.0 <= 0.0) {
                    return Err(bad(format!("axis {name}: retarget times must be positive")));
                }
                FormationSpec::Offsets {
                    table,
                    leader_target,
                    retargets,
                }
            }
            (Some(_), Some(_)) => {
                return Err(bad(format!(
                    "axis {name}: positions and offsets are mutually exclusive"
                )))
            }
            (None, None) => {
                return Err(bad(format!("axis {name}: needs positions or offsets")))
            }
        };
        if let Some(initial) = &axis.initial {
            if initial.len() != n {
                return Err(bad(format!(
                    "axis {name}: {} initial positions for {n} agents",
                    initial.len()
                )));
            }
        }
        axes.push(Axis {
            name,
            spec,
            initial: axis.initial,
        });
    }

    // Retarget schedules must agree across axes: the formation moves as
    // one body, so every offset axis lists the same switch times.
    let schedules: Vec<Vec<f64>> = axes
        .iter()
        .filter_map(|a| match &a.spec {
            FormationSpec::Offsets { retargets, .. } if !retargets.is_empty() => {
                Some(retargets.iter().map(|r| r.0).collect())
            }
            _ => None,
        })
        .collect();
    if let Some(first) = schedules.first() {
        if schedules.iter().any(|s| s != first) {
            return Err(bad("retarget times differ between axes".into()));
        }
        if axes.iter().any(|a| {
            matches!(&a.spec, FormationSpec::Absolute(_))
                || matches!(&a.spec, FormationSpec::Offsets { retargets, .. } if retargets.is_empty())
        }) {
            return Err(bad(
                "a retarget schedule requires every axis to be an offset axis with the same times"
                    .into(),
            ));
        }
    }

    let law = match (file.sim.withdraw_at, file.sim.withdraw_on_converge) {
        (None, None) => LawKind::Proportional,
        (Some(t), None) => LawKind::WithdrawAt(t),
        (None, Some(tol)) => LawKind::WithdrawOnConverge(tol),
        (Some(_), Some(_)) => {
            return Err(bad(
                "withdraw_at and withdraw_on_converge are mutually exclusive".into(),
            ))
        }
    };
    for (key, value) in [
        ("dt", file.sim.dt),
        ("horizon", file.sim.horizon),
        ("leader_gain", file.sim.leader_gain),
    ] {
        if value.is_some_and(|v| !v.is_finite() || v <= 0.0) {
            return Err(bad(format!("sim.{key} must be positive and finite")));
        }
    }

    let name = file
        .name
        .unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        });

    Ok(Scenario {
        name,
        graph,
        poles,
        axes,
        sim: SimParams {
            dt: file.sim.dt,
            horizon: file.sim.horizon,
            leader_gain: file.sim.leader_gain,
            law,
        },
        output: file.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(body: &str) -> Result<Scenario, CliError> {
        let file: ScenarioFile = toml::from_str(body).map_err(|e| CliError::Input(e.to_string()))?;
        validate(file, &PathBuf::from("inline.toml"))
    }

    const MINIMAL: &str = r#"
        poles = [-1.0]
        [graph]
        agents = 2
        leader = 2
        edges = [[2, 1]]
        [[axis]]
        positions = [1.0, 2.0]
    "#;

    #[test]
    fn minimal_scenario_parses() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.graph.agent_count(), 2);
        assert!(matches!(s.axes[0].spec, FormationSpec::Absolute(_)));
        assert_eq!(s.axes[0].name, "axis1");
        assert_eq!(s.sim.law, LawKind::Proportional);
    }

    #[test]
    fn exactly_one_formation_flavor_per_axis() {
        let both = MINIMAL.replace(
            "positions = [1.0, 2.0]",
            "positions = [1.0, 2.0]\noffsets = [[1, 2, -1.0]]\nleader_target = 2.0",
        );
        assert!(parse(&both).is_err());
        let neither = MINIMAL.replace("positions = [1.0, 2.0]", "name = \"x\"");
        assert!(parse(&neither).is_err());
        let no_target = MINIMAL.replace("positions = [1.0, 2.0]", "offsets = [[1, 2, -1.0]]");
        assert!(parse(&no_target).is_err());
    }

    #[test]
    fn pole_count_is_enforced() {
        let wrong = MINIMAL.replace("poles = [-1.0]", "poles = [-1.0, -2.0]");
        let err = parse(&wrong).unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
        let by_agent = MINIMAL.replace("poles = [-1.0]", "poles_by_agent = [[1, -1.0]]");
        assert!(matches!(
            parse(&by_agent).unwrap().poles,
            PoleSpec::ByAgent(_)
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let extra = format!("{MINIMAL}\n[sim]\ntypo_key = 1.0\n");
        assert!(parse(&extra).is_err());
    }

    #[test]
    fn retarget_times_must_increase() {
        let body = r#"
            poles = [-1.0]
            [graph]
            agents = 2
            leader = 2
            edges = [[2, 1]]
            [[axis]]
            offsets = [[1, 2, -1.0]]
            leader_target = 2.0
            retargets = [[3.0, 5.0], [2.0, 6.0]]
        "#;
        assert!(parse(body).is_err());
    }
}
