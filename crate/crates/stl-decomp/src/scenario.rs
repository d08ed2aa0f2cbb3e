//! Scenario and parameter files.
//!
//! A scenario is a TOML document describing the system (agent count, state
//! dimension), the communication edges, the task list, and optional solver
//! knobs. A params file carries externally supplied sub-task rectangles
//! (for example hand-computed tables) so they can be audited against the
//! same constraint system that decomposition solves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{Assembly, DecomposeError, DecompositionResult, InstantPolicy};
use crate::decompose::DecomposeOptions;
use crate::geometry::{Halfspace, HyperRect, Predicate};
use crate::graph::UndirectedGraph;
use crate::program::{PartialCheckReport, ProgramError};
use crate::stl::{AtomicTask, GlobalSpec, Interval, Subject, TaskFormula, TemporalOp};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize: {0}")]
    Render(#[from] toml::ser::Error),
    #[error("schema_version {got} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { got: u32 },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), message: message.into() }
}

/// Top-level scenario document. Field layout mirrors the file format
/// exactly so that parse/render round-trips are structural identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub system: SystemSection,
    pub communication: CommunicationSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<TaskSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub agents: usize,
    pub state_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunicationSection {
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub name: String,
    pub subject: SubjectSection,
    pub operator: TemporalOp,
    pub interval: [f64; 2],
    /// Optional satisfaction instant for `eventually` tasks; overrides the
    /// `tbar_policy` option during decomposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instant: Option<f64>,
    pub predicate: PredicateSection,
}

/// `subject = 3` reads the agent's own state; `subject = [i, j]` reads the
/// relative state `x_j - x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubjectSection {
    Single(usize),
    Pair([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredicateSection {
    Ball { center: Vec<f64>, radius: f64 },
    Rect { center: Vec<f64>, size: Vec<f64> },
    Halfspaces { rows: Vec<HalfspaceSection> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSection {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_min: Option<f64>,
    /// Solver duality-gap target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cycle_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tbar_policy: Option<InstantPolicy>,
}

/// Everything a scenario compiles to: the validated specification, the
/// communication graph, and decomposition options with file overrides
/// applied.
#[derive(Debug)]
pub struct CompiledScenario {
    pub spec: GlobalSpec,
    pub comm: UndirectedGraph,
    pub options: DecomposeOptions,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        if scenario.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion { got: scenario.schema_version });
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn render(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let agents = self.system.agents;
        if agents == 0 {
            return Err(invalid("system.agents", "at least one agent is required"));
        }
        if self.system.state_dim == 0 {
            return Err(invalid("system.state_dim", "state dimension must be positive"));
        }
        let dim = self.system.state_dim;

        for (k, &[u, v]) in self.communication.edges.iter().enumerate() {
            let path = format!("communication.edges[{k}]");
            if u == 0 || u > agents || v == 0 || v > agents {
                return Err(invalid(path, format!("agents must be in 1..={agents}")));
            }
            if u == v {
                return Err(invalid(path, "self-edges are not allowed"));
            }
        }

        let mut names = std::collections::BTreeSet::new();
        for (k, task) in self.tasks.iter().enumerate() {
            let path = |field: &str| format!("tasks[{k}].{field}");
            if task.name.is_empty() {
                return Err(invalid(path("name"), "task name must not be empty"));
            }
            if !names.insert(task.name.as_str()) {
                return Err(invalid(path("name"), format!("duplicate task name {:?}", task.name)));
            }
            match task.subject {
                SubjectSection::Single(a) if a == 0 || a > agents => {
                    return Err(invalid(path("subject"), format!("agent {a} not in 1..={agents}")));
                }
                SubjectSection::Pair([i, j]) => {
                    if i == 0 || i > agents || j == 0 || j > agents {
                        return Err(invalid(
                            path("subject"),
                            format!("agents must be in 1..={agents}"),
                        ));
                    }
                    if i == j {
                        return Err(invalid(path("subject"), "pair subject needs two distinct agents"));
                    }
                }
                _ => {}
            }
            let [start, end] = task.interval;
            if !start.is_finite() || !end.is_finite() || start < 0.0 || end < start {
                return Err(invalid(
                    path("interval"),
                    format!("[{start}, {end}] is not a non-negative closed interval"),
                ));
            }
            if let Some(t) = task.instant {
                if task.operator != TemporalOp::Eventually {
                    return Err(invalid(path("instant"), "only eventually tasks take an instant"));
                }
                if t < start || t > end {
                    return Err(invalid(
                        path("instant"),
                        format!("{t} is outside the interval [{start}, {end}]"),
                    ));
                }
            }
            validate_predicate(&task.predicate, dim, &path("predicate"))?;
        }
        Ok(())
    }

    /// Build the specification, graph, and options. Pair tasks are
    /// reoriented to the canonical (lower, higher) subject so all conjuncts
    /// of one edge share a subject; this flips their region through the
    /// origin and changes nothing semantically.
    pub fn compile(&self) -> Result<CompiledScenario, ScenarioError> {
        let agents = self.system.agents;
        let dim = self.system.state_dim;

        let mut comm = UndirectedGraph::new(agents);
        for (k, &[u, v]) in self.communication.edges.iter().enumerate() {
            comm.add_edge(u, v).map_err(|e| {
                invalid(format!("communication.edges[{k}]"), e.to_string())
            })?;
        }
        if !comm.is_connected() {
            return Err(invalid(
                "communication.edges",
                "the communication graph must be connected",
            ));
        }

        let mut collaborative: BTreeMap<(usize, usize), Vec<AtomicTask>> = BTreeMap::new();
        let mut independent: BTreeMap<usize, Vec<AtomicTask>> = BTreeMap::new();
        for (k, section) in self.tasks.iter().enumerate() {
            let interval = Interval::new(section.interval[0], section.interval[1])
                .map_err(|e| invalid(format!("tasks[{k}].interval"), e.to_string()))?;
            let predicate = build_predicate(&section.predicate);
            match section.subject {
                SubjectSection::Single(a) => {
                    independent.entry(a).or_default().push(AtomicTask {
                        name: section.name.clone(),
                        subject: Subject::Single(a),
                        op: section.operator,
                        interval,
                        predicate,
                        instant_hint: section.instant,
                    });
                }
                SubjectSection::Pair([i, j]) => {
                    let (u, v) = (i.min(j), i.max(j));
                    let predicate = if i < j { predicate } else { predicate.negate() };
                    collaborative.entry((u, v)).or_default().push(AtomicTask {
                        name: section.name.clone(),
                        subject: Subject::Pair(u, v),
                        op: section.operator,
                        interval,
                        predicate,
                        instant_hint: section.instant,
                    });
                }
            }
        }

        let collaborative = collaborative
            .into_iter()
            .map(|(key, tasks)| Ok((key, TaskFormula::new(tasks)?)))
            .collect::<Result<_, crate::stl::SpecError>>()
            .map_err(|e| invalid("tasks", e.to_string()))?;
        let independent = independent
            .into_iter()
            .map(|(key, tasks)| Ok((key, TaskFormula::new(tasks)?)))
            .collect::<Result<_, crate::stl::SpecError>>()
            .map_err(|e| invalid("tasks", e.to_string()))?;
        let spec = GlobalSpec::new(agents, dim, collaborative, independent)
            .map_err(|e| invalid("tasks", e.to_string()))?;

        let mut options = DecomposeOptions::default();
        if let Some(section) = &self.options {
            if let Some(nu_min) = section.nu_min {
                if !(nu_min > 0.0) {
                    return Err(invalid("options.nu_min", "must be positive"));
                }
                options.nu_min = nu_min;
            }
            if let Some(tol) = section.tol {
                if !(tol > 0.0) {
                    return Err(invalid("options.tol", "must be positive"));
                }
                options.solver.tol = tol;
            }
            if let Some(len) = section.max_cycle_len {
                options.max_cycle_len = len;
            }
            if let Some(policy) = section.tbar_policy {
                options.instant_policy = policy;
            }
        }

        Ok(CompiledScenario { spec, comm, options })
    }
}

fn validate_predicate(
    predicate: &PredicateSection,
    dim: usize,
    path: &str,
) -> Result<(), ScenarioError> {
    let check_dim = |name: &str, v: &[f64]| {
        if v.len() != dim {
            return Err(invalid(
                format!("{path}.{name}"),
                format!("expected {dim} coordinates, got {}", v.len()),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("{path}.{name}"), "coordinates must be finite"));
        }
        Ok(())
    };
    match predicate {
        PredicateSection::Ball { center, radius } => {
            check_dim("center", center)?;
            if !(*radius > 0.0) || !radius.is_finite() {
                return Err(invalid(format!("{path}.radius"), "radius must be positive"));
            }
        }
        PredicateSection::Rect { center, size } => {
            check_dim("center", center)?;
            check_dim("size", size)?;
            if size.iter().any(|s| !(*s > 0.0)) {
                return Err(invalid(format!("{path}.size"), "sizes must be positive"));
            }
        }
        PredicateSection::Halfspaces { rows } => {
            if rows.is_empty() {
                return Err(invalid(format!("{path}.rows"), "at least one halfspace is required"));
            }
            for (k, row) in rows.iter().enumerate() {
                check_dim(&format!("rows[{k}].normal"), &row.normal)?;
                if row.normal.iter().all(|x| *x == 0.0) {
                    return Err(invalid(
                        format!("{path}.rows[{k}].normal"),
                        "normal must be nonzero",
                    ));
                }
                if !row.offset.is_finite() {
                    return Err(invalid(format!("{path}.rows[{k}].offset"), "must be finite"));
                }
            }
        }
    }
    Ok(())
}

fn build_predicate(section: &PredicateSection) -> Predicate {
    match section {
        PredicateSection::Ball { center, radius } => {
            Predicate::Ball { center: center.clone(), radius: *radius }
        }
        PredicateSection::Rect { center, size } => Predicate::Rect(HyperRect {
            center: center.clone(),
            size: size.clone(),
        }),
        PredicateSection::Halfspaces { rows } => Predicate::Halfspaces(
            rows.iter()
                .map(|r| Halfspace { normal: r.normal.clone(), offset: r.offset })
                .collect(),
        ),
    }
}

/// Externally supplied sub-task rectangles, keyed by task name and edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<ParamsTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsTask {
    /// Name of the decomposed task the rectangles belong to.
    pub task: String,
    pub edges: Vec<ParamsEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsEdge {
    /// Directed edge `[r, s]`: the rectangle constrains `x_s - x_r`. Either
    /// orientation of a path leg is accepted; the center is reflected as
    /// needed.
    pub edge: [usize; 2],
    pub center: Vec<f64>,
    pub size: Vec<f64>,
}

impl ParamsFile {
    pub fn parse(text: &str) -> Result<ParamsFile, ScenarioError> {
        let params: ParamsFile = toml::from_str(text)?;
        if params.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion { got: params.schema_version });
        }
        Ok(params)
    }

    pub fn render(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Params equivalent to a decomposition result, suitable for feeding
    /// back into [`check_params`].
    pub fn from_result(result: &DecompositionResult) -> ParamsFile {
        ParamsFile {
            schema_version: SCHEMA_VERSION,
            tasks: result
                .tasks
                .iter()
                .map(|task| ParamsTask {
                    task: task.name.clone(),
                    edges: task
                        .legs
                        .iter()
                        .map(|leg| ParamsEdge {
                            edge: [leg.edge.0, leg.edge.1],
                            center: leg.center.clone(),
                            size: leg.size.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Result of auditing a params file against the assembled constraints.
/// Only rows whose blocks are all bound by the file are evaluated; rows
/// touching tasks the file omits are counted as skipped.
#[derive(Debug)]
pub struct ParamsAudit {
    pub report: PartialCheckReport,
    pub bound_blocks: usize,
    pub total_blocks: usize,
}

/// Bind the rectangles of `params` to their program blocks and evaluate
/// every fully bound constraint row.
pub fn check_params(assembly: &Assembly, params: &ParamsFile) -> Result<ParamsAudit, ScenarioError> {
    let program = &assembly.program;
    let dim = assembly.dim;
    let mut theta: Vec<Option<f64>> = vec![None; program.num_vars()];
    let mut bound_blocks = 0usize;

    for (ti, entry) in params.tasks.iter().enumerate() {
        let tpath = format!("tasks[{ti}]");
        let plan = assembly
            .plans
            .iter()
            .find(|p| p.name == entry.task)
            .ok_or_else(|| {
                invalid(format!("{tpath}.task"), format!("no decomposed task named {:?}", entry.task))
            })?;
        for (ei, edge) in entry.edges.iter().enumerate() {
            let epath = format!("{tpath}.edges[{ei}]");
            let [r, s] = edge.edge;
            let (leg, forward) = plan
                .legs
                .iter()
                .find_map(|leg| {
                    if leg.edge == (r, s) {
                        Some((leg, true))
                    } else if leg.edge == (s, r) {
                        Some((leg, false))
                    } else {
                        None
                    }
                })
                .ok_or_else(|| {
                    invalid(
                        format!("{epath}.edge"),
                        format!("task {:?} has no leg on ({r}, {s})", entry.task),
                    )
                })?;
            if edge.center.len() != dim || edge.size.len() != dim {
                return Err(invalid(&epath, format!("center and size must have {dim} coordinates")));
            }
            if edge.size.iter().any(|s| !(*s > 0.0)) {
                return Err(invalid(format!("{epath}.size"), "sizes must be positive"));
            }
            if theta[program.center_index(leg.block, 0)].is_some() {
                return Err(invalid(format!("{epath}.edge"), "edge bound twice"));
            }
            for k in 0..dim {
                let c = if forward { edge.center[k] } else { -edge.center[k] };
                theta[program.center_index(leg.block, k)] = Some(c);
                theta[program.size_index(leg.block, k)] = Some(edge.size[k]);
            }
            bound_blocks += 1;
        }
    }

    let report = program.partial_check(&theta)?;
    Ok(ParamsAudit { report, bound_blocks, total_blocks: program.num_blocks() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::assemble;
    use crate::program::RowKind;

    fn ball_scenario() -> &'static str {
        r#"
schema_version = 1

[system]
agents = 3
state_dim = 2

[communication]
edges = [[1, 2], [2, 3]]

[[tasks]]
name = "meet"
subject = [1, 3]
operator = "always"
interval = [0.0, 10.0]
predicate = { type = "ball", center = [1.0, -2.0], radius = 3.0 }

[[tasks]]
name = "goal"
subject = 2
operator = "eventually"
interval = [3.0, 5.0]
instant = 4.0
predicate = { type = "halfspaces", rows = [{ normal = [-1.0, 0.0], offset = -5.0 }] }

[options]
nu_min = 0.002
tbar_policy = "start"
"#
    }

    #[test]
    fn scenario_parses_compiles_and_round_trips() {
        let scenario = Scenario::parse(ball_scenario()).unwrap();
        assert_eq!(scenario.system.agents, 3);
        assert_eq!(scenario.tasks.len(), 2);

        let rendered = scenario.render().unwrap();
        let reparsed = Scenario::parse(&rendered).unwrap();
        assert_eq!(scenario, reparsed);

        let compiled = scenario.compile().unwrap();
        assert_eq!(compiled.spec.agents, 3);
        assert_eq!(compiled.spec.collaborative.len(), 1);
        assert_eq!(compiled.spec.independent.len(), 1);
        assert_eq!(compiled.options.nu_min, 0.002);
        assert_eq!(compiled.options.instant_policy, InstantPolicy::Start);
        assert!(compiled.comm.has_edge(1, 2));
    }

    #[test]
    fn reversed_pair_subjects_are_reoriented() {
        let text = ball_scenario().replace("subject = [1, 3]", "subject = [3, 1]");
        let compiled = Scenario::parse(&text).unwrap().compile().unwrap();
        let formula = &compiled.spec.collaborative[&(1, 3)];
        assert_eq!(formula.subject(), Subject::Pair(1, 3));
        match &formula.conjuncts()[0].predicate {
            Predicate::Ball { center, .. } => assert_eq!(center, &vec![-1.0, 2.0]),
            other => panic!("expected ball, got {other:?}"),
        }
    }

    #[test]
    fn validation_errors_carry_field_paths() {
        let cases = [
            ("interval = [0.0, 10.0]", "interval = [5.0, 3.0]", "tasks[0].interval"),
            ("radius = 3.0", "radius = -1.0", "tasks[0].predicate.radius"),
            ("subject = [1, 3]", "subject = [1, 1]", "tasks[0].subject"),
            ("edges = [[1, 2], [2, 3]]", "edges = [[1, 4], [2, 3]]", "communication.edges[0]"),
            ("name = \"goal\"", "name = \"meet\"", "tasks[1].name"),
            ("instant = 4.0", "instant = 9.0", "tasks[1].instant"),
        ];
        for (from, to, expected_path) in cases {
            let text = ball_scenario().replace(from, to);
            match Scenario::parse(&text) {
                Err(ScenarioError::Invalid { path, .. }) => {
                    assert_eq!(path, expected_path, "wrong path for {to:?}")
                }
                other => panic!("expected invalid error for {to:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_and_schema_errors_are_distinguished() {
        assert!(matches!(
            Scenario::parse("schema_version = ["),
            Err(ScenarioError::Parse(_))
        ));
        let text = ball_scenario().replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(
            Scenario::parse(&text),
            Err(ScenarioError::SchemaVersion { got: 9 })
        ));
        // Unknown keys are rejected rather than silently dropped.
        let text = ball_scenario().replace("[options]", "[options]\nshiny = true");
        assert!(Scenario::parse(&text).is_err());
    }

    #[test]
    fn disconnected_graphs_fail_to_compile() {
        let text = ball_scenario().replace("edges = [[1, 2], [2, 3]]", "edges = [[1, 2]]");
        let err = Scenario::parse(&text).unwrap().compile().unwrap_err();
        match err {
            ScenarioError::Invalid { path, .. } => assert_eq!(path, "communication.edges"),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn empty_task_list_is_a_valid_scenario() {
        let text = r#"
schema_version = 1

[system]
agents = 2
state_dim = 2

[communication]
edges = [[1, 2]]
"#;
        let compiled = Scenario::parse(text).unwrap().compile().unwrap();
        assert!(compiled.spec.collaborative.is_empty());
        assert!(compiled.spec.independent.is_empty());
    }

    #[test]
    fn params_bind_and_audit_known_margins() {
        let scenario = Scenario::parse(ball_scenario()).unwrap();
        let compiled = scenario.compile().unwrap();
        let assembly = assemble(&compiled.spec, &compiled.comm, &compiled.options).unwrap();

        // Two half-size rectangles centered to sum onto the ball center:
        // corner distance to the center is sqrt(2), margin 3 - sqrt(2).
        let params = ParamsFile::parse(
            r#"
schema_version = 1

[[tasks]]
task = "meet"

[[tasks.edges]]
edge = [1, 2]
center = [0.5, -1.0]
size = [1.0, 1.0]

[[tasks.edges]]
edge = [3, 2]
center = [-0.5, 1.0]
size = [1.0, 1.0]
"#,
        )
        .unwrap();
        let audit = check_params(&assembly, &params).unwrap();
        assert_eq!(audit.bound_blocks, 2);
        assert_eq!(audit.total_blocks, 2);
        assert_eq!(audit.report.skipped_rows, 0);
        let expected = 3.0 - (2.0f64).sqrt();
        let inclusion = audit.report.min_by_kind[&RowKind::Inclusion];
        assert!((inclusion - expected).abs() < 1e-12, "margin {inclusion}");
    }

    #[test]
    fn params_for_unknown_tasks_or_edges_are_rejected() {
        let scenario = Scenario::parse(ball_scenario()).unwrap();
        let compiled = scenario.compile().unwrap();
        let assembly = assemble(&compiled.spec, &compiled.comm, &compiled.options).unwrap();

        let bad_task = ParamsFile {
            schema_version: 1,
            tasks: vec![ParamsTask { task: "nope".into(), edges: Vec::new() }],
        };
        assert!(matches!(
            check_params(&assembly, &bad_task),
            Err(ScenarioError::Invalid { path, .. }) if path == "tasks[0].task"
        ));

        let bad_edge = ParamsFile {
            schema_version: 1,
            tasks: vec![ParamsTask {
                task: "meet".into(),
                edges: vec![ParamsEdge {
                    edge: [1, 3],
                    center: vec![0.0, 0.0],
                    size: vec![1.0, 1.0],
                }],
            }],
        };
        assert!(matches!(
            check_params(&assembly, &bad_edge),
            Err(ScenarioError::Invalid { path, .. }) if path == "tasks[0].edges[0].edge"
        ));
    }

    #[test]
    fn partial_params_skip_unbound_rows() {
        let scenario = Scenario::parse(ball_scenario()).unwrap();
        let compiled = scenario.compile().unwrap();
        let assembly = assemble(&compiled.spec, &compiled.comm, &compiled.options).unwrap();
        let params = ParamsFile {
            schema_version: 1,
            tasks: vec![ParamsTask {
                task: "meet".into(),
                edges: vec![ParamsEdge {
                    edge: [1, 2],
                    center: vec![0.5, -1.0],
                    size: vec![1.0, 1.0],
                }],
            }],
        };
        let audit = check_params(&assembly, &params).unwrap();
        assert_eq!(audit.bound_blocks, 1);
        // The inclusion rows need both legs; only this leg's size bounds
        // can be evaluated.
        assert_eq!(audit.report.rows.len(), 2);
        assert!(audit.report.rows.iter().all(|r| r.kind == RowKind::SizeBound));
        assert_eq!(audit.report.skipped_rows, 6);
    }
}
