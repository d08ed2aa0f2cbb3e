//! Decomposition of collaborative tasks over multi-hop communication paths.
//!
//! Every collaborative task whose agent pair cannot talk directly is routed
//! along a shortest communication path and replaced by one parametric
//! hyper-rectangle sub-task per hop. The parameters of all sub-tasks are
//! chosen jointly by a convex program that maximizes rectangle volume while
//! keeping each chain of rectangles inside its original task region and
//! keeping interfering sub-tasks nested (see [`crate::conflict`]). The
//! result is a new specification whose tasks only span single communication
//! edges and whose satisfaction implies satisfaction of the original.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::conflict::{build_conflict_constraints, Bundles, ConflictError, ConflictRecord, EdgeTerm};
use crate::geometry::{inscribe_rect, GeometryError, HyperRect, Predicate};
use crate::graph::{rewrite_task_graph, Cycle, GraphError, UndirectedGraph};
use crate::program::{Constraint, ConstraintMeta, Program, ProgramError, RectExpr, RowKind};
use crate::solver::{solve, SolveStatus, SolverError, SolverParams};
use crate::stl::{AtomicTask, GlobalSpec, Interval, SpecError, Subject, TaskFormula, TemporalOp};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("communication graph has {got} nodes but the system has {expected} agents")]
    AgentCount { expected: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Conflict(#[from] ConflictError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// How to pick the satisfaction instant when an `eventually` task is
/// collapsed to a single time for decomposition. A per-task hint on the
/// atomic task overrides the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstantPolicy {
    #[default]
    Midpoint,
    Start,
    End,
}

impl InstantPolicy {
    fn resolve(self, interval: Interval) -> f64 {
        match self {
            InstantPolicy::Midpoint => interval.midpoint(),
            InstantPolicy::Start => interval.start,
            InstantPolicy::End => interval.end,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    /// Lower bound on every rectangle side.
    pub nu_min: f64,
    /// Longest task-graph cycle checked for joint closure conflicts.
    pub max_cycle_len: usize,
    pub instant_policy: InstantPolicy,
    pub solver: SolverParams,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            nu_min: 1e-3,
            max_cycle_len: 12,
            instant_policy: InstantPolicy::default(),
            solver: SolverParams::default(),
        }
    }
}

/// One hop of a decomposed task: the program block holding the rectangle
/// for `x_s - x_r` where `edge = (r, s)` follows the path direction.
#[derive(Debug, Clone)]
pub struct LegParam {
    pub edge: (usize, usize),
    pub block: usize,
}

/// Where one conjunct of a routed task ended up: its path, the collapsed
/// interval, and the program blocks for each hop.
#[derive(Debug, Clone)]
pub struct TaskPlan {
    /// Name of the source conjunct.
    pub name: String,
    /// Subject order `(i, j)`: the region constrains `x_j - x_i`.
    pub subject: (usize, usize),
    pub conjunct: usize,
    pub op: TemporalOp,
    /// Original window for `always`, the chosen instant for `eventually`.
    pub interval: Interval,
    /// Task region in subject orientation.
    pub region: Predicate,
    pub path: Vec<usize>,
    pub legs: Vec<LegParam>,
}

/// Assembled program plus everything needed to interpret its variables.
#[derive(Debug)]
pub struct Assembly {
    pub agents: usize,
    pub dim: usize,
    pub program: Program,
    pub plans: Vec<TaskPlan>,
    pub bundles: Bundles,
    pub cycles: Vec<Cycle>,
    pub conflicts: Vec<ConflictRecord>,
    pub dropped_edges: Vec<(usize, usize)>,
    pub rewritten: UndirectedGraph,
    pub theta0: Vec<f64>,
}

/// Solved rectangle for one hop.
#[derive(Debug, Clone)]
pub struct Leg {
    pub name: String,
    /// Path direction `(r, s)`: the rectangle constrains `x_s - x_r`.
    pub edge: (usize, usize),
    pub center: Vec<f64>,
    pub size: Vec<f64>,
}

/// Solved sub-task chain for one conjunct of a routed task.
#[derive(Debug, Clone)]
pub struct DecomposedTask {
    pub name: String,
    pub subject: (usize, usize),
    pub conjunct: usize,
    pub op: TemporalOp,
    pub interval: Interval,
    pub path: Vec<usize>,
    pub legs: Vec<Leg>,
}

#[derive(Debug)]
pub struct DecompositionResult {
    pub agents: usize,
    pub dim: usize,
    pub status: SolveStatus,
    pub objective: f64,
    pub gap: f64,
    pub kkt_residual: f64,
    pub newton_iters: usize,
    pub outer_iters: usize,
    /// Certified violation lower bound when infeasible.
    pub max_violation: Option<f64>,
    /// Smallest row margin at the final point, distance units.
    pub min_margin: f64,
    pub margins_by_kind: BTreeMap<RowKind, f64>,
    /// Row counts per constraint family.
    pub row_census: BTreeMap<RowKind, usize>,
    pub theta: Vec<f64>,
    pub tasks: Vec<DecomposedTask>,
    pub conflicts: Vec<ConflictRecord>,
    pub dropped_edges: Vec<(usize, usize)>,
    /// Proper edges of the rewritten task graph.
    pub rewritten_edges: Vec<(usize, usize)>,
    /// Closed node walks of the cycles that were checked.
    pub cycles: Vec<Vec<usize>>,
    /// True when every rewritten task edge is a communication edge, i.e.
    /// the new specification needs no multi-hop exchanges.
    pub rewritten_within_comm: bool,
    pub objective_trace: Vec<f64>,
    /// Single-edge specification; present when the solve ended at a
    /// feasible point.
    pub sub_spec: Option<GlobalSpec>,
}

fn subject_pair(formula: &TaskFormula) -> (usize, usize) {
    match formula.subject() {
        Subject::Pair(i, j) => (i, j),
        // `GlobalSpec::new` rejects single-agent collaborative formulas.
        Subject::Single(a) => (a, a),
    }
}

/// Region of a fixed task reoriented to the canonical edge `(u, v)`,
/// `u < v`, so bundle entries on one edge are comparable.
pub(crate) fn canonical_region(task: &AtomicTask, canonical: (usize, usize)) -> Predicate {
    match task.subject {
        Subject::Pair(i, _) if i == canonical.0 => task.predicate.clone(),
        _ => task.predicate.negate(),
    }
}

fn collapse_interval(task: &AtomicTask, policy: InstantPolicy) -> Result<Interval, SpecError> {
    match task.op {
        TemporalOp::Always => Ok(task.interval),
        TemporalOp::Eventually => {
            let t = task.instant_hint.unwrap_or_else(|| policy.resolve(task.interval));
            Interval::instant(t)
        }
    }
}

/// Build the parametric program for a specification over a communication
/// graph without solving it.
pub fn assemble(
    spec: &GlobalSpec,
    comm: &UndirectedGraph,
    options: &DecomposeOptions,
) -> Result<Assembly, DecomposeError> {
    if comm.node_count() != spec.agents {
        return Err(DecomposeError::AgentCount {
            expected: spec.agents,
            got: comm.node_count(),
        });
    }
    let dim = spec.dim;

    let mut task_graph = UndirectedGraph::new(spec.agents);
    for &(u, v) in spec.collaborative.keys() {
        task_graph.add_edge(u, v)?;
    }
    for &a in spec.independent.keys() {
        task_graph.add_edge(a, a)?;
    }

    let mut plans: Vec<TaskPlan> = Vec::new();
    let mut bundles: Bundles = BTreeMap::new();
    let mut block_labels: Vec<String> = Vec::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut dropped: Vec<(usize, usize)> = Vec::new();
    let mut added: Vec<(usize, usize)> = Vec::new();
    let mut theta0: Vec<f64> = Vec::new();

    for (&(u, v), formula) in &spec.collaborative {
        if comm.has_edge(u, v) {
            // Already a single-hop task: it stays fixed but joins the edge
            // bundle so routed neighbors must nest around it. Unbounded
            // regions have no box to compare against and are left out;
            // conflicts with them stay unchecked.
            for task in formula.conjuncts() {
                let region = canonical_region(task, (u, v));
                let inscribed = match inscribe_rect(&region) {
                    Ok(r) => r,
                    Err(GeometryError::Unbounded) => continue,
                    Err(e) => return Err(e.into()),
                };
                bundles.entry((u, v)).or_default().push(EdgeTerm {
                    op: task.op,
                    interval: task.interval,
                    block: None,
                    expr: RectExpr::constant(&inscribed),
                    fixed_region: Some(region),
                    label: task.name.clone(),
                });
            }
            continue;
        }

        let (i, j) = subject_pair(formula);
        let path = comm.shortest_path(i, j)?;
        dropped.push((u, v));
        for (r, s) in path.edge_sequence() {
            added.push((r.min(s), r.max(s)));
        }

        for (ci, task) in formula.conjuncts().iter().enumerate() {
            let interval = collapse_interval(task, options.instant_policy)?;
            let target = task.predicate.interior_point()?;
            let hops = path.edge_count() as f64;

            let mut legs = Vec::new();
            let mut aggregate: Option<RectExpr> = None;
            for (r, s) in path.edge_sequence() {
                let block = block_labels.len();
                block_labels.push(format!("{}[{}->{}]", task.name, r, s));
                for k in 0..dim {
                    theta0.push(target[k] / hops);
                }
                theta0.extend(std::iter::repeat_n(2.0 * options.nu_min, dim));

                let expr = RectExpr::from_block(block, dim);
                aggregate = Some(match aggregate {
                    Some(a) => a.plus(&expr),
                    None => expr.clone(),
                });
                let canonical = (r.min(s), r.max(s));
                bundles.entry(canonical).or_default().push(EdgeTerm {
                    op: task.op,
                    interval,
                    block: Some(block),
                    expr: if r < s { expr } else { expr.negated() },
                    fixed_region: None,
                    label: format!("{}[{}->{}]", task.name, r, s),
                });
                legs.push(LegParam { edge: (r, s), block });
            }

            let aggregate = aggregate.expect("path has at least one edge");
            let meta = ConstraintMeta {
                kind: RowKind::Inclusion,
                label: task.name.clone(),
            };
            let constraint = match &task.predicate {
                Predicate::Ball { center, radius } => Constraint::VertexInBall {
                    rect: aggregate,
                    center: center.clone(),
                    radius: *radius,
                    meta,
                },
                other => Constraint::VertexInRows {
                    rect: aggregate,
                    rows: other.halfspace_rows().expect("non-ball region has rows"),
                    meta,
                },
            };
            constraints.push(constraint);

            plans.push(TaskPlan {
                name: task.name.clone(),
                subject: (i, j),
                conjunct: ci,
                op: task.op,
                interval,
                region: task.predicate.clone(),
                path: path.nodes().to_vec(),
                legs,
            });
        }
    }

    for block in 0..block_labels.len() {
        constraints.push(Constraint::SizeBound {
            block,
            meta: ConstraintMeta {
                kind: RowKind::SizeBound,
                label: block_labels[block].clone(),
            },
        });
    }

    let rewritten = rewrite_task_graph(&task_graph, &dropped, &added)?;
    let cycles = rewritten.enumerate_cycles(options.max_cycle_len);
    let (conflict_rows, conflicts) = build_conflict_constraints(&bundles, &cycles)?;
    constraints.extend(conflict_rows);

    let program = Program::new(dim, block_labels, options.nu_min, constraints)?;
    Ok(Assembly {
        agents: spec.agents,
        dim,
        program,
        plans,
        bundles,
        cycles,
        conflicts,
        dropped_edges: dropped,
        rewritten,
        theta0,
    })
}

fn materialize_tasks(assembly: &Assembly, theta: &[f64]) -> Vec<DecomposedTask> {
    assembly
        .plans
        .iter()
        .map(|plan| DecomposedTask {
            name: plan.name.clone(),
            subject: plan.subject,
            conjunct: plan.conjunct,
            op: plan.op,
            interval: plan.interval,
            path: plan.path.clone(),
            legs: plan
                .legs
                .iter()
                .map(|leg| {
                    let rect = assembly.program.block_rect(leg.block, theta);
                    Leg {
                        name: format!("{}[{}->{}]", plan.name, leg.edge.0, leg.edge.1),
                        edge: leg.edge,
                        center: rect.center,
                        size: rect.size,
                    }
                })
                .collect(),
        })
        .collect()
}

/// Rebuild a specification in which every collaborative formula spans a
/// single communication edge: fixed tasks keep their regions, routed tasks
/// are replaced by their solved rectangles. All conjuncts on an edge are
/// reoriented to the canonical pair so they form one formula.
fn materialize_spec(
    spec: &GlobalSpec,
    comm: &UndirectedGraph,
    tasks: &[DecomposedTask],
) -> Result<GlobalSpec, DecomposeError> {
    let mut edge_tasks: BTreeMap<(usize, usize), Vec<AtomicTask>> = BTreeMap::new();

    for (&(u, v), formula) in &spec.collaborative {
        if !comm.has_edge(u, v) {
            continue;
        }
        for task in formula.conjuncts() {
            edge_tasks.entry((u, v)).or_default().push(AtomicTask {
                subject: Subject::Pair(u, v),
                predicate: canonical_region(task, (u, v)),
                ..task.clone()
            });
        }
    }

    for task in tasks {
        for leg in &task.legs {
            let (r, s) = leg.edge;
            let key = (r.min(s), r.max(s));
            let rect = HyperRect::new(leg.center.clone(), leg.size.clone())?;
            let rect = if r < s { rect } else { rect.negate() };
            edge_tasks.entry(key).or_default().push(AtomicTask {
                name: leg.name.clone(),
                subject: Subject::Pair(key.0, key.1),
                op: task.op,
                interval: task.interval,
                predicate: Predicate::Rect(rect),
                instant_hint: None,
            });
        }
    }

    let mut collaborative = BTreeMap::new();
    for (key, conjuncts) in edge_tasks {
        collaborative.insert(key, TaskFormula::new(conjuncts)?);
    }
    Ok(GlobalSpec::new(
        spec.agents,
        spec.dim,
        collaborative,
        spec.independent.clone(),
    )?)
}

/// Assemble, solve, and read the decomposition back out.
pub fn decompose(
    spec: &GlobalSpec,
    comm: &UndirectedGraph,
    options: &DecomposeOptions,
) -> Result<DecompositionResult, DecomposeError> {
    let assembly = assemble(spec, comm, options)?;
    let solution = solve(&assembly.program, &assembly.theta0, &options.solver)?;

    let tasks = materialize_tasks(&assembly, &solution.theta);
    let feasible = matches!(solution.status, SolveStatus::Optimal | SolveStatus::Feasible);
    let sub_spec = if feasible {
        Some(materialize_spec(spec, comm, &tasks)?)
    } else {
        None
    };

    let check = assembly.program.check_point(&solution.theta)?;
    let mut row_census: BTreeMap<RowKind, usize> = BTreeMap::new();
    for row in check.rows.iter() {
        *row_census.entry(row.kind).or_insert(0) += 1;
    }

    let rewritten_edges = assembly.rewritten.edges();
    let rewritten_within_comm = rewritten_edges.iter().all(|&(u, v)| comm.has_edge(u, v));

    Ok(DecompositionResult {
        agents: spec.agents,
        dim: spec.dim,
        status: solution.status,
        objective: solution.objective,
        gap: solution.gap,
        kkt_residual: solution.kkt_residual,
        newton_iters: solution.newton_iters,
        outer_iters: solution.outer_iters,
        max_violation: solution.max_violation,
        min_margin: check.min_margin,
        margins_by_kind: check.min_by_kind,
        row_census,
        theta: solution.theta,
        tasks,
        conflicts: assembly.conflicts,
        dropped_edges: assembly.dropped_edges,
        rewritten_edges,
        cycles: assembly.cycles.iter().map(|c| c.nodes().to_vec()).collect(),
        rewritten_within_comm,
        objective_trace: solution.trace,
        sub_spec,
    })
}
