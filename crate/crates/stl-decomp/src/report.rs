//! Decomposition reports.
//!
//! One [`Report`] value backs two renderings: a machine-readable JSON
//! document with full-precision reals, and a fixed-point human table. Both
//! are produced from the same struct so they cannot drift apart, and the
//! machine form is byte-deterministic for golden tests.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::ConflictKind;
use crate::decompose::{DecomposeOptions, DecompositionResult};
use crate::solver::SolveStatus;
use crate::stl::TemporalOp;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub agents: usize,
    pub state_dim: usize,
    pub status: String,
    pub solver: SolverDiagnostics,
    pub settings: Settings,
    pub tasks: Vec<TaskReport>,
    pub conflicts: ConflictCensus,
    pub rewritten_edges: Vec<[usize; 2]>,
    pub dropped_edges: Vec<[usize; 2]>,
    /// Every rewritten task edge is also a communication edge.
    pub rewritten_within_comm: bool,
    pub cycles_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDiagnostics {
    pub objective: f64,
    /// Duality gap at exit; absent when no constraints were active.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kkt_residual: Option<f64>,
    pub newton_iters: usize,
    pub outer_iters: usize,
    /// Smallest constraint margin in distance units; absent for empty
    /// programs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_margin: Option<f64>,
    /// Certified violation lower bound when infeasible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub nu_min: f64,
    pub tol: f64,
    pub max_cycle_len: usize,
    pub tbar_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskReport {
    pub name: String,
    /// Subject order of the originating task: the region constrains
    /// `x_j - x_i`.
    pub subject: [usize; 2],
    pub operator: TemporalOp,
    pub interval: [f64; 2],
    pub path: Vec<usize>,
    pub legs: Vec<LegReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegReport {
    /// Path direction `[r, s]`: the rectangle constrains `x_s - x_r`.
    pub edge: [usize; 2],
    pub center: Vec<f64>,
    pub size: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictCensus {
    pub pair_always_always: usize,
    pub pair_always_eventually: usize,
    pub cycle_all_always: usize,
    pub cycle_with_eventually: usize,
}

impl ConflictCensus {
    pub fn total(&self) -> usize {
        self.pair_always_always
            + self.pair_always_eventually
            + self.cycle_all_always
            + self.cycle_with_eventually
    }
}

fn status_label(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::IterLimit => "iter_limit",
    }
}

fn policy_label(policy: crate::decompose::InstantPolicy) -> &'static str {
    match policy {
        crate::decompose::InstantPolicy::Midpoint => "midpoint",
        crate::decompose::InstantPolicy::Start => "start",
        crate::decompose::InstantPolicy::End => "end",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Report {
    pub fn new(result: &DecompositionResult, options: &DecomposeOptions) -> Report {
        let mut conflicts = ConflictCensus::default();
        for record in &result.conflicts {
            match record.kind {
                ConflictKind::PairAlwaysAlways => conflicts.pair_always_always += 1,
                ConflictKind::PairAlwaysEventually => conflicts.pair_always_eventually += 1,
                ConflictKind::CycleAllAlways => conflicts.cycle_all_always += 1,
                ConflictKind::CycleWithEventually => conflicts.cycle_with_eventually += 1,
            }
        }
        Report {
            schema_version: SCHEMA_VERSION,
            agents: result.agents,
            state_dim: result.dim,
            status: status_label(result.status).to_string(),
            solver: SolverDiagnostics {
                objective: result.objective,
                gap: finite(result.gap),
                kkt_residual: finite(result.kkt_residual),
                newton_iters: result.newton_iters,
                outer_iters: result.outer_iters,
                min_margin: finite(result.min_margin),
                max_violation: result.max_violation,
            },
            settings: Settings {
                nu_min: options.nu_min,
                tol: options.solver.tol,
                max_cycle_len: options.max_cycle_len,
                tbar_policy: policy_label(options.instant_policy).to_string(),
            },
            tasks: result
                .tasks
                .iter()
                .map(|task| TaskReport {
                    name: task.name.clone(),
                    subject: [task.subject.0, task.subject.1],
                    operator: task.op,
                    interval: [task.interval.start, task.interval.end],
                    path: task.path.clone(),
                    legs: task
                        .legs
                        .iter()
                        .map(|leg| LegReport {
                            edge: [leg.edge.0, leg.edge.1],
                            center: leg.center.clone(),
                            size: leg.size.clone(),
                        })
                        .collect(),
                })
                .collect(),
            conflicts,
            rewritten_edges: result.rewritten_edges.iter().map(|&(u, v)| [u, v]).collect(),
            dropped_edges: result.dropped_edges.iter().map(|&(u, v)| [u, v]).collect(),
            rewritten_within_comm: result.rewritten_within_comm,
            cycles_checked: result.cycles.len(),
        }
    }

    /// JSON with reals at 17 significant digits. Identical inputs produce
    /// byte-identical output.
    pub fn to_machine_string(&self) -> Result<String, ReportError> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::new());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
    }

    pub fn from_machine_string(text: &str) -> Result<Report, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fixed-point rendering of the same fields, two decimals throughout.
    pub fn human_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "agents: {}  state dim: {}  status: {}",
            self.agents, self.state_dim, self.status
        );
        let _ = write!(out, "objective: {:.2}", self.solver.objective);
        if let Some(gap) = self.solver.gap {
            let _ = write!(out, "  gap: {:.2e}", gap);
        }
        if let Some(kkt) = self.solver.kkt_residual {
            let _ = write!(out, "  kkt: {:.2e}", kkt);
        }
        let _ = writeln!(
            out,
            "  newton: {}  outer: {}",
            self.solver.newton_iters, self.solver.outer_iters
        );
        if let Some(margin) = self.solver.min_margin {
            let _ = writeln!(out, "min margin: {:.2}", margin);
        }
        if let Some(violation) = self.solver.max_violation {
            let _ = writeln!(out, "max violation: {:.2}", violation);
        }
        let _ = writeln!(
            out,
            "settings: nu_min {:.2e}, tol {:.2e}, max cycle length {}, tbar policy {}",
            self.settings.nu_min, self.settings.tol, self.settings.max_cycle_len, self.settings.tbar_policy
        );
        let _ = writeln!(
            out,
            "rewritten edges: {}  (within comm: {})",
            edge_list(&self.rewritten_edges),
            if self.rewritten_within_comm { "yes" } else { "no" }
        );
        if !self.dropped_edges.is_empty() {
            let _ = writeln!(out, "dropped edges: {}", edge_list(&self.dropped_edges));
        }
        let _ = writeln!(
            out,
            "conflict constraints: {} (pair always/always {}, pair always/eventually {}, cycle all-always {}, cycle with eventually {}); cycles checked: {}",
            self.conflicts.total(),
            self.conflicts.pair_always_always,
            self.conflicts.pair_always_eventually,
            self.conflicts.cycle_all_always,
            self.conflicts.cycle_with_eventually,
            self.cycles_checked,
        );

        if self.tasks.is_empty() {
            let _ = writeln!(out, "no decomposed tasks");
            return out;
        }

        let mut rows: Vec<[String; 6]> = vec![[
            "task".into(),
            "op".into(),
            "interval".into(),
            "path".into(),
            "edge".into(),
            "center / size".into(),
        ]];
        for task in &self.tasks {
            let op = match task.operator {
                TemporalOp::Always => "always",
                TemporalOp::Eventually => "eventually",
            };
            let interval = format!("[{:.2}, {:.2}]", task.interval[0], task.interval[1]);
            let path = task
                .path
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join("-");
            for (k, leg) in task.legs.iter().enumerate() {
                let head = if k == 0 {
                    [task.name.clone(), op.into(), interval.clone(), path.clone()]
                } else {
                    ["".into(), "".into(), "".into(), "".into()]
                };
                let [name, op, interval, path] = head;
                rows.push([
                    name,
                    op,
                    interval,
                    path,
                    format!("({}, {})", leg.edge[0], leg.edge[1]),
                    format!("{} / {}", coords(&leg.center), coords(&leg.size)),
                ]);
            }
        }

        let mut widths = [0usize; 6];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        for row in &rows {
            let mut line = String::new();
            for (w, cell) in widths.iter().zip(row) {
                let _ = write!(line, "{cell:<w$}  ");
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

fn edge_list(edges: &[[usize; 2]]) -> String {
    if edges.is_empty() {
        return "none".into();
    }
    edges
        .iter()
        .map(|e| format!("({}, {})", e[0], e[1]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn coords(v: &[f64]) -> String {
    let inner = v
        .iter()
        .map(|x| format!("{x:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!("({inner})")
}

/// JSON formatter that writes every real with 17 significant digits, enough
/// to reconstruct the exact binary value on parse.
struct FullPrecision {
    indent: usize,
}

impl FullPrecision {
    fn new() -> FullPrecision {
        FullPrecision { indent: 0 }
    }

    fn newline<W: ?Sized + io::Write>(&self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b", ")?;
        }
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        self.newline(writer)?;
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{decompose, DecomposeOptions};
    use crate::geometry::Predicate;
    use crate::graph::UndirectedGraph;
    use crate::stl::{AtomicTask, GlobalSpec, Interval, Subject, TaskFormula, TemporalOp};
    use std::collections::BTreeMap;

    fn line_result() -> (DecompositionResult, DecomposeOptions) {
        let task = AtomicTask {
            name: "meet".into(),
            subject: Subject::Pair(1, 3),
            op: TemporalOp::Always,
            interval: Interval::new(0.0, 10.0).unwrap(),
            predicate: Predicate::Ball { center: vec![0.0, 0.0], radius: 3.0 },
            instant_hint: None,
        };
        let mut collaborative = BTreeMap::new();
        collaborative.insert((1, 3), TaskFormula::new(vec![task]).unwrap());
        let spec = GlobalSpec::new(3, 2, collaborative, BTreeMap::new()).unwrap();
        let mut comm = UndirectedGraph::new(3);
        comm.add_edge(1, 2).unwrap();
        comm.add_edge(2, 3).unwrap();
        let options = DecomposeOptions::default();
        (decompose(&spec, &comm, &options).unwrap(), options)
    }

    #[test]
    fn machine_output_is_byte_deterministic_and_round_trips() {
        let (result, options) = line_result();
        let report = Report::new(&result, &options);
        let first = report.to_machine_string().unwrap();
        let second = Report::new(&result, &options).to_machine_string().unwrap();
        assert_eq!(first, second);
        assert!(first.ends_with('\n'));

        let reparsed = Report::from_machine_string(&first).unwrap();
        assert_eq!(reparsed, report);
    }

    #[test]
    fn machine_reals_carry_seventeen_significant_digits() {
        let (result, options) = line_result();
        let mut report = Report::new(&result, &options);
        report.solver.objective = 0.1;
        let text = report.to_machine_string().unwrap();
        assert!(
            text.contains("\"objective\": 1.0000000000000001e-1"),
            "objective not serialized at full precision:\n{text}"
        );
        let reparsed = Report::from_machine_string(&text).unwrap();
        assert_eq!(reparsed.solver.objective, 0.1);
    }

    #[test]
    fn human_table_mirrors_the_machine_fields() {
        let (result, options) = line_result();
        let report = Report::new(&result, &options);
        let table = report.human_table();

        assert!(table.contains("status: optimal"));
        assert!(table.contains("meet"));
        assert!(table.contains("1-2-3"));
        assert!(table.contains("(1, 2)"));
        assert!(table.contains("(2, 3)"));
        assert!(table.contains("[0.00, 10.00]"));
        // Two decimals of the solved leg size, same value the machine
        // report carries.
        let size = report.tasks[0].legs[0].size[0];
        assert!(table.contains(&format!("{size:.2}")));
        assert!(table.contains("rewritten edges: (1, 2) (2, 3)"));
        assert!(table.contains("within comm: yes"));
    }

    #[test]
    fn conflict_census_counts_by_kind() {
        let (mut result, options) = line_result();
        use crate::conflict::{ConflictAction, ConflictKind, ConflictRecord};
        let record = |kind| ConflictRecord {
            kind,
            edge: Some((1, 2)),
            cycle: None,
            members: vec!["a".into(), "b".into()],
            parametric_members: 2,
            eventually_members: 0,
            window: Interval::new(0.0, 1.0).unwrap(),
            split_index: None,
            action: ConflictAction::Constrained,
        };
        result.conflicts = vec![
            record(ConflictKind::PairAlwaysAlways),
            record(ConflictKind::PairAlwaysAlways),
            record(ConflictKind::CycleWithEventually),
        ];
        let report = Report::new(&result, &options);
        assert_eq!(report.conflicts.pair_always_always, 2);
        assert_eq!(report.conflicts.cycle_with_eventually, 1);
        assert_eq!(report.conflicts.total(), 3);
        assert!(report.human_table().contains("conflict constraints: 3"));
    }

    #[test]
    fn empty_decompositions_stay_serializable() {
        let spec = GlobalSpec::new(2, 2, BTreeMap::new(), BTreeMap::new()).unwrap();
        let mut comm = UndirectedGraph::new(2);
        comm.add_edge(1, 2).unwrap();
        let options = DecomposeOptions::default();
        let result = decompose(&spec, &comm, &options).unwrap();
        let report = Report::new(&result, &options);
        // Empty programs report no margins rather than infinities, which
        // JSON cannot carry.
        assert_eq!(report.solver.min_margin, None);
        let text = report.to_machine_string().unwrap();
        let reparsed = Report::from_machine_string(&text).unwrap();
        assert_eq!(reparsed, report);
        assert!(report.human_table().contains("no decomposed tasks"));
    }
}
