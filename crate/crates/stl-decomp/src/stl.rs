//! The supported STL fragment and its robust semantics on sampled
//! trajectories.
//!
//! An atomic task applies one temporal operator (`always` or `eventually`)
//! over a closed interval to a concave predicate of either a single agent's
//! state or the relative state `e_uv = x_v - x_u` of a pair. Formulas are
//! conjunctions of atomic tasks sharing a subject; a global specification
//! is the conjunction of one formula per task-graph edge plus independent
//! per-agent formulas.
//!
//! Robustness on a sampled trajectory takes the predicate margin at every
//! sample inside the shifted interval, then folds with `min` for `always`,
//! `max` for `eventually`, and `min` across conjuncts. Positive robustness
//! certifies satisfaction of the sampled abstraction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Predicate};

pub type AgentId = usize;

/// Relative tolerance used when matching sample times against interval
/// endpoints.
pub(crate) fn time_eps(t: f64) -> f64 {
    1e-9 * (1.0 + t.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalOp {
    Always,
    Eventually,
}

impl fmt::Display for TemporalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalOp::Always => write!(f, "always"),
            TemporalOp::Eventually => write!(f, "eventually"),
        }
    }
}

/// Closed time interval `[start, end]` with `0 <= start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self, SpecError> {
        if !start.is_finite() || !end.is_finite() || start < 0.0 || end < start {
            return Err(SpecError::InvalidInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn instant(t: f64) -> Result<Self, SpecError> {
        Interval::new(t, t)
    }

    pub fn is_instant(&self) -> bool {
        self.start == self.end
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.start - time_eps(t) && t <= self.end + time_eps(t)
    }
}

/// What a task's predicate reads: one agent's state or a pair's relative
/// state `e_uv = x_v - x_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Single(AgentId),
    Pair(AgentId, AgentId),
}

impl Subject {
    pub fn agents(&self) -> Vec<AgentId> {
        match self {
            Subject::Single(a) => vec![*a],
            Subject::Pair(u, v) => vec![*u, *v],
        }
    }

    /// Canonical unordered pair key for `Pair` subjects.
    pub fn unordered(&self) -> Option<(AgentId, AgentId)> {
        match self {
            Subject::Single(_) => None,
            Subject::Pair(u, v) => Some((*u.min(v), *u.max(v))),
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Single(a) => write!(f, "agent {a}"),
            Subject::Pair(u, v) => write!(f, "pair ({u},{v})"),
        }
    }
}

/// One temporal operator applied to one predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicTask {
    pub name: String,
    pub subject: Subject,
    pub op: TemporalOp,
    pub interval: Interval,
    pub predicate: Predicate,
    /// Optional fixed instant used when an `eventually` task is decomposed;
    /// must lie inside `interval`. Plays no role in monitoring.
    pub instant_hint: Option<f64>,
}

impl AtomicTask {
    pub fn validate(&self, agents: usize, dim: usize) -> Result<(), SpecError> {
        for a in self.subject.agents() {
            if a == 0 || a > agents {
                return Err(SpecError::AgentOutOfRange { agent: a, agents });
            }
        }
        if let Subject::Pair(u, v) = self.subject {
            if u == v {
                return Err(SpecError::DegeneratePair { agent: u });
            }
        }
        self.predicate
            .validate(dim)
            .map_err(|source| SpecError::BadPredicate { task: self.name.clone(), source })?;
        if let Some(t) = self.instant_hint {
            if !self.interval.contains_time(t) {
                return Err(SpecError::InstantOutsideInterval { task: self.name.clone(), t });
            }
            if self.op != TemporalOp::Eventually {
                return Err(SpecError::InstantOnAlways { task: self.name.clone() });
            }
        }
        Ok(())
    }
}

/// Non-empty conjunction of atomic tasks sharing one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFormula {
    conjuncts: Vec<AtomicTask>,
}

impl TaskFormula {
    pub fn new(conjuncts: Vec<AtomicTask>) -> Result<Self, SpecError> {
        let first = conjuncts.first().ok_or(SpecError::EmptyFormula)?;
        let subject = first.subject;
        if conjuncts.iter().any(|c| c.subject != subject) {
            return Err(SpecError::MixedSubjects);
        }
        Ok(TaskFormula { conjuncts })
    }

    pub fn subject(&self) -> Subject {
        self.conjuncts[0].subject
    }

    pub fn conjuncts(&self) -> &[AtomicTask] {
        &self.conjuncts
    }
}

/// Conjunction of collaborative formulas (keyed by the unordered agent
/// pair) and independent per-agent formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSpec {
    pub agents: usize,
    pub dim: usize,
    pub collaborative: BTreeMap<(AgentId, AgentId), TaskFormula>,
    pub independent: BTreeMap<AgentId, TaskFormula>,
}

impl GlobalSpec {
    pub fn new(
        agents: usize,
        dim: usize,
        collaborative: BTreeMap<(AgentId, AgentId), TaskFormula>,
        independent: BTreeMap<AgentId, TaskFormula>,
    ) -> Result<Self, SpecError> {
        if agents == 0 || dim == 0 {
            return Err(SpecError::EmptySystem);
        }
        for (&(u, v), formula) in &collaborative {
            if u >= v {
                return Err(SpecError::NonCanonicalKey { u, v });
            }
            match formula.subject().unordered() {
                Some(key) if key == (u, v) => {}
                _ => return Err(SpecError::SubjectKeyMismatch { u, v }),
            }
            for task in formula.conjuncts() {
                task.validate(agents, dim)?;
            }
        }
        for (&a, formula) in &independent {
            if formula.subject() != Subject::Single(a) {
                return Err(SpecError::SubjectKeyMismatch { u: a, v: a });
            }
            for task in formula.conjuncts() {
                task.validate(agents, dim)?;
            }
        }
        Ok(GlobalSpec { agents, dim, collaborative, independent })
    }

    /// Unordered edges of the task graph (without self-loops).
    pub fn task_edges(&self) -> Vec<(AgentId, AgentId)> {
        self.collaborative.keys().copied().collect()
    }

    /// Every atomic task in deterministic order.
    pub fn all_tasks(&self) -> impl Iterator<Item = &AtomicTask> {
        self.collaborative
            .values()
            .flat_map(|f| f.conjuncts().iter())
            .chain(self.independent.values().flat_map(|f| f.conjuncts().iter()))
    }

    /// Latest interval endpoint across all tasks.
    pub fn horizon(&self) -> f64 {
        self.all_tasks().map(|t| t.interval.end).fold(0.0, f64::max)
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("interval [{start}, {end}] is not a valid non-negative closed interval")]
    InvalidInterval { start: f64, end: f64 },
    #[error("agent {agent} is out of range 1..={agents}")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("pair subject repeats agent {agent}")]
    DegeneratePair { agent: usize },
    #[error("task {task}: bad predicate: {source}")]
    BadPredicate { task: String, source: GeometryError },
    #[error("task {task}: instant {t} lies outside the task interval")]
    InstantOutsideInterval { task: String, t: f64 },
    #[error("task {task}: instant hints only apply to eventually tasks")]
    InstantOnAlways { task: String },
    #[error("a formula needs at least one conjunct")]
    EmptyFormula,
    #[error("conjuncts of one formula must share a subject")]
    MixedSubjects,
    #[error("system needs at least one agent and one state dimension")]
    EmptySystem,
    #[error("collaborative key ({u},{v}) is not in canonical order")]
    NonCanonicalKey { u: usize, v: usize },
    #[error("formula subject does not match its key ({u},{v})")]
    SubjectKeyMismatch { u: usize, v: usize },
}

/// Sampled multi-agent trajectory: strictly increasing times and one flat
/// state vector `[x_1; ...; x_N]` per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agents: usize,
    pub dim: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        agents: usize,
        dim: usize,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
    ) -> Result<Self, TrajectoryError> {
        if agents == 0 || dim == 0 || times.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if times.len() != states.len() {
            return Err(TrajectoryError::LengthMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(TrajectoryError::TimesNotIncreasing { at: w[1] });
            }
        }
        for (k, s) in states.iter().enumerate() {
            if s.len() != agents * dim {
                return Err(TrajectoryError::BadStateWidth {
                    sample: k,
                    got: s.len(),
                    expected: agents * dim,
                });
            }
            if s.iter().any(|v| !v.is_finite()) || !times[k].is_finite() {
                return Err(TrajectoryError::NonFinite { sample: k });
            }
        }
        Ok(Trajectory { agents, dim, times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State of `agent` at sample `k`.
    pub fn state(&self, k: usize, agent: AgentId) -> &[f64] {
        let off = (agent - 1) * self.dim;
        &self.states[k][off..off + self.dim]
    }

    fn check_agent(&self, agent: AgentId) -> Result<(), TrajectoryError> {
        if agent == 0 || agent > self.agents {
            return Err(TrajectoryError::AgentOutOfRange { agent, agents: self.agents });
        }
        Ok(())
    }

    /// Relative signal `e_uv(t_k) = x_v(t_k) - x_u(t_k)` for all samples.
    pub fn relative_signal(
        &self,
        u: AgentId,
        v: AgentId,
    ) -> Result<Vec<Vec<f64>>, TrajectoryError> {
        self.check_agent(u)?;
        self.check_agent(v)?;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let xu = self.state(k, u);
            let xv = self.state(k, v);
            out.push((0..self.dim).map(|d| xv[d] - xu[d]).collect());
        }
        Ok(out)
    }

    /// CSV rendering with header `t,x1_1,...,x1_n,...,xN_1,...,xN_n`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for a in 1..=self.agents {
            for d in 1..=self.dim {
                s.push_str(&format!(",x{a}_{d}"));
            }
        }
        s.push('\n');
        for k in 0..self.len() {
            s.push_str(&format!("{:.17e}", self.times[k]));
            for v in &self.states[k] {
                s.push_str(&format!(",{v:.17e}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, TrajectoryError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(TrajectoryError::Csv { line: 1, message: "missing header".into() })?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(TrajectoryError::Csv {
                line: 1,
                message: "header must start with `t` followed by x<agent>_<dim> columns".into(),
            });
        }
        let mut pairs = Vec::with_capacity(cols.len() - 1);
        for col in &cols[1..] {
            let parsed = col
                .strip_prefix('x')
                .and_then(|rest| rest.split_once('_'))
                .and_then(|(a, d)| Some((a.parse::<usize>().ok()?, d.parse::<usize>().ok()?)));
            pairs.push(parsed.ok_or_else(|| TrajectoryError::Csv {
                line: 1,
                message: format!("bad column name `{col}`"),
            })?);
        }
        // The run of x1_* columns defines the dimension.
        let dim = pairs.iter().take_while(|&&(a, _)| a == 1).count();
        if dim == 0 || pairs.len() % dim != 0 {
            return Err(TrajectoryError::Csv {
                line: 1,
                message: "header does not describe a full agent grid".into(),
            });
        }
        let agents = pairs.len() / dim;
        for (i, (&(a, d), col)) in pairs.iter().zip(&cols[1..]).enumerate() {
            if a != i / dim + 1 || d != i % dim + 1 {
                return Err(TrajectoryError::Csv {
                    line: 1,
                    message: format!("column `{col}` out of order"),
                });
            }
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>, lineno: usize| -> Result<f64, TrajectoryError> {
                s.and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or(TrajectoryError::Csv {
                        line: lineno + 1,
                        message: "expected a real number".into(),
                    })
            };
            times.push(parse(fields.next(), lineno)?);
            let mut row = Vec::with_capacity(agents * dim);
            for _ in 0..agents * dim {
                row.push(parse(fields.next(), lineno)?);
            }
            if fields.next().is_some() {
                return Err(TrajectoryError::Csv {
                    line: lineno + 1,
                    message: "too many fields".into(),
                });
            }
            states.push(row);
        }
        Trajectory::new(agents, dim, times, states)
    }
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory needs agents, dimensions and at least one sample")]
    Empty,
    #[error("{times} times but {states} state rows")]
    LengthMismatch { times: usize, states: usize },
    #[error("sample times must be strictly increasing (near t = {at})")]
    TimesNotIncreasing { at: f64 },
    #[error("sample {sample} has {got} values, expected {expected}")]
    BadStateWidth { sample: usize, got: usize, expected: usize },
    #[error("sample {sample} contains non-finite values")]
    NonFinite { sample: usize },
    #[error("agent {agent} is out of range 1..={agents}")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("task {task}: trajectory [{t_first}, {t_last}] does not cover the window [{lo}, {hi}]")]
    WindowNotCovered { task: String, lo: f64, hi: f64, t_first: f64, t_last: f64 },
    #[error("task {task}: no sample inside the window [{lo}, {hi}]")]
    NoSampleInWindow { task: String, lo: f64, hi: f64 },
    #[error("task {task}: trajectory dimension {got} does not match the predicate ({expected})")]
    DimensionMismatch { task: String, expected: usize, got: usize },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("task {task}: {source}")]
    Geometry { task: String, source: GeometryError },
}

/// Robust satisfaction value of one atomic task at shift `t0`.
///
/// Samples with `t0 + start <= t_k <= t0 + end` (within a relative epsilon)
/// enter the fold; the trajectory must cover the whole window and contain
/// at least one such sample.
pub fn atomic_robustness(
    task: &AtomicTask,
    traj: &Trajectory,
    t0: f64,
) -> Result<f64, MonitorError> {
    if task.predicate.dim() != traj.dim {
        return Err(MonitorError::DimensionMismatch {
            task: task.name.clone(),
            expected: task.predicate.dim(),
            got: traj.dim,
        });
    }
    let lo = t0 + task.interval.start;
    let hi = t0 + task.interval.end;
    let times = traj.times();
    let t_first = times[0];
    let t_last = times[times.len() - 1];
    if t_first > lo + time_eps(lo) || t_last < hi - time_eps(hi) {
        return Err(MonitorError::WindowNotCovered {
            task: task.name.clone(),
            lo,
            hi,
            t_first,
            t_last,
        });
    }
    let signal: Vec<Vec<f64>> = match task.subject {
        Subject::Single(a) => {
            let mut out = Vec::with_capacity(traj.len());
            for k in 0..traj.len() {
                if a == 0 || a > traj.agents {
                    return Err(MonitorError::Trajectory(TrajectoryError::AgentOutOfRange {
                        agent: a,
                        agents: traj.agents,
                    }));
                }
                out.push(traj.state(k, a).to_vec());
            }
            out
        }
        Subject::Pair(u, v) => traj.relative_signal(u, v)?,
    };
    let mut folded: Option<f64> = None;
    for (k, &t) in times.iter().enumerate() {
        if t < lo - time_eps(lo) || t > hi + time_eps(hi) {
            continue;
        }
        let margin = task
            .predicate
            .eval(&signal[k])
            .map_err(|source| MonitorError::Geometry { task: task.name.clone(), source })?;
        folded = Some(match (folded, task.op) {
            (None, _) => margin,
            (Some(acc), TemporalOp::Always) => acc.min(margin),
            (Some(acc), TemporalOp::Eventually) => acc.max(margin),
        });
    }
    folded.ok_or(MonitorError::NoSampleInWindow { task: task.name.clone(), lo, hi })
}

/// Minimum robustness across a formula's conjuncts.
pub fn formula_robustness(
    formula: &TaskFormula,
    traj: &Trajectory,
    t0: f64,
) -> Result<f64, MonitorError> {
    let mut rho = f64::INFINITY;
    for task in formula.conjuncts() {
        rho = rho.min(atomic_robustness(task, traj, t0)?);
    }
    Ok(rho)
}

/// Global robustness: minimum over every formula in the specification.
pub fn robustness(spec: &GlobalSpec, traj: &Trajectory, t0: f64) -> Result<f64, MonitorError> {
    Ok(robustness_breakdown(spec, traj, t0)?
        .into_iter()
        .map(|(_, rho)| rho)
        .fold(f64::INFINITY, f64::min))
}

/// Per-task robustness values in deterministic order, for diagnostics.
pub fn robustness_breakdown(
    spec: &GlobalSpec,
    traj: &Trajectory,
    t0: f64,
) -> Result<Vec<(String, f64)>, MonitorError> {
    let mut out = Vec::new();
    for task in spec.all_tasks() {
        out.push((task.name.clone(), atomic_robustness(task, traj, t0)?));
    }
    Ok(out)
}
