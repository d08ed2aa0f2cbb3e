//! Trajectory synthesis for single-edge specifications and an empirical
//! check that satisfying the rewritten specification implies satisfying the
//! original one.
//!
//! Synthesis is deliberately simple: agent positions are solved by linear
//! least squares at each keyframe (every task window boundary and every
//! `eventually` instant) and interpolated linearly in between. Because task
//! regions are convex and window endpoints are keyframes, a chain of
//! keyframes inside a region keeps every interpolated sample inside it.
//! The result is always re-checked with the robustness monitor.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::decompose::canonical_region;
use crate::geometry::{GeometryError, Predicate};
use crate::linalg::{cholesky_solve, Mat};
use crate::stl::{
    robustness_breakdown, AtomicTask, GlobalSpec, MonitorError, TemporalOp, Trajectory,
    TrajectoryError,
};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("sample step must be positive, got {dt}")]
    InvalidStep { dt: f64 },
    #[error("anchor agent {agent} is out of range 1..={agents}")]
    AnchorOutOfRange { agent: usize, agents: usize },
    #[error(
        "agent {agent} would need speed {needed:.3} (bound {bound:.3}) \
         between t={from:.3} and t={to:.3}"
    )]
    UnreachableKeyframe { agent: usize, from: f64, to: f64, needed: f64, bound: f64 },
    #[error("keyframe placement failed: singular least-squares system")]
    PlacementSingular,
    #[error("synthesized trajectory misses task {task} (robustness {rho:.6})")]
    Unsatisfied { task: String, rho: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    /// Uniform sample step of the emitted trajectory.
    pub dt: f64,
    /// Agent pinned to its previous position while it has no absolute task;
    /// defaults to the lowest index.
    pub anchor: Option<usize>,
    /// Per-agent speed limit between keyframes.
    pub velocity_bound: f64,
    /// Extend the trajectory (holding the last keyframe) at least to this
    /// time. Needed when the trajectory will also be monitored against a
    /// specification with a later horizon, e.g. the original of a rewrite
    /// whose `eventually` windows collapsed to earlier instants.
    pub horizon: Option<f64>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { dt: 0.1, anchor: None, velocity_bound: f64::INFINITY, horizon: None }
    }
}

/// Outcome of monitoring a trajectory against both specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicationVerdict {
    /// Rewritten and original both satisfied.
    Holds,
    /// Rewritten unsatisfied: the trajectory says nothing about the
    /// original.
    Vacuous,
    /// Rewritten satisfied but the original violated. Decomposition
    /// guarantees this never happens; seeing it means a bug.
    Violated,
}

impl ImplicationVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            ImplicationVerdict::Holds => "holds",
            ImplicationVerdict::Vacuous => "vacuous",
            ImplicationVerdict::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImplicationReport {
    pub rewritten_robustness: f64,
    pub original_robustness: f64,
    pub verdict: ImplicationVerdict,
    pub rewritten_breakdown: Vec<(String, f64)>,
    pub original_breakdown: Vec<(String, f64)>,
}

impl ImplicationReport {
    /// Sub-task with the smallest robustness, the usual culprit when the
    /// verdict is vacuous.
    pub fn worst_rewritten(&self) -> Option<(&str, f64)> {
        self.rewritten_breakdown
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(name, rho)| (name.as_str(), *rho))
    }
}

/// Instant at which an `eventually` task is steered to hold.
fn eventually_instant(task: &AtomicTask) -> f64 {
    task.instant_hint.unwrap_or_else(|| task.interval.midpoint())
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= crate::stl::time_eps(b)
}

/// Times at which positions are solved: window boundaries, `eventually`
/// instants, and the start of time.
fn keyframe_times(spec: &GlobalSpec) -> Vec<f64> {
    let mut times = vec![0.0];
    for task in spec.all_tasks() {
        times.push(task.interval.start);
        times.push(task.interval.end);
        if task.op == TemporalOp::Eventually {
            times.push(eventually_instant(task));
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| near(*a, *b));
    times
}

fn active_at(task: &AtomicTask, t: f64) -> bool {
    match task.op {
        TemporalOp::Always => task.interval.contains_time(t),
        TemporalOp::Eventually => near(t, eventually_instant(task)),
    }
}

/// Volume of the axis-aligned bounding box; unbounded regions sort last so
/// a bounded (tighter) target always wins.
fn bounding_volume(region: &Predicate) -> f64 {
    match region {
        Predicate::Ball { radius, center } => (2.0 * radius).powi(center.len() as i32),
        Predicate::Rect(r) => r.size.iter().product(),
        Predicate::Halfspaces(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum RowKey {
    /// Pulls `x_v - x_u` for the canonical pair `(u, v)`.
    Edge(usize, usize),
    /// Pulls `x_a` directly.
    Agent(usize),
}

/// One active region together with a strictly interior point of it.
struct ActiveRegion {
    volume: f64,
    interior: Vec<f64>,
    region: Predicate,
}

/// Everything active on one subject at one time. The least-squares target
/// starts at the interior point of the smallest region (usually the
/// innermost of a nested chain), but a placement only counts as good when
/// it lands inside every region.
struct Pull {
    target: Vec<f64>,
    regions: Vec<ActiveRegion>,
}

fn collect_pulls(
    spec: &GlobalSpec,
    t: f64,
) -> Result<BTreeMap<RowKey, Pull>, GeometryError> {
    let mut pulls: BTreeMap<RowKey, Pull> = BTreeMap::new();
    let mut add = |key: RowKey, region: &Predicate| -> Result<(), GeometryError> {
        let active = ActiveRegion {
            volume: bounding_volume(region),
            interior: region.interior_point()?,
            region: region.clone(),
        };
        match pulls.entry(key) {
            Entry::Vacant(slot) => {
                slot.insert(Pull { target: active.interior.clone(), regions: vec![active] });
            }
            Entry::Occupied(mut slot) => {
                let pull = slot.get_mut();
                if active.volume < pull.regions[0].volume {
                    pull.target = active.interior.clone();
                    pull.regions.insert(0, active);
                } else {
                    pull.regions.push(active);
                }
            }
        }
        Ok(())
    };

    for (&(u, v), formula) in &spec.collaborative {
        for task in formula.conjuncts() {
            if active_at(task, t) {
                add(RowKey::Edge(u, v), &canonical_region(task, (u, v)))?;
            }
        }
    }
    for (&a, formula) in &spec.independent {
        for task in formula.conjuncts() {
            if active_at(task, t) {
                add(RowKey::Agent(a), &task.predicate)?;
            }
        }
    }
    Ok(pulls)
}

/// Point inside `region` on the segment from `z` to the strictly interior
/// `center`, nudged a little past the boundary crossing.
fn project_inside(region: &Predicate, z: &[f64], center: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let blend = |beta: f64| -> Vec<f64> {
        z.iter().zip(center).map(|(a, c)| a + beta * (c - a)).collect()
    };
    if region.eval(z)? > 0.0 {
        return Ok(z.to_vec());
    }
    // Bisect for the boundary crossing; the region is convex and `center`
    // strictly interior, so membership is monotone in beta.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if region.eval(&blend(mid))? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(blend((hi + 0.05).min(1.0)))
}

/// Solve one keyframe: task rows at unit weight, a weak pull of every agent
/// toward its previous position, and a unit pull keeping the anchor in
/// place unless an absolute task is steering it.
///
/// Region centers can be mutually inconsistent — cycles in the rewritten
/// graph only guarantee that consistent points exist somewhere inside the
/// regions, and absolute tasks tug against relative ones — so the least
/// squares is refined: targets of missed regions are re-projected to an
/// interior point near the achieved value and their rows upweighted until
/// every active region is met.
fn place_keyframe(
    spec: &GlobalSpec,
    t: f64,
    prev: &[f64],
    anchor: usize,
) -> Result<Vec<f64>, SynthesisError> {
    let dim = spec.dim;
    let n = spec.agents * dim;
    let idx = |agent: usize, k: usize| (agent - 1) * dim + k;
    const WEAK: f64 = 1e-3;
    const PASSES: usize = 32;

    let pulls = collect_pulls(spec, t)?;
    let anchor_steered = pulls.contains_key(&RowKey::Agent(anchor));
    let mut targets: BTreeMap<RowKey, (Vec<f64>, f64)> =
        pulls.iter().map(|(key, pull)| (*key, (pull.target.clone(), 1.0))).collect();

    let mut x = prev.to_vec();
    for _ in 0..PASSES {
        let mut m = Mat::zeros(n);
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            m.add(j, j, WEAK * WEAK);
            rhs[j] += WEAK * WEAK * prev[j];
        }
        if !anchor_steered {
            for k in 0..dim {
                let j = idx(anchor, k);
                m.add(j, j, 1.0);
                rhs[j] += prev[j];
            }
        }
        for (key, (target, weight)) in &targets {
            let w = *weight;
            match *key {
                RowKey::Edge(u, v) => {
                    for k in 0..dim {
                        let ju = idx(u, k);
                        let jv = idx(v, k);
                        m.add(ju, ju, w);
                        m.add(jv, jv, w);
                        m.add(ju, jv, -w);
                        m.add(jv, ju, -w);
                        rhs[jv] += w * target[k];
                        rhs[ju] -= w * target[k];
                    }
                }
                RowKey::Agent(a) => {
                    for k in 0..dim {
                        let j = idx(a, k);
                        m.add(j, j, w);
                        rhs[j] += w * target[k];
                    }
                }
            }
        }
        x = cholesky_solve(m, &rhs).ok_or(SynthesisError::PlacementSingular)?;

        let mut all_met = true;
        for (key, pull) in &pulls {
            let achieved: Vec<f64> = match *key {
                RowKey::Edge(u, v) => {
                    (0..dim).map(|k| x[idx(v, k)] - x[idx(u, k)]).collect()
                }
                RowKey::Agent(a) => (0..dim).map(|k| x[idx(a, k)]).collect(),
            };
            let mut z = achieved;
            let mut moved = false;
            // Cyclic projections settle `z` into the intersection of the
            // subject's regions; one round suffices for nested chains.
            for _ in 0..8 {
                let mut inside_all = true;
                for active in &pull.regions {
                    if active.region.eval(&z)? <= 0.0 {
                        inside_all = false;
                        moved = true;
                        z = project_inside(&active.region, &z, &active.interior)?;
                    }
                }
                if inside_all {
                    break;
                }
            }
            if !moved {
                continue;
            }
            all_met = false;
            let entry = targets.get_mut(key).expect("every pull has a target");
            entry.0 = z;
            entry.1 = (entry.1 * 4.0).min(1e8);
        }
        if all_met {
            break;
        }
    }
    Ok(x)
}

fn check_speed(
    prev_t: f64,
    prev: &[f64],
    t: f64,
    next: &[f64],
    dim: usize,
    bound: f64,
) -> Result<(), SynthesisError> {
    if !bound.is_finite() {
        return Ok(());
    }
    let span = (t - prev_t).max(f64::MIN_POSITIVE);
    for (agent, chunk) in next.chunks(dim).enumerate() {
        let d2: f64 = chunk
            .iter()
            .zip(&prev[agent * dim..agent * dim + dim])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let needed = d2.sqrt() / span;
        if needed > bound + 1e-9 {
            return Err(SynthesisError::UnreachableKeyframe {
                agent: agent + 1,
                from: prev_t,
                to: t,
                needed,
                bound,
            });
        }
    }
    Ok(())
}

/// Synthesize a trajectory satisfying `spec` (normally the rewritten,
/// single-edge specification produced by decomposition). The returned
/// trajectory is uniformly sampled at `dt` with every keyframe added as an
/// extra sample, and is guaranteed to satisfy `spec`: a placement that
/// misses a region is reported as an error, not returned.
pub fn synthesize_trajectory(
    spec: &GlobalSpec,
    options: &SynthesisOptions,
) -> Result<Trajectory, SynthesisError> {
    if !(options.dt > 0.0) {
        return Err(SynthesisError::InvalidStep { dt: options.dt });
    }
    let anchor = options.anchor.unwrap_or(1);
    if anchor == 0 || anchor > spec.agents {
        return Err(SynthesisError::AnchorOutOfRange { agent: anchor, agents: spec.agents });
    }

    let dim = spec.dim;
    let n = spec.agents * dim;
    let keyframes = keyframe_times(spec);
    let mut placements: Vec<Vec<f64>> = Vec::with_capacity(keyframes.len());
    let mut prev = vec![0.0; n];
    let mut prev_t = keyframes[0];
    for &t in &keyframes {
        let next = place_keyframe(spec, t, &prev, anchor)?;
        if t > prev_t {
            check_speed(prev_t, &prev, t, &next, dim, options.velocity_bound)?;
        }
        prev_t = t;
        prev = next.clone();
        placements.push(next);
    }

    // Uniform grid plus the keyframes themselves.
    let horizon = spec
        .horizon()
        .max(keyframes[keyframes.len() - 1])
        .max(options.horizon.unwrap_or(f64::NEG_INFINITY));
    let steps = (horizon / options.dt).ceil() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * options.dt).collect();
    times.extend(keyframes.iter().copied());
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| near(*a, *b));

    let states = times.iter().map(|&t| interpolate(&keyframes, &placements, t)).collect();
    let traj = Trajectory::new(spec.agents, dim, times, states)?;

    let breakdown = robustness_breakdown(spec, &traj, 0.0)?;
    if let Some((task, rho)) = breakdown
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, rho)| *rho <= 0.0)
    {
        return Err(SynthesisError::Unsatisfied { task: task.clone(), rho: *rho });
    }
    Ok(traj)
}

fn interpolate(keyframes: &[f64], placements: &[Vec<f64>], t: f64) -> Vec<f64> {
    match keyframes.iter().position(|&k| k >= t) {
        Some(0) => placements[0].clone(),
        None => placements[placements.len() - 1].clone(),
        Some(i) => {
            let (t0, t1) = (keyframes[i - 1], keyframes[i]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
            placements[i - 1]
                .iter()
                .zip(&placements[i])
                .map(|(a, b)| a + w * (b - a))
                .collect()
        }
    }
}

/// Monitor `traj` against both specifications and classify the outcome.
pub fn verify_implication(
    traj: &Trajectory,
    rewritten: &GlobalSpec,
    original: &GlobalSpec,
) -> Result<ImplicationReport, MonitorError> {
    let rewritten_breakdown = robustness_breakdown(rewritten, traj, 0.0)?;
    let original_breakdown = robustness_breakdown(original, traj, 0.0)?;
    let fold = |b: &[(String, f64)]| b.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let rho_rewritten = fold(&rewritten_breakdown);
    let rho_original = fold(&original_breakdown);
    let verdict = if rho_rewritten <= 0.0 {
        ImplicationVerdict::Vacuous
    } else if rho_original > 0.0 {
        ImplicationVerdict::Holds
    } else {
        ImplicationVerdict::Violated
    };
    Ok(ImplicationReport {
        rewritten_robustness: rho_rewritten,
        original_robustness: rho_original,
        verdict,
        rewritten_breakdown,
        original_breakdown,
    })
}
