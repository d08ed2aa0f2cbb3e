//! Detection and resolution of interfering sub-tasks.
//!
//! After decomposition, every communication edge carries a bundle of
//! rectangle-valued terms: parametric sub-task regions plus any original
//! single-hop task regions. Two kinds of interference can make their
//! conjunction unsatisfiable:
//!
//! * two terms on the *same edge* whose windows force simultaneous
//!   membership in both regions, and
//! * terms around a *cycle* whose windows share an instant, because
//!   relative states around a cycle always sum to zero.
//!
//! Both are resolved by affine region-nesting constraints added to the
//! program. Fixed regions that are not axis-aligned boxes are replaced by
//! an inscribed box when they act as the enclosing side and by their
//! bounding box when they act as the enclosed side, which keeps every
//! emitted row affine while remaining sufficient. When every involved term
//! is fixed, nothing can be steered; the combination is checked exactly
//! where possible and rejected when provably unsatisfiable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{
    bounding_rect, GeometryError, HyperRect, Predicate,
};
use crate::graph::Cycle;
use crate::program::{Constraint, ConstraintMeta, RectExpr, RowKind};
use crate::stl::{time_eps, Interval, TemporalOp};

#[derive(Debug, Error)]
pub enum ConflictError {
    #[error(
        "fixed tasks `{a}` and `{b}` on edge ({u}, {v}) require disjoint regions \
         during a shared window"
    )]
    FixedPairConflict { u: usize, v: usize, a: String, b: String },
    #[error(
        "fixed tasks around cycle [{cycle}] cannot hold simultaneously: \
         the loop cannot close ({members})"
    )]
    FixedCycleConflict { cycle: String, members: String },
    #[error(
        "region of fixed task `{label}` has no bounding box, so it cannot be \
         nested inside a parametric region"
    )]
    UnboundedFixedRegion { label: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which interference rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    PairAlwaysAlways,
    PairAlwaysEventually,
    CycleAllAlways,
    CycleWithEventually,
}

impl ConflictKind {
    pub fn row_kind(self) -> RowKind {
        match self {
            ConflictKind::PairAlwaysAlways => RowKind::PairAlwaysAlways,
            ConflictKind::PairAlwaysEventually => RowKind::PairAlwaysEventually,
            ConflictKind::CycleAllAlways => RowKind::CycleAllAlways,
            ConflictKind::CycleWithEventually => RowKind::CycleWithEventually,
        }
    }

    pub fn label(self) -> &'static str {
        self.row_kind().label()
    }
}

/// What the engine did about a firing rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictAction {
    /// Nesting constraints were added to the program.
    Constrained,
    /// All members fixed; verified compatible exactly.
    CompatibleFixed,
    /// All members fixed with regions the exact test does not cover;
    /// left for trajectory synthesis to validate.
    UncheckedFixed,
}

#[derive(Debug, Clone)]
pub struct ConflictRecord {
    pub kind: ConflictKind,
    /// Canonical edge for pair rules.
    pub edge: Option<(usize, usize)>,
    /// Node sequence for cycle rules (closing node omitted).
    pub cycle: Option<Vec<usize>>,
    pub members: Vec<String>,
    pub parametric_members: usize,
    /// Number of `eventually` members in the combination.
    pub eventually_members: usize,
    /// Window (or instant) at which all members are forced to hold.
    pub window: Interval,
    /// Last term index on the enclosed side of a cycle nesting.
    pub split_index: Option<usize>,
    pub action: ConflictAction,
}

/// One rectangle-valued region riding a canonical communication edge
/// `(u, v)`, `u < v`, constraining `x_v - x_u`.
#[derive(Debug, Clone)]
pub struct EdgeTerm {
    pub op: TemporalOp,
    /// Active window; a single instant for decomposed `eventually` terms.
    pub interval: Interval,
    /// Program block for parametric terms, `None` for fixed ones.
    pub block: Option<usize>,
    /// Region in canonical edge orientation. Fixed terms hold a constant
    /// box inscribed in their true region.
    pub expr: RectExpr,
    /// True region of a fixed term, canonical orientation.
    pub fixed_region: Option<Predicate>,
    pub label: String,
}

impl EdgeTerm {
    pub fn is_parametric(&self) -> bool {
        self.block.is_some()
    }
}

pub type Bundles = BTreeMap<(usize, usize), Vec<EdgeTerm>>;

/// True when the boxes share no point: some coordinate keeps their centers
/// further apart than the sum of half-sizes.
pub fn rects_disjoint(a: &HyperRect, b: &HyperRect) -> bool {
    a.center
        .iter()
        .zip(&b.center)
        .zip(a.size.iter().zip(&b.size))
        .any(|((ca, cb), (sa, sb))| (ca - cb).abs() > (sa + sb) / 2.0)
}

/// True when the Minkowski sum of the boxes misses the origin. Splitting
/// the sum at any index and testing the two halves for disjointness (after
/// reflecting one) gives the same answer, so no split needs to be chosen.
pub fn minkowski_excludes_zero(rects: &[HyperRect]) -> bool {
    if rects.is_empty() {
        return false;
    }
    let n = rects[0].dim();
    (0..n).any(|k| {
        let c: f64 = rects.iter().map(|r| r.center[k]).sum();
        let s: f64 = rects.iter().map(|r| r.size[k]).sum();
        c.abs() > s / 2.0
    })
}

/// Exact disjointness for ball/box region pairs; `None` when a region shape
/// has no closed-form test.
pub fn regions_surely_disjoint(a: &Predicate, b: &Predicate) -> Option<bool> {
    match (a, b) {
        (
            Predicate::Ball { center: c1, radius: r1 },
            Predicate::Ball { center: c2, radius: r2 },
        ) => {
            let d2: f64 = c1.iter().zip(c2).map(|(x, y)| (x - y) * (x - y)).sum();
            Some(d2.sqrt() > r1 + r2)
        }
        (Predicate::Ball { center, radius }, Predicate::Rect(r))
        | (Predicate::Rect(r), Predicate::Ball { center, radius }) => {
            let mut d2 = 0.0;
            for k in 0..r.dim() {
                let gap = (center[k] - r.center[k]).abs() - r.size[k] / 2.0;
                if gap > 0.0 {
                    d2 += gap * gap;
                }
            }
            Some(d2.sqrt() > *radius)
        }
        (Predicate::Rect(a), Predicate::Rect(b)) => Some(rects_disjoint(a, b)),
        _ => None,
    }
}

/// Exact test that the Minkowski sum of fixed ball/box regions misses the
/// origin; `None` when a halfspace region is present.
pub fn fixed_sum_excludes_zero(regions: &[Predicate]) -> Option<bool> {
    let n = regions.first()?.dim();
    let mut center = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut radius = 0.0;
    for pf in regions {
        match pf {
            Predicate::Ball { center: c, radius: r } => {
                for k in 0..n {
                    center[k] += c[k];
                }
                radius += r;
            }
            Predicate::Rect(r) => {
                for k in 0..n {
                    center[k] += r.center[k];
                    half[k] += r.size[k] / 2.0;
                }
            }
            Predicate::Halfspaces(_) => return None,
        }
    }
    let mut d2 = 0.0;
    for k in 0..n {
        let gap = center[k].abs() - half[k];
        if gap > 0.0 {
            d2 += gap * gap;
        }
    }
    Some(d2.sqrt() > radius)
}

/// Split index for a cycle nesting constraint `sum(0..=p) inside
/// -sum(p+1..)`. Parametric regions are steered most easily on the
/// enclosing side, so the split maximizes their count there; ties go to
/// the most balanced split, then the smaller index.
fn choose_split(parametric: &[bool]) -> usize {
    let l = parametric.len();
    let mid = l / 2 - 1;
    (0..l - 1)
        .min_by_key(|&p| {
            let enclosing = parametric[p + 1..].iter().filter(|&&f| f).count();
            (
                std::cmp::Reverse(enclosing),
                (p as isize - mid as isize).unsigned_abs(),
                p,
            )
        })
        .expect("cycles have at least three edges")
}

fn approx_eq_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= time_eps(a.abs().max(b.abs()))
}

/// Enclosed-side box for a fixed term: the true region must lie inside the
/// parametric region, so its bounding box is nested instead.
fn fixed_inner_expr(term: &EdgeTerm) -> Result<RectExpr, ConflictError> {
    let region = term
        .fixed_region
        .as_ref()
        .expect("fixed terms carry their region");
    let rect = bounding_rect(region).map_err(|e| match e {
        GeometryError::Unbounded => {
            ConflictError::UnboundedFixedRegion { label: term.label.clone() }
        }
        other => ConflictError::Geometry(other),
    })?;
    Ok(RectExpr::constant(&rect))
}

fn pair_record(
    kind: ConflictKind,
    edge: (usize, usize),
    window: Interval,
    a: &EdgeTerm,
    b: &EdgeTerm,
    action: ConflictAction,
) -> ConflictRecord {
    ConflictRecord {
        kind,
        edge: Some(edge),
        cycle: None,
        members: vec![a.label.clone(), b.label.clone()],
        parametric_members: [a, b].iter().filter(|t| t.is_parametric()).count(),
        eventually_members: [a, b]
            .iter()
            .filter(|t| t.op == TemporalOp::Eventually)
            .count(),
        window,
        split_index: None,
        action,
    }
}

/// Handles a same-edge pair whose rule premise already fired.
fn resolve_pair(
    kind: ConflictKind,
    edge: (usize, usize),
    window: Interval,
    inner: &EdgeTerm,
    outer: &EdgeTerm,
    out: &mut Vec<Constraint>,
    records: &mut Vec<ConflictRecord>,
) -> Result<(), ConflictError> {
    if !inner.is_parametric() && !outer.is_parametric() {
        let action = match regions_surely_disjoint(
            inner.fixed_region.as_ref().unwrap(),
            outer.fixed_region.as_ref().unwrap(),
        ) {
            Some(true) => {
                return Err(ConflictError::FixedPairConflict {
                    u: edge.0,
                    v: edge.1,
                    a: inner.label.clone(),
                    b: outer.label.clone(),
                });
            }
            Some(false) => ConflictAction::CompatibleFixed,
            None => ConflictAction::UncheckedFixed,
        };
        records.push(pair_record(kind, edge, window, inner, outer, action));
        return Ok(());
    }
    let inner_expr = if inner.is_parametric() {
        inner.expr.clone()
    } else {
        fixed_inner_expr(inner)?
    };
    out.push(Constraint::BoxInBox {
        inner: inner_expr,
        outer: outer.expr.clone(),
        meta: ConstraintMeta {
            kind: kind.row_kind(),
            label: format!(
                "edge({},{}): {} within {}",
                edge.0, edge.1, inner.label, outer.label
            ),
        },
    });
    records.push(pair_record(
        kind,
        edge,
        window,
        inner,
        outer,
        ConflictAction::Constrained,
    ));
    Ok(())
}

/// Applies the same-edge rules to every term pair of every bundle.
pub fn pair_constraints(
    bundles: &Bundles,
) -> Result<(Vec<Constraint>, Vec<ConflictRecord>), ConflictError> {
    let mut constraints = Vec::new();
    let mut records = Vec::new();
    for (&edge, terms) in bundles {
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let (a, b) = (&terms[i], &terms[j]);
                match (a.op, b.op) {
                    (TemporalOp::Always, TemporalOp::Always) => {
                        if a.interval.overlaps(&b.interval) {
                            let window = Interval::new(
                                a.interval.start.max(b.interval.start),
                                a.interval.end.min(b.interval.end),
                            )
                            .expect("overlapping windows give a valid overlap");
                            // Prefer nesting a steerable region inside the
                            // fixed one; between two parametric regions the
                            // later bundle entry nests into the earlier.
                            let (inner, outer) =
                                if a.is_parametric() && !b.is_parametric() {
                                    (a, b)
                                } else {
                                    (b, a)
                                };
                            resolve_pair(
                                ConflictKind::PairAlwaysAlways,
                                edge,
                                window,
                                inner,
                                outer,
                                &mut constraints,
                                &mut records,
                            )?;
                        }
                    }
                    (TemporalOp::Always, TemporalOp::Eventually)
                    | (TemporalOp::Eventually, TemporalOp::Always) => {
                        let (g, f) = if a.op == TemporalOp::Always { (a, b) } else { (b, a) };
                        if g.interval.contains_interval(&f.interval) {
                            resolve_pair(
                                ConflictKind::PairAlwaysEventually,
                                edge,
                                f.interval,
                                f,
                                g,
                                &mut constraints,
                                &mut records,
                            )?;
                        }
                    }
                    (TemporalOp::Eventually, TemporalOp::Eventually) => {}
                }
            }
        }
    }
    Ok((constraints, records))
}

/// One candidate combination around a cycle: a term per edge, oriented
/// along the traversal direction.
struct OrientedTerm<'a> {
    term: &'a EdgeTerm,
    /// Whether cycle traversal matches the canonical edge orientation.
    forward: bool,
}

impl OrientedTerm<'_> {
    fn expr(&self) -> RectExpr {
        if self.forward {
            self.term.expr.clone()
        } else {
            self.term.expr.negated()
        }
    }

    fn fixed_region(&self) -> Option<Predicate> {
        let pf = self.term.fixed_region.as_ref()?;
        Some(if self.forward { pf.clone() } else { pf.negate() })
    }
}

/// Premise check for one combination. Returns the rule kind and the window
/// at which every term is forced to hold simultaneously.
fn cycle_premise(tuple: &[OrientedTerm<'_>]) -> Option<(ConflictKind, Interval)> {
    let always: Vec<&Interval> = tuple
        .iter()
        .filter(|t| t.term.op == TemporalOp::Always)
        .map(|t| &t.term.interval)
        .collect();
    let eventually: Vec<&Interval> = tuple
        .iter()
        .filter(|t| t.term.op == TemporalOp::Eventually)
        .map(|t| &t.term.interval)
        .collect();
    let g_lo = always.iter().map(|i| i.start).fold(f64::NEG_INFINITY, f64::max);
    let g_hi = always.iter().map(|i| i.end).fold(f64::INFINITY, f64::min);
    if eventually.is_empty() {
        return (g_lo <= g_hi)
            .then(|| (ConflictKind::CycleAllAlways, Interval::new(g_lo, g_hi).unwrap()));
    }
    let window = if let [single] = eventually[..] {
        (g_lo <= single.start && single.end <= g_hi).then_some(*single)
    } else {
        let t0 = eventually[0].start;
        let aligned = eventually
            .iter()
            .all(|i| i.is_instant() && approx_eq_time(i.start, t0))
            && (always.is_empty()
                || (g_lo - time_eps(t0) <= t0 && t0 <= g_hi + time_eps(t0)));
        aligned.then(|| *eventually[0])
    };
    window.map(|w| (ConflictKind::CycleWithEventually, w))
}

/// Applies the cycle closure rule to every combination of terms around
/// every cycle whose edges all carry at least one term.
pub fn cycle_constraints(
    cycles: &[Cycle],
    bundles: &Bundles,
) -> Result<(Vec<Constraint>, Vec<ConflictRecord>), ConflictError> {
    let mut constraints = Vec::new();
    let mut records = Vec::new();
    for cycle in cycles {
        let edges = cycle.edge_sequence();
        let slots: Vec<(&Vec<EdgeTerm>, bool)> = {
            let mut v = Vec::with_capacity(edges.len());
            let mut complete = true;
            for &(r, s) in &edges {
                let key = (r.min(s), r.max(s));
                match bundles.get(&key).filter(|terms| !terms.is_empty()) {
                    Some(terms) => v.push((terms, r < s)),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue;
            }
            v
        };
        // Odometer over one term per edge.
        let mut pick = vec![0usize; slots.len()];
        loop {
            let tuple: Vec<OrientedTerm<'_>> = slots
                .iter()
                .zip(&pick)
                .map(|(&(terms, forward), &i)| OrientedTerm { term: &terms[i], forward })
                .collect();
            if let Some((kind, window)) = cycle_premise(&tuple) {
                resolve_cycle_tuple(
                    kind,
                    window,
                    cycle,
                    &tuple,
                    &mut constraints,
                    &mut records,
                )?;
            }
            // Advance the odometer.
            let mut done = true;
            for (digit, &(terms, _)) in pick.iter_mut().zip(&slots) {
                *digit += 1;
                if *digit < terms.len() {
                    done = false;
                    break;
                }
                *digit = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok((constraints, records))
}

fn resolve_cycle_tuple(
    kind: ConflictKind,
    window: Interval,
    cycle: &Cycle,
    tuple: &[OrientedTerm<'_>],
    constraints: &mut Vec<Constraint>,
    records: &mut Vec<ConflictRecord>,
) -> Result<(), ConflictError> {
    let interior: Vec<usize> = cycle.nodes()[..cycle.distinct_len()].to_vec();
    let members: Vec<String> = tuple.iter().map(|t| t.term.label.clone()).collect();
    let parametric: Vec<bool> = tuple.iter().map(|t| t.term.is_parametric()).collect();
    let parametric_members = parametric.iter().filter(|&&f| f).count();
    let eventually_members = tuple
        .iter()
        .filter(|t| t.term.op == TemporalOp::Eventually)
        .count();

    if parametric_members == 0 {
        let regions: Vec<Predicate> =
            tuple.iter().map(|t| t.fixed_region().unwrap()).collect();
        let action = match fixed_sum_excludes_zero(&regions) {
            Some(true) => {
                return Err(ConflictError::FixedCycleConflict {
                    cycle: join_nodes(&interior),
                    members: members.join(", "),
                });
            }
            Some(false) => ConflictAction::CompatibleFixed,
            None => ConflictAction::UncheckedFixed,
        };
        records.push(ConflictRecord {
            kind,
            edge: None,
            cycle: Some(interior),
            members,
            parametric_members,
            eventually_members,
            window,
            split_index: None,
            action,
        });
        return Ok(());
    }

    let p = choose_split(&parametric);
    let mut inner = tuple[0].expr();
    for t in &tuple[1..=p] {
        inner = inner.plus(&t.expr());
    }
    let mut outer = tuple[p + 1].expr().negated();
    for t in &tuple[p + 2..] {
        outer = outer.plus(&t.expr().negated());
    }
    constraints.push(Constraint::BoxInBox {
        inner,
        outer,
        meta: ConstraintMeta {
            kind: kind.row_kind(),
            label: format!("cycle[{}]: {}", join_nodes(&interior), members.join(" + ")),
        },
    });
    records.push(ConflictRecord {
        kind,
        edge: None,
        cycle: Some(interior),
        members,
        parametric_members,
        eventually_members,
        window,
        split_index: Some(p),
        action: ConflictAction::Constrained,
    });
    Ok(())
}

fn join_nodes(nodes: &[usize]) -> String {
    nodes
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Runs both rule families and concatenates their output.
pub fn build_conflict_constraints(
    bundles: &Bundles,
    cycles: &[Cycle],
) -> Result<(Vec<Constraint>, Vec<ConflictRecord>), ConflictError> {
    let (mut constraints, mut records) = pair_constraints(bundles)?;
    let (cyc_constraints, cyc_records) = cycle_constraints(cycles, bundles)?;
    constraints.extend(cyc_constraints);
    records.extend(cyc_records);
    Ok((constraints, records))
}
