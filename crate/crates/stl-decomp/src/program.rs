//! The parametric program assembled by the decomposer.
//!
//! Decision variables come in blocks of `2 n` scalars, one block per
//! parametric rectangle: first the center `p`, then the full edge lengths
//! `nu`. The objective sums inverse volumes `1 / prod_k nu_k` per block, so
//! maximizing rectangle volumes is a convex minimization. Constraints are
//! expanded into scalar rows `g_i(theta) >= 0` that are affine except for
//! ball-vertex rows, which use the smooth concave margin
//! `radius^2 - |v - c|^2`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{Halfspace, HyperRect, MAX_VERTEX_DIM};
use crate::linalg::Mat;

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("point has {got} values, program has {expected} variables")]
    PointSize { expected: usize, got: usize },
    #[error("rect expression dimension {got} does not match the program ({expected})")]
    ExprDim { expected: usize, got: usize },
    #[error("dimension {dim} exceeds the vertex enumeration limit of {MAX_VERTEX_DIM}")]
    DimensionTooLarge { dim: usize },
    #[error("block {block} is out of range ({blocks} blocks)")]
    BlockOutOfRange { block: usize, blocks: usize },
}

/// Classification of a constraint row, used for reporting and audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    /// Minkowski-aggregate inclusion in the original predicate region.
    Inclusion,
    /// Nesting of two same-edge `always` regions with overlapping windows.
    PairAlwaysAlways,
    /// Nesting between an `always` region and an `eventually` region whose
    /// instant window sits inside the `always` window.
    PairAlwaysEventually,
    /// Cycle-closure separation constraint, all-`always` combination.
    CycleAllAlways,
    /// Cycle-closure separation constraint, combination with `eventually`.
    CycleWithEventually,
    /// Lower bound `nu_k >= nu_min`.
    SizeBound,
}

impl RowKind {
    pub fn label(self) -> &'static str {
        match self {
            RowKind::Inclusion => "inclusion",
            RowKind::PairAlwaysAlways => "pair_always_always",
            RowKind::PairAlwaysEventually => "pair_always_eventually",
            RowKind::CycleAllAlways => "cycle_all_always",
            RowKind::CycleWithEventually => "cycle_with_eventually",
            RowKind::SizeBound => "size_bound",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintMeta {
    pub kind: RowKind,
    pub label: String,
}

/// Affine rectangle-valued expression: a signed sum of block rectangles
/// plus a constant rectangle. Sizes always add with coefficient one; only
/// centers pick up signs under negation.
#[derive(Debug, Clone)]
pub struct RectExpr {
    /// `(block index, center sign)` pairs.
    pub terms: Vec<(usize, f64)>,
    pub center_offset: Vec<f64>,
    pub size_offset: Vec<f64>,
}

impl RectExpr {
    pub fn from_block(block: usize, dim: usize) -> Self {
        RectExpr {
            terms: vec![(block, 1.0)],
            center_offset: vec![0.0; dim],
            size_offset: vec![0.0; dim],
        }
    }

    pub fn constant(rect: &HyperRect) -> Self {
        RectExpr {
            terms: Vec::new(),
            center_offset: rect.center.clone(),
            size_offset: rect.size.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.center_offset.len()
    }

    /// The reflected rectangle: center signs flip, sizes are unchanged.
    pub fn negated(&self) -> Self {
        RectExpr {
            terms: self.terms.iter().map(|&(b, s)| (b, -s)).collect(),
            center_offset: self.center_offset.iter().map(|c| -c).collect(),
            size_offset: self.size_offset.clone(),
        }
    }

    /// Minkowski sum of two expressions.
    pub fn plus(&self, other: &RectExpr) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        RectExpr {
            terms,
            center_offset: self
                .center_offset
                .iter()
                .zip(&other.center_offset)
                .map(|(a, b)| a + b)
                .collect(),
            size_offset: self
                .size_offset
                .iter()
                .zip(&other.size_offset)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Concrete rectangle at a parameter point.
    pub fn evaluate(&self, program: &Program, theta: &[f64]) -> HyperRect {
        let n = self.dim();
        let mut center = self.center_offset.clone();
        let mut size = self.size_offset.clone();
        for &(b, sign) in &self.terms {
            for k in 0..n {
                center[k] += sign * theta[program.center_index(b, k)];
                size[k] += theta[program.size_index(b, k)];
            }
        }
        HyperRect { center, size }
    }
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// Every vertex of `rect` inside the ball: one smooth row per vertex.
    VertexInBall { rect: RectExpr, center: Vec<f64>, radius: f64, meta: ConstraintMeta },
    /// Every vertex of `rect` satisfies every affine membership row.
    VertexInRows { rect: RectExpr, rows: Vec<Halfspace>, meta: ConstraintMeta },
    /// `inner` nested in `outer`: two affine rows per coordinate.
    BoxInBox { inner: RectExpr, outer: RectExpr, meta: ConstraintMeta },
    /// `nu_k >= nu_min` for one block.
    SizeBound { block: usize, meta: ConstraintMeta },
}

impl Constraint {
    pub fn meta(&self) -> &ConstraintMeta {
        match self {
            Constraint::VertexInBall { meta, .. }
            | Constraint::VertexInRows { meta, .. }
            | Constraint::BoxInBox { meta, .. }
            | Constraint::SizeBound { meta, .. } => meta,
        }
    }
}

/// Scalar affine function `constant + sum coefs_j * theta_j`.
#[derive(Debug, Clone)]
pub struct AffineFn {
    pub coefs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineFn {
    fn from_map(map: BTreeMap<usize, f64>, constant: f64) -> Self {
        AffineFn {
            coefs: map.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            constant,
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(j, c) in &self.coefs {
            v += c * theta[j];
        }
        v
    }
}

/// One compiled scalar row `g(theta) >= 0`.
#[derive(Debug, Clone)]
pub enum RowBody {
    Affine(AffineFn),
    /// `radius^2 - |v(theta) - center|^2` with affine vertex coordinates.
    BallSq { coords: Vec<AffineFn>, center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Row {
    pub body: RowBody,
    /// Index into `Program::constraints`.
    pub constraint: usize,
}

impl Row {
    pub fn value(&self, theta: &[f64]) -> f64 {
        match &self.body {
            RowBody::Affine(a) => a.value(theta),
            RowBody::BallSq { coords, center, radius } => {
                let mut d2 = 0.0;
                for (k, c) in coords.iter().enumerate() {
                    let d = c.value(theta) - center[k];
                    d2 += d * d;
                }
                radius * radius - d2
            }
        }
    }

    /// Row margin in distance units: affine rows as-is, ball rows as
    /// `radius - |v - center|` instead of the smooth squared form. Signs
    /// agree with `value`, magnitudes match the monitor.
    pub fn audit_margin(&self, theta: &[f64]) -> f64 {
        match &self.body {
            RowBody::Affine(a) => a.value(theta),
            RowBody::BallSq { coords, center, radius } => {
                let mut d2 = 0.0;
                for (k, c) in coords.iter().enumerate() {
                    let d = c.value(theta) - center[k];
                    d2 += d * d;
                }
                radius - d2.sqrt()
            }
        }
    }

    /// Indices of the variables the row reads, ascending.
    pub fn var_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = match &self.body {
            RowBody::Affine(a) => a.coefs.iter().map(|&(j, _)| j).collect(),
            RowBody::BallSq { coords, .. } => coords
                .iter()
                .flat_map(|c| c.coefs.iter().map(|&(j, _)| j))
                .collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Adds the gradient of the row into `out` (dense, caller-zeroed).
    pub fn add_grad(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        match &self.body {
            RowBody::Affine(a) => {
                for &(j, c) in &a.coefs {
                    out[j] += scale * c;
                }
            }
            RowBody::BallSq { coords, center, .. } => {
                for (k, c) in coords.iter().enumerate() {
                    let d = c.value(theta) - center[k];
                    for &(j, a) in &c.coefs {
                        out[j] += scale * (-2.0 * d * a);
                    }
                }
            }
        }
    }

    /// Adds `scale * (-hessian of g)` into `h`. Affine rows contribute
    /// nothing; ball rows have `-hess g = 2 A^T A` with `A` the vertex
    /// coordinate Jacobian.
    pub fn add_neg_hess(&self, scale: f64, h: &mut Mat) {
        if let RowBody::BallSq { coords, .. } = &self.body {
            for c in coords {
                for &(i, a) in &c.coefs {
                    for &(j, b) in &c.coefs {
                        h.add(i, j, scale * 2.0 * a * b);
                    }
                }
            }
        }
    }
}

/// Compiled parametric program.
#[derive(Debug, Clone)]
pub struct Program {
    dim: usize,
    block_labels: Vec<String>,
    nu_min: f64,
    constraints: Vec<Constraint>,
    rows: Vec<Row>,
}

impl Program {
    pub fn new(
        dim: usize,
        block_labels: Vec<String>,
        nu_min: f64,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ProgramError> {
        if dim > MAX_VERTEX_DIM {
            return Err(ProgramError::DimensionTooLarge { dim });
        }
        let mut program =
            Program { dim, block_labels, nu_min, constraints, rows: Vec::new() };
        program.rows = program.compile_rows()?;
        Ok(program)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.block_labels.len()
    }

    pub fn block_label(&self, b: usize) -> &str {
        &self.block_labels[b]
    }

    pub fn num_vars(&self) -> usize {
        self.block_labels.len() * 2 * self.dim
    }

    pub fn nu_min(&self) -> f64 {
        self.nu_min
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    #[inline]
    pub fn center_index(&self, block: usize, k: usize) -> usize {
        block * 2 * self.dim + k
    }

    #[inline]
    pub fn size_index(&self, block: usize, k: usize) -> usize {
        block * 2 * self.dim + self.dim + k
    }

    /// Rectangle of one block at a parameter point.
    pub fn block_rect(&self, block: usize, theta: &[f64]) -> HyperRect {
        let n = self.dim;
        HyperRect {
            center: (0..n).map(|k| theta[self.center_index(block, k)]).collect(),
            size: (0..n).map(|k| theta[self.size_index(block, k)]).collect(),
        }
    }

    fn check_expr(&self, e: &RectExpr) -> Result<(), ProgramError> {
        if e.dim() != self.dim {
            return Err(ProgramError::ExprDim { expected: self.dim, got: e.dim() });
        }
        for &(b, _) in &e.terms {
            if b >= self.num_blocks() {
                return Err(ProgramError::BlockOutOfRange {
                    block: b,
                    blocks: self.num_blocks(),
                });
            }
        }
        Ok(())
    }

    /// Affine vertex coordinate `v_k(theta)` for the vertex selected by the
    /// sign bits of `idx` (bit `k` set means `+ size_k / 2`).
    fn vertex_coord(&self, e: &RectExpr, idx: usize, k: usize) -> AffineFn {
        let sign = if idx >> k & 1 == 1 { 0.5 } else { -0.5 };
        let mut map = BTreeMap::new();
        for &(b, s) in &e.terms {
            *map.entry(self.center_index(b, k)).or_insert(0.0) += s;
            *map.entry(self.size_index(b, k)).or_insert(0.0) += sign;
        }
        AffineFn::from_map(map, e.center_offset[k] + sign * e.size_offset[k])
    }

    fn compile_rows(&self) -> Result<Vec<Row>, ProgramError> {
        let n = self.dim;
        let mut rows = Vec::new();
        for (ci, c) in self.constraints.iter().enumerate() {
            match c {
                Constraint::VertexInBall { rect, center, radius, .. } => {
                    self.check_expr(rect)?;
                    for idx in 0..(1usize << n) {
                        let coords =
                            (0..n).map(|k| self.vertex_coord(rect, idx, k)).collect();
                        rows.push(Row {
                            body: RowBody::BallSq {
                                coords,
                                center: center.clone(),
                                radius: *radius,
                            },
                            constraint: ci,
                        });
                    }
                }
                Constraint::VertexInRows { rect, rows: hs_rows, .. } => {
                    self.check_expr(rect)?;
                    for idx in 0..(1usize << n) {
                        let coords: Vec<AffineFn> =
                            (0..n).map(|k| self.vertex_coord(rect, idx, k)).collect();
                        for hs in hs_rows {
                            // offset - normal . v(theta)
                            let mut map = BTreeMap::new();
                            let mut constant = hs.offset;
                            for k in 0..n {
                                for &(j, a) in &coords[k].coefs {
                                    *map.entry(j).or_insert(0.0) -= hs.normal[k] * a;
                                }
                                constant -= hs.normal[k] * coords[k].constant;
                            }
                            rows.push(Row {
                                body: RowBody::Affine(AffineFn::from_map(map, constant)),
                                constraint: ci,
                            });
                        }
                    }
                }
                Constraint::BoxInBox { inner, outer, .. } => {
                    self.check_expr(inner)?;
                    self.check_expr(outer)?;
                    for k in 0..n {
                        // Upper face: (po + so/2) - (pi + si/2) >= 0.
                        // Lower face: (pi - si/2) - (po - so/2) >= 0.
                        for upper in [true, false] {
                            let mut map = BTreeMap::new();
                            let mut constant = 0.0;
                            let mut take = |e: &RectExpr, center_sign: f64, size_sign: f64| {
                                for &(b, s) in &e.terms {
                                    *map.entry(self.center_index(b, k)).or_insert(0.0) +=
                                        center_sign * s;
                                    *map.entry(self.size_index(b, k)).or_insert(0.0) +=
                                        size_sign * 0.5;
                                }
                                constant += center_sign * e.center_offset[k]
                                    + size_sign * 0.5 * e.size_offset[k];
                            };
                            if upper {
                                take(outer, 1.0, 1.0);
                                take(inner, -1.0, -1.0);
                            } else {
                                take(inner, 1.0, -1.0);
                                take(outer, -1.0, 1.0);
                            }
                            rows.push(Row {
                                body: RowBody::Affine(AffineFn::from_map(map, constant)),
                                constraint: ci,
                            });
                        }
                    }
                }
                Constraint::SizeBound { block, .. } => {
                    if *block >= self.num_blocks() {
                        return Err(ProgramError::BlockOutOfRange {
                            block: *block,
                            blocks: self.num_blocks(),
                        });
                    }
                    for k in 0..n {
                        rows.push(Row {
                            body: RowBody::Affine(AffineFn {
                                coefs: vec![(self.size_index(*block, k), 1.0)],
                                constant: -self.nu_min,
                            }),
                            constraint: ci,
                        });
                    }
                }
            }
        }
        Ok(rows)
    }

    /// Objective `sum_b 1 / prod_k nu_{b,k}`.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let mut f = 0.0;
        for b in 0..self.num_blocks() {
            let mut vol = 1.0;
            for k in 0..self.dim {
                vol *= theta[self.size_index(b, k)];
            }
            f += 1.0 / vol;
        }
        f
    }

    pub fn objective_grad(&self, theta: &[f64], out: &mut [f64]) {
        for b in 0..self.num_blocks() {
            let mut vol = 1.0;
            for k in 0..self.dim {
                vol *= theta[self.size_index(b, k)];
            }
            let inv = 1.0 / vol;
            for k in 0..self.dim {
                out[self.size_index(b, k)] -= inv / theta[self.size_index(b, k)];
            }
        }
    }

    /// Adds `scale * hessian(objective)` into `h`.
    pub fn objective_hess_add(&self, theta: &[f64], scale: f64, h: &mut Mat) {
        for b in 0..self.num_blocks() {
            let mut vol = 1.0;
            for k in 0..self.dim {
                vol *= theta[self.size_index(b, k)];
            }
            let inv = 1.0 / vol;
            for k in 0..self.dim {
                for j in 0..self.dim {
                    let ik = self.size_index(b, k);
                    let ij = self.size_index(b, j);
                    let mult = if k == j { 2.0 } else { 1.0 };
                    h.add(ik, ij, scale * mult * inv / (theta[ik] * theta[ij]));
                }
            }
        }
    }

    /// Evaluates every row at `theta` (audit mode).
    pub fn check_point(&self, theta: &[f64]) -> Result<CheckReport, ProgramError> {
        if theta.len() != self.num_vars() {
            return Err(ProgramError::PointSize {
                expected: self.num_vars(),
                got: theta.len(),
            });
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut min_margin = f64::INFINITY;
        let mut min_by_kind: BTreeMap<RowKind, f64> = BTreeMap::new();
        for row in &self.rows {
            let margin = row.audit_margin(theta);
            let meta = self.constraints[row.constraint].meta();
            min_margin = min_margin.min(margin);
            min_by_kind
                .entry(meta.kind)
                .and_modify(|m| *m = m.min(margin))
                .or_insert(margin);
            rows.push(RowMargin {
                constraint: row.constraint,
                kind: meta.kind,
                label: meta.label.clone(),
                margin,
            });
        }
        Ok(CheckReport { rows, min_margin, min_by_kind })
    }

    /// Minimum row margin per constraint, in constraint order.
    pub fn constraint_margins(&self, theta: &[f64]) -> Result<Vec<f64>, ProgramError> {
        let report = self.check_point(theta)?;
        let mut out = vec![f64::INFINITY; self.constraints.len()];
        for row in &report.rows {
            out[row.constraint] = out[row.constraint].min(row.margin);
        }
        Ok(out)
    }

    /// Evaluate only the rows whose variables are all bound. Used to audit a
    /// params file that fixes a subset of the blocks: rows touching an
    /// unbound block are counted as skipped instead of guessed at.
    pub fn partial_check(&self, theta: &[Option<f64>]) -> Result<PartialCheckReport, ProgramError> {
        if theta.len() != self.num_vars() {
            return Err(ProgramError::PointSize {
                expected: self.num_vars(),
                got: theta.len(),
            });
        }
        let dense: Vec<f64> = theta.iter().map(|v| v.unwrap_or(0.0)).collect();
        let mut rows = Vec::new();
        let mut skipped_rows = 0usize;
        let mut min_margin = f64::INFINITY;
        let mut min_by_kind: BTreeMap<RowKind, f64> = BTreeMap::new();
        for row in &self.rows {
            if row.var_indices().iter().any(|&j| theta[j].is_none()) {
                skipped_rows += 1;
                continue;
            }
            let margin = row.audit_margin(&dense);
            let meta = self.constraints[row.constraint].meta();
            min_margin = min_margin.min(margin);
            min_by_kind
                .entry(meta.kind)
                .and_modify(|m| *m = m.min(margin))
                .or_insert(margin);
            rows.push(RowMargin {
                constraint: row.constraint,
                kind: meta.kind,
                label: meta.label.clone(),
                margin,
            });
        }
        Ok(PartialCheckReport { rows, skipped_rows, min_margin, min_by_kind })
    }
}

#[derive(Debug, Clone)]
pub struct RowMargin {
    pub constraint: usize,
    pub kind: RowKind,
    pub label: String,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub rows: Vec<RowMargin>,
    pub min_margin: f64,
    pub min_by_kind: BTreeMap<RowKind, f64>,
}

/// Like [`CheckReport`] but over a partially bound point; `min_margin` is
/// infinite when nothing could be evaluated.
#[derive(Debug, Clone)]
pub struct PartialCheckReport {
    pub rows: Vec<RowMargin>,
    pub skipped_rows: usize,
    pub min_margin: f64,
    pub min_by_kind: BTreeMap<RowKind, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Predicate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta(kind: RowKind) -> ConstraintMeta {
        ConstraintMeta { kind, label: "test".into() }
    }

    /// Two blocks in 2-D whose sum must sit in a ball: the shape used by
    /// every two-hop decomposition.
    fn two_block_ball_program() -> Program {
        let agg = RectExpr::from_block(0, 2).plus(&RectExpr::from_block(1, 2));
        Program::new(
            2,
            vec!["a".into(), "b".into()],
            1e-3,
            vec![
                Constraint::VertexInBall {
                    rect: agg,
                    center: vec![1.0, -2.0],
                    radius: 3.0,
                    meta: meta(RowKind::Inclusion),
                },
                Constraint::SizeBound { block: 0, meta: meta(RowKind::SizeBound) },
                Constraint::SizeBound { block: 1, meta: meta(RowKind::SizeBound) },
            ],
        )
        .unwrap()
    }

    #[test]
    fn row_counts_match_structure() {
        let p = two_block_ball_program();
        assert_eq!(p.num_vars(), 8);
        assert_eq!(p.rows().len(), 4 + 2 + 2);
    }

    #[test]
    fn vertex_rows_match_geometry_margins() {
        let p = two_block_ball_program();
        // theta = [p0, nu0, p1, nu1]
        let theta = vec![0.5, -1.0, 0.4, 0.6, 0.5, -1.0, 0.4, 0.6];
        let agg = HyperRect::new(vec![1.0, -2.0], vec![0.8, 1.2]).unwrap();
        let pf = Predicate::Ball { center: vec![1.0, -2.0], radius: 3.0 };
        // Smooth rows are radius^2 - dist^2 = (radius - d)(radius + d).
        let mut min_row = f64::INFINITY;
        for row in &p.rows()[..4] {
            min_row = min_row.min(row.value(&theta));
        }
        let d = 3.0 - crate::geometry::superlevel_margin(&agg, &pf).unwrap();
        assert!((min_row - (3.0 * 3.0 - d * d)).abs() < 1e-12);
    }

    #[test]
    fn box_in_box_rows_match_margin_sign() {
        let inner = RectExpr::from_block(0, 2);
        let outer = RectExpr::constant(&HyperRect::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap());
        let p = Program::new(
            2,
            vec!["a".into()],
            1e-3,
            vec![Constraint::BoxInBox { inner, outer, meta: meta(RowKind::PairAlwaysAlways) }],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let theta = vec![
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
            ];
            let inner_rect = p.block_rect(0, &theta);
            let outer_rect = HyperRect::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
            let expected =
                crate::geometry::box_in_box_margin(&inner_rect, &outer_rect).unwrap();
            let got = p
                .rows()
                .iter()
                .map(|r| r.value(&theta))
                .fold(f64::INFINITY, f64::min);
            assert!((expected - got).abs() < 1e-12);
        }
    }

    #[test]
    fn negated_expression_flips_centers_only() {
        let e = RectExpr::from_block(0, 2).negated();
        let p = Program::new(
            2,
            vec!["a".into()],
            1e-3,
            vec![Constraint::BoxInBox {
                inner: e,
                outer: RectExpr::constant(
                    &HyperRect::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap(),
                ),
                meta: meta(RowKind::PairAlwaysAlways),
            }],
        )
        .unwrap();
        // Block at center [-1,-1] size [1,1]: negated center is [1,1], inside.
        let theta = vec![-1.0, -1.0, 1.0, 1.0];
        let min =
            p.rows().iter().map(|r| r.value(&theta)).fold(f64::INFINITY, f64::min);
        assert!((min - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objective_counts_inverse_volumes() {
        let p = two_block_ball_program();
        let theta = vec![0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 1.0, 4.0];
        assert!((p.objective(&theta) - (0.25 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences() {
        let p = two_block_ball_program();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..8)
                .map(|j| {
                    if j % 4 >= 2 {
                        rng.random_range(0.2..2.0)
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            // Objective gradient.
            let mut grad = vec![0.0; 8];
            p.objective_grad(&theta, &mut grad);
            for j in 0..8 {
                let h = 1e-5 * (1.0 + theta[j].abs());
                let mut up = theta.clone();
                up[j] += h;
                let mut dn = theta.clone();
                dn[j] -= h;
                let fd = (p.objective(&up) - p.objective(&dn)) / (2.0 * h);
                let scale = 1.0 + fd.abs().max(grad[j].abs());
                assert!(
                    (fd - grad[j]).abs() / scale < 1e-5,
                    "objective grad mismatch at {j}: {fd} vs {}",
                    grad[j]
                );
            }
            // Row gradients.
            for row in p.rows() {
                let mut grad = vec![0.0; 8];
                row.add_grad(&theta, 1.0, &mut grad);
                for j in 0..8 {
                    let h = 1e-5 * (1.0 + theta[j].abs());
                    let mut up = theta.clone();
                    up[j] += h;
                    let mut dn = theta.clone();
                    dn[j] -= h;
                    let fd = (row.value(&up) - row.value(&dn)) / (2.0 * h);
                    let scale = 1.0 + fd.abs().max(grad[j].abs());
                    assert!((fd - grad[j]).abs() / scale < 1e-5);
                }
            }
        }
    }

    #[test]
    fn hessians_match_finite_difference_of_gradients() {
        let p = two_block_ball_program();
        let theta = vec![0.3, -0.7, 0.9, 1.4, 0.6, -1.1, 0.8, 0.5];
        let nv = 8;
        let mut h = Mat::zeros(nv);
        p.objective_hess_add(&theta, 1.0, &mut h);
        for row in p.rows() {
            // Verify -hess(g) via gradient differences.
            let mut hr = Mat::zeros(nv);
            row.add_neg_hess(1.0, &mut hr);
            for j in 0..nv {
                let step = 1e-6 * (1.0 + theta[j].abs());
                let mut up = theta.clone();
                up[j] += step;
                let mut dn = theta.clone();
                dn[j] -= step;
                let mut gu = vec![0.0; nv];
                let mut gd = vec![0.0; nv];
                row.add_grad(&up, 1.0, &mut gu);
                row.add_grad(&dn, 1.0, &mut gd);
                for i in 0..nv {
                    let fd = -(gu[i] - gd[i]) / (2.0 * step);
                    assert!((fd - hr.get(i, j)).abs() < 1e-4);
                }
            }
        }
        // Objective hessian spot-check against finite differences.
        for j in 0..nv {
            let step = 1e-6 * (1.0 + theta[j].abs());
            let mut up = theta.clone();
            up[j] += step;
            let mut dn = theta.clone();
            dn[j] -= step;
            let mut gu = vec![0.0; nv];
            let mut gd = vec![0.0; nv];
            p.objective_grad(&up, &mut gu);
            p.objective_grad(&dn, &mut gd);
            for i in 0..nv {
                let fd = (gu[i] - gd[i]) / (2.0 * step);
                assert!((fd - h.get(i, j)).abs() < 1e-3 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn check_point_groups_margins() {
        let p = two_block_ball_program();
        let theta = vec![0.5, -1.0, 0.4, 0.6, 0.5, -1.0, 0.4, 0.6];
        let report = p.check_point(&theta).unwrap();
        assert_eq!(report.rows.len(), 8);
        assert!(report.min_by_kind[&RowKind::SizeBound] > 0.0);
        assert!(report.min_margin <= report.min_by_kind[&RowKind::Inclusion]);
        // Reported ball margins are radius - distance, matching the monitor.
        let agg = HyperRect::new(vec![1.0, -2.0], vec![0.8, 1.2]).unwrap();
        let pf = Predicate::Ball { center: vec![1.0, -2.0], radius: 3.0 };
        let expected = crate::geometry::superlevel_margin(&agg, &pf).unwrap();
        assert!((report.min_by_kind[&RowKind::Inclusion] - expected).abs() < 1e-12);
        assert!(matches!(
            p.check_point(&theta[..4]),
            Err(ProgramError::PointSize { .. })
        ));
    }

    #[test]
    fn partial_check_skips_rows_with_unbound_blocks() {
        let p = two_block_ball_program();
        let full = vec![0.5, -1.0, 0.4, 0.6, 0.5, -1.0, 0.4, 0.6];
        let all_bound: Vec<Option<f64>> = full.iter().copied().map(Some).collect();
        let report = p.partial_check(&all_bound).unwrap();
        assert_eq!(report.skipped_rows, 0);
        let reference = p.check_point(&full).unwrap();
        assert_eq!(report.rows.len(), reference.rows.len());
        assert!((report.min_margin - reference.min_margin).abs() < 1e-15);

        // Unbind the second block: the 4 vertex rows and its 2 size rows go.
        let mut half = all_bound;
        for slot in &mut half[4..] {
            *slot = None;
        }
        let report = p.partial_check(&half).unwrap();
        assert_eq!(report.skipped_rows, 6);
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|r| r.kind == RowKind::SizeBound));
    }

    #[test]
    fn var_indices_cover_each_row_exactly() {
        let p = two_block_ball_program();
        for row in p.rows() {
            let vars = row.var_indices();
            assert!(!vars.is_empty());
            assert!(vars.windows(2).all(|w| w[0] < w[1]));
            // Perturbing any listed variable must change the row value.
            let theta = vec![0.5, -1.0, 0.4, 0.6, 0.5, -1.0, 0.4, 0.6];
            for &j in &vars {
                let mut bumped = theta.clone();
                bumped[j] += 0.37;
                assert!((row.value(&bumped) - row.value(&theta)).abs() > 1e-12);
            }
        }
    }

    #[test]
    fn empty_program_has_zero_objective() {
        let p = Program::new(2, Vec::new(), 1e-3, Vec::new()).unwrap();
        assert_eq!(p.num_vars(), 0);
        assert_eq!(p.objective(&[]), 0.0);
        assert!(p.rows().is_empty());
    }
}
