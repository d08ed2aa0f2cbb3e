//! Axis-aligned hyper-rectangle algebra and the concave region predicates
//! it interacts with.
//!
//! Rectangles are stored as a center point and full edge lengths. Because a
//! concave function that is non-negative on all `2^n` vertices of a
//! rectangle is non-negative on the whole rectangle, region inclusion can
//! be enforced and audited through vertex margins alone; that property is
//! what `superlevel_margin` and the solver's vertex rows rely on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::dot;

/// Vertex enumeration is exponential in the dimension, so anything above
/// this is refused up front.
pub const MAX_VERTEX_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds the vertex enumeration limit of {MAX_VERTEX_DIM}")]
    DimensionTooLarge { dim: usize },
    #[error("rectangle center and sizes must be finite with non-negative sizes")]
    InvalidRect,
    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),
    #[error("region has no interior point")]
    EmptyRegion,
    #[error("region is unbounded")]
    Unbounded,
}

/// Axis-aligned hyper-rectangle `{ z : |z_k - center_k| <= size_k / 2 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    pub center: Vec<f64>,
    /// Full edge lengths, one per coordinate.
    pub size: Vec<f64>,
}

impl HyperRect {
    pub fn new(center: Vec<f64>, size: Vec<f64>) -> Result<Self, GeometryError> {
        if center.len() != size.len() || center.is_empty() {
            return Err(GeometryError::DimensionMismatch {
                expected: center.len().max(1),
                got: size.len(),
            });
        }
        let finite = center.iter().chain(size.iter()).all(|v| v.is_finite());
        if !finite || size.iter().any(|&s| s < 0.0) {
            return Err(GeometryError::InvalidRect);
        }
        Ok(HyperRect { center, size })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// All `2^n` vertices in a fixed order: bit `k` of the vertex index
    /// selects the sign of coordinate `k` (`1` = `+size_k / 2`).
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>, GeometryError> {
        let n = self.dim();
        if n > MAX_VERTEX_DIM {
            return Err(GeometryError::DimensionTooLarge { dim: n });
        }
        let mut out = Vec::with_capacity(1usize << n);
        for idx in 0..(1usize << n) {
            let mut v = Vec::with_capacity(n);
            for k in 0..n {
                let sign = if idx >> k & 1 == 1 { 0.5 } else { -0.5 };
                v.push(self.center[k] + sign * self.size[k]);
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Minkowski sum: centers add and edge lengths add.
    pub fn minkowski_sum(&self, other: &HyperRect) -> Result<HyperRect, GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let center = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| a + b)
            .collect();
        let size = self
            .size
            .iter()
            .zip(&other.size)
            .map(|(a, b)| a + b)
            .collect();
        HyperRect::new(center, size)
    }

    /// The reflected rectangle `{ -z : z in self }`.
    pub fn negate(&self) -> HyperRect {
        HyperRect {
            center: self.center.iter().map(|c| -c).collect(),
            size: self.size.clone(),
        }
    }

    /// Signed membership margin `min_k (size_k / 2 - |z_k - center_k|)`;
    /// positive inside, zero on the boundary.
    pub fn membership_margin(&self, z: &[f64]) -> Result<f64, GeometryError> {
        if z.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let mut m = f64::INFINITY;
        for k in 0..self.dim() {
            m = m.min(self.size[k] / 2.0 - (z[k] - self.center[k]).abs());
        }
        Ok(m)
    }
}

/// One affine membership row `h(z) = offset - normal . z >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn margin(&self, z: &[f64]) -> f64 {
        self.offset - dot(&self.normal, z)
    }
}

/// Concave membership function with a convex superlevel set.
///
/// `eval` returns a signed margin: positive strictly inside the region,
/// negative outside. For `Ball` the margin is `radius - |z - center|`; the
/// solver uses the smooth equivalent `radius^2 - |z - center|^2` for its
/// rows, but monitoring and audits use this distance form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Ball { center: Vec<f64>, radius: f64 },
    Rect(HyperRect),
    Halfspaces(Vec<Halfspace>),
}

impl Predicate {
    pub fn dim(&self) -> usize {
        match self {
            Predicate::Ball { center, .. } => center.len(),
            Predicate::Rect(r) => r.dim(),
            Predicate::Halfspaces(rows) => rows.first().map_or(0, |r| r.normal.len()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), GeometryError> {
        match self {
            Predicate::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(GeometryError::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(GeometryError::InvalidPredicate(
                        "ball radius must be finite and positive".into(),
                    ));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return Err(GeometryError::InvalidPredicate(
                        "ball center must be finite".into(),
                    ));
                }
            }
            Predicate::Rect(r) => {
                if r.dim() != dim {
                    return Err(GeometryError::DimensionMismatch {
                        expected: dim,
                        got: r.dim(),
                    });
                }
                if r.size.iter().any(|&s| s <= 0.0) {
                    return Err(GeometryError::InvalidPredicate(
                        "rectangle predicate needs positive sizes".into(),
                    ));
                }
            }
            Predicate::Halfspaces(rows) => {
                if rows.is_empty() {
                    return Err(GeometryError::InvalidPredicate(
                        "halfspace predicate needs at least one row".into(),
                    ));
                }
                for row in rows {
                    if row.normal.len() != dim {
                        return Err(GeometryError::DimensionMismatch {
                            expected: dim,
                            got: row.normal.len(),
                        });
                    }
                    let finite =
                        row.offset.is_finite() && row.normal.iter().all(|v| v.is_finite());
                    if !finite || row.normal.iter().all(|&v| v == 0.0) {
                        return Err(GeometryError::InvalidPredicate(
                            "halfspace rows need a finite, nonzero normal".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Signed membership margin at `z`.
    pub fn eval(&self, z: &[f64]) -> Result<f64, GeometryError> {
        if z.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(match self {
            Predicate::Ball { center, radius } => {
                let mut d2 = 0.0;
                for k in 0..center.len() {
                    let d = z[k] - center[k];
                    d2 += d * d;
                }
                radius - d2.sqrt()
            }
            Predicate::Rect(r) => r.membership_margin(z)?,
            Predicate::Halfspaces(rows) => rows
                .iter()
                .map(|row| row.margin(z))
                .fold(f64::INFINITY, f64::min),
        })
    }

    /// The reflected region `{ -z : z in self }`.
    pub fn negate(&self) -> Predicate {
        match self {
            Predicate::Ball { center, radius } => Predicate::Ball {
                center: center.iter().map(|c| -c).collect(),
                radius: *radius,
            },
            Predicate::Rect(r) => Predicate::Rect(r.negate()),
            Predicate::Halfspaces(rows) => Predicate::Halfspaces(
                rows.iter()
                    .map(|row| Halfspace {
                        normal: row.normal.iter().map(|v| -v).collect(),
                        offset: row.offset,
                    })
                    .collect(),
            ),
        }
    }

    /// Affine membership rows when the region is a polyhedron (`Rect` or
    /// `Halfspaces`); `None` for balls.
    pub fn halfspace_rows(&self) -> Option<Vec<Halfspace>> {
        match self {
            Predicate::Ball { .. } => None,
            Predicate::Rect(r) => {
                let n = r.dim();
                let mut rows = Vec::with_capacity(2 * n);
                for k in 0..n {
                    let mut up = vec![0.0; n];
                    up[k] = 1.0;
                    rows.push(Halfspace {
                        normal: up,
                        offset: r.center[k] + r.size[k] / 2.0,
                    });
                    let mut lo = vec![0.0; n];
                    lo[k] = -1.0;
                    rows.push(Halfspace {
                        normal: lo,
                        offset: r.size[k] / 2.0 - r.center[k],
                    });
                }
                Some(rows)
            }
            Predicate::Halfspaces(rows) => Some(rows.clone()),
        }
    }

    /// A point strictly inside the region. Balls and rectangles use their
    /// center; halfspace intersections run a cyclic margin projection from
    /// the origin, shrinking the margin target until it fits.
    pub fn interior_point(&self) -> Result<Vec<f64>, GeometryError> {
        match self {
            Predicate::Ball { center, .. } => Ok(center.clone()),
            Predicate::Rect(r) => Ok(r.center.clone()),
            Predicate::Halfspaces(rows) => {
                let n = self.dim();
                let mut delta = 1.0;
                for _ in 0..40 {
                    let mut z = vec![0.0; n];
                    for _ in 0..256 {
                        let mut moved = false;
                        for row in rows {
                            let m = row.margin(&z);
                            if m < delta {
                                let nn = dot(&row.normal, &row.normal);
                                let step = (delta - m) / nn;
                                for k in 0..n {
                                    z[k] -= step * row.normal[k];
                                }
                                moved = true;
                            }
                        }
                        if !moved {
                            break;
                        }
                    }
                    let worst = rows
                        .iter()
                        .map(|row| row.margin(&z))
                        .fold(f64::INFINITY, f64::min);
                    if worst > 0.0 {
                        return Ok(z);
                    }
                    delta *= 0.5;
                }
                Err(GeometryError::EmptyRegion)
            }
        }
    }
}

/// Minimum of `pf` over the vertices of `rect`. For concave `pf` a positive
/// value certifies that the whole rectangle sits inside the superlevel set.
pub fn superlevel_margin(rect: &HyperRect, pf: &Predicate) -> Result<f64, GeometryError> {
    if rect.dim() != pf.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: pf.dim(),
            got: rect.dim(),
        });
    }
    let mut m = f64::INFINITY;
    for v in rect.vertices()? {
        m = m.min(pf.eval(&v)?);
    }
    Ok(m)
}

/// Signed nesting margin of `inner` inside `outer`:
/// `min_k (outer.size_k/2 - |inner.center_k - outer.center_k| - inner.size_k/2)`.
pub fn box_in_box_margin(inner: &HyperRect, outer: &HyperRect) -> Result<f64, GeometryError> {
    if inner.dim() != outer.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: outer.dim(),
            got: inner.dim(),
        });
    }
    let mut m = f64::INFINITY;
    for k in 0..inner.dim() {
        m = m.min(
            outer.size[k] / 2.0
                - (inner.center[k] - outer.center[k]).abs()
                - inner.size[k] / 2.0,
        );
    }
    Ok(m)
}

/// A large rectangle inscribed in the predicate's superlevel set.
///
/// Rectangles map to themselves and a ball of radius `r` in dimension `n`
/// yields the centered cube with edge `2 r / sqrt(n)`. Bounded halfspace
/// intersections are grown around an interior point: a uniform cube is
/// bisected first, then each coordinate is widened by a second bisection
/// pass. Unbounded regions are rejected.
pub fn inscribe_rect(pf: &Predicate) -> Result<HyperRect, GeometryError> {
    match pf {
        Predicate::Rect(r) => Ok(r.clone()),
        Predicate::Ball { center, radius } => {
            if *radius <= 0.0 {
                return Err(GeometryError::EmptyRegion);
            }
            let n = center.len();
            let edge = 2.0 * radius / (n as f64).sqrt();
            HyperRect::new(center.clone(), vec![edge; n])
        }
        Predicate::Halfspaces(rows) => {
            let n = pf.dim();
            // Axis recession test: if no row limits growth along +/- e_k the
            // region is unbounded in that direction.
            for k in 0..n {
                if rows.iter().all(|r| r.normal[k] <= 0.0) || rows.iter().all(|r| r.normal[k] >= 0.0)
                {
                    return Err(GeometryError::Unbounded);
                }
            }
            let z0 = pf.interior_point()?;
            // A rect with sizes nu fits iff every row keeps a non-negative
            // margin at the farthest vertex.
            let fits = |nu: &[f64]| -> bool {
                rows.iter().all(|row| {
                    let mut worst = row.margin(&z0);
                    for k in 0..n {
                        worst -= row.normal[k].abs() * nu[k] / 2.0;
                    }
                    worst >= 0.0
                })
            };
            // Uniform cube by bisection on the edge length.
            let mut hi = 1.0;
            let mut grow = 0;
            while fits(&vec![hi; n]) {
                hi *= 2.0;
                grow += 1;
                if grow > 60 {
                    return Err(GeometryError::Unbounded);
                }
            }
            let mut lo = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if fits(&vec![mid; n]) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut nu = vec![lo; n];
            // Widen one coordinate at a time, two deterministic passes.
            for _ in 0..2 {
                for k in 0..n {
                    let mut lo_k = nu[k];
                    let mut hi_k = lo_k.max(1.0);
                    let mut grow = 0;
                    loop {
                        let mut trial = nu.clone();
                        trial[k] = hi_k;
                        if !fits(&trial) {
                            break;
                        }
                        hi_k *= 2.0;
                        grow += 1;
                        if grow > 60 {
                            return Err(GeometryError::Unbounded);
                        }
                    }
                    for _ in 0..80 {
                        let mid = 0.5 * (lo_k + hi_k);
                        let mut trial = nu.clone();
                        trial[k] = mid;
                        if fits(&trial) {
                            lo_k = mid;
                        } else {
                            hi_k = mid;
                        }
                    }
                    nu[k] = lo_k;
                }
            }
            HyperRect::new(z0, nu)
        }
    }
}

/// The axis-aligned bounding box of a region, exact for rectangles and
/// balls. Halfspace intersections would need a support computation per face
/// and are rejected as unbounded.
pub fn bounding_rect(pf: &Predicate) -> Result<HyperRect, GeometryError> {
    match pf {
        Predicate::Rect(r) => Ok(r.clone()),
        Predicate::Ball { center, radius } => {
            HyperRect::new(center.clone(), vec![2.0 * radius; center.len()])
        }
        Predicate::Halfspaces(_) => Err(GeometryError::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(center: &[f64], size: &[f64]) -> HyperRect {
        HyperRect::new(center.to_vec(), size.to_vec()).unwrap()
    }

    #[test]
    fn vertices_enumerate_in_bit_order() {
        let r = rect(&[0.0, 0.0], &[2.0, 4.0]);
        let v = r.vertices().unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], vec![-1.0, -2.0]);
        assert_eq!(v[1], vec![1.0, -2.0]);
        assert_eq!(v[2], vec![-1.0, 2.0]);
        assert_eq!(v[3], vec![1.0, 2.0]);
    }

    #[test]
    fn vertices_reject_high_dimension() {
        let n = MAX_VERTEX_DIM + 1;
        let r = rect(&vec![0.0; n], &vec![1.0; n]);
        assert!(matches!(
            r.vertices(),
            Err(GeometryError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn minkowski_sum_adds_centers_and_sizes() {
        let a = rect(&[-9.99, 9.99], &[1.89, 1.89]);
        let b = rect(&[25.00, 5.00], &[0.91, 0.91]);
        let s = a.minkowski_sum(&b).unwrap();
        assert!((s.center[0] - 15.01).abs() < 1e-12);
        assert!((s.center[1] - 14.99).abs() < 1e-12);
        assert!((s.size[0] - 2.80).abs() < 1e-12);
        assert!((s.size[1] - 2.80).abs() < 1e-12);
    }

    #[test]
    fn minkowski_sum_matches_vertex_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=3);
            let a = rect(
                &(0..n).map(|_| rng.random_range(-10.0..10.0)).collect::<Vec<_>>(),
                &(0..n).map(|_| rng.random_range(0.0..5.0)).collect::<Vec<_>>(),
            );
            let b = rect(
                &(0..n).map(|_| rng.random_range(-10.0..10.0)).collect::<Vec<_>>(),
                &(0..n).map(|_| rng.random_range(0.0..5.0)).collect::<Vec<_>>(),
            );
            let s = a.minkowski_sum(&b).unwrap();
            // Extremes of pairwise vertex sums must match the sum rectangle.
            for k in 0..n {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for va in a.vertices().unwrap() {
                    for vb in b.vertices().unwrap() {
                        lo = lo.min(va[k] + vb[k]);
                        hi = hi.max(va[k] + vb[k]);
                    }
                }
                assert!((lo - (s.center[k] - s.size[k] / 2.0)).abs() < 1e-12);
                assert!((hi - (s.center[k] + s.size[k] / 2.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negate_reflects_through_origin() {
        let r = rect(&[1.0, -2.0], &[3.0, 4.0]);
        let n = r.negate();
        assert_eq!(n.center, vec![-1.0, 2.0]);
        assert_eq!(n.size, r.size);
        assert_eq!(n.negate(), r);
    }

    #[test]
    fn ball_margin_is_radius_minus_distance() {
        let pf = Predicate::Ball { center: vec![15.0, 15.0], radius: 3.0 };
        let m = pf.eval(&[16.41, 13.59]).unwrap();
        let expected = 3.0 - (1.41f64.powi(2) + 1.41f64.powi(2)).sqrt();
        assert!((m - expected).abs() < 1e-12);
        assert!((m - 1.006).abs() < 1e-3);
        assert!((pf.eval(&[15.0, 15.0]).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rect_margin_is_zero_on_boundary() {
        let pf = Predicate::Rect(rect(&[1.0, 0.0], &[1.0, 1.0]));
        assert!((pf.eval(&[1.5, 0.0]).unwrap()).abs() < 1e-12);
        assert!((pf.eval(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(pf.eval(&[2.0, 0.0]).unwrap() < 0.0);
    }

    #[test]
    fn halfspace_margin_is_row_minimum() {
        let pf = Predicate::Halfspaces(vec![
            Halfspace { normal: vec![-1.0, 0.0], offset: -5.0 },
            Halfspace { normal: vec![0.0, -1.0], offset: 5.0 },
        ]);
        // Rows encode x >= 5 and y >= -5.
        assert!((pf.eval(&[6.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pf.eval(&[5.0, -5.0]).unwrap()).abs() < 1e-12);
        assert!(pf.eval(&[4.0, 0.0]).unwrap() < 0.0);
    }

    #[test]
    fn eval_checks_dimensions() {
        let pf = Predicate::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert!(matches!(
            pf.eval(&[0.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn superlevel_margin_matches_worst_corner() {
        let pf = Predicate::Ball { center: vec![15.0, 15.0], radius: 3.0 };
        let r = rect(&[15.01, 14.99], &[2.80, 2.80]);
        let m = superlevel_margin(&r, &pf).unwrap();
        // Worst corner is center + [1.4, -1.4].
        let expected = 3.0 - (1.41f64.powi(2) + 1.41f64.powi(2)).sqrt();
        assert!((m - expected).abs() < 1e-12);

        let tight = rect(&[0.0, 0.0], &[2.0, 2.0]);
        let unit = Predicate::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let m = superlevel_margin(&tight, &unit).unwrap();
        assert!((m - (1.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn positive_margin_certifies_interior_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=3);
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let pf = Predicate::Ball { center: center.clone(), radius: rng.random_range(1.0..4.0) };
            let r = rect(
                &(0..n)
                    .map(|k| center[k] + rng.random_range(-0.5..0.5))
                    .collect::<Vec<_>>(),
                &(0..n).map(|_| rng.random_range(0.1..1.0)).collect::<Vec<_>>(),
            );
            let m = superlevel_margin(&r, &pf).unwrap();
            if m > 0.0 {
                for _ in 0..50 {
                    let z: Vec<f64> = (0..n)
                        .map(|k| r.center[k] + rng.random_range(-0.5..0.5) * r.size[k])
                        .collect();
                    assert!(pf.eval(&z).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn box_in_box_margin_examples() {
        let outer = rect(&[0.0, 0.0], &[4.0, 4.0]);
        let inner = rect(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((box_in_box_margin(&inner, &outer).unwrap() - 1.5).abs() < 1e-12);
        let shifted = rect(&[3.0, 0.0], &[1.0, 1.0]);
        assert!((box_in_box_margin(&shifted, &outer).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn box_in_box_margin_sign_agrees_with_vertex_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let n = rng.random_range(1..=3);
            let outer = rect(
                &(0..n).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>(),
                &(0..n).map(|_| rng.random_range(0.5..4.0)).collect::<Vec<_>>(),
            );
            let inner = rect(
                &(0..n).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>(),
                &(0..n).map(|_| rng.random_range(0.1..3.0)).collect::<Vec<_>>(),
            );
            let m = box_in_box_margin(&inner, &outer).unwrap();
            if m.abs() < 1e-9 {
                continue;
            }
            let all_inside = inner
                .vertices()
                .unwrap()
                .iter()
                .all(|v| outer.membership_margin(v).unwrap() >= 0.0);
            assert_eq!(m > 0.0, all_inside);
        }
    }

    #[test]
    fn inscribe_ball_gives_centered_cube() {
        let pf = Predicate::Ball { center: vec![0.0, 0.0], radius: 3.0 };
        let r = inscribe_rect(&pf).unwrap();
        assert_eq!(r.center, vec![0.0, 0.0]);
        let expected = 3.0 * 2f64.sqrt();
        assert!((r.size[0] - expected).abs() < 1e-12);
        assert!((r.size[1] - expected).abs() < 1e-12);
        assert!(superlevel_margin(&r, &pf).unwrap() >= -1e-12);
    }

    #[test]
    fn inscribe_rect_is_identity_on_rects() {
        let r = rect(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(inscribe_rect(&Predicate::Rect(r.clone())).unwrap(), r);
    }

    #[test]
    fn inscribe_halfspaces_fills_a_square() {
        let pf = Predicate::Halfspaces(vec![
            Halfspace { normal: vec![1.0, 0.0], offset: 1.0 },
            Halfspace { normal: vec![-1.0, 0.0], offset: 1.0 },
            Halfspace { normal: vec![0.0, 1.0], offset: 1.0 },
            Halfspace { normal: vec![0.0, -1.0], offset: 1.0 },
        ]);
        let r = inscribe_rect(&pf).unwrap();
        assert!(superlevel_margin(&r, &pf).unwrap() >= -1e-9);
        assert!((r.size[0] - 2.0).abs() < 1e-6);
        assert!((r.size[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn inscribe_rejects_unbounded_halfspaces() {
        let pf = Predicate::Halfspaces(vec![
            Halfspace { normal: vec![-1.0, 0.0], offset: -5.0 },
            Halfspace { normal: vec![0.0, -1.0], offset: 5.0 },
        ]);
        assert!(matches!(inscribe_rect(&pf), Err(GeometryError::Unbounded)));
    }

    #[test]
    fn inscribed_polytope_rect_stays_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        for _ in 0..50 {
            // Random bounded polygon: box rows plus a diagonal cut.
            let pf = Predicate::Halfspaces(vec![
                Halfspace { normal: vec![1.0, 0.0], offset: rng.random_range(0.5..3.0) },
                Halfspace { normal: vec![-1.0, 0.0], offset: rng.random_range(0.5..3.0) },
                Halfspace { normal: vec![0.0, 1.0], offset: rng.random_range(0.5..3.0) },
                Halfspace { normal: vec![0.0, -1.0], offset: rng.random_range(0.5..3.0) },
                Halfspace {
                    normal: vec![rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)],
                    offset: rng.random_range(0.5..3.0),
                },
            ]);
            let r = inscribe_rect(&pf).unwrap();
            assert!(superlevel_margin(&r, &pf).unwrap() >= -1e-9);
            assert!(r.size.iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn interior_point_reaches_shifted_regions() {
        let pf = Predicate::Halfspaces(vec![
            Halfspace { normal: vec![-1.0, 0.0], offset: -5.0 },
            Halfspace { normal: vec![1.0, 0.0], offset: 5.2 },
            Halfspace { normal: vec![0.0, 1.0], offset: 0.1 },
            Halfspace { normal: vec![0.0, -1.0], offset: 0.1 },
        ]);
        let z = pf.interior_point().unwrap();
        assert!(pf.eval(&z).unwrap() > 0.0);
    }

    #[test]
    fn bounding_rect_wraps_balls_exactly() {
        let pf = Predicate::Ball { center: vec![1.0, -2.0], radius: 1.5 };
        let b = bounding_rect(&pf).unwrap();
        assert_eq!(b.center, vec![1.0, -2.0]);
        assert_eq!(b.size, vec![3.0, 3.0]);
        // Ball fits in a box exactly when its bounding box does.
        let outer = rect(&[1.0, -2.0], &[3.0, 3.0]);
        assert!(box_in_box_margin(&b, &outer).unwrap().abs() < 1e-12);
        let pf = Predicate::Halfspaces(vec![Halfspace {
            normal: vec![1.0, 0.0],
            offset: 1.0,
        }]);
        assert!(matches!(bounding_rect(&pf), Err(GeometryError::Unbounded)));
    }

    #[test]
    fn interior_point_rejects_empty_region() {
        let pf = Predicate::Halfspaces(vec![
            Halfspace { normal: vec![1.0, 0.0], offset: -1.0 },
            Halfspace { normal: vec![-1.0, 0.0], offset: -1.0 },
        ]);
        assert!(matches!(
            pf.interior_point(),
            Err(GeometryError::EmptyRegion)
        ));
    }
}
