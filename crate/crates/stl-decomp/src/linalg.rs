//! Small dense linear algebra helpers shared by the solver and the
//! trajectory synthesizer. Everything is `Vec<f64>` based and sequential so
//! results are bit-reproducible across runs.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.n {
            self.a[i * self.n + i] += v;
        }
    }

    pub fn max_abs_diag(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            m = m.max(self.get(i, i).abs());
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for symmetric positive definite `A` by an in-place
/// Cholesky factorization. `A` is consumed. Returns `None` when the matrix
/// is not numerically positive definite.
pub fn cholesky_solve(mut m: Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = m.n;
    debug_assert_eq!(b.len(), n);
    // Factor A = L L^T, storing L in the lower triangle.
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            let l = m.get(j, k);
            d -= l * l;
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        m.a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= m.get(i, k) * m.get(j, k);
            }
            m.a[i * n + j] = v / d;
        }
    }
    // Forward substitution L y = b.
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= m.get(i, k) * x[k];
        }
        x[i] /= m.get(i, i);
    }
    // Backward substitution L^T x = y.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= m.get(k, i) * x[k];
        }
        x[i] /= m.get(i, i);
    }
    Some(x)
}

/// Solves `A x = b` for symmetric positive semi-definite `A`, escalating a
/// diagonal shift until the factorization succeeds.
pub fn cholesky_solve_regularized(m: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let scale = 1.0 + m.max_abs_diag();
    let mut shift = 1e-12 * scale;
    for _ in 0..12 {
        let mut trial = m.clone();
        trial.add_diag(shift);
        if let Some(x) = cholesky_solve(trial, b) {
            return Some(x);
        }
        shift *= 100.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // A = [[4, 1], [1, 3]], b = [1, 2] has solution [1/11, 7/11].
        let mut m = Mat::zeros(2);
        m.a = vec![4.0, 1.0, 1.0, 3.0];
        let x = cholesky_solve(m, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut m = Mat::zeros(2);
        m.a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(m, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn regularized_solve_handles_singular_directions() {
        // Rank-one matrix: the regularized solve must still return something
        // close to the least-norm solution.
        let mut m = Mat::zeros(2);
        m.a = vec![1.0, 1.0, 1.0, 1.0];
        let x = cholesky_solve_regularized(&m, &[2.0, 2.0]).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-5);
    }
}
