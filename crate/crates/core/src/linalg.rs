//! Dense symmetric positive-definite solves for the small Newton systems of the
//! power solver.

use alloc::vec::Vec;

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub(crate) struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// Solves `A x = b` by Cholesky factorization in place. Returns `None` if
    /// the matrix is not numerically positive definite.
    pub(crate) fn cholesky_solve(mut self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= self.get(j, k) * self.get(j, k);
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let ljj = libm::sqrt(diag);
            self.set(j, j, ljj);
            for i in j + 1..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= self.get(i, k) * self.get(j, k);
                }
                self.set(i, j, v / ljj);
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.get(i, k) * y[k];
            }
            y[i] /= self.get(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.get(k, i) * y[k];
            }
            y[i] /= self.get(i, i);
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let mut a = SquareMatrix::zeros(3);
        let rows = [[4.0, 1.0, 2.0], [1.0, 3.0, 0.5], [2.0, 0.5, 5.0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let solved = a.cholesky_solve(&b).unwrap();
        for (s, e) in solved.iter().zip(&x) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SquareMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        assert!(a.cholesky_solve(&[1.0, 1.0]).is_none());
    }
}
