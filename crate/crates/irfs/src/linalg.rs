//! Small dense square matrices and the spectral norm.
//!
//! The model zoo lives in dimensions one to a handful, so matrices are
//! row-major with inline storage up to 3×3 and nothing here tries to be a
//! linear algebra library. The one non-trivial routine is the operator
//! (spectral) norm, computed by power iteration on `AᵀA` from deterministic
//! start vectors.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::engine::State;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    dim: usize,
    data: SmallVec<[f64; 9]>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: smallvec::smallvec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        SquareMatrix {
            dim: 1,
            data: smallvec::smallvec![value],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &SquareMatrix) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.set(i, j, out.get(i, j) + a * rhs.get(k, j));
                }
            }
        }
        out
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> State {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut out: State = smallvec::smallvec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Spectral norm: the largest singular value, within relative `tol`.
    ///
    /// Power iteration on `B = AᵀA` with Rayleigh-quotient convergence.
    /// Starts are deterministic: the harmonic vector `(1, 1/2, …, 1/d)`
    /// followed by a bit-mixed vector, and the larger estimate wins, so an
    /// unlucky start orthogonal to the top eigenspace cannot hide it.
    pub fn operator_norm(&self, tol: f64) -> f64 {
        if self.dim == 1 {
            return self.get(0, 0).abs();
        }
        let fro = self.frobenius();
        if fro == 0.0 {
            return 0.0;
        }
        let b = self.transpose().matmul(self);
        let d = self.dim;
        let harmonic: Vec<f64> = (0..d).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let mixed: Vec<f64> = (0..d)
            .map(|j| {
                crate::rng::mix64(j as u64 ^ 0x5EED) as f64 / u64::MAX as f64 - 0.5
            })
            .collect();
        let mut best = 0.0f64;
        for start in [&harmonic, &mixed] {
            if let Some(lambda) = power_iterate(&b, start, tol) {
                best = best.max(lambda);
            }
        }
        best.max(0.0).sqrt()
    }
}

fn power_iterate(b: &SquareMatrix, start: &[f64], tol: f64) -> Option<f64> {
    const MAX_ITERS: usize = 20_000;
    let d = b.dim();
    let mut v: Vec<f64> = start.to_vec();
    let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let n0 = norm(&v);
    if n0 == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|t| *t /= n0);
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITERS {
        let w = b.apply(&v);
        // Rayleigh quotient vᵀBv with v unit.
        let lambda: f64 = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        if !lambda.is_finite() {
            return None;
        }
        let wn = norm(&w);
        if wn == 0.0 {
            // v in the kernel of B.
            return Some(0.0);
        }
        if !prev.is_nan() && (lambda - prev).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return Some(lambda);
        }
        prev = lambda;
        for i in 0..d {
            v[i] = w[i] / wn;
        }
    }
    Some(prev)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &SquareMatrix, b: &[f64]) -> Result<State> {
    let d = a.dim();
    if b.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries, matrix is {d}x{d}",
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut rhs: State = SmallVec::from_slice(b);
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    for col in 0..d {
        let (pivot_row, pivot) = (col..d)
            .map(|r| (r, m.get(r, col)))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .unwrap();
        if pivot.abs() < 1e-12 * scale {
            return Err(Error::SingularMeanMatrix);
        }
        if pivot_row != col {
            for j in 0..d {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, tmp);
            }
            rhs.swap(col, pivot_row);
        }
        for r in col + 1..d {
            let f = m.get(r, col) / m.get(col, col);
            if f == 0.0 {
                continue;
            }
            for j in col..d {
                m.set(r, j, m.get(r, j) - f * m.get(col, j));
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x: State = smallvec::smallvec![0.0; d];
    for row in (0..d).rev() {
        let mut acc = rhs[row];
        for j in row + 1..d {
            acc -= m.get(row, j) * x[j];
        }
        x[row] = acc / m.get(row, row);
    }
    Ok(x)
}
