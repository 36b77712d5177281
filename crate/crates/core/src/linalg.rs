//! Block-tridiagonal and block-cyclic-tridiagonal systems with 2x2 blocks.
//!
//! The Newton matrices of the discrete Euler-Lagrange equations couple each
//! point only to its two neighbours, so every linear solve is O(N). Closed
//! curves add the two corner blocks `A[0][n-1]` and `A[n-1][0]`, which are
//! handled with a rank-4 Sherman-Morrison-Woodbury correction on top of the
//! plain block Thomas factorization.

use nalgebra::{ComplexField, DMatrix, DVector, Matrix2, Matrix4, RealField, Vector2, Vector4};
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem<T: ComplexField> {
    /// `A[k][k]`.
    pub diag: Vec<Matrix2<T>>,
    /// `A[k+1][k]`, length `n - 1`.
    pub lower: Vec<Matrix2<T>>,
    /// `A[k][k+1]`, length `n - 1`.
    pub upper: Vec<Matrix2<T>>,
    /// `(A[0][n-1], A[n-1][0])` for cyclic systems.
    pub corners: Option<(Matrix2<T>, Matrix2<T>)>,
}

/// Block LU factors of the non-cyclic part.
struct ThomasFactors<T: ComplexField> {
    pivot_inv: Vec<Matrix2<T>>,
    reduced_upper: Vec<Matrix2<T>>,
}

impl<T: ComplexField + Copy> BlockSystem<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 || self.lower.len() + 1 != n || self.upper.len() + 1 != n {
            return Err(Error::InvalidInput(format!(
                "inconsistent block shapes: {} diagonal, {} lower, {} upper",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.corners.is_some() && n < 3 {
            return Err(Error::InvalidInput(
                "cyclic block system needs n >= 3".into(),
            ));
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[Vector2<T>]) -> Vec<Vector2<T>> {
        let n = self.dim();
        let mut y: Vec<Vector2<T>> = (0..n).map(|k| self.diag[k] * x[k]).collect();
        for k in 0..n.saturating_sub(1) {
            y[k] += self.upper[k] * x[k + 1];
            y[k + 1] += self.lower[k] * x[k];
        }
        if let Some((top_right, bottom_left)) = &self.corners {
            y[0] += *top_right * x[n - 1];
            y[n - 1] += *bottom_left * x[0];
        }
        y
    }

    fn factor_band(&self) -> Result<ThomasFactors<T>> {
        let n = self.dim();
        let mut pivot_inv = Vec::with_capacity(n);
        let mut reduced_upper = Vec::with_capacity(n.saturating_sub(1));
        let mut pivot = self.diag[0];
        for k in 0..n {
            if k > 0 {
                pivot = self.diag[k] - self.lower[k - 1] * reduced_upper[k - 1];
            }
            let inv = invert_block(&pivot).ok_or(Error::SingularJacobian)?;
            if k + 1 < n {
                reduced_upper.push(inv * self.upper[k]);
            }
            pivot_inv.push(inv);
        }
        Ok(ThomasFactors {
            pivot_inv,
            reduced_upper,
        })
    }

    fn solve_band(&self, f: &ThomasFactors<T>, rhs: &[Vector2<T>]) -> Vec<Vector2<T>> {
        let n = self.dim();
        let mut y = Vec::with_capacity(n);
        y.push(f.pivot_inv[0] * rhs[0]);
        for k in 1..n {
            let v = f.pivot_inv[k] * (rhs[k] - self.lower[k - 1] * y[k - 1]);
            y.push(v);
        }
        for k in (0..n - 1).rev() {
            let v = y[k] - f.reduced_upper[k] * y[k + 1];
            y[k] = v;
        }
        y
    }

    /// Solves `A x = rhs` in O(n) block operations.
    pub fn solve(&self, rhs: &[Vector2<T>]) -> Result<Vec<Vector2<T>>> {
        self.check_shape()?;
        if rhs.len() != self.dim() {
            return Err(Error::InvalidInput(
                "right-hand side length mismatch".into(),
            ));
        }
        let factors = self.factor_band()?;
        let y = self.solve_band(&factors, rhs);
        let Some((top_right, bottom_left)) = self.corners else {
            return Ok(y);
        };
        let n = self.dim();
        // Corner coupling = U M U^T with U = [E_0, E_{n-1}], M = [[0, TR], [BL, 0]].
        // Z = T^{-1} U, capacitance S = I + M U^T Z, x = y - Z S^{-1} M U^T y.
        let zero = Vector2::zeros();
        let mut z_cols = Vec::with_capacity(4);
        for j in 0..4 {
            let mut e = vec![zero; n];
            let block = if j < 2 { 0 } else { n - 1 };
            e[block][j % 2] = T::one();
            z_cols.push(self.solve_band(&factors, &e));
        }
        let apply_m_ut = |v: &[Vector2<T>]| -> Vector4<T> {
            let a = top_right * v[n - 1];
            let b = bottom_left * v[0];
            Vector4::new(a[0], a[1], b[0], b[1])
        };
        let mut capacitance = Matrix4::<T>::identity();
        for (j, col) in z_cols.iter().enumerate() {
            let c = apply_m_ut(col);
            for i in 0..4 {
                capacitance[(i, j)] += c[i];
            }
        }
        let coeff = capacitance
            .lu()
            .solve(&apply_m_ut(&y))
            .ok_or(Error::SingularJacobian)?;
        let mut x = y;
        for (j, col) in z_cols.iter().enumerate() {
            for (xk, zk) in x.iter_mut().zip(col) {
                *xk -= *zk * coeff[j];
            }
        }
        if x.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::SingularJacobian);
        }
        Ok(x)
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut a = DMatrix::<T>::zeros(2 * n, 2 * n);
        let mut put = |bi: usize, bj: usize, m: &Matrix2<T>| {
            for i in 0..2 {
                for j in 0..2 {
                    a[(2 * bi + i, 2 * bj + j)] += m[(i, j)];
                }
            }
        };
        for k in 0..n {
            put(k, k, &self.diag[k]);
        }
        for k in 0..n.saturating_sub(1) {
            put(k, k + 1, &self.upper[k]);
            put(k + 1, k, &self.lower[k]);
        }
        if let Some((top_right, bottom_left)) = &self.corners {
            put(0, n - 1, top_right);
            put(n - 1, 0, bottom_left);
        }
        a
    }

    /// Dense LU solve of the same system; O(n^3), used as a cross-check.
    pub fn solve_dense(&self, rhs: &[Vector2<T>]) -> Result<Vec<Vector2<T>>> {
        self.check_shape()?;
        let b = DVector::from_iterator(rhs.len() * 2, rhs.iter().flat_map(|v| [v[0], v[1]]));
        let x = self
            .to_dense()
            .lu()
            .solve(&b)
            .ok_or(Error::SingularJacobian)?;
        Ok(x.as_slice()
            .chunks(2)
            .map(|c| Vector2::new(c[0], c[1]))
            .collect())
    }
}

impl BlockSystem<f64> {
    /// `A + i * shift * I` as a complex system.
    pub fn complex_shift(&self, shift: f64) -> BlockSystem<Complex64> {
        let lift = |m: &Matrix2<f64>| m.map(|v| Complex64::new(v, 0.0));
        let shift_block = Matrix2::from_diagonal_element(Complex64::new(0.0, shift));
        BlockSystem {
            diag: self.diag.iter().map(|m| lift(m) + shift_block).collect(),
            lower: self.lower.iter().map(lift).collect(),
            upper: self.upper.iter().map(lift).collect(),
            corners: self.corners.as_ref().map(|(a, b)| (lift(a), lift(b))),
        }
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        self.diag
            .iter()
            .map(|m| m[(0, 0)].abs().max(m[(1, 1)].abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let diag_ok = self
            .diag
            .iter()
            .all(|m| (m[(0, 1)] - m[(1, 0)]).abs() <= tol);
        let band_ok = self
            .upper
            .iter()
            .zip(&self.lower)
            .all(|(u, l)| (u - l.transpose()).amax() <= tol);
        let corner_ok = self
            .corners
            .as_ref()
            .is_none_or(|(a, b)| (a - b.transpose()).amax() <= tol);
        diag_ok && band_ok && corner_ok
    }
}

fn invert_block<T: ComplexField + Copy>(m: &Matrix2<T>) -> Option<Matrix2<T>> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = m
        .iter()
        .map(|v| v.modulus())
        .fold(nalgebra::convert::<f64, T::RealField>(0.0), |a, b| {
            RealField::max(a, b)
        });
    let tiny: T::RealField = nalgebra::convert(1e-300);
    if !det.is_finite() || !(det.modulus() > tiny * scale.clone() * scale) {
        return None;
    }
    let inv_det = T::one() / det;
    Some(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) * inv_det)
}
