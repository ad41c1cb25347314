//! Fixed-capacity vectors and the handful of dense operations the flow needs.
//!
//! Every catalog manifold lives in an ambient space of dimension at most
//! [`MAX_DIM`], so vectors are stack arrays with a runtime length. This keeps
//! the per-step integrator allocation free.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

/// Largest ambient (and noise) dimension supported.
pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector<T> {
    data: [T; MAX_DIM],
    dim: usize,
}

impl<T: Real> Vector<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds MAX_DIM = {MAX_DIM}");
        Self { data: [T::zero(); MAX_DIM], dim }
    }

    pub fn from_slice(xs: &[T]) -> Self {
        let mut v = Self::zeros(xs.len());
        v.data[..xs.len()].copy_from_slice(xs);
        v
    }

    pub fn from_f64s(xs: &[f64]) -> Self {
        let mut v = Self::zeros(xs.len());
        for (d, &x) in v.data.iter_mut().zip(xs) {
            *d = T::lit(x);
        }
        v
    }

    /// Unit vector `e_axis` in dimension `dim`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        let mut v = Self::zeros(dim);
        v.data[axis] = T::one();
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data[..self.dim]
    }

    pub fn to_vec_f64(&self) -> Vec<f64> {
        self.as_slice().iter().map(|x| x.to_f64_lossy()).collect()
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        // Padding entries are zero, so fixed-width loops are exact and unroll.
        let mut s = T::zero();
        for i in 0..MAX_DIM {
            s = s + self.data[i] * other.data[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(mut self, c: T) -> Self {
        for x in self.data.iter_mut() {
            *x = *x * c;
        }
        self
    }

    /// `self + c * other`
    #[inline]
    pub fn axpy(mut self, c: T, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        for i in 0..MAX_DIM {
            self.data[i] = self.data[i] + c * other.data[i];
        }
        self
    }

    /// Cross product; both operands must be 3-vectors.
    #[inline]
    pub fn cross(&self, other: &Self) -> Self {
        assert!(self.dim == 3 && other.dim == 3, "cross product needs 3-vectors");
        let (a, b) = (&self.data, &other.data);
        let mut data = [T::zero(); MAX_DIM];
        data[0] = a[1] * b[2] - a[2] * b[1];
        data[1] = a[2] * b[0] - a[0] * b[2];
        data[2] = a[0] * b[1] - a[1] * b[0];
        Self { data, dim: 3 }
    }

    pub fn max_abs(&self) -> T {
        self.as_slice().iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Vector<U> {
        let mut v = Vector::<U>::zeros(self.dim);
        for i in 0..self.dim {
            v.data[i] = U::lit(self.data[i].to_f64_lossy());
        }
        v
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for Vector<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.data[..self.dim]).finish()
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl<T: Real> Add for Vector<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.axpy(T::one(), &rhs)
    }
}

impl<T: Real> Sub for Vector<T> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.data[i] = self.data[i] - rhs.data[i];
        }
        self
    }
}

impl<T: Real> AddAssign for Vector<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> SubAssign for Vector<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Real> Mul<T> for Vector<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: T) -> Self {
        self.scale(c)
    }
}

impl<T: Real> Neg for Vector<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

/// Solves `a * y = b` for a small dense system (`n <= MAX_DIM`) by Gaussian
/// elimination with partial pivoting. Returns `None` for a singular matrix.
pub fn solve_small<T: Real>(mut a: [[T; MAX_DIM]; MAX_DIM], mut b: [T; MAX_DIM], n: usize) -> Option<[T; MAX_DIM]> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col] == T::zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != T::zero() {
                let pivot_row = a[col];
                for (x, p) in a[row][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *x = *x - factor * *p;
                }
                b[row] = b[row] - factor * b[col];
            }
        }
    }
    let mut y = [T::zero(); MAX_DIM];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s = s - a[row][k] * y[k];
        }
        y[row] = s / a[row][row];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_and_dot() {
        let e1 = Vector::<f64>::basis(3, 0);
        let e2 = Vector::<f64>::basis(3, 1);
        assert_eq!(e1.cross(&e2), Vector::basis(3, 2));
        assert_eq!(e1.dot(&e2), 0.0);
    }

    #[test]
    fn solves_pivoted_system() {
        let mut a = [[0.0f64; MAX_DIM]; MAX_DIM];
        a[0][0] = 0.0;
        a[0][1] = 2.0;
        a[1][0] = 3.0;
        a[1][1] = 1.0;
        let mut b = [0.0; MAX_DIM];
        b[0] = 4.0;
        b[1] = 5.0;
        let y = solve_small(a, b, 2).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_none() {
        let a = [[0.0f64; MAX_DIM]; MAX_DIM];
        assert!(solve_small(a, [1.0; MAX_DIM], 2).is_none());
    }
}
