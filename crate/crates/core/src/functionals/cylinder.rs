use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::TimeGrid;
use crate::linalg::Vector;
use crate::scalar::Real;

/// A smooth function `f: M^k -> R` with analytic partial gradients.
pub trait CylinderFn<T: Real>: Send + Sync {
    /// Number of slots, or `None` if any arity is accepted.
    fn arity(&self) -> Option<usize>;

    fn value(&self, xs: &[Vector<T>]) -> T;

    /// Ambient gradient of `f` in slot `j`; paired with tangent vectors only.
    fn gradient(&self, xs: &[Vector<T>], j: usize) -> Vector<T>;

    fn describe(&self) -> String;
}

/// `f(x) = x_axis`.
#[derive(Clone, Copy, Debug)]
pub struct Coord {
    pub axis: usize,
}

impl<T: Real> CylinderFn<T> for Coord {
    fn arity(&self) -> Option<usize> {
        Some(1)
    }

    fn value(&self, xs: &[Vector<T>]) -> T {
        xs[0][self.axis]
    }

    fn gradient(&self, xs: &[Vector<T>], _j: usize) -> Vector<T> {
        Vector::basis(xs[0].dim(), self.axis)
    }

    fn describe(&self) -> String {
        format!("coord:{}", self.axis)
    }
}

/// `f(x, y) = <x, y>`.
#[derive(Clone, Copy, Debug)]
pub struct PairDot;

impl<T: Real> CylinderFn<T> for PairDot {
    fn arity(&self) -> Option<usize> {
        Some(2)
    }

    fn value(&self, xs: &[Vector<T>]) -> T {
        xs[0].dot(&xs[1])
    }

    fn gradient(&self, xs: &[Vector<T>], j: usize) -> Vector<T> {
        xs[1 - j]
    }

    fn describe(&self) -> String {
        "pairdot".into()
    }
}

/// `f ≡ c`.
#[derive(Clone, Copy, Debug)]
pub struct Constant<T>(pub T);

impl<T: Real> CylinderFn<T> for Constant<T> {
    fn arity(&self) -> Option<usize> {
        None
    }

    fn value(&self, _xs: &[Vector<T>]) -> T {
        self.0
    }

    fn gradient(&self, xs: &[Vector<T>], _j: usize) -> Vector<T> {
        Vector::zeros(xs[0].dim())
    }

    fn describe(&self) -> String {
        format!("const:{}", self.0)
    }
}

/// Gaussian bump `f(x) = exp(-|x - c|² / (2 w²))`.
#[derive(Clone, Copy, Debug)]
pub struct Bump<T> {
    pub center: Vector<T>,
    pub width: T,
}

impl<T: Real> CylinderFn<T> for Bump<T> {
    fn arity(&self) -> Option<usize> {
        Some(1)
    }

    fn value(&self, xs: &[Vector<T>]) -> T {
        let r2 = (xs[0] - self.center).norm_sq();
        (-r2 / (T::lit(2.0) * self.width * self.width)).exp()
    }

    fn gradient(&self, xs: &[Vector<T>], _j: usize) -> Vector<T> {
        let w2 = self.width * self.width;
        (xs[0] - self.center).scale(-self.value(xs) / w2)
    }

    fn describe(&self) -> String {
        "bump".into()
    }
}

/// A cylindrical functional: times `t_1 < … < t_k` and `f: M^k -> R`.
#[derive(Clone)]
pub struct CylFunctional<T> {
    times: Vec<T>,
    f: Arc<dyn CylinderFn<T>>,
}

impl<T: Real> fmt::Debug for CylFunctional<T> {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("CylFunctional").field("times", &self.times).field("f", &self.f.describe()).finish()
    }
}

impl<T: Real> CylFunctional<T> {
    pub fn new(times: Vec<T>, f: Arc<dyn CylinderFn<T>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("a cylindrical functional needs at least one time".into()));
        }
        if let Some(k) = f.arity() {
            if k != times.len() {
                return Err(Error::DimensionMismatch { expected: k, got: times.len() });
            }
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] > T::zero()) {
            return Err(Error::InvalidArgument("times must be increasing and positive".into()));
        }
        Ok(Self { times, f })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn arity(&self) -> usize {
        self.times.len()
    }

    pub fn function(&self) -> &dyn CylinderFn<T> {
        self.f.as_ref()
    }

    /// Node indices of the times; each must be a marked node of `grid`.
    pub fn nodes(&self, grid: &TimeGrid<T>) -> Result<Vec<usize>> {
        self.times
            .iter()
            .map(|&t| {
                let k = grid.index_of(t)?;
                if grid.marked().contains(&k) {
                    Ok(k)
                } else {
                    Err(Error::GridMismatch(format!("time {t} is not marked on the grid")))
                }
            })
            .collect()
    }

    pub(crate) fn nodes_on(&self, times: &[T]) -> Result<Vec<usize>> {
        self.times.iter().map(|&t| crate::flow::node_index_in(times, t)).collect()
    }

    pub fn value_of(&self, xs: &[Vector<T>]) -> T {
        self.f.value(xs)
    }

    pub(crate) fn value_at_nodes(&self, points: &[Vector<T>], nodes: &[usize]) -> T {
        let xs: Vec<Vector<T>> = nodes.iter().map(|&k| points[k]).collect();
        self.f.value(&xs)
    }

    /// `Σ_j <∇_j f(xs), values_j>` for points `xs`.
    pub fn pairing(&self, xs: &[Vector<T>], values: &[Vector<T>]) -> T {
        values.iter().enumerate().fold(T::zero(), |acc, (j, v)| acc + self.f.gradient(xs, j).dot(v))
    }

    pub(crate) fn pairing_at_nodes(&self, points: &[Vector<T>], nodes: &[usize], values: &[Vector<T>]) -> T {
        let xs: Vec<Vector<T>> = nodes.iter().map(|&k| points[k]).collect();
        self.pairing(&xs, values)
    }
}
