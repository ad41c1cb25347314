use crate::error::{Error, Result};
use crate::geometry::{CoordGradient, KillingField, ManifoldSpec, VectorField};
use crate::linalg::Vector;
use crate::scalar::Real;

use super::cm::CmProcess;

/// Time-dependent vector fields `h_t(x)` used on free path space. Each is
/// deterministic in time, so for a fixed start point it is a deterministic
/// [`CmProcess`].
#[derive(Clone, Copy, Debug)]
pub enum FieldProcess<T> {
    Zero,
    /// `h_t(x) = a × x` for all `t`.
    Killing {
        axis: Vector<T>,
    },
    /// `h_t(x) = t ∇x_axis(x)`.
    Radial {
        axis: usize,
    },
    /// `h_t(x) = ∇x_axis(x)` for all `t`.
    Gradient {
        axis: usize,
    },
}

impl<T: Real> FieldProcess<T> {
    /// `h_t(x)`.
    pub fn value(&self, m: &ManifoldSpec<T>, t: T, x: &Vector<T>) -> Vector<T> {
        match self {
            FieldProcess::Zero => Vector::zeros(x.dim()),
            FieldProcess::Killing { axis } => KillingField { axis: *axis }.eval(m, x),
            FieldProcess::Radial { axis } => CoordGradient { axis: *axis }.eval(m, x).scale(t),
            FieldProcess::Gradient { axis } => CoordGradient { axis: *axis }.eval(m, x),
        }
    }

    /// `∂_t h_t(x)`.
    pub fn rate(&self, m: &ManifoldSpec<T>, _t: T, x: &Vector<T>) -> Vector<T> {
        match self {
            FieldProcess::Radial { axis } => CoordGradient { axis: *axis }.eval(m, x),
            _ => Vector::zeros(x.dim()),
        }
    }

    /// Registered `div h_0(x)`.
    pub fn divergence_at_zero(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> T {
        match self {
            FieldProcess::Zero | FieldProcess::Radial { .. } => T::zero(),
            FieldProcess::Killing { axis } => {
                KillingField { axis: *axis }.analytic_divergence(m, x).unwrap_or(T::zero())
            }
            FieldProcess::Gradient { axis } => {
                CoordGradient { axis: *axis }.analytic_divergence(m, x).unwrap_or(T::zero())
            }
        }
    }

    /// `s -> h_s(x)` on `[0, horizon]` for the fixed start point `x`.
    pub fn at_point(&self, m: &ManifoldSpec<T>, x: &Vector<T>, horizon: T) -> Result<CmProcess<T>> {
        if !(horizon > T::zero()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        CmProcess::deterministic(vec![(T::zero(), self.value(m, T::zero(), x)), (horizon, self.value(m, horizon, x))])
    }
}
