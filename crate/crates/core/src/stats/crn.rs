//! Common-random-number finite differences: an estimator of `d(P_T f)(v0)`
//! that never touches the derivative flow.

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, GradientEstimate, McSetup};
use crate::flow::{endpoint, BrownianDraw, SdeSystem};
use crate::functionals::CylinderFn;
use crate::geometry::PointOnM;
use crate::linalg::Vector;
use crate::scalar::Real;

use super::accumulate_units;

/// `[f(ξ_T(x+)) - f(ξ_T(x-))] / (2 eps)` with both flows driven by `draw`.
#[allow(clippy::too_many_arguments)]
pub fn crn_fd_sample<T: Real>(
    system: &SdeSystem<T>,
    plus: &Vector<T>,
    minus: &Vector<T>,
    draw: &BrownianDraw<T>,
    times: &[T],
    end: usize,
    f: &dyn CylinderFn<T>,
    eps: T,
) -> Result<T> {
    let yp = endpoint(system, plus, times, draw, end)?;
    let ym = endpoint(system, minus, times, draw, end)?;
    Ok((f.value(&[yp]) - f.value(&[ym])) / (T::lit(2.0) * eps))
}

/// Central difference of `P_T f` along the geodesic through `x` in direction
/// `v0`, on common draws.
pub fn crn_fd_gradient<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    eps: T,
    setup: &McSetup<T>,
) -> Result<GradientEstimate<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let m = &system.manifold;
    let plus = m.exp_step(x, &v0.scale(eps))?.into_inner();
    let minus = m.exp_step(x, &v0.scale(-eps))?.into_inner();
    let end = setup.grid.index_of(horizon)?;
    let [acc] = accumulate_units(setup.n_paths, |i| {
        let draw = setup.draw(system, i);
        Ok([crn_fd_sample(system, &plus, &minus, &draw, setup.grid.times(), end, f, eps)?])
    })?;
    Ok(GradientEstimate::from_acc(&acc, EstimatorKind::CrnFiniteDifference))
}
