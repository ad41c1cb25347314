use crate::error::{Error, Result};
use crate::flow::{FlowOptions, FlowPath, SdeSystem};
use crate::functionals::{stochastic_integral, CmProcess, CylFunctional, CylinderFn};
use crate::geometry::PointOnM;
use crate::linalg::Vector;
use crate::scalar::Real;

use super::{paired_experiment, IbpReport, McSetup};

/// `E[f(ξ_T) ∫_0^t <Tξ_s ḣ_s, X dB_s>]` against
/// `E[f(ξ_T) ∫_0^t <Tξ_s (h_t - h_0)/t, X dB_s>]` for deterministic `h`.
#[allow(clippy::too_many_arguments)]
pub fn lemma21_integrated_check<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    f: &dyn CylinderFn<T>,
    h: &CmProcess<T>,
    t: T,
    horizon: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    if !h.is_deterministic() {
        return Err(Error::InvalidArgument("h must be deterministic".into()));
    }
    let grid = &setup.grid;
    let end = grid.index_of(horizon)?;
    let window_end = grid.index_of(t).map_err(|_| Error::BadWindow(format!("t = {t} is not a grid node")))?;
    if window_end == 0 || window_end > end {
        return Err(Error::BadWindow(format!("need 0 < t <= T, got t = {t}, T = {horizon}")));
    }
    let times = grid.times();
    let (values, rates) = h.evaluate_along(&system.manifold, &[], times);
    let mean_rate = (values[window_end] - values[0]).scale((times[window_end] - times[0]).recip());
    paired_experiment(system, x.coords(), setup, FlowOptions::DERIVATIVE, |path| {
        let fx = f.value(&[path.points[end]]);
        let lhs = stochastic_integral(path, system, |k| path.deriv_apply(k, &rates[k]), window_end);
        let rhs = stochastic_integral(path, system, |k| path.deriv_apply(k, &mean_rate), window_end);
        Ok((fx * lhs, fx * rhs))
    })
}

/// `E[f(ξ_T) δV^h]` against `E[df(Tξ_T(h_T - h_0))]`.
pub fn function_ibp_check<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    f: &dyn CylinderFn<T>,
    h: &CmProcess<T>,
    horizon: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    let end = setup.grid.index_of(horizon)?;
    paired_experiment(system, x.coords(), setup, FlowOptions::DERIVATIVE, |path| {
        let (values, rates) = h.evaluate_along(&system.manifold, &path.points, &path.times);
        let xt = path.points[end];
        let delta = stochastic_integral(path, system, |k| path.deriv_apply(k, &rates[k]), end);
        let v = path.deriv_apply(end, &(values[end] - values[0]));
        Ok((f.value(&[xt]) * delta, f.gradient(&[xt], 0).dot(&v)))
    })
}

/// Path-space integration by parts `E dF(V^h) = E[F δV^h]` for `h_0 = 0`.
pub fn pathspace_ibp<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    functional: &CylFunctional<T>,
    h: &CmProcess<T>,
    horizon: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    require_based(h)?;
    let nodes = functional.nodes(&setup.grid)?;
    let end = setup.grid.index_of(horizon)?;
    check_within(&nodes, end)?;
    paired_experiment(system, x.coords(), setup, FlowOptions::DERIVATIVE, |path| {
        let (values, rates) = h.evaluate_along(&system.manifold, &path.points, &path.times);
        let xs = at_nodes(path, &nodes);
        let vs: Vec<Vector<T>> = nodes.iter().map(|&k| path.deriv_apply(k, &values[k])).collect();
        let delta = stochastic_integral(path, system, |k| path.deriv_apply(k, &rates[k]), end);
        Ok((functional.pairing(&xs, &vs), functional.value_of(&xs) * delta))
    })
}

/// Damped integration by parts
/// `E dF(W_·(h_·)) = E[F ∫ <W_s ḣ_s, //_s dB̃_s>]` for gradient systems.
pub fn damped_ibp<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    functional: &CylFunctional<T>,
    h: &CmProcess<T>,
    horizon: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    require_gradient(system)?;
    let nodes = functional.nodes(&setup.grid)?;
    let end = setup.grid.index_of(horizon)?;
    check_within(&nodes, end)?;
    paired_experiment(system, x.coords(), setup, FlowOptions::DAMPED, |path| {
        let (values, rates) = h.evaluate_along(&system.manifold, &path.points, &path.times);
        let xs = at_nodes(path, &nodes);
        let vs: Vec<Vector<T>> = nodes.iter().map(|&k| path.damped_apply(k, &values[k])).collect();
        let integral = damped_integral(path, &rates, end);
        Ok((functional.pairing(&xs, &vs), functional.value_of(&xs) * integral))
    })
}

/// `Σ_{k<end} <W_k ḣ_k, //_k ΔB̃_k>`.
pub(crate) fn damped_integral<T: Real>(path: &FlowPath<T>, rates: &[Vector<T>], end: usize) -> T {
    (0..end).fold(T::zero(), |acc, k| acc + path.damped_apply(k, &rates[k]).dot(&path.transported_antidev(k)))
}

pub(crate) fn require_gradient<T: Real>(system: &SdeSystem<T>) -> Result<()> {
    if system.is_gradient_system() {
        Ok(())
    } else {
        Err(Error::NotGradientSystem(system.name.clone()))
    }
}

pub(crate) fn require_based<T: Real>(h: &CmProcess<T>) -> Result<()> {
    if h.h0().max_abs() == T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("h must start at 0".into()))
    }
}

pub(crate) fn check_within(nodes: &[usize], end: usize) -> Result<()> {
    match nodes.iter().find(|&&k| k > end) {
        Some(k) => Err(Error::GridMismatch(format!("functional time at node {k} lies beyond the horizon"))),
        None => Ok(()),
    }
}

pub(crate) fn at_nodes<T: Real>(path: &FlowPath<T>, nodes: &[usize]) -> Vec<Vector<T>> {
    nodes.iter().map(|&k| path.points[k]).collect()
}
