use crate::error::{Error, Result};
use crate::flow::{FlowOptions, GirsanovDrift, PerturbedStarts, SdeSystem};
use crate::functionals::{stochastic_integral, CmProcess, CylFunctional};
use crate::geometry::PointOnM;
use crate::linalg::Vector;
use crate::scalar::Real;
use crate::stats::accumulate_units;

use super::identities::{at_nodes, require_based};
use super::{paired, paired_experiment, IbpReport, McSetup};

fn require_deterministic<T: Real>(h: &CmProcess<T>) -> Result<()> {
    if h.is_deterministic() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("h must be deterministic".into()))
    }
}

/// `E F(ξ^τ_·(x))` against `E[F(ξ_·(x)) dP_τ/dP_0]`.
pub fn girsanov_invariance<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    functional: &CylFunctional<T>,
    h: &CmProcess<T>,
    tau: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    require_deterministic(h)?;
    let grid = &setup.grid;
    let nodes = functional.nodes(grid)?;
    let starts = PerturbedStarts::new(system, x, h, tau, functional.times(), grid)?;
    let drift = GirsanovDrift::new(system, h, tau, x, grid.times())?;
    let options = if tau == T::zero() { FlowOptions::POINTS } else { FlowOptions::DERIVATIVE };
    paired_experiment(system, x.coords(), setup, options, |path| {
        let moved = starts.points(system, &path.draw, grid)?;
        let density = drift.log_density(path, system)?.exp();
        Ok((functional.value_of(&moved), functional.value_of(&at_nodes(path, &nodes)) * density))
    })
}

/// Mean of `exp(log dP_τ/dP_0)` against 1.
pub fn girsanov_martingale<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    h: &CmProcess<T>,
    tau: T,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    require_deterministic(h)?;
    let drift = GirsanovDrift::new(system, h, tau, x, setup.grid.times())?;
    let options = if tau == T::zero() { FlowOptions::POINTS } else { FlowOptions::DERIVATIVE };
    paired_experiment(system, x.coords(), setup, options, |path| Ok((drift.log_density(path, system)?.exp(), T::one())))
}

/// The three pairings of [`girsanov_derivative`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GirsanovDerivativeReport<T> {
    /// Direct `dF(Tξ(X(x)h))` against the stochastic integral.
    pub direct: IbpReport<T>,
    /// Common-random-number difference in `τ` against the stochastic integral.
    pub fd: IbpReport<T>,
    /// Difference estimator (lhs) against the direct one (rhs).
    pub fd_vs_direct: IbpReport<T>,
}

/// `d/dτ E F(ξ^τ)` at 0: `E dF(Tξ(X(x)h))` against
/// `E[F ∫ <X(ξ_s) dB_s, Tξ_s(X(x)ḣ_s)>]`, plus a `±eps` difference.
pub fn girsanov_derivative<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    functional: &CylFunctional<T>,
    h: &CmProcess<T>,
    eps: T,
    setup: &McSetup<T>,
) -> Result<GirsanovDerivativeReport<T>> {
    require_deterministic(h)?;
    require_based(h)?;
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let grid = &setup.grid;
    let times = grid.times();
    let nodes = functional.nodes(grid)?;
    let end = *nodes.last().unwrap();
    let plus = PerturbedStarts::new(system, x, h, eps, functional.times(), grid)?;
    let minus = PerturbedStarts::new(system, x, h, -eps, functional.times(), grid)?;
    let (values, rates) = h.evaluate_along(&system.manifold, &[], times);
    let lift = |v: &Vector<T>| system.diffusion(x.coords(), v);
    let lifted_values: Vec<Vector<T>> = nodes.iter().map(|&k| lift(&values[k])).collect();
    let lifted_rates: Vec<Vector<T>> = rates.iter().map(lift).collect();
    let two_eps = T::lit(2.0) * eps;

    let [a, b, r, dar, dbr, dba] = accumulate_units(setup.n_paths, |i| {
        let path = setup.path(system, x.coords(), i, FlowOptions::DERIVATIVE)?;
        let xs = at_nodes(&path, &nodes);
        let vs: Vec<Vector<T>> = nodes.iter().zip(&lifted_values).map(|(&k, v)| path.deriv_apply(k, v)).collect();
        let direct = functional.pairing(&xs, &vs);
        let fd = (functional.value_of(&plus.points(system, &path.draw, grid)?)
            - functional.value_of(&minus.points(system, &path.draw, grid)?))
            / two_eps;
        let integral = stochastic_integral(&path, system, |k| path.deriv_apply(k, &lifted_rates[k]), end);
        let rhs = functional.value_of(&xs) * integral;
        Ok([direct, fd, rhs, paired(direct, rhs)[2], paired(fd, rhs)[2], paired(fd, direct)[2]])
    })?;
    Ok(GirsanovDerivativeReport {
        direct: IbpReport::from_accumulators(a, r, dar)?,
        fd: IbpReport::from_accumulators(b, r, dbr)?,
        fd_vs_direct: IbpReport::from_accumulators(b, a, dba)?,
    })
}
