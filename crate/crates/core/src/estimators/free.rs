use crate::error::{Error, Result};
use crate::flow::{simulate_with, BrownianDraw, FlowOptions, SdeSystem};
use crate::functionals::{stochastic_integral, CylFunctional, FieldProcess};
use crate::linalg::Vector;
use crate::scalar::Real;
use crate::stats::{accumulate_units, StreamPurpose};

use super::identities::{at_nodes, check_within, damped_integral, require_gradient};
use super::{paired, IbpReport, McSetup};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Transport {
    Derivative,
    Damped,
}

/// Free path space integration by parts, integrated over uniform start points:
/// `E∫_M dF(Tξ(h(x))) dx = E∫_M F(ξ(x)) {-div h_0(x) + δV^h(x)} dx`.
///
/// `setup.n_paths` is the number of paths per base point. Each base point is
/// one Monte Carlo unit, so standard errors are over base points.
pub fn free_ibp<T: Real>(
    system: &SdeSystem<T>,
    functional: &CylFunctional<T>,
    field: &FieldProcess<T>,
    horizon: T,
    n_base_points: u64,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    free_experiment(system, functional, field, horizon, n_base_points, setup, Transport::Derivative)
}

/// [`free_ibp`] with damped transports and the antidevelopment in place of the
/// derivative flow and `X dB`.
pub fn free_damped_ibp<T: Real>(
    system: &SdeSystem<T>,
    functional: &CylFunctional<T>,
    field: &FieldProcess<T>,
    horizon: T,
    n_base_points: u64,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    require_gradient(system)?;
    free_experiment(system, functional, field, horizon, n_base_points, setup, Transport::Damped)
}

#[allow(clippy::too_many_arguments)]
fn free_experiment<T: Real>(
    system: &SdeSystem<T>,
    functional: &CylFunctional<T>,
    field: &FieldProcess<T>,
    horizon: T,
    n_base_points: u64,
    setup: &McSetup<T>,
    transport: Transport,
) -> Result<IbpReport<T>> {
    let m = &system.manifold;
    let volume = m.riemannian_volume()?;
    if setup.n_paths == 0 {
        return Err(Error::InsufficientData(0));
    }
    let grid = &setup.grid;
    let nodes = functional.nodes(grid)?;
    let end = grid.index_of(horizon)?;
    check_within(&nodes, end)?;
    let policy = setup.policy();
    let options = match transport {
        Transport::Derivative => FlowOptions::DERIVATIVE,
        Transport::Damped => FlowOptions::DAMPED,
    };
    let per_point = T::from_count(setup.n_paths as usize);

    let [l, r, d] = accumulate_units(n_base_points, |b| {
        let x = m.uniform_sample(&mut policy.stream(b, StreamPurpose::BasePoint))?.into_inner();
        let h = field.at_point(m, &x, grid.horizon())?;
        let div0 = field.divergence_at_zero(m, &x);
        let (mut lhs, mut rhs) = (T::zero(), T::zero());
        for j in 0..setup.n_paths {
            let draw = BrownianDraw::generate(&policy, b * setup.n_paths + j, grid, system.noise_dim());
            let path = simulate_with(system, &x, grid.times(), draw, options)?;
            let (values, rates) = h.evaluate_along(m, &path.points, &path.times);
            let xs = at_nodes(&path, &nodes);
            let (vs, integral): (Vec<Vector<T>>, T) = match transport {
                Transport::Derivative => (
                    nodes.iter().map(|&k| path.deriv_apply(k, &values[k])).collect(),
                    stochastic_integral(&path, system, |k| path.deriv_apply(k, &rates[k]), end),
                ),
                Transport::Damped => (
                    nodes.iter().map(|&k| path.damped_apply(k, &values[k])).collect(),
                    damped_integral(&path, &rates, end),
                ),
            };
            lhs = lhs + functional.pairing(&xs, &vs);
            rhs = rhs + functional.value_of(&xs) * (integral - div0);
        }
        Ok(paired(volume * lhs / per_point, volume * rhs / per_point))
    })?;
    IbpReport::from_accumulators(l, r, d)
}
