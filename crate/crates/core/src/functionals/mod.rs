//! Perturbations `h`, cylindrical functionals `F(γ) = f(γ_{t_1}, …, γ_{t_k})`,
//! the tangent field `V^h` and its divergence integrand `δV^h`.

mod cm;
mod cylinder;
mod field;

pub use cm::{cm_eval, AdaptedRule, CmProcess, HemisphereOccupation};
pub use cylinder::{Bump, Constant, Coord, CylFunctional, CylinderFn, PairDot};
pub use field::FieldProcess;

use crate::error::{Error, Result};
use crate::flow::{FlowPath, SdeSystem};
use crate::geometry::ManifoldSpec;
use crate::linalg::Vector;
use crate::scalar::Real;

/// `F(ξ_·) = f(x_{t_1}, …, x_{t_k})`.
#[allow(non_snake_case)]
pub fn eval_F<T: Real>(F: &CylFunctional<T>, path: &FlowPath<T>) -> Result<T> {
    let nodes = F.nodes_on(&path.times)?;
    Ok(F.value_at_nodes(&path.points, &nodes))
}

/// `dF(V) = Σ_j d^j f(x_{t_1}, …, x_{t_k})(v_j)`.
#[allow(non_snake_case)]
pub fn eval_dF<T: Real>(F: &CylFunctional<T>, path: &FlowPath<T>, values: &[Vector<T>]) -> Result<T> {
    if values.len() != F.arity() {
        return Err(Error::DimensionMismatch { expected: F.arity(), got: values.len() });
    }
    let nodes = F.nodes_on(&path.times)?;
    Ok(F.pairing_at_nodes(&path.points, &nodes, values))
}

/// `V^h_{t_j} = Tξ_{t_j}(h_{t_j})` at the given times.
pub fn v_h_field<T: Real>(
    path: &FlowPath<T>,
    h: &CmProcess<T>,
    manifold: &ManifoldSpec<T>,
    times: &[T],
) -> Result<Vec<Vector<T>>> {
    require_derivative(path)?;
    let (values, _) = h.evaluate_along(manifold, &path.points, &path.times);
    times
        .iter()
        .map(|&t| {
            let k = path.node_index(t)?;
            Ok(path.deriv_apply(k, &values[k]))
        })
        .collect()
}

/// `δV^h = Σ_k ⟨Tξ_{s_k}(ḣ_k), X(x_k) ΔB_k⟩` (left point).
pub fn delta_v_h<T: Real>(path: &FlowPath<T>, h: &CmProcess<T>, system: &SdeSystem<T>) -> Result<T> {
    require_derivative(path)?;
    let (_, rates) = h.evaluate_along(&system.manifold, &path.points, &path.times);
    Ok(stochastic_integral(path, system, |k| path.deriv_apply(k, &rates[k]), path.steps()))
}

/// `Σ_{k<end} ⟨w(k), X(x_k) ΔB_k⟩`.
#[inline]
pub(crate) fn stochastic_integral<T: Real>(
    path: &FlowPath<T>,
    system: &SdeSystem<T>,
    mut w: impl FnMut(usize) -> Vector<T>,
    end: usize,
) -> T {
    let mut acc = T::zero();
    for k in 0..end {
        let noise = system.diffusion(&path.points[k], &path.draw.increments[k]);
        acc = acc + w(k).dot(&noise);
    }
    acc
}

fn require_derivative<T: Real>(path: &FlowPath<T>) -> Result<()> {
    if path.deriv.len() != path.points.len() {
        return Err(Error::InvalidArgument("path was simulated without its derivative flow".into()));
    }
    Ok(())
}
