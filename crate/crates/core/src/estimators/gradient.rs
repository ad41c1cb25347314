use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{FlowOptions, FlowPath, SdeSystem, TimeGrid};
use crate::functionals::{stochastic_integral, CylinderFn};
use crate::geometry::PointOnM;
use crate::linalg::Vector;
use crate::scalar::Real;
use crate::stats::{accumulate_units, crn_fd_sample};

use super::{paired_experiment, EstimatorKind, GradientEstimate, IbpReport, McSetup};

pub type PsiFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A member of the gradient-estimator family for `d(P_T f)(v0)`.
#[derive(Clone)]
pub enum GradientKind<T> {
    Bismut,
    /// Stochastic integral restricted to `[r, r + width]`.
    Thalmaier {
        r: T,
        width: T,
    },
    /// Weighted by `Ψ(s)` and normalized by its grid integral.
    Psi(PsiFn<T>),
    /// Common-random-number central difference with start-point step `eps`.
    CrnFd {
        eps: T,
    },
}

impl<T: Real> fmt::Debug for GradientKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradientKind::Bismut => f.write_str("Bismut"),
            GradientKind::Thalmaier { r, width } => write!(f, "Thalmaier {{ r: {r}, width: {width} }}"),
            GradientKind::Psi(_) => f.write_str("Psi(..)"),
            GradientKind::CrnFd { eps } => write!(f, "CrnFd {{ eps: {eps} }}"),
        }
    }
}

impl<T> GradientKind<T> {
    pub fn estimator_kind(&self) -> EstimatorKind {
        match self {
            GradientKind::Bismut => EstimatorKind::Bismut,
            GradientKind::Thalmaier { .. } => EstimatorKind::Thalmaier,
            GradientKind::Psi(_) => EstimatorKind::PsiWeighted,
            GradientKind::CrnFd { .. } => EstimatorKind::CrnFiniteDifference,
        }
    }
}

/// Per-step weights `ψ_k` on `[0, T)` and their left Riemann sum.
struct Kernel<T> {
    weights: Vec<T>,
    norm: T,
}

/// How one kind turns a path into a sample.
enum Prepared<T> {
    Weighted(Kernel<T>),
    Fd { plus: Vector<T>, minus: Vector<T>, eps: T },
}

struct Problem<'a, T: Real> {
    system: &'a SdeSystem<T>,
    v0: Vector<T>,
    f: &'a dyn CylinderFn<T>,
    end: usize,
}

impl<T: Real> Problem<'_, T> {
    fn prepare(&self, kind: &GradientKind<T>, x: &PointOnM<T>, grid: &TimeGrid<T>) -> Result<Prepared<T>> {
        let times = grid.times();
        let end = self.end;
        let weights: Vec<T> = match kind {
            GradientKind::Bismut => vec![T::one(); end],
            GradientKind::Thalmaier { r, width } => {
                let (r, width) = (*r, *width);
                if !(r >= T::zero()) || !(width > T::zero()) || r + width > times[end] + T::lit(1e-12) {
                    return Err(Error::BadWindow(format!("[{r}, {r} + {width}] not inside [0, {}]", times[end])));
                }
                let a = grid.index_of(r).map_err(|_| Error::BadWindow(format!("r = {r} is not a grid node")))?;
                let b = grid
                    .index_of(r + width)
                    .map_err(|_| Error::BadWindow(format!("r + width = {} is not a grid node", r + width)))?;
                (0..end).map(|k| if k >= a && k < b { T::one() } else { T::zero() }).collect()
            }
            GradientKind::Psi(psi) => (0..end).map(|k| psi(times[k])).collect(),
            GradientKind::CrnFd { eps } => {
                let m = &self.system.manifold;
                let plus = m.exp_step(x, &self.v0.scale(*eps))?.into_inner();
                let minus = m.exp_step(x, &self.v0.scale(-*eps))?.into_inner();
                return Ok(Prepared::Fd { plus, minus, eps: *eps });
            }
        };
        let norm = weights.iter().enumerate().fold(T::zero(), |acc, (k, w)| acc + *w * (times[k + 1] - times[k]));
        if !(norm.abs() >= T::lit(1e-12)) {
            return Err(Error::DegenerateWeight(norm.to_f64_lossy()));
        }
        Ok(Prepared::Weighted(Kernel { weights, norm }))
    }

    fn sample(&self, prepared: &Prepared<T>, path: &FlowPath<T>) -> Result<T> {
        match prepared {
            Prepared::Weighted(kernel) => {
                let integral = stochastic_integral(
                    path,
                    self.system,
                    |k| path.deriv_apply(k, &self.v0).scale(kernel.weights[k]),
                    self.end,
                );
                Ok(self.f.value(&[path.points[self.end]]) * integral / kernel.norm)
            }
            Prepared::Fd { plus, minus, eps } => {
                crn_fd_sample(self.system, plus, minus, &path.draw, &path.times, self.end, self.f, *eps)
            }
        }
    }
}

fn problem<'a, T: Real>(
    system: &'a SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &'a dyn CylinderFn<T>,
    horizon: T,
    grid: &TimeGrid<T>,
) -> Result<Problem<'a, T>> {
    let m = &system.manifold;
    if v0.dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), got: v0.dim() });
    }
    let tangent = m.tangent_project(x, v0).coords;
    if (tangent - *v0).norm() > T::lit(1e-9) * (T::one() + v0.norm()) {
        return Err(Error::InvalidArgument("v0 is not tangent at x".into()));
    }
    if f.arity().is_some_and(|k| k != 1) {
        return Err(Error::InvalidArgument("gradient estimators need a one-slot function".into()));
    }
    let end = grid.index_of(horizon)?;
    if end == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    Ok(Problem { system, v0: tangent, f, end })
}

/// Estimates `d(P_T f)(v0)` with the estimator `kind`.
pub fn gradient<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    kind: &GradientKind<T>,
    setup: &McSetup<T>,
) -> Result<GradientEstimate<T>> {
    let p = problem(system, x, v0, f, horizon, &setup.grid)?;
    let prepared = p.prepare(kind, x, &setup.grid)?;
    let options = match kind {
        GradientKind::CrnFd { .. } => FlowOptions::POINTS,
        _ => FlowOptions::DERIVATIVE,
    };
    let [acc] = accumulate_units(setup.n_paths, |i| {
        let path = setup.path(system, x.coords(), i, options)?;
        Ok([p.sample(&prepared, &path)?])
    })?;
    Ok(GradientEstimate::from_acc(&acc, kind.estimator_kind()))
}

/// `(1/T) E[f(ξ_T) ∫_0^T <Tξ_s v0, X dB_s>]`.
pub fn bismut_gradient<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    setup: &McSetup<T>,
) -> Result<GradientEstimate<T>> {
    gradient(system, x, v0, f, horizon, &GradientKind::Bismut, setup)
}

/// `(1/w) E[f(ξ_T) ∫_r^{r+w} <Tξ_s v0, X dB_s>]`.
#[allow(clippy::too_many_arguments)]
pub fn thalmaier_gradient<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    r: T,
    width: T,
    setup: &McSetup<T>,
) -> Result<GradientEstimate<T>> {
    gradient(system, x, v0, f, horizon, &GradientKind::Thalmaier { r, width }, setup)
}

/// `(1/∫Ψ) E[f(ξ_T) ∫_0^T Ψ(s) <Tξ_s v0, X dB_s>]`.
pub fn psi_weighted_gradient<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    psi: PsiFn<T>,
    setup: &McSetup<T>,
) -> Result<GradientEstimate<T>> {
    gradient(system, x, v0, f, horizon, &GradientKind::Psi(psi), setup)
}

/// Two estimators of the same gradient on shared draws; lhs is `a`, rhs `b`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_consistency<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    v0: &Vector<T>,
    f: &dyn CylinderFn<T>,
    horizon: T,
    a: &GradientKind<T>,
    b: &GradientKind<T>,
    setup: &McSetup<T>,
) -> Result<IbpReport<T>> {
    let p = problem(system, x, v0, f, horizon, &setup.grid)?;
    let pa = p.prepare(a, x, &setup.grid)?;
    let pb = p.prepare(b, x, &setup.grid)?;
    paired_experiment(system, x.coords(), setup, FlowOptions::DERIVATIVE, |path| {
        Ok((p.sample(&pa, path)?, p.sample(&pb, path)?))
    })
}
