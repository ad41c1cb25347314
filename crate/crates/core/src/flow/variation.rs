//! Variation flows `H_t^τ`, perturbed flows `ξ_t^τ = ξ_t ∘ H_t^τ` and the
//! Girsanov log-density that reweights the base flow into the perturbed one.

use crate::error::{Error, Result};
use crate::functionals::CmProcess;
use crate::geometry::PointOnM;
use crate::linalg::{Vector, MAX_DIM};
use crate::scalar::Real;

use super::grid::{BrownianDraw, TimeGrid};
use super::path::{endpoint, FlowPath};
use super::system::SdeSystem;

/// Sub-steps per unit of `|τ|` in the variation ODE.
pub const VARIATION_STEPS_PER_UNIT: f64 = 64.0;

/// `H_t^τ(x)`: solves `∂_τ H = X(H) h_t`, `H^0 = x`, with classical RK4.
pub fn variation_flow<T: Real>(
    system: &SdeSystem<T>,
    h: &CmProcess<T>,
    tau: T,
    t: T,
    x: &PointOnM<T>,
) -> Result<PointOnM<T>> {
    if !h.is_deterministic() {
        return Err(Error::InvalidArgument("variation flow needs a deterministic h".into()));
    }
    Ok(PointOnM::new_unchecked(variation_raw(system, &h.value_at(t), tau, x.coords())?))
}

pub(crate) fn variation_raw<T: Real>(
    system: &SdeSystem<T>,
    ht: &Vector<T>,
    tau: T,
    x: &Vector<T>,
) -> Result<Vector<T>> {
    if tau == T::zero() || ht.max_abs() == T::zero() {
        return Ok(*x);
    }
    let m = &system.manifold;
    let n = (tau.abs() * T::lit(VARIATION_STEPS_PER_UNIT)).ceil().to_usize().unwrap_or(1).max(1);
    let step = tau / T::from_count(n);
    let half = step * T::lit(0.5);
    let field = |y: &Vector<T>| system.diffusion(y, ht);
    let mut y = *x;
    for _ in 0..n {
        let k1 = field(&y);
        let k2 = field(&y.axpy(half, &k1));
        let k3 = field(&y.axpy(half, &k2));
        let k4 = field(&y.axpy(step, &k3));
        let incr = (k1 + k4 + (k2 + k3).scale(T::lit(2.0))).scale(step / T::lit(6.0));
        y = m.project_raw(&(y + incr))?;
    }
    Ok(y)
}

/// `ξ_{t_j}(H_{t_j}^τ(x))` for each marked time, re-simulating from the moved
/// start point with the same draw.
pub fn perturbed_cylinder_points<T: Real>(
    system: &SdeSystem<T>,
    x: &PointOnM<T>,
    h: &CmProcess<T>,
    tau: T,
    times: &[T],
    draw: &BrownianDraw<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<Vector<T>>> {
    let starts = PerturbedStarts::new(system, x, h, tau, times, grid)?;
    starts.points(system, draw, grid)
}

/// Start points `H_{t_j}^τ(x)` precomputed once for a deterministic `h`.
#[derive(Clone, Debug)]
pub struct PerturbedStarts<T> {
    nodes: Vec<usize>,
    starts: Vec<Vector<T>>,
}

impl<T: Real> PerturbedStarts<T> {
    pub fn new(
        system: &SdeSystem<T>,
        x: &PointOnM<T>,
        h: &CmProcess<T>,
        tau: T,
        times: &[T],
        grid: &TimeGrid<T>,
    ) -> Result<Self> {
        let mut nodes = Vec::with_capacity(times.len());
        let mut starts = Vec::with_capacity(times.len());
        for &t in times {
            let k = grid.index_of(t)?;
            if !grid.marked().contains(&k) {
                return Err(Error::GridMismatch(format!("time {t} is not marked on the grid")));
            }
            nodes.push(k);
            starts.push(variation_flow(system, h, tau, grid.times()[k], x)?.into_inner());
        }
        Ok(Self { nodes, starts })
    }

    pub fn points(&self, system: &SdeSystem<T>, draw: &BrownianDraw<T>, grid: &TimeGrid<T>) -> Result<Vec<Vector<T>>> {
        self.nodes.iter().zip(&self.starts).map(|(&k, y)| endpoint(system, y, grid.times(), draw, k)).collect()
    }
}

/// Precomputed integrand of the Girsanov exponent for a deterministic `h`
/// and fixed start point: frame coordinates of `∂_s H_s^τ(x)` at every node.
#[derive(Clone, Debug)]
pub struct GirsanovDrift<T> {
    coeffs: Vec<[T; MAX_DIM]>,
    rank: usize,
    zero: bool,
}

impl<T: Real> GirsanovDrift<T> {
    pub fn new(system: &SdeSystem<T>, h: &CmProcess<T>, tau: T, x: &PointOnM<T>, times: &[T]) -> Result<Self> {
        if !h.is_deterministic() {
            return Err(Error::InvalidArgument("Girsanov density needs a deterministic h".into()));
        }
        let m = &system.manifold;
        let rank = m.intrinsic_dim();
        let n = times.len();
        let zero = tau == T::zero() || n < 2;
        if zero {
            return Ok(Self { coeffs: Vec::new(), rank, zero });
        }
        let frame = m.tangent_frame(x.coords());
        let moved: Vec<Vector<T>> =
            times.iter().map(|&s| variation_raw(system, &h.value_at(s), tau, x.coords())).collect::<Result<_>>()?;
        let coeffs = (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                let g = (moved[b] - moved[a]).scale((times[b] - times[a]).recip());
                let mut c = [T::zero(); MAX_DIM];
                for (ci, e) in c.iter_mut().zip(&frame[..rank]) {
                    *ci = e.dot(&g);
                }
                c
            })
            .collect();
        Ok(Self { coeffs, rank, zero })
    }

    /// `M_T^τ − ½⟨M^τ⟩_T` along `path` (left-point in `ΔB`).
    pub fn log_density(&self, path: &FlowPath<T>, system: &SdeSystem<T>) -> Result<T> {
        if self.zero {
            return Ok(T::zero());
        }
        if self.coeffs.len() != path.points.len() || path.deriv.len() != path.points.len() {
            return Err(Error::GridMismatch("path does not match the precomputed drift".into()));
        }
        let half = T::lit(0.5);
        let mut mart = T::zero();
        let mut quad = T::zero();
        for k in 0..path.steps() {
            let w = path.deriv[k].apply_coeffs(&self.coeffs[k][..self.rank]);
            let u = system.diffusion_adjoint(&path.points[k], &w);
            mart = mart + u.dot(&path.draw.increments[k]);
            quad = quad + u.norm_sq() * path.dt(k);
        }
        Ok(mart - half * quad)
    }
}

/// Girsanov log-density for one path (recomputes the drift; prefer
/// [`GirsanovDrift`] when many paths share `h`, `τ` and `x`).
pub fn girsanov_log_density<T: Real>(path: &FlowPath<T>, system: &SdeSystem<T>, h: &CmProcess<T>, tau: T) -> Result<T> {
    let x = PointOnM::new_unchecked(*path.start());
    GirsanovDrift::new(system, h, tau, &x, &path.times)?.log_density(path, system)
}
