//! Stratonovich Heun simulation of one flow path and the linear maps carried
//! along it.

use crate::error::{Error, Result};
use crate::geometry::PointOnM;
use crate::linalg::{solve_small, Vector, MAX_DIM};
use crate::scalar::Real;

use super::grid::{node_index, BrownianDraw, TimeGrid};
use super::system::SdeSystem;

/// Magnitude beyond which a path is declared to have blown up.
pub const BLOWUP_LIMIT: f64 = 1e12;

/// Linear map `T_{x_0} M -> T_{x_k} M`, stored as the images of the
/// orthonormal frame of `T_{x_0} M` held by the owning [`FlowPath`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentMap<T> {
    cols: [Vector<T>; MAX_DIM],
    rank: usize,
}

impl<T: Real> TangentMap<T> {
    pub fn from_columns(cols: &[Vector<T>]) -> Self {
        let mut out = [Vector::zeros(cols[0].dim()); MAX_DIM];
        out[..cols.len()].copy_from_slice(cols);
        Self { cols: out, rank: cols.len() }
    }

    pub fn columns(&self) -> &[Vector<T>] {
        &self.cols[..self.rank]
    }

    /// Image of the vector with frame coordinates `coeffs`.
    #[inline]
    pub fn apply_coeffs(&self, coeffs: &[T]) -> Vector<T> {
        let mut out = Vector::zeros(self.cols[0].dim());
        for (c, col) in coeffs.iter().zip(self.columns()) {
            out = out.axpy(*c, col);
        }
        out
    }

    /// Largest column norm (operator-norm proxy used for blow-up detection).
    pub fn max_column_norm(&self) -> T {
        self.columns().iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }
}

/// Which per-node quantities a simulation records besides the points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowOptions {
    pub derivative: bool,
    /// Parallel transports and antidevelopment increments.
    pub transport: bool,
    /// Damped transports (implies `transport`).
    pub damped: bool,
}

impl FlowOptions {
    pub const ALL: Self = Self { derivative: true, transport: true, damped: true };
    pub const POINTS: Self = Self { derivative: false, transport: false, damped: false };
    pub const DERIVATIVE: Self = Self { derivative: true, transport: false, damped: false };
    pub const DAMPED: Self = Self { derivative: false, transport: true, damped: true };
}

/// One discretized realization of the flow from `x_0`.
#[derive(Clone, Debug)]
pub struct FlowPath<T> {
    pub times: Vec<T>,
    pub points: Vec<Vector<T>>,
    /// Orthonormal frame of `T_{x_0} M` all tangent maps are expressed against.
    pub frame: TangentMap<T>,
    /// Derivative flow `Tξ_{s_k}`.
    pub deriv: Vec<TangentMap<T>>,
    /// Parallel transports `//_{s_k}`.
    pub transports: Vec<TangentMap<T>>,
    /// Damped transports `W_{s_k}`.
    pub damped: Vec<TangentMap<T>>,
    /// Antidevelopment increments in frame coordinates, one per step.
    pub antidev: Vec<Vector<T>>,
    pub draw: BrownianDraw<T>,
}

impl<T: Real> FlowPath<T> {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> &Vector<T> {
        &self.points[0]
    }

    pub fn end(&self) -> &Vector<T> {
        self.points.last().unwrap()
    }

    #[inline]
    pub fn dt(&self, k: usize) -> T {
        self.times[k + 1] - self.times[k]
    }

    pub fn node_index(&self, t: T) -> Result<usize> {
        node_index(&self.times, t)
    }

    /// Coordinates of `v` in the frame of `T_{x_0} M`.
    #[inline]
    pub fn frame_coeffs(&self, v: &Vector<T>) -> [T; MAX_DIM] {
        let mut c = [T::zero(); MAX_DIM];
        for (ci, e) in c.iter_mut().zip(self.frame.columns()) {
            *ci = e.dot(v);
        }
        c
    }

    /// `Tξ_{s_k}(v)` for `v` tangent at `x_0`.
    #[inline]
    pub fn deriv_apply(&self, k: usize, v: &Vector<T>) -> Vector<T> {
        self.deriv[k].apply_coeffs(&self.frame_coeffs(v)[..self.frame.rank])
    }

    #[inline]
    pub fn transport_apply(&self, k: usize, v: &Vector<T>) -> Vector<T> {
        self.transports[k].apply_coeffs(&self.frame_coeffs(v)[..self.frame.rank])
    }

    #[inline]
    pub fn damped_apply(&self, k: usize, v: &Vector<T>) -> Vector<T> {
        self.damped[k].apply_coeffs(&self.frame_coeffs(v)[..self.frame.rank])
    }

    /// `//_{s_k} ΔB̃_k`, the intrinsic increment carried to `x_k`.
    #[inline]
    pub fn transported_antidev(&self, k: usize) -> Vector<T> {
        self.transports[k].apply_coeffs(self.antidev[k].as_slice())
    }
}

/// Simulates the flow from `x0` on `grid` driven by `draw`, recording every
/// per-node quantity.
pub fn simulate_flow<T: Real>(
    system: &SdeSystem<T>,
    x0: &PointOnM<T>,
    grid: &TimeGrid<T>,
    draw: BrownianDraw<T>,
) -> Result<FlowPath<T>> {
    simulate_with(system, x0.coords(), grid.times(), draw, FlowOptions::ALL)
}

/// Restarts the flow at node `r` from `x_at_r`, reusing the increments of
/// `draw` on `[s_r, T]`. The derivative flow restarts from the identity.
pub fn restart_flow<T: Real>(
    system: &SdeSystem<T>,
    x_at_r: &PointOnM<T>,
    grid: &TimeGrid<T>,
    draw: &BrownianDraw<T>,
    r: usize,
    options: FlowOptions,
) -> Result<FlowPath<T>> {
    if draw.steps() != grid.steps() {
        return Err(Error::GridMismatch(format!("draw has {} steps, grid has {}", draw.steps(), grid.steps())));
    }
    let sub = grid.suffix(r)?;
    simulate_with(system, x_at_r.coords(), sub.times(), draw.suffix(r)?, options)
}

/// Core integrator. `times` and `draw` must have matching lengths.
pub fn simulate_with<T: Real>(
    system: &SdeSystem<T>,
    x0: &Vector<T>,
    times: &[T],
    draw: BrownianDraw<T>,
    options: FlowOptions,
) -> Result<FlowPath<T>> {
    if draw.steps() + 1 != times.len() {
        return Err(Error::GridMismatch(format!(
            "draw has {} steps, grid has {}",
            draw.steps(),
            times.len().saturating_sub(1)
        )));
    }
    let m = &system.manifold;
    let steps = draw.steps();
    let rank = m.intrinsic_dim();
    let transport = options.transport || options.damped;
    let frame = TangentMap::from_columns(&m.tangent_frame(x0)[..rank]);
    let limit = T::lit(BLOWUP_LIMIT);

    let mut points = Vec::with_capacity(steps + 1);
    points.push(*x0);
    let mut deriv = Vec::with_capacity(if options.derivative { steps + 1 } else { 0 });
    let mut transports = Vec::with_capacity(if transport { steps + 1 } else { 0 });
    let mut damped = Vec::with_capacity(if options.damped { steps + 1 } else { 0 });
    let mut antidev = Vec::with_capacity(if transport { steps } else { 0 });
    if options.derivative {
        deriv.push(frame);
    }
    if transport {
        transports.push(frame);
    }
    if options.damped {
        damped.push(frame);
    }

    let damping_scalar = system.damping_scalar();
    let mut gain = T::one();
    let mut x = *x0;
    for k in 0..steps {
        let db = &draw.increments[k];
        let dt = times[k + 1] - times[k];
        let HeunStep { xp, xn, scale_p, scale_n } = heun_step(system, &x, db, dt, k)?;
        let half = T::lit(0.5);

        // The derivative flow is the exact derivative of the discrete step map.
        if options.derivative {
            let prev = deriv[k];
            let mut cols = prev;
            for (u, out) in prev.cols[..rank].iter().zip(cols.cols.iter_mut()) {
                let b0 = system.diffusion_derivative(&x, u, db).axpy(dt, &system.drift_derivative(&x, u));
                let up = m.project_tangent_raw(&xp, &(*u + b0)).scale(scale_p);
                let b1 = system.diffusion_derivative(&xp, &up, db).axpy(dt, &system.drift_derivative(&xp, &up));
                *out = m.project_tangent_raw(&xn, &u.axpy(half, &(b0 + b1))).scale(scale_n);
            }
            let norm = cols.max_column_norm();
            if !(norm <= limit) {
                return Err(Error::NumericBlowup { step: k + 1, magnitude: norm.to_f64_lossy() });
            }
            deriv.push(cols);
        }

        if transport {
            let prev = transports[k];
            let mut incr = Vector::zeros(rank);
            let noise = system.diffusion(&x, db);
            for (i, col) in prev.columns().iter().enumerate() {
                incr[i] = col.dot(&noise);
            }
            antidev.push(incr);
            let mut next = prev;
            let rot = m.transporter(&x, &xn);
            for (c, out) in prev.cols[..rank].iter().zip(next.cols.iter_mut()) {
                *out = rot.apply(c);
            }
            transports.push(next);
        }

        if options.damped {
            let prev = damped[k];
            let mut next = prev;
            match damping_scalar {
                // Scalar damping commutes with transport: W_k = gain_k //_k.
                Some(lambda) => {
                    let h = dt * half;
                    gain = gain * (T::one() + h * lambda) / (T::one() - h * lambda);
                    for (c, out) in transports[k + 1].cols[..rank].iter().zip(next.cols.iter_mut()) {
                        *out = c.scale(gain);
                    }
                }
                None => {
                    for (c, out) in prev.cols[..rank].iter().zip(next.cols.iter_mut()) {
                        *out = damped_step(system, None, &x, &xn, c, dt);
                    }
                }
            }
            damped.push(next);
        }

        x = xn;
        points.push(x);
    }

    Ok(FlowPath { times: times.to_vec(), points, frame, deriv, transports, damped, antidev, draw })
}

pub(crate) struct HeunStep<T> {
    xp: Vector<T>,
    xn: Vector<T>,
    /// Derivative factors of the two projections.
    scale_p: T,
    scale_n: T,
}

/// One projected Heun step: Euler predictor, averaged corrector.
#[inline]
pub(crate) fn heun_step<T: Real>(
    system: &SdeSystem<T>,
    x: &Vector<T>,
    db: &Vector<T>,
    dt: T,
    k: usize,
) -> Result<HeunStep<T>> {
    let m = &system.manifold;
    let a0 = system.diffusion(x, db).axpy(dt, &system.drift_at(x));
    let (xp, scale_p) = m.project_scaled(&(*x + a0))?;
    let a1 = system.diffusion(&xp, db).axpy(dt, &system.drift_at(&xp));
    let (xn, scale_n) = m.project_scaled(&x.axpy(T::lit(0.5), &(a0 + a1)))?;
    if !(xn.max_abs() <= T::lit(BLOWUP_LIMIT)) {
        return Err(Error::NumericBlowup { step: k + 1, magnitude: xn.max_abs().to_f64_lossy() });
    }
    Ok(HeunStep { xp, xn, scale_p, scale_n })
}

/// Point reached at node `end` from `x0`, without storing the path.
pub(crate) fn endpoint<T: Real>(
    system: &SdeSystem<T>,
    x0: &Vector<T>,
    times: &[T],
    draw: &BrownianDraw<T>,
    end: usize,
) -> Result<Vector<T>> {
    let mut x = *x0;
    for k in 0..end {
        x = heun_step(system, &x, &draw.increments[k], times[k + 1] - times[k], k)?.xn;
    }
    Ok(x)
}

/// Transport `v` from `x` to `y`, then one implicit-midpoint step of
/// `v' = -½ Ric^#(v) + ∇_v Z` with the coefficient frozen at `y`.
#[inline]
fn damped_step<T: Real>(
    system: &SdeSystem<T>,
    scalar: Option<T>,
    x: &Vector<T>,
    y: &Vector<T>,
    v: &Vector<T>,
    dt: T,
) -> Vector<T> {
    let m = &system.manifold;
    let moved = m.transport_raw(x, y, v);
    let h = dt * T::lit(0.5);
    if let Some(lambda) = scalar {
        return moved.scale((T::one() + h * lambda) / (T::one() - h * lambda));
    }
    let rank = m.intrinsic_dim();
    let frame = m.tangent_frame(y);
    let mut a = [[T::zero(); MAX_DIM]; MAX_DIM];
    let mut b = [T::zero(); MAX_DIM];
    let lv = system.damping_operator(y, &moved);
    for i in 0..rank {
        b[i] = frame[i].dot(&moved.axpy(h, &lv));
        for j in 0..rank {
            let lij = frame[i].dot(&system.damping_operator(y, &frame[j]));
            a[i][j] = if i == j { T::one() } else { T::zero() } - h * lij;
        }
    }
    let coeffs = solve_small(a, b, rank).expect("implicit midpoint matrix is invertible for small steps");
    let mut out = Vector::zeros(y.dim());
    for i in 0..rank {
        out = out.axpy(coeffs[i], &frame[i]);
    }
    out
}

/// `ΔB̃_k = //_{s_k}^{-1} X(x_k) ΔB_k` in frame coordinates of `T_{x_0} M`.
pub fn antidevelopment_increments<T: Real>(path: &FlowPath<T>, system: &SdeSystem<T>) -> Vec<Vector<T>> {
    if path.antidev.len() == path.steps() && !path.transports.is_empty() {
        return path.antidev.clone();
    }
    let m = &system.manifold;
    let rank = m.intrinsic_dim();
    let mut cols: Vec<Vector<T>> = path.frame.columns().to_vec();
    let mut out = Vec::with_capacity(path.steps());
    for k in 0..path.steps() {
        let noise = system.diffusion(&path.points[k], &path.draw.increments[k]);
        let mut incr = Vector::zeros(rank);
        for (i, c) in cols.iter().enumerate() {
            incr[i] = c.dot(&noise);
        }
        out.push(incr);
        for c in cols.iter_mut() {
            *c = m.transport_raw(&path.points[k], &path.points[k + 1], c);
        }
    }
    out
}

/// Damped parallel transport `W_{s_k} v0` at every node.
pub fn damped_transport<T: Real>(path: &FlowPath<T>, system: &SdeSystem<T>, v0: &Vector<T>) -> Vec<Vector<T>> {
    let scalar = system.damping_scalar();
    let v0 = system.manifold.project_tangent_raw(path.start(), v0);
    let mut out = Vec::with_capacity(path.points.len());
    out.push(v0);
    let mut v = v0;
    for k in 0..path.steps() {
        v = damped_step(system, scalar, &path.points[k], &path.points[k + 1], &v, path.dt(k));
        out.push(v);
    }
    out
}
