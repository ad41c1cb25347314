//! Time grids and Brownian draws.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Real;
use crate::stats::{RngPolicy, StreamPurpose};

/// Default resolution, steps per unit time.
pub const DEFAULT_STEPS_PER_UNIT: usize = 512;

/// Uniform time grid on `[0, T]` with a set of marked node indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T> {
    times: Vec<T>,
    marked: Vec<usize>,
}

/// How a requested marked time was placed on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snap<T> {
    pub requested: T,
    pub index: usize,
    pub node_time: T,
}

impl<T: Real> Snap<T> {
    pub fn distance(&self) -> T {
        (self.requested - self.node_time).abs()
    }
}

impl<T: Real> TimeGrid<T> {
    /// `ceil(T * steps_per_unit)` uniform steps; each marked time is snapped to
    /// its nearest node.
    pub fn uniform(horizon: T, steps_per_unit: usize, marked_times: &[T]) -> Result<(Self, Vec<Snap<T>>)> {
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if steps_per_unit == 0 {
            return Err(Error::InvalidArgument("steps_per_unit must be positive".into()));
        }
        let raw = horizon.to_f64_lossy() * steps_per_unit as f64;
        let m = ((raw - 1e-9).ceil() as usize).max(1);
        let mf = T::from_count(m);
        let times: Vec<T> = (0..=m).map(|k| horizon * T::from_count(k) / mf).collect();
        let mut grid = Self { times, marked: Vec::new() };
        let mut snaps = Vec::with_capacity(marked_times.len());
        for &t in marked_times {
            if !(t >= T::zero() && t <= horizon) {
                return Err(Error::GridMismatch(format!("time {t} outside [0, {horizon}]")));
            }
            let index = (t / horizon * mf).round().to_usize().unwrap_or(0).min(m);
            snaps.push(Snap { requested: t, index, node_time: grid.times[index] });
            grid.marked.push(index);
        }
        grid.marked.sort_unstable();
        grid.marked.dedup();
        Ok((grid, snaps))
    }

    /// Grid with explicit nodes (strictly increasing, starting anywhere).
    pub fn from_times(times: Vec<T>) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("grid times must be non-empty and increasing".into()));
        }
        Ok(Self { times, marked: Vec::new() })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn horizon(&self) -> T {
        *self.times.last().unwrap()
    }

    #[inline]
    pub fn dt(&self, k: usize) -> T {
        self.times[k + 1] - self.times[k]
    }

    /// Index of the node at time `t`, or `GridMismatch` if `t` is not a node.
    pub fn index_of(&self, t: T) -> Result<usize> {
        node_index(&self.times, t)
    }

    /// Nodes from index `r` onwards.
    pub fn suffix(&self, r: usize) -> Result<Self> {
        if r > self.steps() {
            return Err(Error::GridMismatch(format!("restart index {r} beyond {} steps", self.steps())));
        }
        Ok(Self {
            times: self.times[r..].to_vec(),
            marked: self.marked.iter().filter(|&&k| k >= r).map(|k| k - r).collect(),
        })
    }
}

pub(crate) fn node_index<T: Real>(times: &[T], t: T) -> Result<usize> {
    let tol = T::lit(1e-12) * times.last().unwrap().abs().max(T::one());
    let k = times.partition_point(|&s| s < t - tol);
    if k < times.len() && (times[k] - t).abs() <= tol {
        Ok(k)
    } else {
        Err(Error::GridMismatch(format!("time {t} is not a grid node")))
    }
}

/// Brownian increments for one path: `increments[k]` has covariance
/// `(s_{k+1} - s_k) I`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianDraw<T> {
    pub path_index: u64,
    pub increments: Vec<Vector<T>>,
}

impl<T: Real> BrownianDraw<T> {
    /// Reproducible draw for `path_index` under `policy`.
    pub fn generate(policy: &RngPolicy, path_index: u64, grid: &TimeGrid<T>, noise_dim: usize) -> Self {
        let mut rng = policy.stream(path_index, StreamPurpose::Brownian);
        let increments = (0..grid.steps())
            .map(|k| {
                let sd = grid.dt(k).sqrt();
                let mut v = Vector::zeros(noise_dim);
                for c in v.as_mut_slice() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c = T::lit(z) * sd;
                }
                v
            })
            .collect();
        Self { path_index, increments }
    }

    pub fn zeros(grid: &TimeGrid<T>, noise_dim: usize) -> Self {
        Self { path_index: 0, increments: vec![Vector::zeros(noise_dim); grid.steps()] }
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    /// Increments from step `r` onwards.
    pub fn suffix(&self, r: usize) -> Result<Self> {
        if r > self.steps() {
            return Err(Error::GridMismatch(format!("restart index {r} beyond {} steps", self.steps())));
        }
        Ok(Self { path_index: self.path_index, increments: self.increments[r..].to_vec() })
    }

    /// `B_{s_k}` for every node.
    pub fn cumulative(&self) -> Vec<Vector<T>> {
        let dim = self.increments.first().map_or(0, |v| v.dim());
        let mut acc = Vector::zeros(dim);
        let mut out = vec![acc];
        for inc in &self.increments {
            acc += *inc;
            out.push(acc);
        }
        out
    }
}
