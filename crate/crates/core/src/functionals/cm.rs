//! Cameron-Martin perturbations `h` with values in `T_{x_0} M`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::linalg::Vector;
use crate::scalar::Real;

/// A rule for an adapted perturbation. It only ever sees the path prefix
/// `x_0..=x_k` and the times `s_0..=s_k`, so it cannot look ahead.
pub trait AdaptedRule<T: Real>: Send + Sync {
    /// Rate `ḣ` on `[s_k, s_{k+1})`, where `k = prefix.len() - 1`.
    fn rate(&self, manifold: &ManifoldSpec<T>, prefix: &[Vector<T>], times: &[T]) -> Vector<T>;

    fn describe(&self) -> String;
}

/// `ḣ_s = 1{<x_s, normal> > 0} v`: occupation time of a hemisphere times `v`.
#[derive(Clone, Copy, Debug)]
pub struct HemisphereOccupation<T> {
    pub normal: Vector<T>,
    pub direction: Vector<T>,
}

impl<T: Real> AdaptedRule<T> for HemisphereOccupation<T> {
    fn rate(&self, _m: &ManifoldSpec<T>, prefix: &[Vector<T>], _times: &[T]) -> Vector<T> {
        let x = prefix.last().expect("non-empty prefix");
        if x.dot(&self.normal) > T::zero() {
            self.direction
        } else {
            Vector::zeros(self.direction.dim())
        }
    }

    fn describe(&self) -> String {
        "occupation".into()
    }
}

#[derive(Clone)]
pub enum CmProcess<T> {
    /// Piecewise-linear interpolation of `(time, value)` knots, constant
    /// beyond the last knot.
    Deterministic { knots: Vec<(T, Vector<T>)> },
    /// `h_{s_k} = h0 + Σ_{j<k} rate_j (s_{j+1} - s_j)` with rates from `rule`.
    Adapted { h0: Vector<T>, rule: Arc<dyn AdaptedRule<T>> },
}

impl<T: Real> fmt::Debug for CmProcess<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmProcess::Deterministic { knots } => f.debug_struct("Deterministic").field("knots", &knots.len()).finish(),
            CmProcess::Adapted { h0, rule } => {
                f.debug_struct("Adapted").field("h0", h0).field("rule", &rule.describe()).finish()
            }
        }
    }
}

impl<T: Real> CmProcess<T> {
    pub fn zero(dim: usize) -> Self {
        CmProcess::Deterministic { knots: vec![(T::zero(), Vector::zeros(dim))] }
    }

    pub fn deterministic(mut knots: Vec<(T, Vector<T>)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument("at least one knot required".into()));
        }
        knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate knot times".into()));
        }
        Ok(CmProcess::Deterministic { knots })
    }

    /// `h_s = s u` on `[0, horizon]`.
    pub fn linear(u: Vector<T>, horizon: T) -> Self {
        CmProcess::Deterministic { knots: vec![(T::zero(), Vector::zeros(u.dim())), (horizon, u.scale(horizon))] }
    }

    /// Piecewise-linear interpolant of `s -> profile(s) u` at `knot_times`.
    pub fn sampled(u: Vector<T>, knot_times: &[T], profile: impl Fn(T) -> T) -> Result<Self> {
        Self::deterministic(knot_times.iter().map(|&s| (s, u.scale(profile(s)))).collect())
    }

    pub fn occupation(normal: Vector<T>, direction: Vector<T>) -> Self {
        CmProcess::Adapted {
            h0: Vector::zeros(direction.dim()),
            rule: Arc::new(HemisphereOccupation { normal, direction }),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, CmProcess::Deterministic { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            CmProcess::Deterministic { knots } => knots[0].1.dim(),
            CmProcess::Adapted { h0, .. } => h0.dim(),
        }
    }

    pub fn h0(&self) -> Vector<T> {
        match self {
            CmProcess::Deterministic { knots } => self.value_at(knots[0].0.min(T::zero())),
            CmProcess::Adapted { h0, .. } => *h0,
        }
    }

    /// Value at an arbitrary time (deterministic kind only).
    pub fn value_at(&self, t: T) -> Vector<T> {
        match self {
            CmProcess::Deterministic { knots } => interpolate(knots, t),
            CmProcess::Adapted { .. } => panic!("value_at requires a deterministic process"),
        }
    }

    /// Values and step rates at every node of a path.
    ///
    /// `rates[k]` is the slope on `[s_k, s_{k+1})` so that
    /// `values[k+1] = values[k] + rates[k] (s_{k+1} - s_k)`; the final entry
    /// repeats the last slope.
    pub fn evaluate_along(
        &self,
        manifold: &ManifoldSpec<T>,
        points: &[Vector<T>],
        times: &[T],
    ) -> (Vec<Vector<T>>, Vec<Vector<T>>) {
        let n = times.len();
        let mut values = Vec::with_capacity(n);
        let mut rates = Vec::with_capacity(n);
        match self {
            CmProcess::Deterministic { knots } => {
                values.extend(times.iter().map(|&t| interpolate(knots, t)));
                for k in 0..n.saturating_sub(1) {
                    rates.push((values[k + 1] - values[k]).scale((times[k + 1] - times[k]).recip()));
                }
            }
            CmProcess::Adapted { h0, rule } => {
                let mut h = *h0;
                values.push(h);
                for k in 0..n.saturating_sub(1) {
                    let rate = rule.rate(manifold, &points[..=k], &times[..=k]);
                    h = h.axpy(times[k + 1] - times[k], &rate);
                    values.push(h);
                    rates.push(rate);
                }
            }
        }
        let last = rates.last().copied().unwrap_or_else(|| Vector::zeros(self.dim()));
        rates.push(last);
        (values, rates)
    }
}

/// `(h_{s_k}, ḣ_{s_k})` at node `k` given only the prefix `x_0..=x_k` (and,
/// for the deterministic kind, the grid times).
pub fn cm_eval<T: Real>(
    h: &CmProcess<T>,
    manifold: &ManifoldSpec<T>,
    prefix: &[Vector<T>],
    times: &[T],
    k: usize,
) -> (Vector<T>, Vector<T>) {
    match h {
        CmProcess::Deterministic { knots } => {
            let value = interpolate(knots, times[k]);
            let rate = if k + 1 < times.len() {
                (interpolate(knots, times[k + 1]) - value).scale((times[k + 1] - times[k]).recip())
            } else if k > 0 {
                (value - interpolate(knots, times[k - 1])).scale((times[k] - times[k - 1]).recip())
            } else {
                Vector::zeros(value.dim())
            };
            (value, rate)
        }
        CmProcess::Adapted { h0, rule } => {
            let mut value = *h0;
            for j in 0..k {
                value = value.axpy(times[j + 1] - times[j], &rule.rate(manifold, &prefix[..=j], &times[..=j]));
            }
            (value, rule.rate(manifold, &prefix[..=k], &times[..=k]))
        }
    }
}

fn interpolate<T: Real>(knots: &[(T, Vector<T>)], t: T) -> Vector<T> {
    let i = knots.partition_point(|(s, _)| *s <= t);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[i - 1].1;
    }
    let (a, va) = knots[i - 1];
    let (b, vb) = knots[i];
    if t == a {
        return va;
    }
    va.axpy((t - a) / (b - a), &(vb - va))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector<f64> {
        Vector::from_slice(xs)
    }

    #[test]
    fn linear_knots_interpolate() {
        let m = ManifoldSpec::<f64>::sphere2();
        let h = CmProcess::deterministic(vec![(0.0, v(&[0.0, 0.0, 0.0])), (2.0, v(&[0.0, 2.0, 4.0]))]).unwrap();
        let times = [0.0, 0.5, 1.0, 1.5, 2.0];
        let (val, rate) = cm_eval(&h, &m, &[], &times, 2);
        assert_eq!(val, v(&[0.0, 1.0, 2.0]));
        assert_eq!(rate, v(&[0.0, 1.0, 2.0]));
        let (val, rate) = cm_eval(&h, &m, &[], &times, 4);
        assert_eq!(val, v(&[0.0, 2.0, 4.0]));
        assert_eq!(rate, v(&[0.0, 1.0, 2.0]));
    }

    #[test]
    fn zero_process() {
        let m = ManifoldSpec::<f64>::euclidean(2);
        let h = CmProcess::zero(2);
        let (val, rate) = cm_eval(&h, &m, &[], &[0.0, 0.1, 0.2], 1);
        assert_eq!(val, v(&[0.0, 0.0]));
        assert_eq!(rate, v(&[0.0, 0.0]));
    }

    #[test]
    fn occupation_accumulates_time_in_hemisphere() {
        let m = ManifoldSpec::<f64>::sphere2();
        let dir = v(&[0.0, 0.0, 1.0]);
        let h = CmProcess::occupation(v(&[0.0, 1.0, 0.0]), dir);
        let pts =
            [v(&[1.0, 0.0, 0.0]), v(&[0.8, 0.6, 0.0]), v(&[0.6, 0.8, 0.0]), v(&[0.8, -0.6, 0.0]), v(&[1.0, 0.0, 0.0])];
        let times = [0.0, 0.1, 0.3, 0.6, 1.0];
        // Direct accumulation oracle: indicator at the left end of each step.
        let mut occ = 0.0;
        for k in 0..5 {
            let (val, rate) = cm_eval(&h, &m, &pts[..=k], &times[..=k.min(4)], k);
            assert!((val - dir.scale(occ)).norm() < 1e-15);
            let inside = if pts[k][1] > 0.0 { 1.0 } else { 0.0 };
            assert_eq!(rate, dir.scale(inside));
            if k < 4 {
                occ += inside * (times[k + 1] - times[k]);
            }
        }
        let (values, rates) = h.evaluate_along(&m, &pts, &times);
        assert!((values[4] - dir.scale(0.5)).norm() < 1e-15);
        assert_eq!(rates.len(), 5);
    }

    #[test]
    fn evaluate_along_telescopes() {
        let m = ManifoldSpec::<f64>::euclidean(1);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let h = CmProcess::sampled(v(&[1.0]), &times, |s| s * s).unwrap();
        let (values, rates) = h.evaluate_along(&m, &[], &times);
        let mut acc = values[0][0];
        for k in 0..10 {
            acc += rates[k][0] * (times[k + 1] - times[k]);
        }
        assert!((acc - 1.0).abs() < 1e-14);
        assert_eq!(h.h0(), v(&[0.0]));
    }
}
