//! Every gradient formula and integration-by-parts identity as a paired Monte
//! Carlo experiment on common random numbers.

mod free;
mod girsanov;
mod gradient;
mod identities;

pub use free::{free_damped_ibp, free_ibp};
pub use girsanov::{girsanov_derivative, girsanov_invariance, girsanov_martingale, GirsanovDerivativeReport};
pub use gradient::{
    bismut_gradient, gradient, gradient_consistency, psi_weighted_gradient, thalmaier_gradient, GradientKind, PsiFn,
};
pub use identities::{damped_ibp, function_ibp_check, lemma21_integrated_check, pathspace_ibp};

use std::fmt;

use crate::error::Result;
use crate::flow::{simulate_with, BrownianDraw, FlowOptions, FlowPath, SdeSystem, TimeGrid};
use crate::linalg::Vector;
use crate::scalar::Real;
use crate::stats::{accumulate_units, paired_z, McAccumulator, RngPolicy};

/// Which estimator produced a [`GradientEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Bismut,
    Thalmaier,
    PsiWeighted,
    CrnFiniteDifference,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Bismut => "bismut",
            EstimatorKind::Thalmaier => "thalmaier",
            EstimatorKind::PsiWeighted => "psi",
            EstimatorKind::CrnFiniteDifference => "crn_fd",
        })
    }
}

/// Monte Carlo estimate of `d(P_T f)(v0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub n_paths: u64,
    pub kind: EstimatorKind,
}

impl<T: Real> GradientEstimate<T> {
    pub(crate) fn from_acc(acc: &McAccumulator<T>, kind: EstimatorKind) -> Self {
        Self { value: acc.mean(), std_error: acc.std_error(), n_paths: acc.count(), kind }
    }
}

/// Both sides of an identity and their per-path difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbpReport<T> {
    pub lhs: McAccumulator<T>,
    pub rhs: McAccumulator<T>,
    pub diff: McAccumulator<T>,
    /// `|mean diff| / SE(diff)`.
    pub z: T,
    pub n_paths: u64,
}

impl<T: Real> IbpReport<T> {
    pub fn from_accumulators(lhs: McAccumulator<T>, rhs: McAccumulator<T>, diff: McAccumulator<T>) -> Result<Self> {
        let z = paired_z(&diff)?;
        Ok(Self { lhs, rhs, diff, z, n_paths: diff.count() })
    }

    pub fn lhs_mean(&self) -> T {
        self.lhs.mean()
    }

    pub fn rhs_mean(&self) -> T {
        self.rhs.mean()
    }

    pub fn diff_mean(&self) -> T {
        self.diff.mean()
    }

    pub fn diff_se(&self) -> T {
        self.diff.std_error()
    }

    pub fn passes(&self, z_threshold: T) -> bool {
        self.z <= z_threshold
    }

    /// The report that would result from multiplying every rhs sample by `c`,
    /// reconstructed exactly from the first two moments.
    pub fn with_rhs_scaled(&self, c: T) -> Result<Self> {
        let n = self.diff.count();
        let (vl, vr, vd) = (self.lhs.variance(), self.rhs.variance(), self.diff.variance());
        let cov = (vl + vr - vd) * T::lit(0.5);
        let rhs = McAccumulator::from_moments(n, c * self.rhs.mean(), c * c * vr);
        let var_d = (vl + c * c * vr - T::lit(2.0) * c * cov).max(T::zero());
        let diff = McAccumulator::from_moments(n, self.lhs.mean() - c * self.rhs.mean(), var_d);
        Self::from_accumulators(self.lhs, rhs, diff)
    }
}

/// Path count, grid and master seed shared by all estimators.
#[derive(Clone, Debug)]
pub struct McSetup<T> {
    pub n_paths: u64,
    pub grid: TimeGrid<T>,
    pub seed: u64,
}

impl<T: Real> McSetup<T> {
    pub fn new(n_paths: u64, grid: TimeGrid<T>, seed: u64) -> Self {
        Self { n_paths, grid, seed }
    }

    pub fn policy(&self) -> RngPolicy {
        RngPolicy::new(self.seed)
    }

    /// Brownian draw for path `index`.
    pub fn draw(&self, system: &SdeSystem<T>, index: u64) -> BrownianDraw<T> {
        BrownianDraw::generate(&self.policy(), index, &self.grid, system.noise_dim())
    }

    /// Simulates path `index` from `x`.
    pub fn path(&self, system: &SdeSystem<T>, x: &Vector<T>, index: u64, options: FlowOptions) -> Result<FlowPath<T>> {
        simulate_with(system, x, self.grid.times(), self.draw(system, index), options)
    }
}

/// Per-path `[lhs, rhs, lhs - rhs]`, with differences at rounding level
/// snapped to zero so definitionally equal sides pair exactly.
#[inline]
pub(crate) fn paired<T: Real>(lhs: T, rhs: T) -> [T; 3] {
    let d = lhs - rhs;
    let tol = T::lit(16.0) * T::epsilon() * (lhs.abs() + rhs.abs());
    [lhs, rhs, if d.abs() <= tol { T::zero() } else { d }]
}

/// Runs `per_path` over every path of `setup` started at `x` and builds the
/// paired report from its `[lhs, rhs]`.
pub(crate) fn paired_experiment<T: Real>(
    system: &SdeSystem<T>,
    x: &Vector<T>,
    setup: &McSetup<T>,
    options: FlowOptions,
    per_path: impl Fn(&FlowPath<T>) -> Result<(T, T)> + Sync,
) -> Result<IbpReport<T>> {
    let [l, r, d] = accumulate_units(setup.n_paths, |i| {
        let path = setup.path(system, x, i, options)?;
        let (l, r) = per_path(&path)?;
        Ok(paired(l, r))
    })?;
    IbpReport::from_accumulators(l, r, d)
}
