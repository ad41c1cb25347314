//! The finite set of experiments a config may name.

use std::fmt;
use std::str::FromStr;

use crate::config::EstimatorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    BismutGradient,
    ThalmaierGradient,
    PsiWeightedGradient,
    CrnFdGradient,
    GradientConsistency,
    Lemma21IntegratedCheck,
    FunctionIbpCheck,
    PathspaceIbp,
    DampedIbp,
    GirsanovInvariance,
    GirsanovMartingale,
    GirsanovDerivative,
    FreeIbp,
    FreeDampedIbp,
}

/// Which config keys an experiment requires or constrains.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Needs {
    pub functional: bool,
    pub h: bool,
    pub hfield: bool,
    pub deterministic_h: bool,
    pub v0: bool,
    pub t: bool,
    pub window: bool,
    pub base_points: bool,
    pub compact: bool,
    pub gradient_system: bool,
    /// Largest accepted `|tau|`.
    pub max_tau: f64,
}

impl Experiment {
    pub const ALL: [Experiment; 14] = [
        Experiment::BismutGradient,
        Experiment::ThalmaierGradient,
        Experiment::PsiWeightedGradient,
        Experiment::CrnFdGradient,
        Experiment::GradientConsistency,
        Experiment::Lemma21IntegratedCheck,
        Experiment::FunctionIbpCheck,
        Experiment::PathspaceIbp,
        Experiment::DampedIbp,
        Experiment::GirsanovInvariance,
        Experiment::GirsanovMartingale,
        Experiment::GirsanovDerivative,
        Experiment::FreeIbp,
        Experiment::FreeDampedIbp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BismutGradient => "bismut_gradient",
            Experiment::ThalmaierGradient => "thalmaier_gradient",
            Experiment::PsiWeightedGradient => "psi_weighted_gradient",
            Experiment::CrnFdGradient => "crn_fd_gradient",
            Experiment::GradientConsistency => "gradient_consistency",
            Experiment::Lemma21IntegratedCheck => "lemma21_integrated_check",
            Experiment::FunctionIbpCheck => "function_ibp_check",
            Experiment::PathspaceIbp => "pathspace_ibp",
            Experiment::DampedIbp => "damped_ibp",
            Experiment::GirsanovInvariance => "girsanov_invariance",
            Experiment::GirsanovMartingale => "girsanov_martingale",
            Experiment::GirsanovDerivative => "girsanov_derivative",
            Experiment::FreeIbp => "free_ibp",
            Experiment::FreeDampedIbp => "free_damped_ibp",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::BismutGradient => "d(P_T f)(v0) from f(x_T) times the full-interval stochastic integral",
            Experiment::ThalmaierGradient => "d(P_T f)(v0) with the integral restricted to [r, r + width]",
            Experiment::PsiWeightedGradient => "d(P_T f)(v0) with a normalized weight psi(s) in the integral",
            Experiment::CrnFdGradient => "d(P_T f)(v0) by central differences in the start point on shared noise",
            Experiment::GradientConsistency => "two gradient estimators (estimator, compare) on shared paths",
            Experiment::Lemma21IntegratedCheck => "integral of rate of h against its mean rate over [0, t]",
            Experiment::FunctionIbpCheck => "E f(x_T) delta V^h against E df(T xi_T (h_T - h_0))",
            Experiment::PathspaceIbp => "E dF(V^h) against E F delta V^h for a cylindrical F",
            Experiment::DampedIbp => "integration by parts with damped transport on a gradient system",
            Experiment::GirsanovInvariance => "E F(perturbed flow) against the reweighted E F(flow)",
            Experiment::GirsanovMartingale => "mean of the Girsanov density against 1",
            Experiment::GirsanovDerivative => {
                "tau-derivative of E F(perturbed flow) at 0 (mode: direct, fd, fd_vs_direct)"
            }
            Experiment::FreeIbp => "free path space integration by parts over uniform start points",
            Experiment::FreeDampedIbp => "free path space integration by parts with damped transport",
        }
    }

    pub(crate) fn needs(self) -> Needs {
        let gradient = Needs { functional: true, v0: true, ..Needs::default() };
        let identity = Needs { functional: true, h: true, ..Needs::default() };
        let free = Needs { functional: true, hfield: true, base_points: true, compact: true, ..Needs::default() };
        match self {
            Experiment::BismutGradient
            | Experiment::PsiWeightedGradient
            | Experiment::CrnFdGradient
            | Experiment::GradientConsistency => gradient,
            Experiment::ThalmaierGradient => Needs { window: true, ..gradient },
            Experiment::Lemma21IntegratedCheck => Needs { t: true, deterministic_h: true, ..identity },
            Experiment::FunctionIbpCheck | Experiment::PathspaceIbp => identity,
            Experiment::DampedIbp => Needs { gradient_system: true, ..identity },
            Experiment::GirsanovInvariance => Needs { deterministic_h: true, max_tau: 1.0, ..identity },
            Experiment::GirsanovMartingale => {
                Needs { h: true, deterministic_h: true, max_tau: 1.0, ..Needs::default() }
            }
            Experiment::GirsanovDerivative => Needs { deterministic_h: true, ..identity },
            Experiment::FreeIbp => free,
            Experiment::FreeDampedIbp => Needs { gradient_system: true, ..free },
        }
    }

    /// The estimator a single-estimator gradient experiment always uses.
    pub(crate) fn fixed_estimator(self) -> Option<EstimatorSpec> {
        match self {
            Experiment::BismutGradient => Some(EstimatorSpec::Bismut),
            Experiment::ThalmaierGradient => Some(EstimatorSpec::Thalmaier),
            Experiment::PsiWeightedGradient => Some(EstimatorSpec::Psi),
            Experiment::CrnFdGradient => Some(EstimatorSpec::CrnFd),
            _ => None,
        }
    }

    /// Experiments estimating `d(P_T f)(v0)` for a one-slot `f`.
    pub fn gradient_like(self) -> bool {
        matches!(
            self,
            Experiment::GradientConsistency | Experiment::Lemma21IntegratedCheck | Experiment::FunctionIbpCheck
        ) || self.fixed_estimator().is_some()
    }

    /// Experiments reporting a single estimate rather than a paired identity.
    pub fn is_oracle(self) -> bool {
        self.fixed_estimator().is_some()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?} (see `flowibp list`)"))
    }
}
