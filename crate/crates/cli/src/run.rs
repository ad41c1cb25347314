//! Executes validated experiments and turns their reports into rows.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use flowibp::estimators::{self, GirsanovDerivativeReport, GradientKind, IbpReport, McSetup, PsiFn};
use flowibp::functionals::{Bump, Constant, Coord, CylFunctional, CylinderFn, FieldProcess, PairDot};
use flowibp::{CmProcess, Error};

use crate::config::{DerivativeMode, EstimatorSpec, ExperimentConfig, FieldSpec, FunctionalSpec, HSpec, PsiSpec};
use crate::registry::Experiment;

/// Outcome of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// An oracle-free estimate; never affects the exit code.
    Info,
    /// The experiment could not be evaluated.
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Error => "error",
        }
    }
}

/// One report line.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub manifold: String,
    pub system: String,
    pub functional: String,
    pub h: String,
    pub horizon: f64,
    /// Paths per estimate (paths per base point times base points on free path space).
    pub n: u64,
    /// Steps per unit time.
    pub m: usize,
    pub seed: u64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub diff: f64,
    pub diff_se: f64,
    pub z: f64,
    pub status: Status,
    pub wall_ms: u64,
    /// Error text for [`Status::Error`] rows; not serialized.
    pub message: Option<String>,
}

/// Harness switches that do not belong in config files.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Write `wall_ms = 0` so that reports are byte-reproducible.
    pub omit_timing: bool,
    /// Multiplies every right-hand side by this factor (harness self-test).
    pub corrupt_rhs: Option<f64>,
}

/// A single estimate with its own standard error, or a paired identity.
enum Outcome {
    Estimate { value: f64, se: f64 },
    Paired(IbpReport<f64>),
}

/// Reports shared by `girsanov_derivative` rows that differ only in `mode`.
#[derive(Default)]
pub struct DerivativeCache(HashMap<String, GirsanovDerivativeReport<f64>>);

impl DerivativeCache {
    fn key(cfg: &ExperimentConfig) -> String {
        format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{}|{}|{}|{}|{}",
            cfg.system_name,
            cfg.x,
            cfg.functional,
            cfg.h,
            cfg.u,
            cfg.eps,
            cfg.horizon,
            cfg.n_paths,
            cfg.steps_per_unit,
            cfg.seed
        )
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, options: &RunOptions) -> ReportRow {
    run_experiment_cached(cfg, options, &mut DerivativeCache::default())
}

/// [`run_experiment`] reusing `girsanov_derivative` reports from `cache`.
/// Timing of a cache hit covers only the lookup.
pub fn run_experiment_cached(cfg: &ExperimentConfig, options: &RunOptions, cache: &mut DerivativeCache) -> ReportRow {
    let start = Instant::now();
    let outcome = execute(cfg, cache);
    let wall_ms = if options.omit_timing { 0 } else { start.elapsed().as_millis() as u64 };
    let n = match cfg.experiment {
        Experiment::FreeIbp | Experiment::FreeDampedIbp => cfg.n_paths * cfg.n_base_points,
        _ => cfg.n_paths,
    };
    let h = match (cfg.h, cfg.hfield) {
        (_, Some(field)) => field.to_string(),
        (Some(h), None) => h.to_string(),
        (None, None) => String::new(),
    };
    let mut row = ReportRow {
        experiment: cfg.label.clone(),
        manifold: cfg.manifold.to_string(),
        system: cfg.system_name.clone(),
        functional: cfg.functional.as_ref().map(|f| f.to_string()).unwrap_or_default(),
        h,
        horizon: cfg.horizon,
        n,
        m: cfg.steps_per_unit,
        seed: cfg.seed,
        lhs: f64::NAN,
        lhs_se: f64::NAN,
        rhs: f64::NAN,
        rhs_se: f64::NAN,
        diff: f64::NAN,
        diff_se: f64::NAN,
        z: f64::NAN,
        status: Status::Error,
        wall_ms,
        message: None,
    };
    let scale = options.corrupt_rhs.unwrap_or(1.0);
    match outcome {
        Err(e) => row.message = Some(e.to_string()),
        Ok(Outcome::Estimate { value, se }) => {
            row.lhs = value;
            row.lhs_se = se;
            match cfg.expected {
                Some(expected) => {
                    row.rhs = expected * scale;
                    row.rhs_se = 0.0;
                    row.diff = value - row.rhs;
                    row.diff_se = se;
                    row.z = row.diff.abs() / se;
                    let tolerance = (cfg.tol_se * se + cfg.tol_abs.unwrap_or(0.0)).max(cfg.tol_rel * expected.abs());
                    row.status = pass_if(row.diff.abs() <= tolerance);
                }
                None => row.status = Status::Info,
            }
        }
        Ok(Outcome::Paired(report)) => {
            let report = if scale == 1.0 { Ok(report) } else { report.with_rhs_scaled(scale) };
            match report {
                Err(e) => row.message = Some(e.to_string()),
                Ok(report) => {
                    row.lhs = report.lhs_mean();
                    row.lhs_se = report.lhs.std_error();
                    row.rhs = report.rhs_mean();
                    row.rhs_se = report.rhs.std_error();
                    row.diff = report.diff_mean();
                    row.diff_se = report.diff_se();
                    row.z = report.z;
                    let identity = match cfg.tol_abs {
                        Some(abs) => report.passes(cfg.z_threshold) || row.diff.abs() <= cfg.tol_se * row.diff_se + abs,
                        None => report.passes(cfg.z_threshold),
                    };
                    let lhs_ok = cfg.expected.is_none_or(|e| (row.lhs - e).abs() <= cfg.tol_se * row.lhs_se);
                    row.status = pass_if(identity && lhs_ok);
                }
            }
        }
    }
    row
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn execute(cfg: &ExperimentConfig, cache: &mut DerivativeCache) -> flowibp::Result<Outcome> {
    let system = &cfg.system;
    let m = &cfg.manifold;
    let x = m.point(cfg.x)?;
    let grid = cfg.grid();
    let setup = McSetup::new(cfg.n_paths, grid.clone(), cfg.seed);
    let functional = cfg.functional.as_ref().map(|f| build_functional(cfg, f)).transpose()?;
    let f = || -> flowibp::Result<&CylFunctional<f64>> {
        functional.as_ref().ok_or_else(|| Error::InvalidArgument("missing functional".into()))
    };
    let h = || build_h(cfg, grid.times());
    let v0 = || cfg.v0.ok_or_else(|| Error::InvalidArgument("missing v0".into()));
    let estimate = |kind: GradientKind<f64>| -> flowibp::Result<Outcome> {
        let g = estimators::gradient(system, &x, &v0()?, f()?.function(), cfg.horizon, &kind, &setup)?;
        Ok(Outcome::Estimate { value: g.value, se: g.std_error })
    };
    let kind = |spec: EstimatorSpec| -> flowibp::Result<GradientKind<f64>> {
        Ok(match spec {
            EstimatorSpec::Bismut => GradientKind::Bismut,
            EstimatorSpec::Thalmaier => GradientKind::Thalmaier {
                r: cfg.r.ok_or_else(|| Error::InvalidArgument("missing r".into()))?,
                width: cfg.width.ok_or_else(|| Error::InvalidArgument("missing width".into()))?,
            },
            EstimatorSpec::Psi => {
                GradientKind::Psi(build_psi(cfg.psi.ok_or_else(|| Error::InvalidArgument("missing psi".into()))?))
            }
            EstimatorSpec::CrnFd => GradientKind::CrnFd { eps: cfg.eps },
        })
    };
    let paired = |r: flowibp::Result<IbpReport<f64>>| r.map(Outcome::Paired);

    match cfg.experiment {
        Experiment::BismutGradient
        | Experiment::ThalmaierGradient
        | Experiment::PsiWeightedGradient
        | Experiment::CrnFdGradient => estimate(kind(cfg.experiment.fixed_estimator().unwrap())?),
        Experiment::GradientConsistency => {
            let b = cfg.compare.ok_or_else(|| Error::InvalidArgument("missing compare".into()))?;
            paired(estimators::gradient_consistency(
                system,
                &x,
                &v0()?,
                f()?.function(),
                cfg.horizon,
                &kind(cfg.estimator)?,
                &kind(b)?,
                &setup,
            ))
        }
        Experiment::Lemma21IntegratedCheck => {
            let t = cfg.t.ok_or_else(|| Error::InvalidArgument("missing t".into()))?;
            paired(estimators::lemma21_integrated_check(system, &x, f()?.function(), &h()?, t, cfg.horizon, &setup))
        }
        Experiment::FunctionIbpCheck => {
            paired(estimators::function_ibp_check(system, &x, f()?.function(), &h()?, cfg.horizon, &setup))
        }
        Experiment::PathspaceIbp => paired(estimators::pathspace_ibp(system, &x, f()?, &h()?, cfg.horizon, &setup)),
        Experiment::DampedIbp => paired(estimators::damped_ibp(system, &x, f()?, &h()?, cfg.horizon, &setup)),
        Experiment::GirsanovInvariance => {
            paired(estimators::girsanov_invariance(system, &x, f()?, &h()?, cfg.tau, &setup))
        }
        Experiment::GirsanovMartingale => paired(estimators::girsanov_martingale(system, &x, &h()?, cfg.tau, &setup)),
        Experiment::GirsanovDerivative => {
            let key = DerivativeCache::key(cfg);
            let report = match cache.0.get(&key) {
                Some(report) => *report,
                None => {
                    let report = estimators::girsanov_derivative(system, &x, f()?, &h()?, cfg.eps, &setup)?;
                    cache.0.insert(key, report);
                    report
                }
            };
            Ok(Outcome::Paired(match cfg.mode {
                DerivativeMode::Direct => report.direct,
                DerivativeMode::Fd => report.fd,
                DerivativeMode::FdVsDirect => report.fd_vs_direct,
            }))
        }
        Experiment::FreeIbp | Experiment::FreeDampedIbp => {
            let field = build_field(cfg);
            paired(if cfg.experiment == Experiment::FreeIbp {
                estimators::free_ibp(system, f()?, &field, cfg.horizon, cfg.n_base_points, &setup)
            } else {
                estimators::free_damped_ibp(system, f()?, &field, cfg.horizon, cfg.n_base_points, &setup)
            })
        }
    }
}

fn build_functional(cfg: &ExperimentConfig, spec: &FunctionalSpec) -> flowibp::Result<CylFunctional<f64>> {
    let (times, f): (Vec<f64>, Arc<dyn CylinderFn<f64>>) = match *spec {
        FunctionalSpec::Coord { axis, t } => (vec![t], Arc::new(Coord { axis })),
        FunctionalSpec::PairDot { t1, t2 } => (vec![t1, t2], Arc::new(PairDot)),
        FunctionalSpec::Const { c, t } => (vec![t], Arc::new(Constant(c))),
        FunctionalSpec::Bump { t } => (vec![t], Arc::new(Bump { center: cfg.x, width: 1.0 })),
    };
    CylFunctional::new(times, f)
}

fn build_h(cfg: &ExperimentConfig, grid_times: &[f64]) -> flowibp::Result<CmProcess> {
    let dim = cfg.manifold.ambient_dim();
    let u = || cfg.u.ok_or_else(|| Error::InvalidArgument("this h-process needs u".into()));
    match cfg.h {
        None | Some(HSpec::Zero) => Ok(CmProcess::zero(dim)),
        Some(HSpec::Linear) => Ok(CmProcess::linear(u()?, cfg.horizon)),
        Some(HSpec::Quadratic) => CmProcess::sampled(u()?, grid_times, |s| s * s),
        Some(HSpec::Occupation) => Ok(CmProcess::occupation(cfg.hemisphere, u()?)),
    }
}

fn build_field(cfg: &ExperimentConfig) -> FieldProcess<f64> {
    // The coordinate of the largest axis component selects the gradient field.
    let index = (0..cfg.axis.dim()).max_by(|&a, &b| cfg.axis[a].abs().total_cmp(&cfg.axis[b].abs())).unwrap_or(0);
    match cfg.hfield {
        None | Some(FieldSpec::Zero) => FieldProcess::Zero,
        Some(FieldSpec::Killing) => FieldProcess::Killing { axis: cfg.axis },
        Some(FieldSpec::Radial) => FieldProcess::Radial { axis: index },
        Some(FieldSpec::GradZ) => FieldProcess::Gradient { axis: index },
    }
}

fn build_psi(spec: PsiSpec) -> PsiFn<f64> {
    match spec {
        PsiSpec::One => Arc::new(|_| 1.0),
        PsiSpec::Linear => Arc::new(|s| s),
        PsiSpec::Indicator(a, b) => Arc::new(move |s| if (a..b).contains(&s) { 1.0 } else { 0.0 }),
    }
}
