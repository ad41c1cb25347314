//! Monte Carlo verification of gradient formulas and integration-by-parts
//! identities for stochastic flows on a small catalog of manifolds.
//!
//! Numerical code is generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix it to `f64`.

// Negated comparisons such as `!(x > 0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod linalg;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vector = linalg::Vector<f64>;
pub type ManifoldSpec = geometry::ManifoldSpec<f64>;
pub type PointOnM = geometry::PointOnM<f64>;
pub type SdeSystem = flow::SdeSystem<f64>;
pub type TimeGrid = flow::TimeGrid<f64>;
pub type BrownianDraw = flow::BrownianDraw<f64>;
pub type FlowPath = flow::FlowPath<f64>;
pub type CmProcess = functionals::CmProcess<f64>;
pub type CylFunctional = functionals::CylFunctional<f64>;
pub type FieldProcess = functionals::FieldProcess<f64>;
pub type McAccumulator = stats::McAccumulator<f64>;
pub type IbpReport = estimators::IbpReport<f64>;
pub type GradientEstimate = estimators::GradientEstimate<f64>;
