//! SDE systems `dx = X(x) ∘ dB + A(x) dt` on the catalog manifolds.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ManifoldSpec};
use crate::linalg::Vector;
use crate::scalar::Real;

/// Diffusion coefficient `X(x): R^n -> T_x M`; the noise dimension always
/// equals the ambient dimension in this catalog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diffusion<T> {
    /// `X(x) e = e` (Euclidean only).
    Identity,
    /// Gradient Brownian system: `X(x) e` is the orthogonal projection of `e`
    /// onto `T_x M`.
    TangentProjection,
    /// `sigma` times the tangent projection. Not a gradient Brownian system
    /// unless `sigma == 1`.
    ScaledProjection(T),
}

/// Ambient vector fields used as the drift `A` and generator drift `Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftField<T> {
    Zero,
    /// `c x` (Euclidean only).
    Linear(T),
    /// Infinitesimal rotation about `axis` (sphere), or the rotation field on
    /// the circle and in the first two Euclidean coordinates.
    Killing(Vector<T>),
    /// `scale * grad x_axis`.
    CoordGradient {
        axis: usize,
        scale: T,
    },
}

impl<T: Real> DriftField<T> {
    #[inline]
    pub fn eval(&self, x: &Vector<T>) -> Vector<T> {
        match self {
            DriftField::Zero => Vector::zeros(x.dim()),
            DriftField::Linear(c) => x.scale(*c),
            DriftField::Killing(axis) => rotate(axis, x),
            DriftField::CoordGradient { axis, scale } => {
                let mut v = x.scale(-x[*axis]);
                v[*axis] = v[*axis] + T::one();
                v.scale(*scale)
            }
        }
    }

    /// Ambient directional derivative `d/de eval(x + e u)`.
    #[inline]
    pub fn derivative(&self, x: &Vector<T>, u: &Vector<T>) -> Vector<T> {
        match self {
            DriftField::Zero => Vector::zeros(x.dim()),
            DriftField::Linear(c) => u.scale(*c),
            DriftField::Killing(axis) => rotate(axis, u),
            DriftField::CoordGradient { axis, scale } => (x.scale(-u[*axis]) - u.scale(x[*axis])).scale(*scale),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftField::Zero)
    }
}

#[inline]
fn rotate<T: Real>(axis: &Vector<T>, x: &Vector<T>) -> Vector<T> {
    if x.dim() == 3 {
        axis.cross(x)
    } else {
        let mut v = Vector::zeros(x.dim());
        if x.dim() >= 2 {
            v[0] = -x[1];
            v[1] = x[0];
        }
        v
    }
}

/// A catalog SDE together with its registered generator drift `Z`, so that the
/// generator is `½Δ + Z` for gradient systems.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeSystem<T> {
    pub name: String,
    pub manifold: ManifoldSpec<T>,
    pub diffusion: Diffusion<T>,
    pub drift: DriftField<T>,
    pub generator_drift: DriftField<T>,
}

impl<T: Real> SdeSystem<T> {
    pub fn euclidean_bm(d: usize) -> Self {
        Self {
            name: format!("euclidean-bm:{d}"),
            manifold: ManifoldSpec::euclidean(d),
            diffusion: Diffusion::Identity,
            drift: DriftField::Zero,
            generator_drift: DriftField::Zero,
        }
    }

    /// `dx = dB - x dt`.
    pub fn euclidean_ou(d: usize) -> Self {
        Self {
            name: format!("euclidean-ou:{d}"),
            manifold: ManifoldSpec::euclidean(d),
            diffusion: Diffusion::Identity,
            drift: DriftField::Linear(-T::one()),
            generator_drift: DriftField::Linear(-T::one()),
        }
    }

    pub fn circle_bm() -> Self {
        Self {
            name: "circle-bm".into(),
            manifold: ManifoldSpec::circle(),
            diffusion: Diffusion::TangentProjection,
            drift: DriftField::Zero,
            generator_drift: DriftField::Zero,
        }
    }

    pub fn sphere2_bm() -> Self {
        Self {
            name: "sphere2-bm".into(),
            manifold: ManifoldSpec::sphere2(),
            diffusion: Diffusion::TangentProjection,
            drift: DriftField::Zero,
            generator_drift: DriftField::Zero,
        }
    }

    /// Gradient Brownian system on the sphere with drift `A = Z`.
    ///
    /// `rotation`: `A(x) = e_z x x`; `polar`: `A(x) = grad z`.
    pub fn sphere2_drift(name: &str) -> Result<Self> {
        let field = match name {
            "rotation" => DriftField::Killing(Vector::basis(3, 2)),
            "polar" => DriftField::CoordGradient { axis: 2, scale: T::one() },
            other => return Err(Error::InvalidArgument(format!("unknown sphere drift `{other}`"))),
        };
        Ok(Self {
            name: format!("sphere2-drift:{name}"),
            manifold: ManifoldSpec::sphere2(),
            diffusion: Diffusion::TangentProjection,
            drift: field,
            generator_drift: field,
        })
    }

    /// Sphere diffusion with `X = sigma * projection`; generator `sigma²/2 Δ`.
    pub fn sphere2_scaled(sigma: T) -> Self {
        Self {
            name: format!("sphere2-scaled:{sigma}"),
            manifold: ManifoldSpec::sphere2(),
            diffusion: Diffusion::ScaledProjection(sigma),
            drift: DriftField::Zero,
            generator_drift: DriftField::Zero,
        }
    }

    #[inline]
    pub fn noise_dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    /// True when `X X^* = id` on every tangent space with `X` the tangent
    /// projection, so the Le Jan-Watanabe connection is Levi-Civita.
    pub fn is_gradient_system(&self) -> bool {
        match self.diffusion {
            Diffusion::Identity | Diffusion::TangentProjection => true,
            Diffusion::ScaledProjection(s) => s == T::one(),
        }
    }

    /// `X(x) e`
    #[inline]
    pub fn diffusion(&self, x: &Vector<T>, e: &Vector<T>) -> Vector<T> {
        match self.diffusion {
            Diffusion::Identity => *e,
            Diffusion::TangentProjection => e.axpy(-e.dot(x), x),
            Diffusion::ScaledProjection(s) => e.axpy(-e.dot(x), x).scale(s),
        }
    }

    /// `d/de [X(x + e u) noise]` at `e = 0`, using the ambient extension of `X`.
    #[inline]
    pub fn diffusion_derivative(&self, x: &Vector<T>, u: &Vector<T>, noise: &Vector<T>) -> Vector<T> {
        match self.diffusion {
            Diffusion::Identity => Vector::zeros(x.dim()),
            Diffusion::TangentProjection => x.scale(-noise.dot(u)).axpy(-noise.dot(x), u),
            Diffusion::ScaledProjection(s) => x.scale(-noise.dot(u)).axpy(-noise.dot(x), u).scale(s),
        }
    }

    /// `X(x)^* w` for `w` in `T_x M`.
    #[inline]
    pub fn diffusion_adjoint(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        // Every catalog X(x) is a symmetric ambient matrix.
        self.diffusion(x, w)
    }

    #[inline]
    pub fn drift_at(&self, x: &Vector<T>) -> Vector<T> {
        self.drift.eval(x)
    }

    #[inline]
    pub fn drift_derivative(&self, x: &Vector<T>, u: &Vector<T>) -> Vector<T> {
        self.drift.derivative(x, u)
    }

    pub fn generator_drift_at(&self, x: &Vector<T>) -> Vector<T> {
        self.manifold.project_tangent_raw(x, &self.generator_drift.eval(x))
    }

    /// Levi-Civita covariant derivative `∇_v Z` (tangential part of the ambient derivative).
    #[inline]
    pub fn generator_drift_covariant(&self, x: &Vector<T>, v: &Vector<T>) -> Vector<T> {
        self.manifold.project_tangent_raw(x, &self.generator_drift.derivative(x, v))
    }

    /// Coefficient operator of the damped transport ODE, `-½ Ric^#(v) + ∇_v Z`.
    #[inline]
    pub fn damping_operator(&self, x: &Vector<T>, v: &Vector<T>) -> Vector<T> {
        self.generator_drift_covariant(x, v) - self.manifold.ricci_raw(v).scale(T::lit(0.5))
    }

    /// The damping operator when it is a multiple of the identity everywhere.
    pub fn damping_scalar(&self) -> Option<T> {
        let ricci = match self.manifold.kind {
            ManifoldKind::Sphere2 => T::one(),
            _ => T::zero(),
        };
        match self.generator_drift {
            DriftField::Zero => Some(-T::lit(0.5) * ricci),
            DriftField::Linear(c) => Some(c - T::lit(0.5) * ricci),
            _ => None,
        }
    }
}

impl<T: Real> fmt::Display for SdeSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl<T: Real> FromStr for SdeSystem<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let dim = |rest: &str| -> Result<usize> {
            let d: usize = rest.parse().map_err(|_| Error::InvalidArgument(format!("bad dimension in `{s}`")))?;
            if !(1..=crate::linalg::MAX_DIM).contains(&d) {
                return Err(Error::InvalidArgument(format!("dimension {d} out of range in `{s}`")));
            }
            Ok(d)
        };
        if let Some(rest) = s.strip_prefix("euclidean-bm:") {
            return Ok(Self::euclidean_bm(dim(rest)?));
        }
        if let Some(rest) = s.strip_prefix("euclidean-ou:") {
            return Ok(Self::euclidean_ou(dim(rest)?));
        }
        if let Some(rest) = s.strip_prefix("sphere2-drift:") {
            return Self::sphere2_drift(rest);
        }
        if let Some(rest) = s.strip_prefix("sphere2-scaled:") {
            let sigma: f64 = rest.parse().map_err(|_| Error::InvalidArgument(format!("bad sigma in `{s}`")))?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!("sigma must be positive in `{s}`")));
            }
            return Ok(Self::sphere2_scaled(T::lit(sigma)));
        }
        match s {
            "circle-bm" => Ok(Self::circle_bm()),
            "sphere2-bm" => Ok(Self::sphere2_bm()),
            other => Err(Error::InvalidArgument(format!("unknown system `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<SdeSystem<f64>> {
        vec![
            SdeSystem::euclidean_bm(2),
            SdeSystem::euclidean_ou(1),
            SdeSystem::circle_bm(),
            SdeSystem::sphere2_bm(),
            SdeSystem::sphere2_drift("rotation").unwrap(),
            SdeSystem::sphere2_drift("polar").unwrap(),
        ]
    }

    #[test]
    fn diffusion_columns_are_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sys in catalog() {
            let m = sys.manifold;
            for _ in 0..100 {
                let x = if m.is_compact() {
                    *m.uniform_sample(&mut rng).unwrap().coords()
                } else {
                    Vector::from_slice(&(0..m.ambient_dim()).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
                };
                for i in 0..sys.noise_dim() {
                    let col = sys.diffusion(&x, &Vector::basis(sys.noise_dim(), i));
                    assert!((m.project_tangent_raw(&x, &col) - col).norm() <= 1e-10, "{}", sys.name);
                    assert!((m.project_tangent_raw(&x, &sys.drift_at(&x)) - sys.drift_at(&x)).norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = Vector::from_slice(&[0.36, 0.48, 0.8]);
        let u = Vector::from_slice(&[0.3, -0.2, 0.1]);
        let e = Vector::from_slice(&[0.7, 0.1, -0.4]);
        let h = 1e-6;
        for sys in catalog().into_iter().filter(|s| s.noise_dim() == 3) {
            let fd = (sys.diffusion(&x.axpy(h, &u), &e) - sys.diffusion(&x.axpy(-h, &u), &e)).scale(0.5 / h);
            assert!((fd - sys.diffusion_derivative(&x, &u, &e)).norm() < 1e-8);
            let fd = (sys.drift_at(&x.axpy(h, &u)) - sys.drift_at(&x.axpy(-h, &u))).scale(0.5 / h);
            assert!((fd - sys.drift_derivative(&x, &u)).norm() < 1e-8);
        }
    }

    #[test]
    fn parses_catalog_names() {
        for name in ["euclidean-bm:3", "euclidean-ou:1", "circle-bm", "sphere2-bm", "sphere2-drift:polar"] {
            let s: SdeSystem<f64> = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
        assert!("sphere2-drift:wobble".parse::<SdeSystem<f64>>().is_err());
        assert!("euclidean-bm:0".parse::<SdeSystem<f64>>().is_err());
        assert!(!"sphere2-scaled:2".parse::<SdeSystem<f64>>().unwrap().is_gradient_system());
    }

    #[test]
    fn damping_scalars() {
        assert_eq!(SdeSystem::<f64>::sphere2_bm().damping_scalar(), Some(-0.5));
        assert_eq!(SdeSystem::<f64>::euclidean_ou(2).damping_scalar(), Some(-1.0));
        assert_eq!(SdeSystem::<f64>::euclidean_bm(1).damping_scalar(), Some(0.0));
        assert_eq!(SdeSystem::<f64>::sphere2_drift("polar").unwrap().damping_scalar(), None);
    }
}
