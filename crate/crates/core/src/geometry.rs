//! Catalog manifolds in their ambient embedding.
//!
//! Points and tangent vectors are ambient coordinate vectors. The sphere and
//! circle carry the induced metric, so the Levi-Civita connection is the
//! tangential projection of the ambient derivative and the Ricci operator has
//! a closed form.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Vector, MAX_DIM};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldKind {
    /// `R^d` with the flat metric.
    Euclidean(usize),
    /// Unit circle in `R^2`.
    Circle,
    /// Unit sphere in `R^3`.
    Sphere2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldSpec<T> {
    pub kind: ManifoldKind,
    pub constraint_tolerance: T,
}

/// A point known to satisfy the manifold constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOnM<T>(Vector<T>);

impl<T: Real> PointOnM<T> {
    /// Wraps coordinates already produced by a projecting routine.
    pub(crate) fn new_unchecked(coords: Vector<T>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &Vector<T> {
        &self.0
    }

    pub fn into_inner(self) -> Vector<T> {
        self.0
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVec<T> {
    pub base: Vector<T>,
    pub coords: Vector<T>,
}

/// How [`ManifoldSpec::divergence`] evaluates the divergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceMode {
    /// Use the field's registered closed form.
    Analytic,
    /// Central differences of the field along an orthonormal tangent frame.
    Numeric,
}

/// Central-difference step for numeric divergence.
pub const DIVERGENCE_STEP: f64 = 1e-5;

/// Chord length above which a single transport step is rejected.
pub const TRANSPORT_STEP_LIMIT: f64 = 0.5;

impl<T: Real> ManifoldSpec<T> {
    pub fn new(kind: ManifoldKind) -> Self {
        if let ManifoldKind::Euclidean(d) = kind {
            assert!((1..=MAX_DIM).contains(&d), "Euclidean dimension must be in 1..={MAX_DIM}");
        }
        Self { kind, constraint_tolerance: T::lit(1e-9) }
    }

    pub fn euclidean(d: usize) -> Self {
        Self::new(ManifoldKind::Euclidean(d))
    }

    pub fn circle() -> Self {
        Self::new(ManifoldKind::Circle)
    }

    pub fn sphere2() -> Self {
        Self::new(ManifoldKind::Sphere2)
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean(d) => d,
            ManifoldKind::Circle => 2,
            ManifoldKind::Sphere2 => 3,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean(d) => d,
            ManifoldKind::Circle => 1,
            ManifoldKind::Sphere2 => 2,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.kind, ManifoldKind::Euclidean(_))
    }

    fn check_dim(&self, v: &Vector<T>) -> Result<()> {
        if v.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: v.dim() });
        }
        Ok(())
    }

    /// Wraps `coords` as a point after checking the constraint.
    pub fn point(&self, coords: Vector<T>) -> Result<PointOnM<T>> {
        self.check_dim(&coords)?;
        let defect = self.constraint_defect(&coords);
        if defect > self.constraint_tolerance {
            return Err(Error::OffManifold(defect.to_f64_lossy()));
        }
        Ok(PointOnM(coords))
    }

    /// `| |x| - 1 |` on the sphere and circle, zero in Euclidean space.
    pub fn constraint_defect(&self, x: &Vector<T>) -> T {
        if self.is_compact() {
            (x.norm() - T::one()).abs()
        } else {
            T::zero()
        }
    }

    /// Radial normalization onto the sphere/circle; identity in Euclidean space.
    pub fn project_to_manifold(&self, p: &Vector<T>) -> Result<PointOnM<T>> {
        self.check_dim(p)?;
        self.project_raw(p).map(PointOnM)
    }

    #[inline]
    pub(crate) fn project_raw(&self, p: &Vector<T>) -> Result<Vector<T>> {
        self.project_scaled(p).map(|(x, _)| x)
    }

    /// Projection together with `1/|p|`, the factor by which its derivative
    /// shrinks tangent vectors (1 in Euclidean space).
    #[inline]
    pub(crate) fn project_scaled(&self, p: &Vector<T>) -> Result<(Vector<T>, T)> {
        if !self.is_compact() {
            return Ok((*p, T::one()));
        }
        let n = p.norm();
        if !(n >= T::tiny(1e-300)) {
            return Err(Error::ZeroVector);
        }
        let inv = n.recip();
        Ok((p.scale(inv), inv))
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    pub fn tangent_project(&self, x: &PointOnM<T>, w: &Vector<T>) -> TangentVec<T> {
        TangentVec { base: x.0, coords: self.project_tangent_raw(&x.0, w) }
    }

    #[inline]
    pub(crate) fn project_tangent_raw(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        if self.is_compact() {
            w.axpy(-w.dot(x), x)
        } else {
            *w
        }
    }

    /// `Ric^#(v)` of the Levi-Civita connection.
    pub fn ricci_sharp(&self, v: &TangentVec<T>) -> TangentVec<T> {
        TangentVec { base: v.base, coords: self.ricci_raw(&v.coords) }
    }

    #[inline]
    pub(crate) fn ricci_raw(&self, v: &Vector<T>) -> Vector<T> {
        match self.kind {
            // Ric = (n - 1) g on the unit n-sphere.
            ManifoldKind::Sphere2 => *v,
            ManifoldKind::Circle | ManifoldKind::Euclidean(_) => Vector::zeros(v.dim()),
        }
    }

    /// Orthonormal frame of `T_x M`; the first `intrinsic_dim` entries are valid.
    pub fn tangent_frame(&self, x: &Vector<T>) -> [Vector<T>; MAX_DIM] {
        let d = self.ambient_dim();
        let mut frame = [Vector::zeros(d); MAX_DIM];
        match self.kind {
            ManifoldKind::Euclidean(_) => {
                for (i, e) in frame.iter_mut().take(d).enumerate() {
                    *e = Vector::basis(d, i);
                }
            }
            ManifoldKind::Circle => {
                frame[0] = Vector::from_slice(&[-x[1], x[0]]).scale(x.norm().recip());
            }
            ManifoldKind::Sphere2 => {
                // Gram-Schmidt against the ambient axis least aligned with x.
                let axis = (0..3).min_by(|&i, &j| x[i].abs().partial_cmp(&x[j].abs()).unwrap()).unwrap();
                let xn = x.scale(x.norm().recip());
                let a = Vector::basis(3, axis);
                let e1 = a.axpy(-a.dot(&xn), &xn);
                let e1 = e1.scale(e1.norm().recip());
                frame[0] = e1;
                frame[1] = xn.cross(&e1);
            }
        }
        frame
    }

    /// Exponential map `exp_x(v)` for tangent `v`.
    pub fn exp_step(&self, x: &PointOnM<T>, v: &Vector<T>) -> Result<PointOnM<T>> {
        self.check_dim(v)?;
        if !self.is_compact() {
            return Ok(PointOnM(x.0 + *v));
        }
        let v = self.project_tangent_raw(&x.0, v);
        let len = v.norm();
        if len == T::zero() {
            return Ok(*x);
        }
        let p = x.0.scale(len.cos()).axpy(len.sin() / len, &v);
        self.project_to_manifold(&p)
    }

    /// One grid step of discrete parallel transport from `x_from` to `x_to`.
    ///
    /// The tangent projection onto `T_{x_to} M` is followed by restoring the
    /// length lost along the chord direction; the result is the orthogonal
    /// factor of the projection, which on the sphere is the minimal rotation
    /// carrying `x_from` to `x_to`. Norms are preserved exactly.
    pub fn transport_step(&self, x_from: &PointOnM<T>, x_to: &PointOnM<T>, v: &TangentVec<T>) -> Result<TangentVec<T>> {
        let chord = (x_to.0 - x_from.0).norm();
        if !(chord < T::lit(TRANSPORT_STEP_LIMIT)) {
            return Err(Error::StepTooLarge(chord.to_f64_lossy()));
        }
        Ok(TangentVec { base: x_to.0, coords: self.transport_raw(&x_from.0, &x_to.0, &v.coords) })
    }

    #[inline]
    pub(crate) fn transport_raw(&self, from: &Vector<T>, to: &Vector<T>, v: &Vector<T>) -> Vector<T> {
        self.transporter(from, to).apply(v)
    }

    /// The rotation carrying `T_from M` to `T_to M`, reusable across vectors.
    #[inline]
    pub(crate) fn transporter(&self, from: &Vector<T>, to: &Vector<T>) -> Transporter<T> {
        match self.kind {
            ManifoldKind::Euclidean(_) => Transporter::Identity,
            ManifoldKind::Circle => {
                let c = from.dot(to);
                let s = from[0] * to[1] - from[1] * to[0];
                let r = (c * c + s * s).sqrt();
                Transporter::Planar { c: c / r, s: s / r }
            }
            ManifoldKind::Sphere2 => {
                let c = from.dot(to);
                Transporter::Rodrigues { c, k: from.cross(to), inv: (T::one() + c).recip(), to: *to }
            }
        }
    }

    /// Riemannian divergence of `field` at `x`.
    ///
    /// Falls back to the numeric route when `Analytic` is requested for a
    /// field without a registered closed form.
    pub fn divergence<F: VectorField<T> + ?Sized>(&self, field: &F, x: &PointOnM<T>, mode: DivergenceMode) -> T {
        if mode == DivergenceMode::Analytic {
            if let Some(d) = field.analytic_divergence(self, &x.0) {
                return d;
            }
        }
        let eps = T::lit(DIVERGENCE_STEP);
        let frame = self.tangent_frame(&x.0);
        let mut div = T::zero();
        for e in frame.iter().take(self.intrinsic_dim()) {
            let plus = self.project_raw(&x.0.axpy(eps, e)).expect("nonzero");
            let minus = self.project_raw(&x.0.axpy(-eps, e)).expect("nonzero");
            let hp = self.project_tangent_raw(&plus, &field.eval(self, &plus));
            let hm = self.project_tangent_raw(&minus, &field.eval(self, &minus));
            div = div + e.dot(&(hp - hm)) / (eps + eps);
        }
        div
    }

    pub fn riemannian_volume(&self) -> Result<T> {
        match self.kind {
            ManifoldKind::Euclidean(_) => Err(Error::UnboundedVolume),
            ManifoldKind::Circle => Ok(T::lit(2.0) * T::PI()),
            ManifoldKind::Sphere2 => Ok(T::lit(4.0) * T::PI()),
        }
    }

    /// Sample from the normalized Riemannian measure.
    pub fn uniform_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PointOnM<T>> {
        if !self.is_compact() {
            return Err(Error::UnboundedVolume);
        }
        // Normalized isotropic Gaussians are uniform on spheres of any dimension.
        loop {
            let mut g = Vector::zeros(self.ambient_dim());
            for c in g.as_mut_slice() {
                *c = T::lit(rng.sample::<f64, _>(StandardNormal));
            }
            if let Ok(p) = self.project_to_manifold(&g) {
                return Ok(p);
            }
        }
    }
}

impl<T: Real> fmt::Display for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ManifoldKind::Euclidean(d) => write!(f, "euclidean:{d}"),
            ManifoldKind::Circle => write!(f, "circle"),
            ManifoldKind::Sphere2 => write!(f, "sphere2"),
        }
    }
}

impl<T: Real> FromStr for ManifoldSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "circle" => Ok(Self::circle()),
            "sphere2" => Ok(Self::sphere2()),
            other => {
                let d = other
                    .strip_prefix("euclidean:")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown manifold `{other}`")))?;
                if !(1..=MAX_DIM).contains(&d) {
                    return Err(Error::InvalidArgument(format!("Euclidean dimension {d} outside 1..={MAX_DIM}")));
                }
                Ok(Self::euclidean(d))
            }
        }
    }
}

pub(crate) enum Transporter<T> {
    Identity,
    Planar {
        c: T,
        s: T,
    },
    /// Rotation about `k = from x to` (written without `1/|k|`), followed by
    /// projection onto `T_to M` and restoring the length.
    Rodrigues {
        c: T,
        k: Vector<T>,
        inv: T,
        to: Vector<T>,
    },
}

impl<T: Real> Transporter<T> {
    #[inline]
    pub(crate) fn apply(&self, v: &Vector<T>) -> Vector<T> {
        match self {
            Transporter::Identity => *v,
            Transporter::Planar { c, s } => Vector::from_slice(&[*c * v[0] - *s * v[1], *s * v[0] + *c * v[1]]),
            Transporter::Rodrigues { c, k, inv, to } => {
                let rotated = v.scale(*c) + k.cross(v) + k.scale(k.dot(v) * *inv);
                let projected = rotated.axpy(-rotated.dot(to), to);
                let plen = projected.norm();
                if plen > T::zero() {
                    projected.scale(v.norm() / plen)
                } else {
                    projected
                }
            }
        }
    }
}

/// A smooth vector field on a catalog manifold.
pub trait VectorField<T: Real>: Send + Sync {
    /// Field value at `x`; expected tangent at `x`.
    fn eval(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> Vector<T>;

    /// Registered closed-form divergence, when one exists.
    fn analytic_divergence(&self, _m: &ManifoldSpec<T>, _x: &Vector<T>) -> Option<T> {
        None
    }
}

/// `h(x) = x` (Euclidean only; divergence `d`).
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityField;

impl<T: Real> VectorField<T> for IdentityField {
    fn eval(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> Vector<T> {
        m.project_tangent_raw(x, x)
    }

    fn analytic_divergence(&self, m: &ManifoldSpec<T>, _x: &Vector<T>) -> Option<T> {
        match m.kind {
            ManifoldKind::Euclidean(d) => Some(T::from_count(d)),
            // Tangential part of the position vector vanishes on spheres.
            _ => Some(T::zero()),
        }
    }
}

/// Infinitesimal rotation: `a x x` on the sphere, `(-y, x)` on the circle and
/// in the first two Euclidean coordinates. Divergence free.
#[derive(Clone, Copy, Debug)]
pub struct KillingField<T> {
    pub axis: Vector<T>,
}

impl<T: Real> VectorField<T> for KillingField<T> {
    fn eval(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> Vector<T> {
        match m.kind {
            ManifoldKind::Sphere2 => self.axis.cross(x),
            ManifoldKind::Circle => Vector::from_slice(&[-x[1], x[0]]),
            ManifoldKind::Euclidean(d) => {
                let mut v = Vector::zeros(d);
                if d >= 2 {
                    v[0] = -x[1];
                    v[1] = x[0];
                }
                v
            }
        }
    }

    fn analytic_divergence(&self, _m: &ManifoldSpec<T>, _x: &Vector<T>) -> Option<T> {
        Some(T::zero())
    }
}

/// Riemannian gradient of the ambient coordinate `x_axis`.
#[derive(Clone, Copy, Debug)]
pub struct CoordGradient {
    pub axis: usize,
}

impl<T: Real> VectorField<T> for CoordGradient {
    fn eval(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> Vector<T> {
        m.project_tangent_raw(x, &Vector::basis(x.dim(), self.axis))
    }

    fn analytic_divergence(&self, m: &ManifoldSpec<T>, x: &Vector<T>) -> Option<T> {
        // Coordinate functions are eigenfunctions of the sphere Laplacian: Δ x_i = -n x_i.
        match m.kind {
            ManifoldKind::Euclidean(_) => Some(T::zero()),
            _ => Some(-T::from_count(m.intrinsic_dim()) * x[self.axis]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector<f64> {
        Vector::from_slice(xs)
    }

    #[test]
    fn projection_examples() {
        let e2 = ManifoldSpec::<f64>::euclidean(2);
        assert_eq!(e2.project_to_manifold(&v(&[3.0, 4.0])).unwrap().coords(), &v(&[3.0, 4.0]));
        let s = ManifoldSpec::<f64>::sphere2();
        assert_eq!(s.project_to_manifold(&v(&[0.0, 0.0, 2.0])).unwrap().coords(), &v(&[0.0, 0.0, 1.0]));
        let p = s.project_to_manifold(&v(&[1.0, 1.0, 1.0])).unwrap();
        for c in p.coords().as_slice() {
            assert_abs_diff_eq!(*c, 0.5773502692, epsilon = 1e-10);
        }
        assert_eq!(s.project_to_manifold(&v(&[0.0, 0.0, 0.0])), Err(Error::ZeroVector));
        assert_eq!(ManifoldSpec::<f64>::circle().project_to_manifold(&v(&[1e-301, 0.0])), Err(Error::ZeroVector));
    }

    #[test]
    fn tangent_projection_examples() {
        let s = ManifoldSpec::<f64>::sphere2();
        let north = s.point(v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.tangent_project(&north, &v(&[1.0, 2.0, 3.0])).coords, v(&[1.0, 2.0, 0.0]));
        let east = s.point(v(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.tangent_project(&east, &v(&[5.0, 0.0, 0.0])).coords, v(&[0.0, 0.0, 0.0]));
        let e3 = ManifoldSpec::<f64>::euclidean(3);
        let o = e3.point(v(&[0.3, -1.0, 2.0])).unwrap();
        assert_eq!(e3.tangent_project(&o, &v(&[1.0, 2.0, 3.0])).coords, v(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn ricci_examples() {
        let s = ManifoldSpec::<f64>::sphere2();
        let tv = TangentVec { base: v(&[0.0, 0.0, 1.0]), coords: v(&[1.0, 2.0, 0.0]) };
        assert_eq!(s.ricci_sharp(&tv).coords, v(&[1.0, 2.0, 0.0]));
        let c = ManifoldSpec::<f64>::circle();
        let tv = TangentVec { base: v(&[1.0, 0.0]), coords: v(&[0.0, 3.0]) };
        assert_eq!(c.ricci_sharp(&tv).coords, v(&[0.0, 0.0]));
        let e = ManifoldSpec::<f64>::euclidean(2);
        let tv = TangentVec { base: v(&[1.0, 0.0]), coords: v(&[7.0, 3.0]) };
        assert_eq!(e.ricci_sharp(&tv).coords, v(&[0.0, 0.0]));
    }

    #[test]
    fn transport_trivial_cases() {
        let s = ManifoldSpec::<f64>::sphere2();
        let x = s.point(v(&[0.0, 0.6, 0.8])).unwrap();
        let t = s.tangent_project(&x, &v(&[1.0, 1.0, 1.0]));
        let same = s.transport_step(&x, &x, &t).unwrap();
        assert_abs_diff_eq!((same.coords - t.coords).norm(), 0.0, epsilon = 1e-15);

        let e = ManifoldSpec::<f64>::euclidean(3);
        let a = e.point(v(&[0.0, 0.0, 0.0])).unwrap();
        let b = e.point(v(&[0.1, 0.2, 0.0])).unwrap();
        let w = TangentVec { base: v(&[0.0, 0.0, 0.0]), coords: v(&[1.0, 2.0, 3.0]) };
        assert_eq!(e.transport_step(&a, &b, &w).unwrap().coords, w.coords);
    }

    #[test]
    fn transport_rejects_long_steps() {
        let s = ManifoldSpec::<f64>::sphere2();
        let a = s.point(v(&[1.0, 0.0, 0.0])).unwrap();
        let b = s.point(v(&[0.0, 1.0, 0.0])).unwrap();
        let t = TangentVec { base: v(&[1.0, 0.0, 0.0]), coords: v(&[0.0, 0.0, 1.0]) };
        assert!(matches!(s.transport_step(&a, &b, &t), Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn transport_along_short_step_is_tangent_and_isometric() {
        let s = ManifoldSpec::<f64>::sphere2();
        let a = s.point(v(&[1.0, 0.0, 0.0])).unwrap();
        let b = s.project_to_manifold(&v(&[1.0, 0.1, -0.05])).unwrap();
        let t = s.tangent_project(&a, &v(&[0.3, 0.7, -1.1]));
        let out = s.transport_step(&a, &b, &t).unwrap();
        assert!(out.coords.dot(b.coords()).abs() < 1e-14);
        assert_abs_diff_eq!(out.coords.norm(), t.coords.norm(), epsilon = 1e-14);
    }

    #[test]
    fn divergence_examples() {
        let e = ManifoldSpec::<f64>::euclidean(3);
        let x = e.point(v(&[0.4, -0.2, 1.5])).unwrap();
        assert_eq!(e.divergence(&IdentityField, &x, DivergenceMode::Analytic), 3.0);
        assert_abs_diff_eq!(e.divergence(&IdentityField, &x, DivergenceMode::Numeric), 3.0, epsilon = 1e-8);

        let s = ManifoldSpec::<f64>::sphere2();
        let killing = KillingField { axis: v(&[0.2, -1.0, 0.5]) };
        let y = s.project_to_manifold(&v(&[0.3, 0.4, -0.2])).unwrap();
        assert_abs_diff_eq!(s.divergence(&killing, &y, DivergenceMode::Numeric), 0.0, epsilon = 1e-8);

        let north = s.point(v(&[0.0, 0.0, 1.0])).unwrap();
        let grad_z = CoordGradient { axis: 2 };
        assert_eq!(s.divergence(&grad_z, &north, DivergenceMode::Analytic), -2.0);
        assert_abs_diff_eq!(s.divergence(&grad_z, &north, DivergenceMode::Numeric), -2.0, epsilon = 1e-6);
    }

    #[test]
    fn volumes() {
        assert_abs_diff_eq!(ManifoldSpec::<f64>::sphere2().riemannian_volume().unwrap(), 12.56637, epsilon = 1e-5);
        assert_abs_diff_eq!(
            ManifoldSpec::<f64>::circle().riemannian_volume().unwrap(),
            2.0 * std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_eq!(ManifoldSpec::<f64>::euclidean(2).riemannian_volume(), Err(Error::UnboundedVolume));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ManifoldSpec::<f64>::euclidean(2).uniform_sample(&mut rng), Err(Error::UnboundedVolume));
    }

    #[test]
    fn exp_step_moves_along_great_circle() {
        let s = ManifoldSpec::<f64>::sphere2();
        let x = s.point(v(&[1.0, 0.0, 0.0])).unwrap();
        let y = s.exp_step(&x, &v(&[0.0, 0.0, std::f64::consts::FRAC_PI_2])).unwrap();
        assert_abs_diff_eq!((*y.coords() - v(&[0.0, 0.0, 1.0])).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn frames_are_orthonormal_and_tangent() {
        let s = ManifoldSpec::<f64>::sphere2();
        for p in [v(&[0.0, 0.0, 1.0]), v(&[0.6, 0.0, 0.8]), v(&[-0.48, 0.6, 0.64])] {
            let f = s.tangent_frame(&p);
            assert_abs_diff_eq!(f[0].dot(&f[1]), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(f[0].norm(), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(f[1].norm(), 1.0, epsilon = 1e-15);
            assert!(f[0].dot(&p).abs() < 1e-15 && f[1].dot(&p).abs() < 1e-15);
            // Oriented: e1 x e2 = outward normal.
            assert_abs_diff_eq!((f[0].cross(&f[1]) - p).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn parses_config_strings() {
        assert_eq!("euclidean:2".parse::<ManifoldSpec<f64>>().unwrap().kind, ManifoldKind::Euclidean(2));
        assert_eq!("sphere2".parse::<ManifoldSpec<f64>>().unwrap().kind, ManifoldKind::Sphere2);
        assert_eq!("circle".parse::<ManifoldSpec<f64>>().unwrap().to_string(), "circle");
        assert!("euclidean:9".parse::<ManifoldSpec<f64>>().is_err());
        assert!("torus".parse::<ManifoldSpec<f64>>().is_err());
    }
}
