//! Parametric desired paths.
//!
//! A [`ParametricPath`] is a base curve `f: R -> R^n` with analytic first and
//! second derivatives, optionally re-parameterized by `g(w) = beta * w` and
//! placed in the world by a planar rotation plus a translation. The
//! placement is applied after re-parameterization:
//!
//! ```text
//! h(w) = R(alpha) f(beta w) + offset
//! h'(w) = beta R(alpha) f'(beta w)
//! h''(w) = beta^2 R(alpha) f''(beta w)
//! ```

mod catalog;
pub(crate) mod implicit;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GvfError, Result};

pub use catalog::{catalog_make, ParamValue, Params, CATALOG_NAMES};
pub use implicit::{implicit_catalog, implicit_direct, implicit_from_parametric, SecondFn, SurfaceStack, Surfaces};

/// Value and derivatives of a path at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub point: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
}

/// A curve with analytic first and second derivatives.
pub trait Curve: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, w: f64) -> PathPoint;
}

/// Planar rotation of the first two coordinates followed by a translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePose {
    pub alpha: f64,
    pub offset: Vec<f64>,
}

impl AffinePose {
    pub fn new(alpha: f64, offset: Vec<f64>) -> Self {
        Self { alpha, offset }
    }

    pub fn identity(dim: usize) -> Self {
        Self { alpha: 0.0, offset: vec![0.0; dim] }
    }
}

/// Linear re-parameterization `g(w) = beta * w`, `beta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reparameterization {
    param_gain: f64,
}

impl Reparameterization {
    pub fn new(param_gain: f64) -> Result<Self> {
        if !(param_gain.is_finite() && param_gain > 0.0) {
            return Err(GvfError::Parameter(format!(
                "param_gain (beta) must be finite and > 0, got {param_gain}"
            )));
        }
        Ok(Self { param_gain })
    }

    pub fn identity() -> Self {
        Self { param_gain: 1.0 }
    }

    pub fn param_gain(&self) -> f64 {
        self.param_gain
    }
}

impl Default for Reparameterization {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Clone)]
pub struct ParametricPath {
    name: String,
    base: Arc<dyn Curve>,
    gain: f64,
    alpha: f64,
    offset: DVector<f64>,
}

impl fmt::Debug for ParametricPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricPath")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("gain", &self.gain)
            .field("alpha", &self.alpha)
            .field("offset", &self.offset.as_slice())
            .finish()
    }
}

impl ParametricPath {
    pub fn new(name: impl Into<String>, base: Arc<dyn Curve>) -> Self {
        let dim = base.dim();
        Self {
            name: name.into(),
            base,
            gain: 1.0,
            alpha: 0.0,
            offset: DVector::zeros(dim),
        }
    }

    /// Builds a path from closures for `f`, `f'` and `f''`.
    pub fn from_fns<F, F1, F2>(name: impl Into<String>, dim: usize, f: F, f1: F1, f2: F2) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        F1: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        F2: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::new(
            name,
            Arc::new(FnCurve {
                dim,
                f: Box::new(f),
                f1: Box::new(f1),
                f2: Box::new(f2),
            }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Total parameter gain applied on top of the base curve.
    pub fn param_gain(&self) -> f64 {
        self.gain
    }

    /// `f(w)`, `f'(w)`, `f''(w)`.
    pub fn eval(&self, w: f64) -> Result<PathPoint> {
        if !w.is_finite() {
            return Err(GvfError::Domain(format!("path parameter must be finite, got {w}")));
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: f64) -> PathPoint {
        let PathPoint { mut point, mut d1, mut d2 } = self.base.eval(self.gain * w);
        d1 *= self.gain;
        d2 *= self.gain * self.gain;
        if self.alpha != 0.0 {
            let (s, c) = self.alpha.sin_cos();
            for v in [&mut point, &mut d1, &mut d2] {
                let (a, b) = (v[0], v[1]);
                v[0] = c * a - s * b;
                v[1] = s * a + c * b;
            }
        }
        point += &self.offset;
        PathPoint { point, d1, d2 }
    }

    pub fn point(&self, w: f64) -> DVector<f64> {
        self.eval_unchecked(w).point
    }

    /// Rotates the first two coordinates by `pose.alpha` and translates by
    /// `pose.offset`. Derivatives are rotated only.
    pub fn apply_affine(&self, pose: &AffinePose) -> Result<Self> {
        let n = self.dim();
        if !(n == 2 || n == 3) {
            return Err(GvfError::Shape(format!("affine placement needs a 2D or 3D path, got {n}D")));
        }
        if pose.offset.len() != n {
            return Err(GvfError::Shape(format!(
                "offset has {} components, path is {n}D",
                pose.offset.len()
            )));
        }
        let (s, c) = pose.alpha.sin_cos();
        let mut offset = self.offset.clone();
        let (a, b) = (offset[0], offset[1]);
        offset[0] = c * a - s * b;
        offset[1] = s * a + c * b;
        offset += DVector::from_column_slice(&pose.offset);
        Ok(Self {
            alpha: self.alpha + pose.alpha,
            offset,
            ..self.clone()
        })
    }

    /// `h(w) = f(beta w)`.
    pub fn reparameterize(&self, rep: &Reparameterization) -> Self {
        Self {
            gain: self.gain * rep.param_gain(),
            ..self.clone()
        }
    }

    /// The unbounded path `s -> (f(s), s)` in `R^(n+1)`.
    pub fn lifted(&self) -> Self {
        Self::new(format!("{}-lifted", self.name), Arc::new(LiftedCurve { path: self.clone() }))
    }
}

/// Free function form of [`ParametricPath::eval`].
pub fn eval_path(path: &ParametricPath, w: f64) -> Result<PathPoint> {
    path.eval(w)
}

pub fn apply_affine(path: &ParametricPath, pose: &AffinePose) -> Result<ParametricPath> {
    path.apply_affine(pose)
}

pub fn reparameterize(path: &ParametricPath, rep: &Reparameterization) -> ParametricPath {
    path.reparameterize(rep)
}

type VecFn = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

struct FnCurve {
    dim: usize,
    f: VecFn,
    f1: VecFn,
    f2: VecFn,
}

impl fmt::Debug for FnCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCurve").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl Curve for FnCurve {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, w: f64) -> PathPoint {
        PathPoint {
            point: (self.f)(w),
            d1: (self.f1)(w),
            d2: (self.f2)(w),
        }
    }
}

#[derive(Debug)]
struct LiftedCurve {
    path: ParametricPath,
}

impl Curve for LiftedCurve {
    fn dim(&self) -> usize {
        self.path.dim() + 1
    }

    fn eval(&self, s: f64) -> PathPoint {
        let p = self.path.eval_unchecked(s);
        let n = p.point.len();
        let extend = |v: DVector<f64>, last: f64| {
            let mut out = v.resize_vertically(n + 1, 0.0);
            out[n] = last;
            out
        };
        PathPoint {
            point: extend(p.point, s),
            d1: extend(p.d1, 1.0),
            d2: extend(p.d2, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn circle() -> ParametricPath {
        catalog_make("circle", &Params::new()).unwrap()
    }

    #[test]
    fn circle_at_zero() {
        let p = eval_path(&circle(), 0.0).unwrap();
        assert_eq!(p.point.as_slice(), &[1.0, 0.0]);
        assert_eq!(p.d1.as_slice(), &[0.0, 1.0]);
        assert_eq!(p.d2.as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn non_finite_parameter_is_a_domain_error() {
        assert!(matches!(circle().eval(f64::NAN), Err(GvfError::Domain(_))));
        assert!(matches!(circle().eval(f64::INFINITY), Err(GvfError::Domain(_))));
    }

    #[test]
    fn trefoil_placement() {
        let t = catalog_make("trefoil", &Params::new()).unwrap();
        let placed = t.apply_affine(&AffinePose::new(0.0, vec![79.0, -68.10, 50.0])).unwrap();
        let p = placed.point(0.0);
        assert_abs_diff_eq!(p[0], 319.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], -68.10, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 50.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_pose_is_identity() {
        let t = catalog_make("lissajous3d", &Params::new()).unwrap();
        let same = t.apply_affine(&AffinePose::identity(3)).unwrap();
        for w in [-3.0, 0.0, 1.7, 40.0] {
            assert_eq!(t.eval(w).unwrap(), same.eval(w).unwrap());
        }
    }

    #[test]
    fn quarter_turn_of_constant_point() {
        let c = ParametricPath::from_fns(
            "const",
            3,
            |_| DVector::from_vec(vec![1.0, 0.0, 0.0]),
            |_| DVector::zeros(3),
            |_| DVector::zeros(3),
        );
        let r = c.apply_affine(&AffinePose::new(FRAC_PI_2, vec![0.0; 3])).unwrap();
        let p = r.point(0.3);
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_are_rotated_not_translated() {
        let c = circle();
        let placed = c.apply_affine(&AffinePose::new(FRAC_PI_2, vec![5.0, -2.0])).unwrap();
        let p = placed.eval(0.0).unwrap();
        // d1 = R(pi/2)(0,1) = (-1,0); d2 = R(pi/2)(-1,0) = (0,-1)
        assert_abs_diff_eq!(p.d1[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d1[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d2[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d2[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.point[0], 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.point[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn affine_offset_length_must_match() {
        assert!(matches!(
            circle().apply_affine(&AffinePose::new(0.0, vec![1.0, 2.0, 3.0])),
            Err(GvfError::Shape(_))
        ));
    }

    #[test]
    fn composed_affine_matches_sequential() {
        let t = catalog_make("trefoil", &Params::new()).unwrap();
        let a = AffinePose::new(0.3, vec![1.0, 2.0, 3.0]);
        let b = AffinePose::new(-1.1, vec![-4.0, 0.5, 7.0]);
        let twice = t.apply_affine(&a).unwrap().apply_affine(&b).unwrap();
        let w = 12.5;
        let once = t.apply_affine(&a).unwrap().point(w);
        let (s, c) = (-1.1f64).sin_cos();
        let expect = [c * once[0] - s * once[1] - 4.0, s * once[0] + c * once[1] + 0.5, once[2] + 7.0];
        let got = twice.point(w);
        for i in 0..3 {
            assert_abs_diff_eq!(got[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn reparameterized_circle() {
        let h = circle().reparameterize(&Reparameterization::new(2.0).unwrap());
        let p = h.eval(FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(p.point[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.point[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d1[0], -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d1[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d2[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d2[1], -4.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_gain_is_identity_and_zero_is_fixed() {
        let t = catalog_make("trefoil", &Params::new()).unwrap();
        let same = t.reparameterize(&Reparameterization::new(1.0).unwrap());
        assert_eq!(t.eval(3.3).unwrap(), same.eval(3.3).unwrap());
        let slow = t.reparameterize(&Reparameterization::new(0.45).unwrap());
        assert_eq!(slow.point(0.0), t.point(0.0));
    }

    #[test]
    fn reparameterization_rejects_nonpositive_gain() {
        for b in [0.0, -1.0, f64::NAN] {
            assert!(matches!(Reparameterization::new(b), Err(GvfError::Parameter(_))));
        }
    }

    #[test]
    fn lifted_path_appends_parameter() {
        let l = circle().lifted();
        assert_eq!(l.dim(), 3);
        let p = l.eval(PI).unwrap();
        assert_abs_diff_eq!(p.point[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.point[2], PI, epsilon = 0.0);
        assert_eq!(p.d1[2], 1.0);
        assert_eq!(p.d2[2], 0.0);
    }
}
