use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ParametricPath, Reparameterization};
use crate::error::{GvfError, Result};

/// Stack of `m - 1` implicit functions on `R^m` whose common zero set is the
/// desired path.
pub trait Surfaces: Send + Sync + fmt::Debug {
    fn ambient_dim(&self) -> usize;

    /// Stacked surface values `e = (phi_1, ..., phi_{m-1})`.
    fn values(&self, xi: &DVector<f64>) -> DVector<f64>;

    /// `N = [grad phi_1, ..., grad phi_{m-1}]`, an `m x (m-1)` matrix.
    fn gradients(&self, xi: &DVector<f64>) -> DMatrix<f64>;

    /// Hessians of each `phi_i`, when available.
    fn hessians(&self, _xi: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceStack {
    inner: Arc<dyn Surfaces>,
}

impl SurfaceStack {
    pub fn new(inner: Arc<dyn Surfaces>) -> Self {
        Self { inner }
    }

    pub fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    pub fn count(&self) -> usize {
        self.inner.ambient_dim() - 1
    }

    pub fn values(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.inner.values(xi)
    }

    pub fn gradients(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        self.inner.gradients(xi)
    }

    pub fn hessians(&self, xi: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        self.inner.hessians(xi)
    }

    pub(crate) fn check_point(&self, xi: &DVector<f64>) -> Result<()> {
        if xi.len() != self.ambient_dim() {
            return Err(GvfError::Shape(format!(
                "point has {} coordinates, surfaces live in R^{}",
                xi.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }
}

/// `phi_i(x, w) = L (x_i - h_i(w))` where `h` is the re-parameterized path.
#[derive(Debug)]
struct LiftedSurfaces {
    path: ParametricPath,
    scale: f64,
}

impl Surfaces for LiftedSurfaces {
    fn ambient_dim(&self) -> usize {
        self.path.dim() + 1
    }

    fn values(&self, xi: &DVector<f64>) -> DVector<f64> {
        let n = self.path.dim();
        let f = self.path.point(xi[n]);
        (xi.rows(0, n) - f) * self.scale
    }

    fn gradients(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let n = self.path.dim();
        let d1 = self.path.eval_unchecked(xi[n]).d1;
        let mut grad = DMatrix::zeros(n + 1, n);
        for i in 0..n {
            grad[(i, i)] = self.scale;
            grad[(n, i)] = -self.scale * d1[i];
        }
        grad
    }

    fn hessians(&self, xi: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let n = self.path.dim();
        let d2 = self.path.eval_unchecked(xi[n]).d2;
        Some(
            (0..n)
                .map(|i| {
                    let mut h = DMatrix::zeros(n + 1, n + 1);
                    h[(n, n)] = -self.scale * d2[i];
                    h
                })
                .collect(),
        )
    }
}

/// Surfaces `phi_i(xi) = L (x_i - f_i(beta w))` on `R^(n+1)` for a parametric
/// path in `R^n`.
pub fn implicit_from_parametric(
    path: &ParametricPath,
    scale: f64,
    rep: &Reparameterization,
) -> Result<SurfaceStack> {
    check_scale(scale)?;
    Ok(SurfaceStack::new(Arc::new(LiftedSurfaces {
        path: path.reparameterize(rep),
        scale,
    })))
}

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale <= 1.0 {
        Ok(())
    } else {
        Err(GvfError::Parameter(format!("scale L must lie in (0, 1], got {scale}")))
    }
}

pub type ScalarFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type SecondFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

struct DirectSurfaces {
    dim: usize,
    phi: Vec<ScalarFn>,
    grad: Vec<GradFn>,
    second: Option<Vec<SecondFn>>,
}

impl fmt::Debug for DirectSurfaces {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectSurfaces")
            .field("dim", &self.dim)
            .field("has_second", &self.second.is_some())
            .finish_non_exhaustive()
    }
}

impl Surfaces for DirectSurfaces {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn values(&self, xi: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.phi.len(), self.phi.iter().map(|p| p(xi)))
    }

    fn gradients(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let cols: Vec<_> = self.grad.iter().map(|g| g(xi)).collect();
        DMatrix::from_columns(&cols)
    }

    fn hessians(&self, xi: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        self.second.as_ref().map(|s| s.iter().map(|h| h(xi)).collect())
    }
}

const PROBE_COUNT: usize = 32;
const PROBE_HALF_WIDTH: f64 = 2.0;
const PROBE_TOLERANCE: f64 = 1e-4;

/// User-supplied implicit surfaces on `R^dim`. Gradients (and Hessians, when
/// given) are checked against central differences at fixed probe points.
pub fn implicit_direct(
    dim: usize,
    phi: Vec<ScalarFn>,
    grad: Vec<GradFn>,
    second: Option<Vec<SecondFn>>,
) -> Result<SurfaceStack> {
    if dim < 2 || phi.len() != dim - 1 || grad.len() != dim - 1 {
        return Err(GvfError::Shape(format!(
            "R^{dim} needs {} surfaces, got {} functions and {} gradients",
            dim.saturating_sub(1),
            phi.len(),
            grad.len()
        )));
    }
    if let Some(s) = &second {
        if s.len() != dim - 1 {
            return Err(GvfError::Shape(format!("expected {} Hessians, got {}", dim - 1, s.len())));
        }
    }
    let stack = DirectSurfaces { dim, phi, grad, second };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_5a4f);
    for _ in 0..PROBE_COUNT {
        let xi = DVector::from_fn(dim, |_, _| rng.gen_range(-PROBE_HALF_WIDTH..PROBE_HALF_WIDTH));
        for i in 0..dim - 1 {
            let g = (stack.grad[i])(&xi);
            if g.len() != dim {
                return Err(GvfError::Shape(format!("gradient {i} has {} entries, expected {dim}", g.len())));
            }
            for j in 0..dim {
                let h = 1e-6 * xi[j].abs().max(1.0);
                let (mut p, mut q) = (xi.clone(), xi.clone());
                p[j] += h;
                q[j] -= h;
                let fd = ((stack.phi[i])(&p) - (stack.phi[i])(&q)) / (2.0 * h);
                if (fd - g[j]).abs() > PROBE_TOLERANCE * g[j].abs().max(1.0) {
                    return Err(GvfError::Validation(format!(
                        "gradient of surface {i} disagrees with finite differences at {:?}: d/dx{j} analytic {} vs {fd}",
                        xi.as_slice(),
                        g[j]
                    )));
                }
            }
            if let Some(second) = &stack.second {
                let hess = (second[i])(&xi);
                if hess.shape() != (dim, dim) {
                    return Err(GvfError::Shape(format!("Hessian {i} has shape {:?}", hess.shape())));
                }
                for j in 0..dim {
                    let h = 1e-6 * xi[j].abs().max(1.0);
                    let (mut p, mut q) = (xi.clone(), xi.clone());
                    p[j] += h;
                    q[j] -= h;
                    let fd = ((stack.grad[i])(&p) - (stack.grad[i])(&q)) / (2.0 * h);
                    for r in 0..dim {
                        if (fd[r] - hess[(r, j)]).abs() > PROBE_TOLERANCE * hess[(r, j)].abs().max(1.0) {
                            return Err(GvfError::Validation(format!(
                                "Hessian of surface {i} disagrees with finite differences at entry ({r}, {j})"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(SurfaceStack::new(Arc::new(stack)))
}

/// Named planar level sets: `circle_implicit` (`x^2 + y^2 - r^2`) and
/// `figure8_implicit` (`x^2 - 4 y^2 (1 - y^2)`).
pub fn implicit_catalog(name: &str, radius: Option<f64>) -> Result<SurfaceStack> {
    match name {
        "circle_implicit" => {
            let r = radius.unwrap_or(1.0);
            if !(r > 0.0 && r.is_finite()) {
                return Err(GvfError::Parameter(format!("radius must be > 0, got {r}")));
            }
            let r2 = r * r;
            implicit_direct(
                2,
                vec![Box::new(move |p| p[0] * p[0] + p[1] * p[1] - r2)],
                vec![Box::new(|p| DVector::from_vec(vec![2.0 * p[0], 2.0 * p[1]]))],
                Some(vec![Box::new(|_| DMatrix::from_diagonal_element(2, 2, 2.0))]),
            )
        }
        "figure8_implicit" => {
            if radius.is_some() {
                return Err(GvfError::Parameter("figure8_implicit takes no parameters".into()));
            }
            implicit_direct(
                2,
                vec![Box::new(|p| p[0] * p[0] - 4.0 * p[1] * p[1] * (1.0 - p[1] * p[1]))],
                vec![Box::new(|p| {
                    DVector::from_vec(vec![2.0 * p[0], -8.0 * p[1] + 16.0 * p[1].powi(3)])
                })],
                Some(vec![Box::new(|p| {
                    DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -8.0 + 48.0 * p[1] * p[1]])
                })]),
            )
        }
        other => Err(GvfError::Catalog(other.to_string())),
    }
}
