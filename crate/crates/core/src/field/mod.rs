//! Guiding vector fields.
//!
//! Every field here has the form
//!
//! ```text
//! chi(xi) = sigma * cross(grad phi_1, ..., grad phi_{m-1}) - N(xi) K e(xi)
//! ```
//!
//! where `sigma` is the traversal orientation, `N` stacks the surface
//! gradients column-wise and `e` stacks the surface values. The first term
//! (propagation) is orthogonal to every column of `N`; the second
//! (converging) pulls the state onto the common zero set.

mod conventional;
mod cross;
mod scan;
mod singularity_free;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GvfError, Result};

pub use conventional::{eval_conventional, ConventionalField};
pub use cross::cross_n;
pub use scan::{singular_scan, ScanBox};
pub use singularity_free::{eval_singularity_free, jacobian_field, SingularityFreeField};

/// Direction of travel along the desired path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Orientation::Positive),
            -1 => Ok(Orientation::Negative),
            other => Err(GvfError::Parameter(format!("orientation must be +1 or -1, got {other}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// Gains of a guiding vector field and of the heading loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GvfParams {
    gains: Vec<f64>,
    orientation: Orientation,
    k_theta: f64,
}

impl GvfParams {
    pub fn new(gains: Vec<f64>, k_theta: f64) -> Result<Self> {
        if gains.is_empty() || gains.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(GvfError::Parameter(format!("gains must be finite and > 0, got {gains:?}")));
        }
        if !(k_theta.is_finite() && k_theta > 0.0) {
            return Err(GvfError::Parameter(format!("k_theta must be finite and > 0, got {k_theta}")));
        }
        Ok(Self {
            gains,
            orientation: Orientation::Positive,
            k_theta,
        })
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn k_theta(&self) -> f64 {
        self.k_theta
    }

    pub(crate) fn check_count(&self, count: usize) -> Result<()> {
        if self.gains.len() != count {
            return Err(GvfError::Shape(format!(
                "field has {count} surfaces but {} gains were given",
                self.gains.len()
            )));
        }
        Ok(())
    }
}

/// A field evaluation with its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub chi: DVector<f64>,
    pub propagation: DVector<f64>,
    pub converging: DVector<f64>,
    /// Surface values.
    pub e: DVector<f64>,
    /// Surface gradients, one per column.
    pub normals: DMatrix<f64>,
    pub jacobian: Option<DMatrix<f64>>,
}

impl FieldSample {
    pub fn dim(&self) -> usize {
        self.chi.len()
    }
}

pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Whether the last coordinate is the virtual path parameter `w`.
    fn has_virtual_coordinate(&self) -> bool;

    fn params(&self) -> &GvfParams;

    fn sample(&self, xi: &DVector<f64>) -> Result<FieldSample>;

    fn sample_with_jacobian(&self, xi: &DVector<f64>) -> Result<FieldSample>;

    /// Number of physical coordinates (excluding `w`).
    fn physical_dim(&self) -> usize {
        if self.has_virtual_coordinate() {
            self.dim() - 1
        } else {
            self.dim()
        }
    }
}

/// `chi / |chi|`.
pub fn normalize(sample: &FieldSample) -> Result<DVector<f64>> {
    let norm = sample.chi.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(GvfError::Singularity(format!(
            "cannot normalize a field vector of norm {norm}"
        )));
    }
    Ok(&sample.chi / norm)
}

/// `chi` divided by the norm of its first `physical` components.
pub fn partial_normalize(sample: &FieldSample, physical: usize) -> Result<DVector<f64>> {
    if physical == 0 || physical > sample.dim() {
        return Err(GvfError::Shape(format!(
            "cannot take {physical} physical components of a {}-vector",
            sample.dim()
        )));
    }
    let norm = sample.chi.rows(0, physical).norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(GvfError::Singularity(format!(
            "physical part of the field vector has norm {norm}"
        )));
    }
    Ok(&sample.chi / norm)
}

/// Jacobian of the first two components of the normalized field,
/// `F (I - u u^T) J / |chi|` with `u = chi / |chi|`.
pub fn projected_direction_jacobian(sample: &FieldSample) -> Result<DMatrix<f64>> {
    let jac = sample
        .jacobian
        .as_ref()
        .ok_or_else(|| GvfError::Parameter("field sample carries no Jacobian".into()))?;
    let m = sample.dim();
    if m < 2 {
        return Err(GvfError::Shape("direction Jacobian needs at least 2 dimensions".into()));
    }
    let unit = normalize(sample)?;
    let norm = sample.chi.norm();
    let projector = DMatrix::identity(m, m) - &unit * unit.transpose();
    let full = projector * jac / norm;
    Ok(full.rows(0, 2).into_owned())
}

/// Central-difference Jacobian of `f` at `x`.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut p = x.clone();
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1.0);
        p[j] = x[j] + h;
        let fp = f(&p)?;
        p[j] = x[j] - h;
        let fm = f(&p)?;
        p[j] = x[j];
        cols.push((fp - fm) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}
