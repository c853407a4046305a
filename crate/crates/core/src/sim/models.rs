use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Disturbance, Dynamics};
use crate::error::{GvfError, Result};
use crate::field::VectorField;
use crate::guidance::{heading_error, unicycle_guidance, StateLayout, VehicleState};

/// `|chi|` below which a normalized field is treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Heading errors within this distance of `pi` are treated as the excluded
/// antipodal configuration.
pub const EXCLUDED_HEADING_TOL: f64 = 1e-9;

/// Orthogonal projection `P_a = I - a_hat a_hat^T` onto the hyperplane
/// normal to `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOperator {
    axis: DVector<f64>,
    matrix: DMatrix<f64>,
}

impl ProjectionOperator {
    pub fn new(a: DVector<f64>) -> Result<Self> {
        let norm = a.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(GvfError::Parameter(format!("projection axis must be nonzero and finite, got {a}")));
        }
        let axis = a / norm;
        let m = axis.len();
        let matrix = DMatrix::identity(m, m) - &axis * axis.transpose();
        Ok(Self { axis, matrix })
    }

    /// Projection that zeroes the last of `m` coordinates.
    pub fn drop_last(m: usize) -> Self {
        let mut a = DVector::zeros(m);
        a[m - 1] = 1.0;
        Self::new(a).expect("unit axis")
    }

    pub fn axis(&self) -> &DVector<f64> {
        &self.axis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }
}

fn add_disturbance(xdot: &mut DVector<f64>, physical: usize, d: [f64; 3]) {
    for (i, di) in d.iter().enumerate().take(physical.min(3)) {
        xdot[i] += di;
    }
}

/// `xi_dot = chi(xi) + d(t)` or, normalized, `xi_dot = s chi/|chi| + d(t)`.
#[derive(Clone)]
pub struct SingleIntegrator {
    field: Arc<dyn VectorField>,
    speed: Option<f64>,
    disturbance: Disturbance,
}

impl SingleIntegrator {
    pub fn new(field: Arc<dyn VectorField>) -> Self {
        Self {
            field,
            speed: None,
            disturbance: Disturbance::None,
        }
    }

    pub fn normalized(field: Arc<dyn VectorField>, speed: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(GvfError::Parameter(format!("speed must be > 0, got {speed}")));
        }
        Ok(Self {
            field,
            speed: Some(speed),
            disturbance: Disturbance::None,
        })
    }

    pub fn with_disturbance(mut self, disturbance: Disturbance) -> Self {
        self.disturbance = disturbance;
        self
    }
}

impl Dynamics for SingleIntegrator {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let chi = self.field.sample(x)?.chi;
        let mut xdot = match self.speed {
            None => chi,
            Some(s) => {
                let norm = chi.norm();
                if norm < SINGULARITY_THRESHOLD {
                    return Err(GvfError::Singularity(format!("|chi| = {norm:e} at {}", x.transpose())));
                }
                chi * (s / norm)
            }
        };
        add_disturbance(&mut xdot, self.field.physical_dim(), self.disturbance.eval(t));
        Ok(xdot)
    }
}

/// Joint system on `R^(2m)`: the field dynamics and its image under a
/// linear projection, `xi_check_dot = P_a xi_dot`.
#[derive(Clone)]
pub struct ExtendedDynamics {
    base: SingleIntegrator,
    op: ProjectionOperator,
}

impl ExtendedDynamics {
    pub fn new(base: SingleIntegrator, op: ProjectionOperator) -> Result<Self> {
        if op.axis().len() != base.dim() {
            return Err(GvfError::Shape(format!(
                "projection acts on R^{}, field lives in R^{}",
                op.axis().len(),
                base.dim()
            )));
        }
        Ok(Self { base, op })
    }

    pub fn operator(&self) -> &ProjectionOperator {
        &self.op
    }

    /// `(xi0, P_a xi0)`.
    pub fn initial_state(&self, xi0: &DVector<f64>) -> DVector<f64> {
        let m = xi0.len();
        let mut x = DVector::zeros(2 * m);
        x.rows_mut(0, m).copy_from(xi0);
        x.rows_mut(m, m).copy_from(&self.op.apply(xi0));
        x
    }
}

impl Dynamics for ExtendedDynamics {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.base.dim();
        let xi_dot = self.base.rhs(t, &x.rows(0, m).into_owned())?;
        let mut out = DVector::zeros(2 * m);
        out.rows_mut(m, m).copy_from(&self.op.apply(&xi_dot));
        out.rows_mut(0, m).copy_from(&xi_dot);
        Ok(out)
    }
}

/// Unicycle `(x, y, [z], [w], theta)` at constant ground speed, steered by
/// the guidance law. Disturbances enter the position kinematics only.
#[derive(Clone)]
pub struct Unicycle {
    field: Arc<dyn VectorField>,
    layout: StateLayout,
    speed: f64,
    k_theta: f64,
    disturbance: Disturbance,
}

impl Unicycle {
    pub fn new(field: Arc<dyn VectorField>, speed: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(GvfError::Parameter(format!("ground speed must be > 0, got {speed}")));
        }
        let layout = StateLayout::of(field.as_ref());
        if !(layout.physical == 2 || layout.physical == 3) {
            return Err(GvfError::Shape(format!(
                "unicycle needs a 2D or 3D physical space, field has {}",
                layout.physical
            )));
        }
        let k_theta = field.params().k_theta();
        Ok(Self {
            field,
            layout,
            speed,
            k_theta,
            disturbance: Disturbance::None,
        })
    }

    pub fn with_disturbance(mut self, disturbance: Disturbance) -> Self {
        self.disturbance = disturbance;
        self
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Packs a generalized position and heading into a state vector.
    pub fn pack(&self, xi: &DVector<f64>, theta: f64) -> DVector<f64> {
        let g = self.layout.generalized_dim();
        let mut x = DVector::zeros(g + 1);
        x.rows_mut(0, g).copy_from(xi);
        x[g] = theta;
        x
    }

    pub fn vehicle(&self, x: &DVector<f64>) -> VehicleState {
        let g = self.layout.generalized_dim();
        VehicleState {
            position: x.rows(0, self.layout.physical).iter().copied().collect(),
            theta: x[g],
            w: if self.layout.virtual_coordinate { x[self.layout.physical] } else { 0.0 },
            v: self.speed,
        }
    }

    /// Heading error at a packed state.
    pub fn heading_error_at(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.layout.generalized_dim();
        let sample = self.field.sample(&x.rows(0, g).into_owned())?;
        heading_error(x[g], &sample)
    }
}

impl Dynamics for Unicycle {
    fn dim(&self) -> usize {
        self.layout.generalized_dim() + 1
    }

    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.layout.generalized_dim();
        let xi = x.rows(0, g).into_owned();
        let sample = self.field.sample_with_jacobian(&xi)?;
        let state = self.vehicle(x);
        let out = unicycle_guidance(&state, &sample, self.layout, self.k_theta)?;
        if PI - out.heading_error.abs() <= EXCLUDED_HEADING_TOL {
            return Err(GvfError::ExcludedSet(format!(
                "heading error {} is antipodal to the field direction",
                out.heading_error
            )));
        }
        let d = self.disturbance.eval(t);
        let (s, c) = state.theta.sin_cos();
        let mut xdot = DVector::zeros(g + 1);
        xdot[0] = self.speed * c + d[0];
        xdot[1] = self.speed * s + d[1];
        if self.layout.physical == 3 {
            xdot[2] = out.u_z + d[2];
        }
        if self.layout.virtual_coordinate {
            xdot[self.layout.physical] = out.w_dot;
        }
        xdot[g] = out.u_theta;
        Ok(xdot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_properties() {
        let p = ProjectionOperator::new(DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0])).unwrap();
        let m = p.matrix();
        assert!((m - m.transpose()).amax() < 1e-15);
        assert!((m * m - m).amax() < 1e-12);
        assert!((m * DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0])).amax() < 1e-12);
    }

    #[test]
    fn drop_last_zeroes_last_coordinate() {
        let p = ProjectionOperator::new(DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        assert_eq!(p.apply(&DVector::from_vec(vec![2.0, 5.0, 7.0])).as_slice(), &[2.0, 5.0, 0.0]);
        assert_eq!(ProjectionOperator::drop_last(3), p);
    }

    #[test]
    fn zero_axis_rejected() {
        assert!(ProjectionOperator::new(DVector::zeros(3)).is_err());
    }
}
