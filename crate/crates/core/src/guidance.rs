//! Heading and climb guidance for a unicycle following a guiding vector field.
//!
//! The planar direction of the field, `chi_p = (chi_1, chi_2) / |(chi_1, chi_2)|`,
//! is the desired heading. The turn-rate command is a feedforward of the
//! desired heading's rate of change plus a correction proportional to the
//! sine of the heading error:
//!
//! ```text
//! u_theta = -(1/|F chi_hat|) chi_p^T E J(F chi_hat) xi_dot - k_theta h^T E chi_p
//! u_z     = v chi_3 / |(chi_1, chi_2)|
//! w_dot   = v chi_w / |(chi_1, chi_2)|
//! ```
//!
//! With this law `V = 1 - cos(beta)` obeys `dV/dt = -k_theta sin^2(beta)`.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector2};

use crate::error::{GvfError, Result};
use crate::field::{projected_direction_jacobian, FieldSample, VectorField};

/// Maps an angle to the principal interval `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// How a vehicle's generalized position is laid out: `(x, y, [z], [w])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    /// 2 or 3 physical coordinates.
    pub physical: usize,
    pub virtual_coordinate: bool,
}

impl StateLayout {
    pub fn of(field: &dyn VectorField) -> Self {
        Self {
            physical: field.physical_dim(),
            virtual_coordinate: field.has_virtual_coordinate(),
        }
    }

    pub fn generalized_dim(&self) -> usize {
        self.physical + usize::from(self.virtual_coordinate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    /// `(x, y)` or `(x, y, z)` in meters.
    pub position: Vec<f64>,
    /// Heading, radians.
    pub theta: f64,
    /// Virtual path coordinate (ignored when the field has none).
    pub w: f64,
    /// Ground speed, m/s.
    pub v: f64,
}

impl VehicleState {
    pub fn heading(&self) -> Vector2<f64> {
        let (s, c) = self.theta.sin_cos();
        Vector2::new(c, s)
    }

    /// Generalized position `xi` for the given layout.
    pub fn generalized(&self, layout: StateLayout) -> DVector<f64> {
        let mut xi = DVector::zeros(layout.generalized_dim());
        for i in 0..layout.physical {
            xi[i] = self.position[i];
        }
        if layout.virtual_coordinate {
            xi[layout.physical] = self.w;
        }
        xi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceOutput {
    pub u_theta: f64,
    pub u_z: f64,
    pub w_dot: f64,
    pub theta_d_dot: f64,
    pub heading_error: f64,
}

fn planar_direction(sample: &FieldSample) -> Result<(Vector2<f64>, f64)> {
    if sample.dim() < 2 {
        return Err(GvfError::Shape("guidance needs a field of dimension >= 2".into()));
    }
    let planar = Vector2::new(sample.chi[0], sample.chi[1]);
    let norm = planar.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(GvfError::ExcludedSet(format!(
            "planar field component has norm {norm}; desired heading undefined"
        )));
    }
    Ok((planar / norm, norm))
}

/// Signed angle rotating the desired direction onto the heading, in `(-pi, pi]`.
pub fn heading_error(theta: f64, sample: &FieldSample) -> Result<f64> {
    let (dir, _) = planar_direction(sample)?;
    let (s, c) = theta.sin_cos();
    let cross = dir.x * s - dir.y * c;
    let dot = dir.x * c + dir.y * s;
    Ok(wrap_angle(cross.atan2(dot)))
}

/// Guidance commands given the current generalized velocity `xi_dot`.
pub fn guidance_step(
    state: &VehicleState,
    sample: &FieldSample,
    layout: StateLayout,
    xi_dot: &DVector<f64>,
    k_theta: f64,
) -> Result<GuidanceOutput> {
    if !(state.v > 0.0) {
        return Err(GvfError::Parameter(format!("ground speed must be > 0, got {}", state.v)));
    }
    let (dir, planar_norm) = planar_direction(sample)?;
    let (u_z, w_dot) = vertical_and_virtual(state.v, sample, layout, planar_norm);
    let theta_d_dot = desired_heading_rate(sample, dir, xi_dot)?;
    let h = state.heading();
    // h^T E dir, E = [[0, -1], [1, 0]]
    let misalignment = h.x * (-dir.y) + h.y * dir.x;
    Ok(GuidanceOutput {
        u_theta: theta_d_dot - k_theta * misalignment,
        u_z,
        w_dot,
        theta_d_dot,
        heading_error: heading_error(state.theta, sample)?,
    })
}

/// Guidance with `xi_dot = (v cos theta, v sin theta, u_z, w_dot)` built from
/// the same step's commands.
pub fn unicycle_guidance(
    state: &VehicleState,
    sample: &FieldSample,
    layout: StateLayout,
    k_theta: f64,
) -> Result<GuidanceOutput> {
    if !(state.v > 0.0) {
        return Err(GvfError::Parameter(format!("ground speed must be > 0, got {}", state.v)));
    }
    let (_, planar_norm) = planar_direction(sample)?;
    let (u_z, w_dot) = vertical_and_virtual(state.v, sample, layout, planar_norm);
    let xi_dot = generalized_velocity(state, layout, u_z, w_dot);
    guidance_step(state, sample, layout, &xi_dot, k_theta)
}

pub fn generalized_velocity(state: &VehicleState, layout: StateLayout, u_z: f64, w_dot: f64) -> DVector<f64> {
    let mut xi_dot = DVector::zeros(layout.generalized_dim());
    let h = state.heading() * state.v;
    xi_dot[0] = h.x;
    xi_dot[1] = h.y;
    if layout.physical == 3 {
        xi_dot[2] = u_z;
    }
    if layout.virtual_coordinate {
        xi_dot[layout.physical] = w_dot;
    }
    xi_dot
}

fn vertical_and_virtual(v: f64, sample: &FieldSample, layout: StateLayout, planar_norm: f64) -> (f64, f64) {
    let u_z = if layout.physical == 3 { v * sample.chi[2] / planar_norm } else { 0.0 };
    let w_dot = if layout.virtual_coordinate {
        v * sample.chi[layout.physical] / planar_norm
    } else {
        0.0
    };
    (u_z, w_dot)
}

fn desired_heading_rate(sample: &FieldSample, dir: Vector2<f64>, xi_dot: &DVector<f64>) -> Result<f64> {
    if xi_dot.len() != sample.dim() {
        return Err(GvfError::Shape(format!(
            "generalized velocity has {} entries, field has {}",
            xi_dot.len(),
            sample.dim()
        )));
    }
    let jac = projected_direction_jacobian(sample)?;
    let rate = jac * xi_dot;
    let unit_norm = sample.chi.norm();
    let projected_norm = (sample.chi[0].powi(2) + sample.chi[1].powi(2)).sqrt() / unit_norm;
    // dir^T E rate
    let turn = dir.x * (-rate[1]) + dir.y * rate[0];
    Ok(-turn / projected_norm)
}

/// `V = 1 - cos(beta)`.
pub fn heading_lyapunov(beta: f64) -> f64 {
    1.0 - beta.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_PI_2;

    fn sample(chi: &[f64]) -> FieldSample {
        let m = chi.len();
        FieldSample {
            chi: DVector::from_column_slice(chi),
            propagation: DVector::zeros(m),
            converging: DVector::zeros(m),
            e: DVector::zeros(m - 1),
            normals: DMatrix::zeros(m, m - 1),
            jacobian: Some(DMatrix::zeros(m, m)),
        }
    }

    fn state(theta: f64) -> VehicleState {
        VehicleState {
            position: vec![0.0, 0.0, 0.0],
            theta,
            w: 0.0,
            v: 12.0,
        }
    }

    const LAYOUT_3D: StateLayout = StateLayout {
        physical: 3,
        virtual_coordinate: true,
    };

    #[test]
    fn heading_error_examples() {
        assert_eq!(heading_error(0.0, &sample(&[1.0, 0.0, 0.0])).unwrap(), 0.0);
        let b = heading_error(0.0, &sample(&[0.0, 1.0, 0.0])).unwrap();
        assert!((b + FRAC_PI_2).abs() < 1e-15);
        let b = heading_error(PI, &sample(&[1.0, 0.0, 0.0])).unwrap();
        assert!((b - PI).abs() < 1e-15);
        assert!(matches!(
            heading_error(0.0, &sample(&[0.0, 0.0, 1.0])),
            Err(GvfError::ExcludedSet(_))
        ));
    }

    #[test]
    fn vertical_and_virtual_commands() {
        let out = unicycle_guidance(&state(0.0), &sample(&[1.0, 0.0, 2.0, 3.0]), LAYOUT_3D, 1.0).unwrap();
        assert_eq!(out.u_z, 24.0);
        assert_eq!(out.w_dot, 36.0);
        assert_eq!(out.u_theta, 0.0);
    }

    #[test]
    fn perpendicular_heading_turns_left() {
        let s = sample(&[0.0, 1.0, 0.0, 1.0]);
        let out = unicycle_guidance(&state(0.0), &s, LAYOUT_3D, 1.0).unwrap();
        assert_eq!(out.theta_d_dot, 0.0);
        assert_eq!(out.u_theta, 1.0);
    }

    #[test]
    fn guidance_errors() {
        let mut st = state(0.0);
        st.v = 0.0;
        assert!(matches!(
            unicycle_guidance(&st, &sample(&[1.0, 0.0, 0.0, 0.0]), LAYOUT_3D, 1.0),
            Err(GvfError::Parameter(_))
        ));
        assert!(matches!(
            unicycle_guidance(&state(0.0), &sample(&[0.0, 0.0, 1.0, 1.0]), LAYOUT_3D, 1.0),
            Err(GvfError::ExcludedSet(_))
        ));
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-15);
    }
}
