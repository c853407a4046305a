use nalgebra::{DMatrix, DVector};

use super::cross::cross_of_rows;
use super::{central_jacobian, FieldSample, GvfParams, VectorField};
use crate::error::Result;
use crate::path::SurfaceStack;

/// Field built directly from a surface stack on `R^m`.
#[derive(Debug, Clone)]
pub struct ConventionalField {
    stack: SurfaceStack,
    params: GvfParams,
    virtual_coordinate: bool,
}

impl ConventionalField {
    pub fn new(stack: SurfaceStack, params: GvfParams) -> Result<Self> {
        params.check_count(stack.count())?;
        Ok(Self {
            stack,
            params,
            virtual_coordinate: false,
        })
    }

    /// Marks the last coordinate as the virtual path parameter (for stacks
    /// produced by lifting a parametric path).
    pub fn with_virtual_coordinate(mut self, yes: bool) -> Self {
        self.virtual_coordinate = yes;
        self
    }

    pub fn stack(&self) -> &SurfaceStack {
        &self.stack
    }

    fn jacobian(&self, xi: &DVector<f64>, sample: &FieldSample) -> Result<DMatrix<f64>> {
        let Some(hessians) = self.stack.hessians(xi) else {
            return central_jacobian(|p| Ok(eval_conventional(&self.stack, &self.params, p)?.chi), xi, 1e-6);
        };
        let m = self.stack.ambient_dim();
        let sign = self.params.orientation().sign();
        let grads = sample.normals.transpose();
        let mut jac = DMatrix::zeros(m, m);
        // The cross product is multilinear in its rows.
        for j in 0..m {
            let mut col = DVector::zeros(m);
            for (i, h) in hessians.iter().enumerate() {
                let mut rows = grads.clone();
                rows.set_row(i, &h.column(j).transpose());
                col += cross_of_rows(&rows);
            }
            jac.set_column(j, &(col * sign));
        }
        for (i, h) in hessians.iter().enumerate() {
            let k = self.params.gains()[i];
            let g = sample.normals.column(i);
            jac -= (g * g.transpose() + h * sample.e[i]) * k;
        }
        Ok(jac)
    }
}

impl VectorField for ConventionalField {
    fn dim(&self) -> usize {
        self.stack.ambient_dim()
    }

    fn has_virtual_coordinate(&self) -> bool {
        self.virtual_coordinate
    }

    fn params(&self) -> &GvfParams {
        &self.params
    }

    fn sample(&self, xi: &DVector<f64>) -> Result<FieldSample> {
        eval_conventional(&self.stack, &self.params, xi)
    }

    fn sample_with_jacobian(&self, xi: &DVector<f64>) -> Result<FieldSample> {
        let mut s = eval_conventional(&self.stack, &self.params, xi)?;
        s.jacobian = Some(self.jacobian(xi, &s)?);
        Ok(s)
    }
}

/// `chi = sigma * cross(N^T) - N K e`.
pub fn eval_conventional(stack: &SurfaceStack, params: &GvfParams, xi: &DVector<f64>) -> Result<FieldSample> {
    stack.check_point(xi)?;
    params.check_count(stack.count())?;
    let e = stack.values(xi);
    let normals = stack.gradients(xi);
    let propagation = cross_of_rows(&normals.transpose()) * params.orientation().sign();
    let weighted = DVector::from_iterator(e.len(), e.iter().zip(params.gains()).map(|(ei, k)| ei * k));
    let converging = -(&normals * weighted);
    Ok(FieldSample {
        chi: &propagation + &converging,
        propagation,
        converging,
        e,
        normals,
        jacobian: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Orientation;
    use crate::path::implicit_catalog;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn circle_field() -> ConventionalField {
        let params = GvfParams::new(vec![1.0], 1.0).unwrap().with_orientation(Orientation::Negative);
        ConventionalField::new(implicit_catalog("circle_implicit", None).unwrap(), params).unwrap()
    }

    #[test]
    fn planar_circle_matches_hand_values() {
        let f = circle_field();
        assert_eq!(f.sample(&v(&[2.0, 0.0])).unwrap().chi.as_slice(), &[-12.0, 4.0]);
        assert_eq!(f.sample(&v(&[1.0, 0.0])).unwrap().chi.as_slice(), &[0.0, 2.0]);
        assert_eq!(f.sample(&v(&[0.0, 0.0])).unwrap().chi.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn figure_eight_crossing_is_singular() {
        let params = GvfParams::new(vec![1.0], 1.0).unwrap();
        let f = ConventionalField::new(implicit_catalog("figure8_implicit", None).unwrap(), params).unwrap();
        assert_eq!(f.sample(&v(&[0.0, 0.0])).unwrap().chi.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let f = circle_field();
        for p in [[0.3, -1.2], [2.0, 0.5], [-0.7, 0.1]] {
            let xi = v(&p);
            let j = f.sample_with_jacobian(&xi).unwrap().jacobian.unwrap();
            let fd = central_jacobian(|x| Ok(f.sample(x)?.chi), &xi, 1e-6).unwrap();
            assert!((j - fd).amax() < 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        assert!(circle_field().sample(&v(&[1.0, 2.0, 3.0])).is_err());
    }
}
