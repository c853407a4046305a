use nalgebra::{DMatrix, DVector};

use super::{FieldSample, GvfParams, VectorField};
use crate::error::{GvfError, Result};
use crate::path::{implicit::check_scale, ParametricPath, Reparameterization};

/// Closed-form field on `R^(n+1)` for the lifted surfaces
/// `phi_i = L (x_i - f_i(beta w))`.
///
/// With `s = sigma (-1)^n` and `h = f(beta .)`:
///
/// ```text
/// chi_i = s L^n h_i'(w) - k_i L phi_i          (i <= n)
/// chi_w = s L^n + L sum_i k_i phi_i h_i'(w)
/// ```
///
/// The last propagation entry never vanishes, so `|chi| >= L^n`.
#[derive(Debug, Clone)]
pub struct SingularityFreeField {
    path: ParametricPath,
    scale: f64,
    params: GvfParams,
}

impl SingularityFreeField {
    pub fn new(path: ParametricPath, scale: f64, rep: Reparameterization, params: GvfParams) -> Result<Self> {
        check_scale(scale)?;
        params.check_count(path.dim())?;
        Ok(Self {
            path: path.reparameterize(&rep),
            scale,
            params,
        })
    }

    /// The re-parameterized physical path `h(w) = f(beta w)`.
    pub fn path(&self) -> &ParametricPath {
        &self.path
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn propagation_sign(&self) -> f64 {
        let n = self.path.dim();
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        parity * self.params.orientation().sign()
    }

    fn check(&self, xi: &DVector<f64>) -> Result<()> {
        if xi.len() != self.path.dim() + 1 {
            return Err(GvfError::Shape(format!(
                "point has {} coordinates, field lives in R^{}",
                xi.len(),
                self.path.dim() + 1
            )));
        }
        Ok(())
    }

    fn evaluate(&self, xi: &DVector<f64>, with_jacobian: bool) -> Result<FieldSample> {
        self.check(xi)?;
        let n = self.path.dim();
        let l = self.scale;
        let k = self.params.gains();
        let w = xi[n];
        let p = self.path.eval_unchecked(w);
        let tangent_scale = self.propagation_sign() * l.powi(n as i32);

        let e = DVector::from_fn(n, |i, _| l * (xi[i] - p.point[i]));
        let mut normals = DMatrix::zeros(n + 1, n);
        let mut propagation = DVector::zeros(n + 1);
        let mut converging = DVector::zeros(n + 1);
        let mut pull = 0.0;
        for i in 0..n {
            normals[(i, i)] = l;
            normals[(n, i)] = -l * p.d1[i];
            propagation[i] = tangent_scale * p.d1[i];
            converging[i] = -k[i] * l * e[i];
            pull += k[i] * e[i] * p.d1[i];
        }
        propagation[n] = tangent_scale;
        converging[n] = l * pull;

        let jacobian = with_jacobian.then(|| {
            let mut jac = DMatrix::zeros(n + 1, n + 1);
            let mut corner = 0.0;
            for i in 0..n {
                jac[(i, i)] = -k[i] * l * l;
                jac[(i, n)] = tangent_scale * p.d2[i] + k[i] * l * l * p.d1[i];
                jac[(n, i)] = k[i] * l * l * p.d1[i];
                corner += k[i] * (e[i] * p.d2[i] - l * p.d1[i] * p.d1[i]);
            }
            jac[(n, n)] = l * corner;
            jac
        });

        Ok(FieldSample {
            chi: &propagation + &converging,
            propagation,
            converging,
            e,
            normals,
            jacobian,
        })
    }
}

impl VectorField for SingularityFreeField {
    fn dim(&self) -> usize {
        self.path.dim() + 1
    }

    fn has_virtual_coordinate(&self) -> bool {
        true
    }

    fn params(&self) -> &GvfParams {
        &self.params
    }

    fn sample(&self, xi: &DVector<f64>) -> Result<FieldSample> {
        self.evaluate(xi, false)
    }

    fn sample_with_jacobian(&self, xi: &DVector<f64>) -> Result<FieldSample> {
        self.evaluate(xi, true)
    }
}

pub fn eval_singularity_free(
    path: &ParametricPath,
    scale: f64,
    rep: &Reparameterization,
    params: &GvfParams,
    xi: &DVector<f64>,
) -> Result<FieldSample> {
    SingularityFreeField::new(path.clone(), scale, *rep, params.clone())?.sample(xi)
}

/// Analytic Jacobian of the singularity-free field.
pub fn jacobian_field(
    path: &ParametricPath,
    scale: f64,
    rep: &Reparameterization,
    params: &GvfParams,
    xi: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let s = SingularityFreeField::new(path.clone(), scale, *rep, params.clone())?.sample_with_jacobian(xi)?;
    Ok(s.jacobian.expect("requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{eval_conventional, Orientation};
    use crate::path::{catalog_make, implicit_from_parametric, AffinePose, Params};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn trefoil() -> ParametricPath {
        catalog_make("trefoil", &Params::new())
            .unwrap()
            .apply_affine(&AffinePose::new(0.0, vec![79.0, -68.10, 50.0]))
            .unwrap()
    }

    #[test]
    fn lifted_circle_hand_value() {
        let c = catalog_make("circle", &Params::new()).unwrap();
        let params = GvfParams::new(vec![1.0, 1.0], 1.0).unwrap();
        let s = eval_singularity_free(&c, 1.0, &Reparameterization::identity(), &params, &v(&[2.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.chi.as_slice(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn on_path_only_propagation_remains() {
        let t = trefoil();
        let rep = Reparameterization::new(0.45).unwrap();
        let params = GvfParams::new(vec![0.002; 3], 1.0).unwrap();
        let f = SingularityFreeField::new(t, 0.1, rep, params).unwrap();
        let w = 37.0;
        let p = f.path().eval(w).unwrap();
        let xi = v(&[p.point[0], p.point[1], p.point[2], w]);
        let s = f.sample(&xi).unwrap();
        assert_eq!(s.converging.amax(), 0.0);
        let l3 = 1e-3;
        for i in 0..3 {
            assert!((s.chi[i] + l3 * p.d1[i]).abs() < 1e-18);
        }
        assert!((s.chi[3] + l3).abs() < 1e-18);
    }

    #[test]
    fn matches_generic_construction() {
        let t = trefoil();
        let rep = Reparameterization::new(0.45).unwrap();
        let params = GvfParams::new(vec![0.002, 0.003, 0.004], 1.0).unwrap();
        let f = SingularityFreeField::new(t.clone(), 0.1, rep, params.clone()).unwrap();
        let stack = implicit_from_parametric(&t, 0.1, &rep).unwrap();
        for xi in [v(&[0.0, 0.0, 0.0, 0.0]), v(&[300.0, -20.0, 10.0, -44.0]), v(&[-120.0, 80.0, 55.0, 7.5])] {
            let a = f.sample(&xi).unwrap();
            let b = eval_conventional(&stack, &params, &xi).unwrap();
            assert!((a.chi - b.chi).amax() < 1e-12);
        }
    }

    #[test]
    fn orientation_flips_propagation_only() {
        let c = catalog_make("circle", &Params::new()).unwrap();
        let p = GvfParams::new(vec![1.0, 2.0], 1.0).unwrap();
        let a = SingularityFreeField::new(c.clone(), 1.0, Reparameterization::identity(), p.clone()).unwrap();
        let b = SingularityFreeField::new(
            c,
            1.0,
            Reparameterization::identity(),
            p.with_orientation(Orientation::Negative),
        )
        .unwrap();
        let xi = v(&[0.4, 1.7, -2.0]);
        let (sa, sb) = (a.sample(&xi).unwrap(), b.sample(&xi).unwrap());
        assert_eq!(sa.propagation, -sb.propagation);
        assert_eq!(sa.converging, sb.converging);
    }

    #[test]
    fn constant_path_jacobian_is_diagonal() {
        let c = ParametricPath::from_fns(
            "const",
            3,
            |_| DVector::from_vec(vec![1.0, 2.0, 3.0]),
            |_| DVector::zeros(3),
            |_| DVector::zeros(3),
        );
        let params = GvfParams::new(vec![0.5, 1.0, 2.0], 1.0).unwrap();
        let j = jacobian_field(&c, 1.0, &Reparameterization::identity(), &params, &v(&[4.0, -1.0, 0.0, 9.0])).unwrap();
        let expect = DMatrix::from_diagonal(&v(&[-0.5, -1.0, -2.0, 0.0]));
        assert_eq!(j, expect);
    }

    #[test]
    fn trefoil_jacobian_sparsity() {
        let rep = Reparameterization::new(0.45).unwrap();
        let params = GvfParams::new(vec![0.002; 3], 1.0).unwrap();
        let j = jacobian_field(&trefoil(), 0.1, &rep, &params, &v(&[319.0, -68.10, 50.0, 0.0])).unwrap();
        for (r, c) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
            assert_eq!(j[(r, c)], 0.0, "entry ({r},{c})");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = catalog_make("circle", &Params::new()).unwrap();
        let p = GvfParams::new(vec![1.0, 1.0], 1.0).unwrap();
        assert!(SingularityFreeField::new(c.clone(), 0.0, Reparameterization::identity(), p.clone()).is_err());
        let p3 = GvfParams::new(vec![1.0; 3], 1.0).unwrap();
        assert!(SingularityFreeField::new(c.clone(), 1.0, Reparameterization::identity(), p3).is_err());
        let f = SingularityFreeField::new(c, 1.0, Reparameterization::identity(), p).unwrap();
        assert!(f.sample(&v(&[1.0, 2.0])).is_err());
    }
}
