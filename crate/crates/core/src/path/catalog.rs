use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Curve, ParametricPath, PathPoint};
use crate::error::{GvfError, Result};

pub const CATALOG_NAMES: [&str; 5] = ["circle", "ellipse", "line", "trefoil", "lissajous3d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

pub type Params = BTreeMap<String, ParamValue>;

struct Reader<'a> {
    entry: &'a str,
    params: &'a Params,
    known: &'static [&'static str],
}

impl<'a> Reader<'a> {
    fn new(entry: &'a str, params: &'a Params, known: &'static [&'static str]) -> Result<Self> {
        if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(GvfError::Parameter(format!(
                "`{entry}` does not take parameter `{k}` (expected one of {known:?})"
            )));
        }
        Ok(Self { entry, params, known })
    }

    fn scalar_or(&self, key: &str, default: f64) -> Result<f64> {
        debug_assert!(self.known.contains(&key));
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(*v),
            Some(other) => Err(GvfError::Parameter(format!(
                "`{}.{key}` must be a finite number, got {other:?}",
                self.entry
            ))),
        }
    }

    fn scalar(&self, key: &str) -> Result<f64> {
        if !self.params.contains_key(key) {
            return Err(self.missing(key));
        }
        self.scalar_or(key, f64::NAN)
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Err(self.missing(key)),
            Some(ParamValue::Vector(v)) if v.iter().all(|x| x.is_finite()) => Ok(v.clone()),
            Some(other) => Err(GvfError::Parameter(format!(
                "`{}.{key}` must be an array of finite numbers, got {other:?}",
                self.entry
            ))),
        }
    }

    fn missing(&self, key: &str) -> GvfError {
        GvfError::Parameter(format!("`{}` requires parameter `{key}`", self.entry))
    }
}

/// Builds a named catalog path. Trefoil and Lissajous parameters default to
/// the flight-test values; circle defaults to the unit circle.
pub fn catalog_make(name: &str, params: &Params) -> Result<ParametricPath> {
    let base: Arc<dyn Curve> = match name {
        "circle" => {
            let r = Reader::new(name, params, &["r"])?;
            let radius = r.scalar_or("r", 1.0)?;
            positive(name, "r", radius)?;
            Arc::new(Ellipse { a: radius, b: radius })
        }
        "ellipse" => {
            let r = Reader::new(name, params, &["a", "b"])?;
            let (a, b) = (r.scalar("a")?, r.scalar("b")?);
            positive(name, "a", a)?;
            positive(name, "b", b)?;
            Arc::new(Ellipse { a, b })
        }
        "line" => {
            let r = Reader::new(name, params, &["point", "direction"])?;
            let (point, direction) = (r.vector("point")?, r.vector("direction")?);
            if !(point.len() == 2 || point.len() == 3) || point.len() != direction.len() {
                return Err(GvfError::Parameter(format!(
                    "`line.point` and `line.direction` must both have 2 or 3 components, got {} and {}",
                    point.len(),
                    direction.len()
                )));
            }
            if direction.iter().all(|d| *d == 0.0) {
                return Err(GvfError::Parameter("`line.direction` must be nonzero".into()));
            }
            Arc::new(Line {
                point: DVector::from_vec(point),
                direction: DVector::from_vec(direction),
            })
        }
        "trefoil" => {
            let r = Reader::new(name, params, &["omega1", "omega2", "a", "b"])?;
            Arc::new(Trefoil {
                omega1: r.scalar_or("omega1", 0.02)?,
                omega2: r.scalar_or("omega2", 0.03)?,
                a: r.scalar_or("a", 80.0)?,
                b: r.scalar_or("b", 160.0)?,
            })
        }
        "lissajous3d" => {
            let r = Reader::new(
                name,
                params,
                &["cx", "cy", "cz", "omega_x", "omega_y", "omega_z", "dx", "dy", "dz"],
            )?;
            Arc::new(Lissajous {
                c: [r.scalar_or("cx", 225.0)?, r.scalar_or("cy", 225.0)?, r.scalar_or("cz", -20.0)?],
                omega: [
                    r.scalar_or("omega_x", 1.0)?,
                    r.scalar_or("omega_y", 2.0)?,
                    r.scalar_or("omega_z", 2.0)?,
                ],
                phase: [r.scalar_or("dx", 0.0)?, r.scalar_or("dy", FRAC_PI_2)?, r.scalar_or("dz", 0.0)?],
            })
        }
        other => return Err(GvfError::Catalog(other.to_string())),
    };
    Ok(ParametricPath::new(name, base))
}

fn positive(entry: &str, key: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(GvfError::Parameter(format!("`{entry}.{key}` must be > 0, got {v}")))
    }
}

fn vec2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

fn vec3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

/// `(a cos w, b sin w)`.
#[derive(Debug)]
struct Ellipse {
    a: f64,
    b: f64,
}

impl Curve for Ellipse {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, w: f64) -> PathPoint {
        let (s, c) = w.sin_cos();
        PathPoint {
            point: vec2(self.a * c, self.b * s),
            d1: vec2(-self.a * s, self.b * c),
            d2: vec2(-self.a * c, -self.b * s),
        }
    }
}

#[derive(Debug)]
struct Line {
    point: DVector<f64>,
    direction: DVector<f64>,
}

impl Curve for Line {
    fn dim(&self) -> usize {
        self.point.len()
    }

    fn eval(&self, w: f64) -> PathPoint {
        PathPoint {
            point: &self.point + &self.direction * w,
            d1: self.direction.clone(),
            d2: DVector::zeros(self.point.len()),
        }
    }
}

/// Planar trefoil embedded at zero altitude:
/// `(cos(w1 w) r(w), sin(w1 w) r(w), 0)` with `r(w) = a cos(w2 w) + b`.
#[derive(Debug)]
struct Trefoil {
    omega1: f64,
    omega2: f64,
    a: f64,
    b: f64,
}

impl Curve for Trefoil {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, w: f64) -> PathPoint {
        let (w1, w2) = (self.omega1, self.omega2);
        let (s1, c1) = (w1 * w).sin_cos();
        let (s2, c2) = (w2 * w).sin_cos();
        let r = self.a * c2 + self.b;
        let r1 = -self.a * w2 * s2;
        let r2 = -self.a * w2 * w2 * c2;
        PathPoint {
            point: vec3(c1 * r, s1 * r, 0.0),
            d1: vec3(-w1 * s1 * r + c1 * r1, w1 * c1 * r + s1 * r1, 0.0),
            d2: vec3(
                -w1 * w1 * c1 * r - 2.0 * w1 * s1 * r1 + c1 * r2,
                -w1 * w1 * s1 * r + 2.0 * w1 * c1 * r1 + s1 * r2,
                0.0,
            ),
        }
    }
}

/// `c_i cos(omega_i w + d_i)` per axis.
#[derive(Debug)]
struct Lissajous {
    c: [f64; 3],
    omega: [f64; 3],
    phase: [f64; 3],
}

impl Curve for Lissajous {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, w: f64) -> PathPoint {
        let mut point = DVector::zeros(3);
        let mut d1 = DVector::zeros(3);
        let mut d2 = DVector::zeros(3);
        for i in 0..3 {
            let (s, c) = (self.omega[i] * w + self.phase[i]).sin_cos();
            point[i] = self.c[i] * c;
            d1[i] = -self.c[i] * self.omega[i] * s;
            d2[i] = -self.c[i] * self.omega[i] * self.omega[i] * c;
        }
        PathPoint { point, d1, d2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn trefoil_defaults_at_zero() {
        let t = catalog_make("trefoil", &Params::new()).unwrap();
        let p = t.eval(0.0).unwrap();
        assert_eq!(p.point.as_slice(), &[240.0, 0.0, 0.0]);
        for w in [-100.0, 0.0, 3.0, 777.0] {
            let p = t.eval(w).unwrap();
            assert_eq!((p.point[2], p.d1[2], p.d2[2]), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn lissajous_defaults_at_zero() {
        let l = catalog_make("lissajous3d", &Params::new()).unwrap();
        let p = l.point(0.0);
        assert_abs_diff_eq!(p[0], 225.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], -20.0, epsilon = 1e-12);
    }

    #[test]
    fn lissajous_is_a_bent_figure_eight() {
        // x has half the frequency of y, so the planar trace crosses itself;
        // z oscillates with y's frequency.
        let l = catalog_make("lissajous3d", &Params::new()).unwrap();
        let a = l.point(PI / 4.0);
        let b = l.point(3.0 * PI / 4.0);
        assert_abs_diff_eq!(a[0], -b[0], epsilon = 1e-12);
        let top = l.point(PI / 2.0);
        assert_abs_diff_eq!(top[2], 20.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_at_pi() {
        let mut p = Params::new();
        p.insert("r".into(), ParamValue::Scalar(1.0));
        let c = catalog_make("circle", &p).unwrap();
        let pt = c.point(PI);
        assert_abs_diff_eq!(pt[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pt[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn line_is_affine_in_parameter() {
        let mut p = Params::new();
        p.insert("point".into(), ParamValue::Vector(vec![1.0, 2.0, 3.0]));
        p.insert("direction".into(), ParamValue::Vector(vec![0.5, 0.0, -1.0]));
        let l = catalog_make("line", &p).unwrap();
        let e = l.eval(2.0).unwrap();
        assert_eq!(e.point.as_slice(), &[2.0, 2.0, 1.0]);
        assert_eq!(e.d2.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog_make("spiral", &Params::new()), Err(GvfError::Catalog(_))));
        assert!(matches!(catalog_make("ellipse", &Params::new()), Err(GvfError::Parameter(_))));
        assert!(matches!(catalog_make("line", &Params::new()), Err(GvfError::Parameter(_))));
        let mut p = Params::new();
        p.insert("radius".into(), ParamValue::Scalar(2.0));
        assert!(matches!(catalog_make("circle", &p), Err(GvfError::Parameter(_))));
        let mut p = Params::new();
        p.insert("r".into(), ParamValue::Scalar(-2.0));
        assert!(matches!(catalog_make("circle", &p), Err(GvfError::Parameter(_))));
    }

    #[test]
    fn param_values_deserialize_untagged() {
        let p: Params = serde_json::from_str(r#"{"a": 3, "point": [1, 2]}"#).unwrap();
        assert_eq!(p["a"], ParamValue::Scalar(3.0));
        assert_eq!(p["point"], ParamValue::Vector(vec![1.0, 2.0]));
    }
}
