//! Post-hoc verification of simulated runs and of field constructions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GvfError, Result};
use crate::field::{cross_n, FieldSample, ScanBox, VectorField};
use crate::path::{ParametricPath, SurfaceStack};
use crate::sim::{Termination, Trajectory};

/// Default fraction of the run discarded before fitting rates and bounds.
pub const DEFAULT_BURN_IN: f64 = 0.2;
/// Minimum R² for a fitted rate to be reported.
pub const DEFAULT_R2_THRESHOLD: f64 = 0.99;
/// Separation estimates at or below this value are flagged.
pub const SEPARATION_FLAG: f64 = 1e-9;

/// `V = 0.5 e^T K e` and `dV/dt = -|N K e|^2` along the unnormalized flow.
pub fn lyapunov(e: &DVector<f64>, gains: &[f64], normals: &DMatrix<f64>) -> Result<(f64, f64)> {
    if e.len() != gains.len() || normals.ncols() != e.len() {
        return Err(GvfError::Shape(format!(
            "e has {} entries, K has {}, N has {} columns",
            e.len(),
            gains.len(),
            normals.ncols()
        )));
    }
    let ke = DVector::from_iterator(e.len(), e.iter().zip(gains).map(|(ei, k)| k * ei));
    let v = 0.5 * e.dot(&ke);
    let nke = normals * ke;
    Ok((v, -nke.norm_squared()))
}

pub fn lyapunov_of(sample: &FieldSample, gains: &[f64]) -> Result<(f64, f64)> {
    lyapunov(&sample.e, gains, &sample.normals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    /// Parameter of the closest sample found.
    pub w: f64,
    /// Half the sampling spacing times the largest sampled speed. Bounds the
    /// overestimate when the closest point lies between two samples that
    /// were not refined.
    pub sampling_bound: f64,
}

const GOLDEN_ITERS: usize = 80;
const REFINED_MINIMA: usize = 8;

/// Distance from `point` to `path` restricted to `w_range`, by dense
/// sampling followed by golden-section refinement of the best local minima.
pub fn distance_to_path(
    point: &DVector<f64>,
    path: &ParametricPath,
    w_range: (f64, f64),
    samples: usize,
) -> Result<DistanceEstimate> {
    let (lo, hi) = w_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(GvfError::Domain(format!("w range must be finite and increasing, got [{lo}, {hi}]")));
    }
    if samples < 64 {
        return Err(GvfError::Parameter(format!("distance needs at least 64 samples, got {samples}")));
    }
    if point.len() != path.dim() {
        return Err(GvfError::Shape(format!(
            "point has {} coordinates, path lives in R^{}",
            point.len(),
            path.dim()
        )));
    }
    let step = (hi - lo) / (samples - 1) as f64;
    let ws: Vec<f64> = (0..samples).map(|i| lo + step * i as f64).collect();
    let mut dist = Vec::with_capacity(samples);
    let mut speed: f64 = 0.0;
    for &w in &ws {
        let p = path.eval(w)?;
        dist.push((point - &p.point).norm());
        speed = speed.max(p.d1.norm());
    }

    let mut minima: Vec<usize> = (0..samples)
        .filter(|&i| (i == 0 || dist[i] <= dist[i - 1]) && (i + 1 == samples || dist[i] <= dist[i + 1]))
        .collect();
    minima.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]));
    minima.truncate(REFINED_MINIMA);

    let d = |w: f64| (point - path.point(w)).norm();
    let mut best = (dist[minima[0]], ws[minima[0]]);
    for i in minima {
        let a = ws[i.saturating_sub(1)];
        let b = ws[(i + 1).min(samples - 1)];
        let (w, value) = golden_min(&d, a, b);
        if value < best.0 {
            best = (value, w);
        }
    }
    Ok(DistanceEstimate {
        distance: best.0,
        w: best.1,
        sampling_bound: 0.5 * step * speed,
    })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    let w = 0.5 * (a + b);
    (w, f(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Decay rate, `-slope` of `ln |e|` against time.
    pub lambda: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of `ln e(t)` on `t` after discarding the first
/// `burn_in` fraction of the time span. The series is cut at its first
/// non-positive (or non-finite) value after burn-in.
pub fn fit_exponential_rate(times: &[f64], errors: &[f64], burn_in: f64) -> Result<RateFit> {
    if times.len() != errors.len() {
        return Err(GvfError::Shape(format!(
            "{} times but {} error values",
            times.len(),
            errors.len()
        )));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(GvfError::Parameter(format!("burn-in fraction must be in [0, 1), got {burn_in}")));
    }
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(GvfError::InsufficientData("empty series".into()));
    };
    let start = t0 + burn_in * (t1 - t0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|(t, _)| **t >= start)
        .take_while(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(GvfError::InsufficientData(format!(
            "{} usable points after burn-in, need at least 10",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    // a flat series is fit exactly by a zero slope
    let (slope, r2) = if syy <= f64::EPSILON * my.abs().max(1.0) * n {
        (0.0, 1.0)
    } else {
        let slope = sty / stt;
        let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
        (slope, 1.0 - resid / syy)
    };
    Ok(RateFit {
        lambda: -slope,
        r2,
        points: pts.len(),
    })
}

/// Where the physical path is searched when computing distances.
#[derive(Debug, Clone)]
pub struct DistanceSpec {
    pub path: ParametricPath,
    pub w_range: (f64, f64),
    pub samples: usize,
    /// Compute the distance at every `stride`-th record.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Present only when the fit reaches the R² threshold.
    pub lambda: Option<f64>,
    pub r2: Option<f64>,
    /// `sup |e|` after burn-in.
    pub ultimate_bound: f64,
    pub final_error: f64,
    pub termination: Termination,
    #[serde(skip)]
    pub error_series: Vec<(f64, f64)>,
    #[serde(skip)]
    pub distance_series: Vec<(f64, f64)>,
}

impl ConvergenceReport {
    pub fn from_trajectory(
        traj: &Trajectory,
        burn_in: f64,
        r2_threshold: f64,
        distance: Option<&DistanceSpec>,
    ) -> Result<Self> {
        let times = traj.times();
        let errors = traj.error_norms();
        let fit = fit_exponential_rate(&times, &errors, burn_in).ok();
        let (lambda, r2) = match fit {
            Some(f) if f.r2 >= r2_threshold => (Some(f.lambda), Some(f.r2)),
            Some(f) => (None, Some(f.r2)),
            None => (None, None),
        };
        let t0 = times[0];
        let start = t0 + burn_in * (times[times.len() - 1] - t0);
        let ultimate_bound = times
            .iter()
            .zip(&errors)
            .filter(|(t, _)| **t >= start)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max);
        let mut distance_series = Vec::new();
        if let Some(spec) = distance {
            for r in traj.records.iter().step_by(spec.stride.max(1)) {
                let p = DVector::from_vec(traj.position(r));
                let d = distance_to_path(&p, &spec.path, spec.w_range, spec.samples)?;
                distance_series.push((r.t, d.distance));
            }
        }
        Ok(Self {
            lambda,
            r2,
            ultimate_bound,
            final_error: traj.last().err_norm,
            termination: traj.termination,
            error_series: times.into_iter().zip(errors).collect(),
            distance_series,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationRow {
    pub kappa: f64,
    /// Smallest `|e|` among samples at distance `>= kappa`; `None` if no
    /// sample qualified.
    pub estimate: Option<f64>,
    pub samples: usize,
    pub flagged: bool,
}

/// Monte-Carlo estimate of `inf { |e(xi)| : dist(xi, P) >= kappa }` over a
/// box. `path` traces `P` in the same space as the stack.
pub fn separation_diagnostic(
    stack: &SurfaceStack,
    path: &DistanceSpec,
    region: &ScanBox,
    kappas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SeparationRow>> {
    if region.bounds.len() != stack.ambient_dim() {
        return Err(GvfError::Shape(format!(
            "box has {} axes, stack lives in R^{}",
            region.bounds.len(),
            stack.ambient_dim()
        )));
    }
    check_box(region)?;
    if let Some(k) = kappas.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(GvfError::Parameter(format!("kappa must be > 0, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<SeparationRow> = kappas
        .iter()
        .map(|&kappa| SeparationRow {
            kappa,
            estimate: None,
            samples: 0,
            flagged: false,
        })
        .collect();
    for _ in 0..samples {
        let xi = uniform_in(region, &mut rng);
        let dist = distance_to_path(&xi, &path.path, path.w_range, path.samples)?.distance;
        let err = stack.values(&xi).norm();
        for row in rows.iter_mut().filter(|r| dist >= r.kappa) {
            row.samples += 1;
            row.estimate = Some(row.estimate.map_or(err, |e: f64| e.min(err)));
        }
    }
    for row in &mut rows {
        row.flagged = row.estimate.is_some_and(|e| e <= SEPARATION_FLAG);
    }
    Ok(rows)
}

fn check_box(region: &ScanBox) -> Result<()> {
    for (i, &(lo, hi)) in region.bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(GvfError::Domain(format!("box axis {i} must be finite and nonempty, got [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn uniform_in(region: &ScanBox, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        region.bounds.len(),
        region.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuidingPointTrace {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    /// Physical position of the guiding point `f(w(t))`.
    pub points: Vec<Vec<f64>>,
    /// Sign of `dw/dt` (taken from the virtual field component), `0` when it vanishes.
    pub w_dot_sign: Vec<i8>,
    pub sign_changes: usize,
    pub bidirectional: bool,
}

pub fn guiding_point_trace(traj: &Trajectory, path: &ParametricPath) -> Result<GuidingPointTrace> {
    if !traj.layout.virtual_coordinate {
        return Err(GvfError::Shape("trajectory carries no virtual coordinate".into()));
    }
    let wi = traj.layout.physical;
    let mut out = GuidingPointTrace {
        times: Vec::with_capacity(traj.records.len()),
        w: Vec::with_capacity(traj.records.len()),
        points: Vec::with_capacity(traj.records.len()),
        w_dot_sign: Vec::with_capacity(traj.records.len()),
        sign_changes: 0,
        bidirectional: false,
    };
    let mut last = 0i8;
    for r in &traj.records {
        let w = r.xi[wi];
        let sign = match r.chi[wi] {
            c if c > 0.0 => 1,
            c if c < 0.0 => -1,
            _ => 0,
        };
        if sign != 0 {
            if last != 0 && sign != last {
                out.sign_changes += 1;
            }
            last = sign;
        }
        out.times.push(r.t);
        out.w.push(w);
        out.points.push(path.eval(w)?.point.iter().copied().collect());
        out.w_dot_sign.push(sign);
    }
    out.bidirectional = out.sign_changes > 0;
    Ok(out)
}

/// `(det(N^T N), |cross(grad phi)|^2)`; the two agree identically.
pub fn normal_gram_identity(sample: &FieldSample) -> Result<(f64, f64)> {
    let n = &sample.normals;
    let cols: Vec<DVector<f64>> = n.column_iter().map(|c| c.into_owned()).collect();
    let cross = cross_n(&cols)?;
    Ok(((n.transpose() * n).determinant(), cross.norm_squared()))
}

/// `Q = K N^T N K`, whose smallest eigenvalue bounds the local decay rate.
pub fn q_matrix(sample: &FieldSample, gains: &[f64]) -> Result<DMatrix<f64>> {
    if gains.len() != sample.normals.ncols() {
        return Err(GvfError::Shape(format!(
            "{} gains for {} surfaces",
            gains.len(),
            sample.normals.ncols()
        )));
    }
    let k = DMatrix::from_diagonal(&DVector::from_column_slice(gains));
    let nk = &sample.normals * &k;
    Ok(nk.transpose() * nk)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QBound {
    /// Smallest `lambda_min(Q)` among the samples with `|e| <= alpha`.
    pub lambda_min: Option<f64>,
    pub samples: usize,
}

/// Smallest eigenvalue of `Q` over random points of `region` lying in the
/// neighborhood `|e| <= alpha` of the path.
pub fn sampled_q_bound(
    field: &dyn VectorField,
    region: &ScanBox,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<QBound> {
    if region.bounds.len() != field.dim() {
        return Err(GvfError::Shape(format!(
            "box has {} axes, field lives in R^{}",
            region.bounds.len(),
            field.dim()
        )));
    }
    check_box(region)?;
    let gains = field.params().gains().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bound = QBound {
        lambda_min: None,
        samples: 0,
    };
    for _ in 0..samples {
        let xi = uniform_in(region, &mut rng);
        let sample = field.sample(&xi)?;
        if sample.e.norm() > alpha {
            continue;
        }
        let q = q_matrix(&sample, &gains)?;
        let low = q.symmetric_eigenvalues().min();
        bound.samples += 1;
        bound.lambda_min = Some(bound.lambda_min.map_or(low, |b: f64| b.min(low)));
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{ConventionalField, GvfParams, SingularityFreeField};
    use crate::path::{catalog_make, implicit_catalog, implicit_from_parametric, Params, Reparameterization};
    use crate::sim::{simulate, InitialState, ModelKind, Scenario};

    fn circle() -> ParametricPath {
        catalog_make("circle", &Params::new()).unwrap()
    }

    fn lifted_circle_field() -> SingularityFreeField {
        SingularityFreeField::new(
            circle(),
            1.0,
            Reparameterization::identity(),
            GvfParams::new(vec![1.0, 1.0], 1.0).unwrap(),
        )
        .unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn lyapunov_examples() {
        let n = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(lyapunov(&v(&[1.0]), &[1.0], &n).unwrap().0, 0.5);
        assert_eq!(lyapunov(&v(&[0.0]), &[1.0], &n).unwrap(), (0.0, 0.0));
        let stack = implicit_catalog("circle_implicit", None).unwrap();
        let f = ConventionalField::new(stack, GvfParams::new(vec![1.0], 1.0).unwrap()).unwrap();
        let (_, vdot) = lyapunov_of(&f.sample(&v(&[2.0, 0.0])).unwrap(), &[1.0]).unwrap();
        assert!((vdot + 144.0).abs() < 1e-12);
        assert!(lyapunov(&v(&[1.0, 2.0]), &[1.0], &n).is_err());
    }

    #[test]
    fn distance_examples() {
        let c = circle();
        let range = (0.0, 2.0 * std::f64::consts::PI);
        let on = distance_to_path(&c.point(0.7), &c, range, 64).unwrap();
        assert!(on.distance < 1e-9);
        assert!((distance_to_path(&v(&[2.0, 0.0]), &c, range, 64).unwrap().distance - 1.0).abs() < 1e-6);
        assert!((distance_to_path(&v(&[0.0, 0.0]), &c, range, 64).unwrap().distance - 1.0).abs() < 1e-6);
        let off = distance_to_path(&v(&[0.3, -1.9]), &c, range, 64).unwrap();
        assert!((off.distance - (0.3f64.hypot(1.9) - 1.0)).abs() < 1e-9);
        assert!(distance_to_path(&v(&[0.0, 0.0]), &c, range, 10).is_err());
        assert!(distance_to_path(&v(&[0.0, 0.0]), &c, (1.0, f64::INFINITY), 64).is_err());
    }

    #[test]
    fn planted_rates() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_exponential_rate(&t, &e, 0.2).unwrap();
        assert!((f.lambda - 2.0).abs() < 1e-6 && (f.r2 - 1.0).abs() < 1e-9);
        let e: Vec<f64> = t.iter().map(|t| 3.0 * (-0.5 * t).exp()).collect();
        assert!((fit_exponential_rate(&t, &e, 0.2).unwrap().lambda - 0.5).abs() < 1e-6);
        let f = fit_exponential_rate(&t, &vec![0.3; t.len()], 0.2).unwrap();
        assert_eq!(f.lambda, 0.0);
    }

    #[test]
    fn fit_needs_data() {
        let t: Vec<f64> = (0..12).map(f64::from).collect();
        let mut e = vec![1.0; 12];
        e[3] = 0.0;
        assert!(matches!(fit_exponential_rate(&t, &e, 0.0), Err(GvfError::InsufficientData(_))));
        assert!(matches!(fit_exponential_rate(&[], &[], 0.2), Err(GvfError::InsufficientData(_))));
    }

    #[test]
    fn circle_separation() {
        let stack = implicit_catalog("circle_implicit", None).unwrap();
        let spec = DistanceSpec {
            path: circle(),
            w_range: (0.0, 2.0 * std::f64::consts::PI),
            samples: 64,
            stride: 1,
        };
        let rows = separation_diagnostic(&stack, &spec, &ScanBox::cube(2, -2.0, 2.0), &[0.5, 1e-4], 5_000, 3)
            .unwrap();
        let est = rows[0].estimate.unwrap();
        assert!(est >= 0.75 - 1e-9 && est < 0.77, "{est}");
        assert!(!rows[0].flagged);
        assert!(rows[1].estimate.unwrap() < 1e-2);
    }

    #[test]
    fn lifted_circle_gram_determinant() {
        let f = lifted_circle_field();
        for w in [0.0f64, 0.4, -2.0] {
            let s = f.sample(&v(&[w.cos(), w.sin(), w])).unwrap();
            let (det, cross) = normal_gram_identity(&s).unwrap();
            assert!((det - 2.0).abs() < 1e-12 && (cross - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_bound_on_lifted_circle() {
        let f = lifted_circle_field();
        let b = sampled_q_bound(&f, &ScanBox::cube(3, -2.0, 2.0), 1.0, 2000, 9).unwrap();
        assert!(b.samples > 0 && b.lambda_min.unwrap() > 0.0);
    }

    #[test]
    fn virtual_component_changes_sign() {
        // at w = 0 on the lifted unit circle the virtual component is 1 + y
        let f = lifted_circle_field();
        let below = f.sample(&v(&[1.0, -3.0, 0.0])).unwrap();
        let above = f.sample(&v(&[1.0, 3.0, 0.0])).unwrap();
        assert_eq!((below.chi[2], above.chi[2]), (-2.0, 4.0));
        assert!(below.chi[2] * above.chi[2] < 0.0);
    }

    #[test]
    fn guiding_point_on_path_is_monotone() {
        let field = Arc::new(lifted_circle_field());
        let mut sc = Scenario::new(
            field,
            ModelKind::SingleIntegrator,
            InitialState {
                position: vec![1.0, 0.0],
                theta: 0.0,
                w: 0.0,
            },
        );
        sc.dt = 0.01;
        sc.duration = 2.0;
        let traj = simulate(&sc).unwrap();
        let trace = guiding_point_trace(&traj, &circle()).unwrap();
        assert!(!trace.bidirectional);
        assert!(trace.w_dot_sign.iter().all(|s| *s == trace.w_dot_sign[0] && *s != 0));
        let report = ConvergenceReport::from_trajectory(&traj, 0.2, 0.99, None).unwrap();
        assert!(report.final_error < 1e-8, "{}", report.final_error);
    }

    #[test]
    fn lifted_stack_separation_positive() {
        let stack = implicit_from_parametric(&circle(), 1.0, &Reparameterization::identity()).unwrap();
        let spec = DistanceSpec {
            path: circle().lifted(),
            w_range: (-6.0, 6.0),
            samples: 256,
            stride: 1,
        };
        let rows =
            separation_diagnostic(&stack, &spec, &ScanBox::cube(3, -2.0, 2.0), &[0.5], 1000, 11).unwrap();
        assert!(rows[0].estimate.unwrap() > 0.0);
    }
}
