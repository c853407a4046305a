use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{central_jacobian, VectorField};
use crate::error::{GvfError, Result};

/// Axis-aligned search region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanBox {
    pub bounds: Vec<(f64, f64)>,
}

impl ScanBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { bounds: vec![(lo, hi); dim] }
    }

    fn contains(&self, x: &DVector<f64>, slack: f64) -> bool {
        self.bounds.iter().zip(x.iter()).all(|(&(lo, hi), &v)| {
            let pad = slack * (hi - lo);
            v >= lo - pad && v <= hi + pad
        })
    }
}

const ZERO_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-6;
const MAX_NODES: usize = 1 << 22;
const MAX_CANDIDATES: usize = 512;
const MAX_NEWTON_ITERS: usize = 100;

/// Finds zeros of `field` inside `region`: local minima of `|chi|` on a
/// uniform grid are refined by damped Newton iteration with a
/// finite-difference Jacobian. Returns points with `|chi| <= 1e-10`,
/// deduplicated within `1e-6` and sorted lexicographically (coordinates
/// closer than `1e-6` compare equal).
pub fn singular_scan(field: &dyn VectorField, region: &ScanBox, grid: usize) -> Result<Vec<DVector<f64>>> {
    let m = field.dim();
    if region.bounds.len() != m {
        return Err(GvfError::Shape(format!(
            "scan box has {} axes, field lives in R^{m}",
            region.bounds.len()
        )));
    }
    if let Some((lo, hi)) = region.bounds.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo)) {
        return Err(GvfError::Parameter(format!("degenerate scan interval [{lo}, {hi}]")));
    }
    if grid < 8 {
        return Err(GvfError::Parameter(format!("scan grid must have at least 8 nodes per axis, got {grid}")));
    }
    let nodes = grid
        .checked_pow(m as u32)
        .filter(|n| *n <= MAX_NODES)
        .ok_or_else(|| GvfError::Parameter(format!("scan grid {grid}^{m} is too large")))?;

    let node = |flat: usize| -> DVector<f64> {
        let mut rem = flat;
        DVector::from_fn(m, |axis, _| {
            let idx = rem % grid;
            rem /= grid;
            let (lo, hi) = region.bounds[axis];
            lo + (hi - lo) * idx as f64 / (grid - 1) as f64
        })
    };
    let values: Vec<f64> = (0..nodes)
        .map(|i| field.sample(&node(i)).map(|s| s.chi.norm()))
        .collect::<Result<_>>()?;

    let mut candidates: Vec<usize> = (0..nodes)
        .filter(|&flat| {
            let mut stride = 1;
            let mut rem = flat;
            for _ in 0..m {
                let idx = rem % grid;
                rem /= grid;
                if idx > 0 && values[flat - stride] < values[flat] {
                    return false;
                }
                if idx + 1 < grid && values[flat + stride] < values[flat] {
                    return false;
                }
                stride *= grid;
            }
            true
        })
        .collect();
    candidates.sort_by(|a, b| values[*a].total_cmp(&values[*b]).then(a.cmp(b)));
    candidates.truncate(MAX_CANDIDATES);

    let mut found: Vec<DVector<f64>> = Vec::new();
    for flat in candidates {
        let Some(root) = refine(field, node(flat))? else {
            continue;
        };
        if !region.contains(&root, 1e-9) {
            continue;
        }
        if found.iter().all(|p| (p - &root).norm() > DEDUP_TOL) {
            found.push(root);
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| if (x - y).abs() <= DEDUP_TOL { std::cmp::Ordering::Equal } else { x.total_cmp(y) })
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

fn refine(field: &dyn VectorField, start: DVector<f64>) -> Result<Option<DVector<f64>>> {
    let chi = |x: &DVector<f64>| field.sample(x).map(|s| s.chi);
    let mut x = start;
    let mut fx = chi(&x)?;
    for _ in 0..MAX_NEWTON_ITERS {
        let norm = fx.norm();
        if norm <= ZERO_TOL {
            return Ok(Some(x));
        }
        let jac = central_jacobian(chi, &x, 1e-7)?;
        let Some(step) = jac.lu().solve(&fx) else {
            return Ok(None);
        };
        let mut damping = 1.0;
        loop {
            let trial = &x - &step * damping;
            let ft = chi(&trial)?;
            if ft.norm() < norm {
                x = trial;
                fx = ft;
                break;
            }
            damping *= 0.5;
            if damping < 1e-6 {
                return Ok(None);
            }
        }
    }
    Ok((fx.norm() <= ZERO_TOL).then_some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConventionalField, GvfParams, Orientation};
    use crate::path::implicit_catalog;

    fn planar(name: &str) -> ConventionalField {
        let params = GvfParams::new(vec![1.0], 1.0).unwrap().with_orientation(Orientation::Negative);
        ConventionalField::new(implicit_catalog(name, None).unwrap(), params).unwrap()
    }

    #[test]
    fn circle_has_single_singular_point() {
        let pts = singular_scan(&planar("circle_implicit"), &ScanBox::cube(2, -2.0, 2.0), 16).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].norm() < 1e-6);
    }

    #[test]
    fn figure_eight_has_three() {
        let pts = singular_scan(&planar("figure8_implicit"), &ScanBox::cube(2, -2.0, 2.0), 16).unwrap();
        assert_eq!(pts.len(), 3, "{pts:?}");
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (p, y) in pts.iter().zip([-h, 0.0, h]) {
            assert!(p[0].abs() < 1e-6 && (p[1] - y).abs() < 1e-6, "{p}");
        }
    }

    #[test]
    fn precondition_errors() {
        let f = planar("circle_implicit");
        assert!(singular_scan(&f, &ScanBox::cube(2, -2.0, 2.0), 4).is_err());
        assert!(singular_scan(&f, &ScanBox::cube(2, 1.0, 1.0), 8).is_err());
        assert!(singular_scan(&f, &ScanBox::cube(3, -1.0, 1.0), 8).is_err());
    }
}
