use nalgebra::{DMatrix, DVector};

use crate::error::{GvfError, Result};

/// Generalized cross product of `m - 1` vectors in `R^m`.
///
/// Component `k` (1-based) is `(-1)^(k-1)` times the determinant of the
/// `(m-1) x (m-1)` matrix obtained by stacking the inputs as rows and
/// deleting column `k`. For `m = 3` this is the usual cross product; for
/// `m = 2` it maps `(a, b)` to `(b, -a)`.
pub fn cross_n(vectors: &[DVector<f64>]) -> Result<DVector<f64>> {
    let m = vectors.len() + 1;
    if vectors.is_empty() {
        return Err(GvfError::Shape("cross product needs at least one vector".into()));
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != m) {
        return Err(GvfError::Shape(format!(
            "{} vectors need length {m}, got one of length {}",
            m - 1,
            bad.len()
        )));
    }
    let rows = DMatrix::from_fn(m - 1, m, |r, c| vectors[r][c]);
    Ok(cross_of_rows(&rows))
}

/// Cross product of the rows of an `(m-1) x m` matrix.
pub(crate) fn cross_of_rows(rows: &DMatrix<f64>) -> DVector<f64> {
    let m = rows.ncols();
    DVector::from_fn(m, |k, _| {
        let minor = rows.clone().remove_column(k);
        let det = match m - 1 {
            1 => minor[(0, 0)],
            2 => minor[(0, 0)] * minor[(1, 1)] - minor[(0, 1)] * minor[(1, 0)],
            _ => minor.determinant(),
        };
        if k % 2 == 0 {
            det
        } else {
            -det
        }
    })
}
