use crate::discretization::Tridiagonal;
use crate::error::{Error, Result};

/// Thomas elimination without pivoting. Stable for diagonally dominant
/// systems; a zero pivot is reported rather than divided through.
pub fn tridiagonal_solve(t: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if rhs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = t.diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot(0));
    }
    c[0] = if n > 1 { t.upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = t.diag[i] - t.lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::ZeroPivot(i));
        }
        c[i] = if i + 1 < n { t.upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - t.lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
