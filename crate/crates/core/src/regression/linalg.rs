use nalgebra::{DMatrix, DVector};

use super::RegressionError;

/// Solves (A + αI)x = b for symmetric A: Cholesky, falling back to LU, then
/// one step of iterative refinement.
pub fn solve_shifted(a: &DMatrix<f64>, alpha: f64, b: &DVector<f64>) -> Result<DVector<f64>, RegressionError> {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += alpha;
    }
    let solve: Box<dyn Fn(&DVector<f64>) -> Option<DVector<f64>>> = match m.clone().cholesky() {
        Some(ch) => Box::new(move |r| Some(ch.solve(r))),
        None => {
            let lu = m.clone().lu();
            if !lu.is_invertible() {
                return Err(RegressionError::Singular);
            }
            Box::new(move |r| lu.solve(r))
        }
    };
    let mut x = solve(b).ok_or(RegressionError::Singular)?;
    let residual = b - &m * &x;
    if let Some(dx) = solve(&residual) {
        if dx.iter().all(|v| v.is_finite()) {
            x += dx;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::Singular);
    }
    Ok(x)
}

/// Squared Euclidean distances between the rows of `a` and the rows of `b`.
pub fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = a.shape();
    let m = b.nrows();
    // Row-major copies keep the inner loop contiguous.
    let ar: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| a[(i, j)])).collect();
    let br: Vec<f64> = (0..m).flat_map(|i| (0..d).map(move |j| b[(i, j)])).collect();
    DMatrix::from_fn(n, m, |i, j| {
        ar[i * d..(i + 1) * d]
            .iter()
            .zip(&br[j * d..(j + 1) * d])
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    })
}
