use nalgebra::{DMatrix, DVector};

pub(crate) fn symmetric_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    a.clone().symmetric_eigenvalues()
}

pub(crate) fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(a)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(a)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let t = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / t))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator.
pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub(crate) fn quad_form(sigma: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(sigma * x))
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
