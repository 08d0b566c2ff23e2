//! Central finite differences for checking hand-written gradients.

use crate::matrix::DenseMatrix;

/// Numerical gradient of `f` at `x` by central differences with step `eps`.
pub fn central_difference(
    x: &DenseMatrix,
    eps: f64,
    mut f: impl FnMut(&DenseMatrix) -> f64,
) -> DenseMatrix {
    let mut probe = x.clone();
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for idx in 0..x.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + eps;
        let plus = f(&probe);
        probe.as_mut_slice()[idx] = orig - eps;
        let minus = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        out.as_mut_slice()[idx] = (plus - minus) / (2.0 * eps);
    }
    out
}

/// Largest entrywise `|a − b| / max(|a|, |b|, floor)`.
///
/// `floor` keeps entries that are zero in both gradients from dividing by
/// zero; it is applied per entry, not to the whole matrix.
pub fn max_relative_error(analytic: &DenseMatrix, numeric: &DenseMatrix, floor: f64) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shape mismatch");
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Matrix-wise relative error `‖a − n‖_F / max(‖a‖_F, ‖n‖_F)`; 0 when both are zero.
pub fn frobenius_relative_error(analytic: &DenseMatrix, numeric: &DenseMatrix) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shape mismatch");
    let norm = |it: &mut dyn Iterator<Item = f64>| it.map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(
        &mut analytic
            .as_slice()
            .iter()
            .zip(numeric.as_slice())
            .map(|(a, b)| a - b),
    );
    let scale = norm(&mut analytic.as_slice().iter().copied())
        .max(norm(&mut numeric.as_slice().iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
