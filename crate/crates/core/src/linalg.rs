//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Solves `min_B ‖X·B − Y‖²/n + ridge·‖B_penalized‖²` by QR of the augmented
/// system. Column 0 of `x` is left unpenalized when `free_first` is set, which
/// is how an intercept column is handled.
pub fn ridge_lstsq(x: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64, free_first: bool) -> DMatrix<f64> {
    let (n, p) = x.shape();
    assert_eq!(y.nrows(), n, "row mismatch");
    let first = usize::from(free_first);
    let extra = if ridge > 0.0 { p - first } else { 0 };
    let mut a = DMatrix::<f64>::zeros(n + extra, p);
    a.rows_mut(0, n).copy_from(x);
    let mut b = DMatrix::<f64>::zeros(n + extra, y.ncols());
    b.rows_mut(0, n).copy_from(y);
    let s = (ridge * n as f64).sqrt();
    for i in 0..extra {
        a[(n + i, first + i)] = s;
    }
    let qr = a.qr();
    let rhs = qr.q().transpose() * b;
    qr.r()
        .solve_upper_triangular(&rhs)
        .expect("ridge system is full column rank")
}

/// Weighted least-squares line through `(x_i, y_i)` with weights `w_i ≥ 0`.
/// Returns `(slope, intercept)`; slope is 0 when the weighted abscissae
/// coincide.
pub fn weighted_line(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let ws: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / ws;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / ws;
    let distinct = points
        .iter()
        .filter(|p| p.2 > 0.0)
        .any(|p| p.0 != points.iter().find(|q| q.2 > 0.0).unwrap().0);
    if !distinct {
        return (0.0, my);
    }
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recovery() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DMatrix::from_row_slice(4, 1, &[1.0, 3.0, 5.0, 7.0]);
        let b = ridge_lstsq(&x, &y, 0.0, true);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_resolves_collinear_columns() {
        // second and third columns add up to the intercept column
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.8, 1.0, 0.5, 0.5, 1.0, 0.9, 0.1]);
        let y = DMatrix::from_row_slice(3, 1, &[0.0, 0.75, 1.75]);
        let b = ridge_lstsq(&x, &y, 1e-8, true);
        let fit = &x * &b;
        for i in 0..3 {
            assert!((fit[i] - y[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn weighted_line_cases() {
        let (s, c) = weighted_line(&[(0.0, 1.0, 1.0), (1.0, 3.0, 1.0)]);
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        let (s, c) = weighted_line(&[(0.5, 1.0, 1.0), (0.5, 3.0, 3.0)]);
        assert_eq!(s, 0.0);
        assert!((c - 2.5).abs() < 1e-15);
        // zero-weight points do not count as distinct
        let (s, _) = weighted_line(&[(0.5, 1.0, 1.0), (0.9, 3.0, 0.0)]);
        assert_eq!(s, 0.0);
    }
}
