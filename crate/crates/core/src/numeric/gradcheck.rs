use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Maximum relative error between `analytic` and central finite differences of
/// `f` around `x`.
///
/// Relative error per entry is `|a - g| / max(|a|, |g|, 1e-8)`.
pub fn grad_check<F>(mut f: F, x: &Matrix, analytic: &Matrix, eps: f64) -> Result<f64>
where
    F: FnMut(&Matrix) -> f64,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if x.shape() != analytic.shape() {
        return Err(Error::Shape {
            op: "grad_check",
            left: x.shape(),
            right: analytic.shape(),
        });
    }
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for idx in 0..x.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + eps;
        let plus = f(&probe);
        probe.as_mut_slice()[idx] = orig - eps;
        let minus = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("objective at probe point for entry {idx}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(analytic.as_slice()[idx], numeric));
    }
    Ok(worst)
}

#[inline]
pub fn relative_error(a: f64, g: f64) -> f64 {
    (a - g).abs() / a.abs().max(g.abs()).max(1e-8)
}
