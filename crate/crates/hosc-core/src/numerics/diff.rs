//! Central finite differences for derivative verification.

use super::NumericsError;

/// `(f(x+h) - f(x-h)) / (2h)`. Errors if either evaluation is non-finite.
pub fn central_diff(
    f: impl Fn(f64) -> f64,
    x: f64,
    h: f64,
) -> Result<f64, NumericsError> {
    assert!(h > 0.0, "central_diff needs h > 0");
    let hi = f(x + h);
    let lo = f(x - h);
    if !hi.is_finite() || !lo.is_finite() {
        return Err(NumericsError::NonFinite { context: "central_diff" });
    }
    Ok((hi - lo) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_slope_two_x() {
        let d = central_diff(|x| x * x, 2.0, 1e-6).unwrap();
        assert!((d - 4.0).abs() <= 1e-6, "got {d}");
    }

    #[test]
    fn constant_has_zero_slope() {
        let d = central_diff(|_| 5.0, 1.3, 1e-6).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn nonfinite_evaluation_errors() {
        assert!(central_diff(|x| 1.0 / (x - 1.0), 1.0 + 1e-7, 1e-7).is_err());
    }
}
