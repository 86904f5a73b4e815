use crate::error::{Error, Result};

/// Default step for central differences at 64-bit precision.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central difference `(f(x0 + h) - f(x0 - h)) / 2h`.
pub fn central_diff<F>(mut f: F, x0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Contract(format!("finite-difference step must be > 0, got {h}")));
    }
    let hi = f(x0 + h);
    let lo = f(x0 - h);
    if !hi.is_finite() || !lo.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite function value near x0 = {x0}: f(x0+h) = {hi}, f(x0-h) = {lo}"
        )));
    }
    Ok((hi - lo) / (2.0 * h))
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
///
/// The floor keeps pairs of near-zero values from reporting huge relative
/// error from round-off alone.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let d = central_diff(|x| x * x, 3.0, 1e-5).unwrap();
        assert!((d - 6.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn constant_has_zero_slope() {
        assert_eq!(central_diff(|_| 4.2, -7.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn sine_at_origin() {
        let d = central_diff(f64::sin, 0.0, 1e-4).unwrap();
        assert!((d - 1.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn rejects_non_finite_values_and_bad_steps() {
        assert!(matches!(
            central_diff(|x| 1.0 / x, 0.0, 0.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            central_diff(|x| if x > 0.0 { f64::INFINITY } else { 0.0 }, 0.0, 1e-3),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn rel_err_floor() {
        assert_eq!(rel_err(0.0, 0.0, 0.0), 0.0);
        assert_eq!(rel_err(2.0, 1.0, 0.0), 0.5);
        assert_eq!(rel_err(1e-12, 0.0, 1e-6), 1e-6);
    }
}
