//! Shared numeric plumbing: dense vectors, learning-rate schedules,
//! seeded random streams and finite differences.

mod diff;
mod rng;
mod schedule;
mod vector;

pub use diff::{central_diff, rel_err, DEFAULT_FD_STEP};
pub use rng::Rng;
pub use schedule::Schedule;
pub use vector::ParamVector;

/// `sign` with `sign(0) = 0`, unlike [`f64::signum`].
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::sign;

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(3.5), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }
}
