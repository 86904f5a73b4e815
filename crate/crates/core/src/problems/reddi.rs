//! The online convex counterexample on `x ∈ [-1, 1]`:
//! `g_t(x) = 1010·x` when `t mod 101 = 1`, otherwise `−10·x`.
//! The optimum of the summed loss is `x = −1`.

use crate::error::{contract, Error, Result};

pub const REDDI_PERIOD: u64 = 101;

fn slope(t: u64) -> f64 {
    if t % REDDI_PERIOD == 1 {
        1010.0
    } else {
        -10.0
    }
}

fn check(t: u64, x: f64) -> Result<()> {
    contract!(t >= 1, "step index must be at least 1");
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} lies outside [-1, 1]")));
    }
    Ok(())
}

pub fn reddi_grad(t: u64, x: f64) -> Result<f64> {
    check(t, x)?;
    Ok(slope(t))
}

/// `g_t(x)`; 0 at the origin, linear in `x`.
pub fn reddi_loss(t: u64, x: f64) -> f64 {
    slope(t) * x
}

/// Running average `(1/t) Σ_{j≤t} (g_j(x_j) − g_j(−1))`, where `history[j−1]` is the
/// point played against `g_j`.
pub fn reddi_average_regret(history: &[f64]) -> Result<Vec<f64>> {
    contract!(!history.is_empty(), "regret needs a non-empty history");
    let mut total = 0.0;
    history
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = i as u64 + 1;
            check(t, x)?;
            total += reddi_loss(t, x) - reddi_loss(t, -1.0);
            Ok(total / t as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gradient_cases() {
        assert_eq!(reddi_grad(1, 0.5).unwrap(), 1010.0);
        assert_eq!(reddi_grad(2, 0.5).unwrap(), -10.0);
        assert_eq!(reddi_grad(102, -1.0).unwrap(), 1010.0);
        assert!(matches!(reddi_grad(3, 1.01), Err(Error::Domain(_))));
        assert!(matches!(reddi_grad(0, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn regret_cases() {
        assert_eq!(reddi_average_regret(&[-1.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(reddi_average_regret(&[1.0]).unwrap(), vec![2020.0]);
        // g_1(0) − g_1(−1) = 1010, g_2(0) − g_2(−1) = −10.
        assert_eq!(reddi_average_regret(&[0.0, 0.0]).unwrap(), vec![1010.0, 500.0]);
        assert!(reddi_average_regret(&[]).is_err());
    }

    #[test]
    fn per_step_regret_can_be_negative() {
        // −1 is optimal for the summed loss, not for every prefix.
        let r = reddi_average_regret(&[-1.0, 1.0]).unwrap();
        assert_eq!(r, vec![0.0, -10.0]);
    }

    proptest! {
        #[test]
        fn periodic(t in 1u64..1_000_000, x in -1.0f64..=1.0) {
            prop_assert_eq!(reddi_grad(t, x).unwrap(), reddi_grad(t + REDDI_PERIOD, x).unwrap());
        }

        #[test]
        fn full_period_regret_is_nonnegative(xs in proptest::collection::vec(-1.0f64..=1.0, 101)) {
            let avg = reddi_average_regret(&xs).unwrap();
            // Over whole periods the summed loss is minimized at −1: with x constant the
            // period loss is (1010 − 1000)·x = 10x.
            let constant = reddi_average_regret(&[xs[0]; 101]).unwrap();
            prop_assert!(constant[100] >= 0.0);
            prop_assert!(avg.iter().all(|v| v.is_finite()));
        }
    }
}
