use std::ops::{Deref, DerefMut};

use crate::error::{contract, Error, Result};

/// A fixed-length dense vector of model coordinates.
///
/// Derefs to `[f64]` so coordinates can be read and written in place, but the
/// length can only be set at construction.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    /// Largest coordinate-wise absolute difference.
    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Errors with a numeric error naming `what` if any entry is NaN or infinite.
    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.0.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Numeric(format!(
                "{what} has non-finite entry {} at index {i}",
                self.0[i]
            ))),
        }
    }

    pub fn ensure_len(&self, len: usize, what: &str) -> Result<()> {
        contract!(
            self.len() == len,
            "{what} has length {}, expected {len}",
            self.len()
        );
        Ok(())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for ParamVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl FromIterator<f64> for ParamVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_diffs() {
        let a = ParamVector::from([3.0, -4.0]);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.max_abs_diff(&[3.0, 1.0]), 5.0);
        assert_eq!(a.dot(&[1.0, 1.0]), -1.0);
    }

    #[test]
    fn finiteness_check_names_offender() {
        let a = ParamVector::from([1.0, f64::NAN]);
        let err = a.ensure_finite("grad").unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(err.to_string().contains("index 1"));
        assert!(ParamVector::zeros(3).ensure_len(2, "x").is_err());
    }
}
