//! Parameterized adaptive-moment optimizers and online coefficient learning.
//!
//! A single update rule spans Adam, AMSGrad, AVGrad, Yogi, Adan and Lion; the
//! [`hyper`] loop adapts its coefficients with one-step hyper-gradients.

mod error;
pub mod exec;
pub mod harness;
pub mod hyper;
pub mod base_opt;
pub mod numkit;
pub mod poly_opt;
pub mod problems;
pub mod record;
pub mod run;
pub mod theory;

pub use error::{Error, Result};
