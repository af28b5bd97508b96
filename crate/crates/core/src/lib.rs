//! Stability experiments for Nesterov's accelerated gradient method.
//!
//! The crate builds adversarial convex smooth objectives on which two NAG runs
//! started `eps` apart separate exponentially fast, and checks the matching
//! upper bounds for GD and for NAG on quadratics.

pub mod check;
pub mod error;
pub mod hardfn;
pub mod nag;
pub mod objective;
pub mod quadmat;
pub mod sampling;
pub mod stability;
pub mod uniform;
pub mod variants;

pub use check::{CheckOutcome, Report, Verdict};
pub use error::{Error, Result};
