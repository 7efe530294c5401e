//! Slow, independent reference implementations used only by the test suites.
//!
//! Nothing here shares code with `gnep-core`: linear algebra runs in exact
//! rational arithmetic or through plain textbook algorithms.

pub mod dd;
pub mod exact;
pub mod field;
pub mod regularity;
pub mod sampling;

pub use field::Field;
pub use num_rational::BigRational;
