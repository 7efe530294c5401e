//! Stability analysis for Lagrangian generalized Nash equilibria of GNEPs with
//! quadratic objectives and affine-or-quadratic constraints.

pub mod certificates;
pub mod index_sets;
pub mod kkt;
pub mod linalg;
pub mod linearization;
pub mod perturbation;
pub mod problem;
pub mod system;
#[doc(hidden)]
pub mod testkit;
