//! Exact arithmetic for free nilpotent groups, nilpotent Lie algebras and
//! nilpotent progressions.
//!
//! The crate is organised bottom-up:
//!
//! - [`hall`]: Hall basic commutators and collection in free nilpotent groups.
//! - [`nilalg`]: rational nilpotent Lie algebras, Baker–Campbell–Hausdorff
//!   products and Mal'cev coordinate conversions.
//! - [`prog`]: target groups, ordered and coset progressions, properness and
//!   upper-triangular form.
//! - [`latgeo`]: successive minima, Mahler bases and box approximations of
//!   polytope bodies.
//! - [`bilu`]: the dimension-reduction pipeline turning a progression into a
//!   proper coset progression.
//! - [`growth`]: Cayley-ball growth and covering experiments.

pub mod bilu;
pub mod error;
pub mod growth;
pub mod hall;
pub mod intlin;
pub mod latgeo;
pub mod ledger;
pub mod nilalg;
pub mod prog;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
