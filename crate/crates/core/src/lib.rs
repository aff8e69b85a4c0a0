//! Exact truncated Hahn-type series over `F_p` and a certified surjection
//! from the perfectoid Tate algebra in three variables onto the residue field
//! of a Type III point of the unit disk.

pub mod builder;
pub mod commands;
pub mod config;
pub mod division;
pub mod error;
pub mod fields;
pub mod random;
pub mod series;
pub mod tate;
pub mod transcript;
pub mod valgroup;
pub mod verify;

pub use error::{Error, Result};
pub use series::{Exponents, Leading, Profile, TruncatedSeries};
pub use valgroup::{ExtRat, Rat};

/// An element of the ground field `C`.
pub type GroundElement = TruncatedSeries;
/// An element of the residue field `C(y)`.
pub type ResidueElement = TruncatedSeries;
