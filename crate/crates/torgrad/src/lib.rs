//! Exact finite-level machinery for bounding Betti-number gradients and
//! logarithmic torsion growth of residually finite groups.
//!
//! Everything is computed at a single level G = Γ/Γᵢ: crossed product
//! elements are pair functions on G, measures are exact rationals and only
//! logarithms are floats.

pub mod error;
pub mod jsonint;
pub mod groups;
pub mod crossring;
pub mod complexes;
pub mod constructions;
pub mod strictify;
pub mod lognorm;
pub mod discretize;
pub mod pipeline;

pub use error::{Error, Result};
