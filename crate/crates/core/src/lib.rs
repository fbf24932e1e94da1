//! Hilbert and Apollonian metrics on linearly convex domains in complex
//! projective space, spectral classification of projective maps, and
//! numerical checks of the associated growth, quasi-isometry and
//! normal-form estimates.

pub mod domain;
pub mod error;
pub mod growth;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod normal_form;
pub mod projective;
pub mod qgeo;
pub mod sampling;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
