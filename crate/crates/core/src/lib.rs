//! Numerical lab for entangling rates of open bipartite quantum dynamics.

pub mod certify;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod rates;
pub mod states;

pub use error::{Error, Result};
