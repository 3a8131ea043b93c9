//! Degenerate elliptic operators `F(M, x) = G(σ(x) M σ(x)ᵀ)` on Carnot-type
//! structures: a monotone solver, Hölder-regularity analysis, and numerical
//! checks of the matrix identities behind the regularity estimate.

pub mod error;
pub mod analysis;
pub mod config;
pub mod doubling;
pub mod geometry;
pub mod lemmas;
pub mod operators;
pub mod poly;
pub mod random;
pub mod solver;
pub mod structure;
pub mod symlin;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, Point};
pub use structure::CarnotStructure;
