//! Limit dynamics of planar triangular maps
//! `x' = f0(u) + f1(u) x`, `u' = phi(u)`.
//!
//! The crate iterates orbits, locates fixed points and 2-cycles of the fiber
//! map, decides which limit regime governs an orbit near an attracting fiber,
//! checks envelope certificates that make limit estimates rigorous, reduces
//! several classes of planar maps and difference equations to triangular
//! form, and computes 1-D and 2-D basins of attraction.
//!
//! See `examples/` for one runnable program per capability.

pub mod basin;
pub mod cli;
pub mod classify;
pub mod expr;
pub mod families;
pub mod fecld;
pub mod fixed;
pub mod jacobsthal;
pub mod maps;
pub mod suite;

pub use expr::{DomainError, Expr, ParseError, PlanarFn, ScalarFn};
pub use maps::{iterate, IterateOptions, OrbitTrace, PlanarMap, PlanarStep, State, Termination, TriangularMap};
