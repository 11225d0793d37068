//! Branched transport to a boundary, linked framed curves and the Hopf
//! invariant of sphere-valued fields.
//!
//! The transport half (`domain`, `graph`, `cost`, `bounds`, `solver`,
//! `grid_lab`) computes upper and certified lower bounds on minimal
//! concave-cost transport from point sets to the boundary of a box. The
//! topology half (`curves`, `fields`) builds linked sheaves of stadium
//! curves, turns framed curves into maps to the two-sphere and measures
//! their Hopf invariant, energies and fluxes.

pub mod bounds;
pub mod cost;
pub mod curves;
pub mod domain;
pub mod error;
pub mod fields;
pub mod fmt;
pub mod geom;
pub mod graph;
pub mod grid_lab;
mod par;
pub mod solver;

pub use error::{Error, Result};
pub use par::set_threads;
