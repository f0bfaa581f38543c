//! Construction and numerical certification of twistor-holomorphic Klein
//! bottles in R^4.

pub mod divisor;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod gluing;
pub mod grid;
pub mod immersion;
pub mod invariants;
pub mod involution;
pub mod jet;
pub mod lattice;
pub mod mesh;
pub mod report;
