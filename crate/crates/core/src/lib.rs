//! Realizing plane triangulations as Delaunay triangulations of integer
//! point sets.
//!
//! A triangulation is turned into a system of degree-2 polynomial
//! constraints over point and witness-disc variables, searched numerically,
//! rounded to rationals, scaled to integers and then certified against an
//! exact Delaunay oracle. Only certified answers are reported as realized.

pub mod constraints;
pub mod exact;
pub mod graph;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod realizer;
pub mod solver;
pub mod tutte;
