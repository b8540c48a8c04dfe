//! Numerical toolkit for the truncated Hilbert transform with overlap.

pub mod asymptotics;
pub mod builder;
pub mod dd;
pub mod geometry;
pub mod hilbert;
pub mod inversion;
pub mod quadrature;
pub mod registry;
pub mod report;
pub mod special;
pub mod sturm;
pub mod svd;

#[cfg(test)]
mod properties;
