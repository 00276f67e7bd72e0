//! Monte Carlo toolkit for chordal SLE traces, critical lattice curves and
//! their fractal variation.

pub mod fvar;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod loewner;
pub mod stats;
