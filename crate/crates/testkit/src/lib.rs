//! Reference oracles for the rti test suites.
//!
//! Everything here is deliberately independent of `rti-core`: the
//! quadrature integrates the raw oscillatory integrand, the high-precision
//! routines work in big-integer fixed point, and the graph helpers use
//! brute-force closure and a DFS sorter. None of it should ever be used by
//! production code.

pub mod enumerate;
pub mod graph;
pub mod highprec;
pub mod quadrature;
pub mod stats;
