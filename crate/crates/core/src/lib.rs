//! Conditional convex analysis on finite filtered probability spaces.
//!
//! A conditioning sigma-algebra on a finite space is a partition of the atoms
//! into blocks; random variables measurable for it are vectors constant on
//! blocks. Everything here is "stratified": norms, risk measures, conjugates,
//! separating functionals and gauges all take values in those measurable
//! vectors and act block by block.
//!
//! Modules:
//! - [`prob`]: spaces, algebras, conditional expectation, gluing, locality checks.
//! - [`norms`]: conditional `L^p` norms and random distances.
//! - [`risk`]: conditional risk measures and their axiom suite.
//! - [`conjugation`]: conditional Fenchel conjugates, dual representations,
//!   subgradients, domain classification.
//! - [`geometry`]: separation certificates, gauges, polars and bipolars.
//! - [`extension`]: extension of local risk measures from base points.
//! - [`gexp`]: discrete g-expectations on binary trees.
//! - [`par`]: the rayon/sequential execution switch.

pub mod conjugation;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod gexp;
pub mod norms;
pub mod par;
pub mod prob;
pub mod report;
pub mod risk;
pub mod rng;

pub use error::{RcaError, Result};
pub use prob::{FiniteProbSpace, Indicator, RandVar, SigmaAlgebra, Strata};
