//! Stratified convex geometry: separation with certificates, random gauges,
//! polars and bipolars, support seminorms.
//!
//! Bodies are products of per-block convex sets. That product structure is
//! exactly the concatenation property on a finite space, so sets without it
//! cannot be expressed.

mod body;
mod gauge;
mod polar;
pub(crate) mod qp;
mod separate;

pub use body::{BlockSet, ConvexBody};
pub(crate) use body::weighted_pnorm;
pub(crate) use qp::dot;
pub use gauge::{gauge, gauge_block, gauge_sandwich_check};
pub use polar::{balanced_hull, bipolar_check, polar, polar_of_body, support_seminorm, BipolarConfig};
pub use separate::{separate, separation_check, SeparationCertificate, STRICT_MARGIN, SUPPORT_GAP_TOL};
