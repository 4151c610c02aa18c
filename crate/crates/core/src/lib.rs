//! Finite-window computations for countable groups with proper
//! left-invariant word metrics: approximate subgroups, quasimorphisms and
//! their defect sets, and colored covers witnessing asymptotic-dimension
//! bounds at a given scale.

pub mod approx;
pub mod asdim;
pub mod coarse_check;
pub mod error;
pub mod group;
pub mod instances;
pub mod metric;
pub mod quasimorphism;

pub use error::{Error, Result};
pub use group::{Dyadic, GroupDescriptor, GroupElement, Letter};
pub use metric::{Ball, ProperMetric};
