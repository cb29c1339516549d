//! Workbench for commodity-resource complexity measurement.
//!
//! The crate is organized around four pieces:
//!
//! - [`resource`]: complexity functions derived from resource samples, with
//!   growth classification, dominance, normalization, and overall complexity.
//! - [`precision`]: input/output error models for physical parameters, the
//!   corrigible-error region, its measure, and the precision resource.
//! - [`factorizer`]: a numerical simulation of an analogue factorization
//!   device whose dominant cost is precision rather than time or space.
//! - [`ledger`]: category-tagged cost accounting over a toy public-key
//!   trace, with side-channel leak quantification and a security vector.

pub mod factorizer;
pub mod ledger;
pub mod precision;
pub mod resource;

pub use precision::{DeviceModel, Draw, ErrorVector, MeasureMode};
pub use resource::{Amount, ComplexityFunction, GrowthClass};
