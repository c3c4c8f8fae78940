//! Degenerate U-statistics on finite product spaces: exact Hoeffding
//! decompositions, the single-coordinate exchangeable pair, Berry-Esseen and
//! Wasserstein bounds, and distances to the standard normal law.

pub mod battery;
pub mod bounds;
pub mod distances;
pub mod engine;
pub mod families;
pub mod hoeffding;
pub mod mc;
pub mod model;
pub mod pair;
pub mod report;
pub mod scalar;
pub mod spec_json;
pub mod study;

pub use num_rational::BigRational;
