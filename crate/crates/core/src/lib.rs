pub mod document;
pub mod error;
pub mod nets;
pub mod packing;
pub mod scenarios;
pub mod space;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use space::{MetricRule, PointId, PseudoMetricSpace};
