//! H∞ functional calculus for sectorial matrices by contour quadrature,
//! Rademacher-type boundedness estimators on configurable norms, and
//! verification harnesses for sums of commuting operators and maximal
//! regularity.

pub mod calculus;
pub mod generators;
pub mod contour;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod functions;
pub mod json;
pub mod linalg;
pub mod norms;
pub mod operators;
pub mod rbound;
pub mod opnorm;
pub mod search;
pub mod sums;

pub use error::{Error, Result};
pub use estimate::{BoundEstimate, MethodInfo, Witness};
pub use linalg::{CMat, C64};
pub use norms::NormSpec;
