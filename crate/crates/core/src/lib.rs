//! Zero-sum subsets in F_p^d: exact subset-sum oracles, thickness and
//! tube decompositions, weighted zero sums, expansion covers and the
//! staged search that combines them.

pub mod error;
pub mod expansion;
pub mod frac;
pub mod group;
pub mod instance;
pub mod linalg;
pub mod nullstellensatz;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod stateset;
pub mod thickness;

pub use error::{Error, Result};
pub use frac::Frac;
pub use group::{GroupElement, GroupMultiset, GroupParams, LinearFunctional};
pub use oracle::ZeroSumCertificate;
pub use pipeline::{find_zero_sum, verify_certificate, PipelineConfig, PipelineRun};
