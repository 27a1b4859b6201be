//! Adaptive random testing toolkit.
//!
//! Test-case generators that spread points evenly over d-dimensional
//! numeric input domains, distribution metrics for judging them, and a
//! simulation lab that measures failure-detection effectiveness against
//! seeded failure-region profiles.

pub mod domain;
pub mod error;
pub mod hybrid;
pub mod metrics;
pub mod pbs;
pub mod qrs;
pub mod rng;
pub mod sbs;
pub mod simlab;
pub mod stfcs;
pub mod tpbs;

pub use domain::{Generator, InputDomain, RtGenerator, TestCase};
pub use error::{ArtError, Result};
pub use rng::RngStream;
