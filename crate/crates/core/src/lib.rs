//! Limited-feedback interference alignment on K-user MIMO interference networks
//! with heterogeneous path loss and spatial correlation.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: interference topology profiles, Kronecker-correlated channel
//!   sampling and the random (exponential correlation, log-normal shadowing)
//!   topology model.
//! - [`codebook`]: random-vector-quantization base codebooks, spatially
//!   transformed codebooks, the quantizer, and the distortion coefficient.
//! - [`allocation`]: water-filling feedback bit allocation and baselines.
//! - [`ia`]: centralized iterative leakage-minimization interference alignment.
//! - [`evaluation`]: residual interference, throughput and analytical bounds.
//! - [`harness`]: schemes, Monte Carlo trials, experiment sweeps and output.

pub mod allocation;
pub mod codebook;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod ia;
pub mod linalg;
pub mod rng;
pub mod stats;
pub mod topology;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
