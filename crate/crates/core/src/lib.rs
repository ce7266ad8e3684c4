//! Radio-map cleansing and k-NN evaluation primitives for Wi-Fi RSS
//! fingerprinting.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature adds
//! data-parallel execution (rayon) and a wall-clock [`metrics::Clock`].
//!
//! Pipeline overview:
//!
//! 1. [`radiomap`]: fingerprints, the detected / not-detected RSS model and
//!    the positive data representation used for distances.
//! 2. [`cleanse`]: rank each fingerprint's strongest APs, score every sample
//!    by its best AP-overlap with any other sample, drop zero-scored samples.
//! 3. [`positioning`]: brute-force k-NN (Manhattan) regression and
//!    floor/building classification.
//! 4. [`metrics`]: hit rates, 2D/3D error, prediction time, normalization,
//!    ECDF and RSS histogram data.
//! 5. [`sweep`]: threshold search over the match percentage.
//! 6. [`synth`]: log-distance synthetic radio maps and a literal reference
//!    implementation of the cleansing loop.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cleanse;
mod error;
pub mod metrics;
pub mod positioning;
pub mod radiomap;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
