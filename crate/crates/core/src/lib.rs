//! Small-space streaming estimation of a stream's profile: the vector whose
//! `i`-th entry counts distinct elements that occur exactly `i` times.
//!
//! The main estimator ([`ProfileSketch`] + [`finalize`]) samples elements by
//! hash level, replicates each sampled element a Poisson(1) number of times
//! into a small table of buckets, and afterwards undoes hash collisions with a
//! dynamic program over integer partitions ([`invert`]). Sampling baselines,
//! symmetric-function evaluation, and a Monte-Carlo harness are included.
//!
//! ```
//! use profile_sketch::{finalize, HashSeed, ProfileSketch, SketchConfig};
//!
//! let mut sketch = ProfileSketch::new(SketchConfig::error_d(0.2, 3, HashSeed(7))).unwrap();
//! for x in 0..50_000u64 {
//!     sketch.update(x % 20_000);
//! }
//! let estimate = finalize(&sketch);
//! assert_eq!(estimate.tau(), 3);
//! ```

pub mod distinct;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod hashing;
pub mod invert;
pub mod profile;
pub mod sketch;
pub mod symfuncs;

pub use error::{Error, Result};
pub use estimator::{dm_compressed, dm_estimate, finalize, DmConfig, DmSketch, EstimatedProfile, Warning};
pub use hashing::{hash_u64, HashBackend, HashSeed};
pub use invert::{estimate_sample_size, invert_counts, rhat_bruteforce, DpTable, InvertInput, SampleProfile};
pub use profile::{exact_profile, Profile};
pub use sketch::{ErrorType, ProfileSketch, SketchConfig};
pub use symfuncs::{HuberTail, StreamAggregates};
