//! Analytic formulas and simulators for a two-queue fluid polling system with
//! random time-limited (exponential) visit periods.
//!
//! The crate is organised by layer:
//!
//! * [`model`]: parameters, stability and the workload recursion at switch epochs.
//! * [`exact`]: transform-domain objects for the exact (pre-limit) symmetric model.
//! * [`heavy`]: closed-form heavy-traffic limits of the symmetric model.
//! * [`levy`]: the process limit with Lévy input and general alternating switching,
//!   plus reflected-Brownian-motion and pre-limit simulators.
//! * [`sim`]: exact event-driven simulation of the fluid model.
//! * [`inversion`]: fixed-contour Talbot inversion and ECDF comparison.
//!
//! Replications fan out over rayon when the `parallel` feature is enabled (the
//! default); otherwise they run sequentially with identical results.

pub mod complex;
pub mod ecdf;
pub mod error;
pub mod exact;
pub mod heavy;
pub mod inversion;
pub mod levy;
pub mod model;
pub mod numdiff;
pub mod output;
pub mod par;
pub mod sim;
pub mod stats;

pub use complex::Complex;
pub use ecdf::Ecdf;
pub use error::{Error, Result};
pub use model::{AsymmetricParams, Queue, SymmetricParams, WorkloadState};

/// Name of the pseudo-random generator used by every simulator in this crate.
pub const RNG_NAME: &str = "ChaCha8Rng (seed_from_u64, one stream per replication)";
