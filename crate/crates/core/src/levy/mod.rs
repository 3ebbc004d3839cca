//! Process limit with Lévy input and general alternating switching.
//!
//! [`analytic`] holds the closed forms for the limiting reflected Brownian
//! motion; [`switching`] and [`subordinator`] describe the pre-limit inputs;
//! [`rbm`] and [`prelimit`] simulate the limit process and the scaled
//! pre-limit system.

pub mod analytic;
pub mod prelimit;
pub mod rbm;
pub mod subordinator;
pub mod switching;

pub use analytic::*;
