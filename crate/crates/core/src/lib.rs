//! Numerical laboratory for heavy-tailed lattice renewal processes.
//!
//! The crate builds aperiodic integer lattice laws with regularly varying
//! tails, computes their convolution powers and renewal mass functions
//! exactly at desk scale, and provides the diagnostics needed to study the
//! strong renewal theorem regime: ratio scans, necessary-and-sufficient
//! condition checks, local large deviation bound surfaces, exponential
//! tilting identities, and a stable-law oracle for the limiting constants.
//!
//! Modules map onto the main subsystems:
//!
//! * [`law`] — lattice law families and their exact tail arrays,
//! * [`norming`] — the tail scale `A(x)` and its inverse `a(y)`,
//! * [`conv`] — convolution powers and renewal sequences (naive and fast),
//! * [`stable`] — one-sided stable density, sampling, and limit constants,
//! * [`conditions`] — renewal-theorem ratio curves and condition sums,
//! * [`tilting`] — tilted laws, the change-of-measure identity, bound scans,
//! * [`green`] — weighted occupation series and their regime classification.

pub mod conditions;
pub mod conv;
pub mod error;
pub mod green;
pub mod law;
pub mod norming;
pub mod quad;
pub mod stable;
pub mod sum;
pub mod tilting;

pub use error::{Error, Result};
