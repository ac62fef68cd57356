//! Adaptive subcarrier-PSK intensity modulation over lognormal free-space
//! optical turbulence.
//!
//! The crate computes BER-constrained modulation-order thresholds, the
//! spectral efficiency and average BER of the resulting variable-rate scheme,
//! non-adaptive BER and the high-SNR capacity upper bound, for single links
//! and for MIMO links with equal gain combining. A symbol-level Monte Carlo
//! simulator re-derives the same quantities independently.
//!
//! ```
//! use fso_adapt::{adaptation, link::LinkBudget, turbulence::TurbulenceParams};
//!
//! let budget = LinkBudget::from_db(15.0).unwrap();
//! let fading = TurbulenceParams::new(0.3).unwrap().into();
//! let scheme = adaptation::compute_boundaries(5, 1e-3, budget).unwrap();
//! let s = adaptation::spectral_efficiency(&scheme, &fading);
//! assert!(s > 1.0 && s < 2.5);
//! ```
//!
//! Grid sweeps and the simulator fan out over rayon when the `parallel`
//! feature (on by default) is enabled; without it everything runs on the
//! calling thread and produces identical output.

// NaN must fail every range check, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod error;
pub mod exec;
pub mod link;
pub mod numerics;
pub mod simulator;
pub mod turbulence;

pub use error::{Error, Result};
pub use exec::Execution;
