//! Diffusion-based molecular communication with an absorbing spherical
//! receiver and exponentially degrading messenger molecules.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: closed-form hitting-time density, cumulative absorbed
//!   fraction, windowed channel response, peak time/amplitude and the
//!   interference-to-total ratio.
//! * [`sim`]: Brownian-motion particle simulator used as ground truth.
//! * [`arrival`]: binomial arrival counts and their Poisson/Gaussian
//!   approximations.
//! * [`link`]: binary concentration-shift keying over the channel, with
//!   the ISI-aware Poisson detection model and a Monte Carlo link.
//! * [`metrics`]: ROC, BER and channel capacity built on the link model.
//! * [`runner`]: experiment configuration, named experiments and CSV/manifest
//!   output used by the `mcvd` binary.
//!
//! Units are fixed throughout: lengths in µm, times in s, diffusion
//! coefficients in µm²/s and rates in 1/s.

pub mod arrival;
pub mod channel;
pub mod error;
pub mod link;
pub mod metrics;
pub mod runner;
pub mod sim;
pub mod special;

pub use channel::{ChannelSpec, HalfLife, PeakWindow};
pub use error::{Error, Result};
pub use link::{ChannelResponseTable, ErrorProfile, LinkConfig};
