//! Key-exchange trust evaluation for hybrid wired/wireless peer-to-peer
//! sensor networks.
//!
//! Sensors that share a wired Kirchhoff-Law-Johnson-Noise (KLJN) link hold
//! an unconditionally secure key; every other pair falls back to a
//! conditionally secure wireless exchange. The geometric trust function
//! ranks peers by how much of their neighbourhood is KLJN-secured, with
//! three saturating geometric series so that no number of lower-tier links
//! can outweigh a single higher-tier one.
//!
//! The crate is split into:
//!
//! - [`network`]: topology model, exchange sets, validation and the JSON
//!   topology document.
//! - [`trust`]: coefficients, the trust function, kill switch and all-pairs
//!   matrices.
//! - [`kljn`]: a Monte Carlo simulator of the KLJN bit-exchange loop with the
//!   public-channel comparison defence.
//! - [`orchestrator`]: network-wide key establishment, kill events and
//!   trust reports.

pub mod error;
pub mod fixtures;
pub mod kljn;
pub mod network;
pub mod orchestrator;
pub mod trust;

pub use error::{Error, Result};
pub use network::{SensorId, Topology, ValidationReport};
pub use trust::{KillSwitchState, TrustCoefficients, TrustCounts, TrustMatrix};
