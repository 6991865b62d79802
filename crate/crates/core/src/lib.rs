//! Cooperative, low-overhead message authentication for vehicular ad-hoc
//! networks.
//!
//! Roadside units hand out short-lived pseudonymous certificates, vehicles
//! sign their safety beacons with them, and receivers split the signature
//! checking work: only an elected subset of neighbours verifies each sender,
//! everybody else waits a short window for a disapproval before accepting.
//!
//! The crate is organised by protocol party ([`authority`], [`rsu`], [`obu`],
//! [`baseline`]) on top of shared primitives ([`crypto`], [`certs`]). The
//! [`sim`] module drives all parties through a deterministic discrete-event
//! simulation, and [`analysis`] holds the closed-form and Monte Carlo side
//! of the verifier-election design.

pub mod analysis;
pub mod authority;
pub mod baseline;
pub mod certs;
pub mod crypto;
pub mod obu;
pub mod registry;
pub mod rsu;
pub mod sim;
pub mod time;
pub mod wire;

pub use time::{Duration, Timestamp};
