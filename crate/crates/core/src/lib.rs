//! Degrees-of-freedom analysis of K-cell full-duplex spectrum-sharing
//! cellular networks.
//!
//! The crate has three layers:
//!
//! * [`formulas`] and [`lp`]: closed-form sum-DoF expressions and the
//!   two-variable achievability LPs, all in exact rational arithmetic.
//! * [`network`], [`scheme1`], [`scheme2`]: random time-extended channels and
//!   the constructive beamformers (monomial interference alignment and
//!   zero-forcing) at a finite extension order.
//! * [`verify`]: numeric rank measurements deciding, per receiver, how many
//!   of the planned streams are decodable.

pub mod error;
pub mod exact;
pub mod formulas;
pub mod linalg;
pub mod lp;
pub mod network;
pub mod scheme1;
pub mod scheme2;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use exact::Q;
pub use network::{CoefficientId, NetworkConfig, SelfInterference};
