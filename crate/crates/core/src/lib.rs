//! Neural networks as thin quiver representations.
//!
//! A feed-forward network is a layered quiver (the [`quiver::NetworkQuiver`])
//! with one complex weight per edge (a [`network::ThinRep`]) and one activation
//! function per hidden vertex. On top of that this crate provides:
//!
//! - the forward pass and network function ([`network::forward`]);
//! - the change-of-basis group and its action on weights and activations,
//!   with an isomorphism checker ([`network::act_on_network`],
//!   [`network::verify_isomorphism`]);
//! - layer builders for dense, convolutional, pooling, batch-norm and
//!   residual blocks, weight-sharing constraints and teleportation
//!   ([`layers`]);
//! - the data representation induced by one input ([`datarep`]);
//! - double framing, stability, gauge fixing and orbit coordinates
//!   ([`moduli`]);
//! - a small real-valued trainer recording orbit-coordinate trajectories
//!   ([`trace`]);
//! - a JSON model format and the `quiver` command line ([`cli`]).
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod datarep;
pub mod error;
pub mod layers;
pub mod moduli;
pub mod network;
pub mod quiver;
pub mod random;
pub mod reference;
pub mod trace;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Moduli at or below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
