//! Double framing, stability, and canonical coordinates on the moduli space
//! of double-framed thin representations.
//!
//! Canonical coordinates come from gauge fixing: each hidden vertex picks its
//! smallest-id incoming edge, and the unique change of basis making those
//! weights 1 is applied. What remains, `#E° − #Ṽ` weights, is invariant under
//! the change-of-basis group.

mod canonical;
mod frame;
mod stability;

pub use canonical::{
    canonicalize, canonicalize_with, moduli_dimension, moduli_map, moduli_map_with, orbit_equal,
    pruning_profile, psi_hat, quiver_hash, representative, CanonicalOptions, GaugeForest,
    ModuliMapOptions, ModuliPoint, PruningProfile, PERTURB_EPS,
};
pub use frame::{double_frame, undouble_frame, DoubleFramedRep};
pub use stability::{stability_by_enumeration, stability_check, Instability, StabilityReport};
