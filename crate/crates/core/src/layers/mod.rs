//! Layer builders producing network quivers with weight-sharing and fixed
//! weight constraints, constraint checks, and teleportation.

mod arch;
mod build;
mod teleport;

pub use arch::{check_weight_architecture, ArchReport, Violation, WeightArchitecture};
pub use build::{build_network, BuiltNetwork, LayerSpec, Param};
pub use teleport::{admissible_tau, teleport};
