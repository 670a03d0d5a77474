//! Quantum-to-kinetic reduction of dephasing-dominated exciton networks.
//!
//! A [`NetworkSpec`] describes sites, couplings, dephasing and loss. From it
//! the crate assembles the real Liouvillian generator, eliminates the
//! coherences into classical rate matrices, measures relaxation times and
//! transfer efficiency, and checks the rigorous error bounds relating the
//! quantum and kinetic descriptions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod families;
pub mod kinetic;
pub mod linalg;
pub mod liouvillian;
pub mod model;

pub use analysis::{Model, Probe, RelaxationMetrics};
pub use bounds::{BoundCheck, BoundReport, BoundStatus, SlopeFit, SlopeStudy, Theorem};
pub use error::{Error, Result};
pub use families::FamilyKind;
pub use kinetic::{KineticKind, KineticMatrix};
pub use liouvillian::{LiouvillianBlocks, TildeBlocks};
pub use model::{DensityVector, NetworkSpec, ScalingFamily, Trap};
