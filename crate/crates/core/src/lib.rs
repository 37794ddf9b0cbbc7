//! Solver core for distributing container images across cloud-edge registry
//! nodes.
//!
//! The crate models registry infrastructures (nodes, direct links, derived
//! end-to-end QoS), checks placement eligibility (replica cap, per-node
//! transfer-time budgets, storage capacity), and provides three solvers:
//!
//! * [`heuristic`] — depth-first backtracking over per-image replica sets,
//!   wrapped in iterative deepening on the replica factor;
//! * [`exact`] — branch-and-bound search for provably cost-minimal placements;
//! * [`continuous`] — incremental adaptation that re-places only the images
//!   invalidated by infrastructure or repository changes, falling back to the
//!   exact solver when adaptation fails.
//!
//! [`scenario`] generates random Barabási–Albert infrastructures and evolves
//! them epoch by epoch with seeded churn (node failures, QoS/storage/image
//! variations).
//!
//! The crate is `no_std` (with `alloc`); wall-clock search budgets are
//! injected through the [`time::Clock`] trait so embedders control timing.

#![cfg_attr(not(test), no_std)]

extern crate alloc;






pub mod continuous;
mod cover;
pub mod eligibility;
pub mod exact;
pub mod heuristic;
pub mod model;
pub mod scenario;
pub mod network;

pub mod time;

pub use model::{
    Allocation, ContainerImage, DirectLink, ImageId, Infrastructure, ModelError, NodeId,
    Placement, ProblemInstance, Provenance,
};
pub use network::{derive_e2e, transfer_time, E2eTable, LinkQos};

#[cfg(test)]
pub(crate) mod testutil;
