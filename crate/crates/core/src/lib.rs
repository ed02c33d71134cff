//! Interference fields of n Gaussian slit beams, assembled from convective and
//! diffusive velocity channels, together with an independent complex-amplitude
//! oracle, trajectory ensembles and the Sorkin sum-rule hierarchy.
//!
//! Module map:
//!
//! * [`packet`]: analytic free Gaussian beam per slit.
//! * [`channels`]: `3n` velocity channels and the projection rule.
//! * [`field`]: closed-form pairwise `P_tot`, `J_tot`, `v_tot` and grids.
//! * [`oracle`]: `|Psi|^2`, the quantum current and a Crank-Nicolson propagator.
//! * [`trajectories`]: streamlines, sampling and Born-rule ensembles.
//! * [`sorkin`]: inclusion-exclusion interference terms.
//! * [`config`] / [`cli`]: JSON configuration and the command-line runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod oracle;
pub mod packet;
pub mod sorkin;
pub mod trajectories;

pub use channels::{FieldSample, NodalThreshold, DEFAULT_NODE_FLOOR};
pub use error::{Error, Result};
pub use field::{GridSpec, SlitMask};
pub use packet::{PacketEval, PhysParams, SlitSpec};
