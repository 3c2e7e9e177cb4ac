//! POD reduced-order models of the 1D viscous Burgers equation, with and
//! without difference quotients in the snapshot set.
//!
//! Everything here is `no_std` (with `alloc`); file formats and the command
//! line tool live in the `dqrom` crate.

#![no_std]
extern crate alloc;

pub mod analysis;
pub mod error;
pub mod fem;
pub mod fom;
pub mod linalg;
pub mod pod;
pub mod projection;
pub mod rom;

pub use error::{Error, Result};
pub use fem::{FemFunction, FemOperators, InnerProduct, Mesh1D};
pub use fom::{solve_fom, FomConfig, Forcing, ManufacturedSolution, SnapshotSet};
pub use pod::{build_dq_collection, compute_pod, EigenRoute, PodBasis, PodConfig, SnapshotCollection};
pub use projection::ProjectionKind;
pub use rom::{assemble_rom, lift, solve_rom, RomConfig, RomInit, RomOperators, RomTrajectory};
