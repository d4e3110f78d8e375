//! Topological phases of two coupled qutrits in a rotating field.
//!
//! The crate builds the spin-1 Hamiltonians, computes Berry curvature both
//! from the instantaneous eigenbasis and from the generalized force measured
//! along a finite-speed ramp, and sweeps parameters to map out Chern number
//! phase diagrams and their Weyl points.

pub mod cli;
pub mod config;
pub mod hamiltonians;
pub mod berry;
pub mod numerics;
pub mod output;
pub mod phases;
pub mod spin_algebra;
