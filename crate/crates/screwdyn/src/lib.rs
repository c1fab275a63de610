//! Screw-calculus mechanics engine.
//!
//! Mechanical interactions are represented by screws: pairs of vector fields
//! (resultant, moment) over points of space. Wrenches carry force-like
//! quantities, twists velocity-like ones, and 6×6 multiplicative motion
//! groups transport their coordinates between frames. On top of that algebra
//! the crate builds:
//!
//! - single rigid-body dynamics in body-frame quasi-velocities
//!   ([`body`]),
//! - tree-structured multibody dynamics in Newton–Euler and Lagrange
//!   second-kind form ([`multibody`]),
//! - three rotation parameterizations with their kinematic rate equations
//!   ([`rotation`]),
//! - free and constrained mass-point dynamics ([`point`]),
//! - quasi-linear isotropic constitutive relations and sampled-field
//!   stress-divergence operators ([`constitutive`]),
//! - a batch simulation front-end ([`sim`]) driving the `screwdyn` CLI.

pub mod body;
pub mod constitutive;
pub mod multibody;
pub mod point;
pub mod rotation;
pub mod sim;
pub mod spatial;
