//! Partial connections and dual connection forms for Lie group actions that
//! are not free.
//!
//! The crate evaluates forms extensionally (point ↦ matrix) and realizes
//! exterior derivatives, covariant derivatives and vector-field brackets by
//! central differences through each manifold's retraction. Closed forms are
//! provided wherever the concrete examples admit them so that the generic
//! numerical machinery can be cross-checked.
//!
//! Modules, bottom up:
//! - [`linalg`]: SVD rank/kernel, consistent solves, finite differences.
//! - [`groups`]: so(3), su(3) and subalgebras, exp, Cayley, Ad.
//! - [`actions`]: manifolds, concrete actions and their generators.
//! - [`connections`]: dual connection forms, inertia factors, projections.
//! - [`curvature`]: d, ∇, docility, curvature, taming, structure equations.
//! - [`slices`]: adaptors, almost-horizontal systems, Cayley slices.
//! - [`frames`]: moving frames on US², partial moving frames on S².
//! - [`cli`]: scenario runner and report emitter.

pub mod actions;
pub mod cli;
pub mod connections;
pub mod curvature;
pub mod error;
pub mod frames;
pub mod groups;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod slices;

pub use error::{Error, Result};
pub use linalg::Tolerances;
