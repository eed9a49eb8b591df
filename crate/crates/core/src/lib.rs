//! Numerical laboratory for pseudohermitian geometry.
//!
//! The crate computes, from nothing more than a contact form and a CR frame in
//! a chart, the Tanaka-Webster connection, its torsion and curvature, and the
//! derived quantities (holomorphic and sectional curvature, Ricci, Webster
//! scalar curvature). On top of that sit numerical experiments: geodesic
//! circles and their lengths, Jacobi fields, conformal changes of the contact
//! form, pseudohermitian immersions and infinitesimal automorphisms.

pub mod complex;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod frame;
pub mod geodesic;
pub mod identities;
pub mod immersion;
pub mod jet;
pub mod models;
pub mod report;
pub mod spaceform;
pub mod symmetry;

pub use error::{GeometryError, Result};
