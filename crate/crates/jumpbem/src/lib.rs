//! Galerkin boundary-element solver for the three-dimensional Laplace jump
//! problem: given a closed triangulated surface and prescribed jumps of the
//! ε-weighted trace and normal derivative across it, find the densities of a
//! single- plus double-layer representation and evaluate the resulting
//! potential anywhere off the surface.
//!
//! The crate is organised as a pipeline:
//!
//! * [`geom`] — the small 3-vector and triangle primitives everything else
//!   shares;
//! * [`mesh`] — closed oriented triangle surfaces (icosphere generator, OFF
//!   file I/O, validation and orientation repair);
//! * [`quadrature`] — triangle rules for smooth integrands and relative-
//!   coordinate product rules for singular panel pairs, plus an analytic
//!   single-layer panel integral;
//! * [`dense`] — column-major matrices and the LU machinery tuned for
//!   many-right-hand-side triangular sweeps;
//! * [`spaces`] — coefficient/functional vector types tagged by the space
//!   they live in, and tagged Galerkin matrices with binary I/O;
//! * [`operators`] — assembly of the mass, single-layer, double-layer and
//!   hypersingular Galerkin matrices in one deterministic sweep;
//! * [`potentials`] — off-surface evaluation of the layer potentials;
//! * [`solver`] — the sequential boundary-operator pipeline and the
//!   monolithic coupled system it is checked against, with cost reporting;
//! * [`verification`] — manufactured point-source cases, sphere oracles and
//!   convergence studies;
//! * [`synthetic`] — seeded random operator bundles for benchmarking the
//!   solver paths at sizes where assembly would dominate.

pub mod dense;
pub mod geom;
pub mod mesh;
pub mod operators;
pub mod potentials;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod synthetic;
pub mod verification;

pub use geom::Vec3;
pub use mesh::{MeshError, SurfaceMesh};
