//! Kitaev quantum double models: anyons, gapped boundaries, defects, the
//! boundary quasi-Hopf algebra, modular data, logical gate matrices and an
//! exact small-lattice simulator.

pub mod linalg;
pub mod group_core;
pub mod qdouble;
pub mod boundary_defect;
pub mod hopf_algebra;
pub mod mtc_data;
pub mod wilson_ops;
pub mod protocols;
pub mod lattice_sim;
