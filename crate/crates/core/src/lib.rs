//! Polytopal discretisations of the Stokes and Hessian complexes on general
//! polygonal meshes, built from two vector de Rham complexes by the
//! Bernstein-Gelfand-Gelfand construction.

pub mod assembly;
pub mod bgg;
pub mod cochain_transfer;
pub mod ddr_core;
pub mod error;
pub mod fields;
pub mod layout;
pub mod linalg;
pub mod local;
pub mod mesh;
pub mod polyquad;
pub mod potentials;
pub mod report;
pub mod stokes_core;
pub mod studies;

pub use error::{Error, MeshError, Result};
pub use layout::{DofLayout, SpaceTag};
pub use mesh::{generate_mesh, MeshFamily, Point, PolyMesh};
pub use polyquad::MeshPolys;
