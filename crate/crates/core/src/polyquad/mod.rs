//! Quadrature on polygons and orthonormal polynomial bases.

mod basis;
mod quadrature;

pub use basis::{edge_gram, orthonormalize, CellPolys, EdgePolys, MeshPolys, Monomials};
pub use quadrature::{cell_rule, edge_rule, gauss_legendre, reference_triangle, QuadRule};
