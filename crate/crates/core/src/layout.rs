//! Global numbering of degrees of freedom: vertices first, then edges, then cells.

use serde::Serialize;

use crate::mesh::PolyMesh;

/// Dimension of the full polynomial space of total degree `deg` in two variables.
pub fn dim_p2(deg: i64) -> usize {
    if deg < 0 {
        0
    } else {
        let d = deg as usize;
        (d + 1) * (d + 2) / 2
    }
}

/// Dimension of polynomials of degree `deg` in one variable.
pub fn dim_p1(deg: i64) -> usize {
    if deg < 0 {
        0
    } else {
        deg as usize + 1
    }
}

/// Discrete spaces handled by the library, each tied to a polynomial degree `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SpaceTag {
    /// Stokes space: vertex value and gradient, edge value and normal
    /// derivative, cell value.
    StokesGrad(usize),
    /// Vector space of the Stokes complex; coincides with the vector
    /// de Rham gradient space of degree `k + 1`.
    StokesRot(usize),
    /// Matrix-valued rotor space of degree `k + 1`.
    TensorRot(usize),
    /// Symmetric part of [`SpaceTag::TensorRot`].
    TensorRotSym(usize),
    /// Broken scalar polynomials of degree `k`.
    BrokenScalar(usize),
    /// Broken vector polynomials of degree `k`.
    BrokenVector(usize),
    /// Lowest-order de Rham spaces.
    LowestGrad,
    LowestCurl,
    LowestCell,
}

impl SpaceTag {
    /// Dofs per vertex, per edge and per cell.
    pub fn counts(self) -> [usize; 3] {
        let p = |d: usize, off: i64| dim_p2(d as i64 + off);
        let e = |d: usize, off: i64| dim_p1(d as i64 + off);
        match self {
            SpaceTag::StokesGrad(k) => [3, e(k, -1) + e(k, 0), p(k, -2)],
            SpaceTag::StokesRot(k) => [2, 2 * e(k, 0), 2 * p(k, -1)],
            SpaceTag::TensorRot(k) => [0, 2 * e(k, 1), 4 * p(k, 0)],
            SpaceTag::TensorRotSym(k) => [0, 2 * e(k, 1), 3 * p(k, 0)],
            SpaceTag::BrokenScalar(k) => [0, 0, p(k, 0)],
            SpaceTag::BrokenVector(k) => [0, 0, 2 * p(k, 0)],
            SpaceTag::LowestGrad => [1, 0, 0],
            SpaceTag::LowestCurl => [0, 1, 0],
            SpaceTag::LowestCell => [0, 0, 1],
        }
    }
}

/// Offsets of the vertex, edge and cell blocks for one space on one mesh.
#[derive(Clone, Debug)]
pub struct DofLayout {
    pub space: SpaceTag,
    pub per_vertex: usize,
    pub per_edge: usize,
    pub per_cell: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_cells: usize,
}

impl DofLayout {
    pub fn new(mesh: &PolyMesh, space: SpaceTag) -> Self {
        let [per_vertex, per_edge, per_cell] = space.counts();
        DofLayout {
            space,
            per_vertex,
            per_edge,
            per_cell,
            n_vertices: mesh.n_vertices(),
            n_edges: mesh.n_edges(),
            n_cells: mesh.n_cells(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n_vertices * self.per_vertex + self.n_edges * self.per_edge + self.n_cells * self.per_cell
    }

    pub fn vertex_offset(&self, v: usize) -> usize {
        v * self.per_vertex
    }

    pub fn edge_offset(&self, e: usize) -> usize {
        self.n_vertices * self.per_vertex + e * self.per_edge
    }

    pub fn cell_offset(&self, t: usize) -> usize {
        self.n_vertices * self.per_vertex + self.n_edges * self.per_edge + t * self.per_cell
    }

    /// Number of dofs attached to the closure of a cell with `n` edges.
    pub fn local_dim(&self, n: usize) -> usize {
        n * (self.per_vertex + self.per_edge) + self.per_cell
    }

    /// Global indices of the local dofs of cell `t`, ordered as its loop
    /// vertices, then its loop edges, then the cell block.
    pub fn local_to_global(&self, mesh: &PolyMesh, t: usize) -> Vec<usize> {
        let c = &mesh.cells[t];
        let mut idx = Vec::with_capacity(self.local_dim(c.vertices.len()));
        for &v in &c.vertices {
            idx.extend(self.vertex_offset(v)..self.vertex_offset(v) + self.per_vertex);
        }
        for &e in &c.edges {
            idx.extend(self.edge_offset(e)..self.edge_offset(e) + self.per_edge);
        }
        idx.extend(self.cell_offset(t)..self.cell_offset(t) + self.per_cell);
        idx
    }

    /// Entity owning a global dof.
    pub fn owner(&self, dof: usize) -> Entity {
        let nv = self.n_vertices * self.per_vertex;
        let ne = self.n_edges * self.per_edge;
        if dof < nv {
            Entity::Vertex(dof / self.per_vertex)
        } else if dof < nv + ne {
            Entity::Edge((dof - nv) / self.per_edge)
        } else {
            Entity::Cell((dof - nv - ne) / self.per_cell)
        }
    }
}

/// Offsets of the local dofs on the closure of one cell.
#[derive(Clone, Copy, Debug)]
pub struct LocalDofs {
    pub per_vertex: usize,
    pub per_edge: usize,
    pub per_cell: usize,
    /// Number of vertices (and edges) of the cell.
    pub n: usize,
}

impl LocalDofs {
    pub fn new(space: SpaceTag, n: usize) -> Self {
        let [per_vertex, per_edge, per_cell] = space.counts();
        LocalDofs { per_vertex, per_edge, per_cell, n }
    }

    pub fn dim(&self) -> usize {
        self.n * (self.per_vertex + self.per_edge) + self.per_cell
    }

    pub fn vertex(&self, i: usize) -> usize {
        i * self.per_vertex
    }

    pub fn edge(&self, i: usize) -> usize {
        self.n * self.per_vertex + i * self.per_edge
    }

    pub fn cell(&self) -> usize {
        self.n * (self.per_vertex + self.per_edge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
    Cell(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn local_maps_cover_every_dof() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
        for k in 0..3 {
            let l = DofLayout::new(&m, SpaceTag::StokesGrad(k));
            let mut hit = vec![false; l.dim()];
            for t in 0..m.n_cells() {
                let idx = l.local_to_global(&m, t);
                assert_eq!(idx.len(), l.local_dim(m.cells[t].vertices.len()));
                for i in idx {
                    hit[i] = true;
                }
            }
            assert!(hit.into_iter().all(|h| h));
        }
    }

    #[test]
    fn owner_inverts_offsets() {
        let m = generate_mesh(MeshFamily::SplitTriangles, 2).unwrap();
        let l = DofLayout::new(&m, SpaceTag::StokesRot(1));
        assert_eq!(l.owner(l.vertex_offset(3) + 1), Entity::Vertex(3));
        assert_eq!(l.owner(l.edge_offset(5)), Entity::Edge(5));
        assert_eq!(l.owner(l.cell_offset(7) + 1), Entity::Cell(7));
    }
}
