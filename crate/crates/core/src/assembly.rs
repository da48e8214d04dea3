//! Global sparse operators assembled from cell-local matrices.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::ddr_core::{sym_embedding_local, DdrLocal};
use crate::error::Result;
use crate::layout::{DofLayout, Entity, SpaceTag};
use crate::local::CellView;
use crate::mesh::PolyMesh;
use crate::polyquad::MeshPolys;
use crate::potentials::PotentialLocal;
use crate::stokes_core::StokesLocal;

/// Sparse linear map between two discrete spaces.
#[derive(Clone, Debug)]
pub struct GlobalOperator {
    pub source: SpaceTag,
    pub target: SpaceTag,
    pub matrix: CsrMatrix<f64>,
}

impl GlobalOperator {
    pub fn from_triplets(
        source: SpaceTag,
        target: SpaceTag,
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut coo = CooMatrix::new(nrows, ncols);
        for &(r, c, v) in triplets {
            coo.push(r, c, v);
        }
        GlobalOperator { source, target, matrix: CsrMatrix::from(&coo) }
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.matrix.triplet_iter() {
            d[(r, c)] += *v;
        }
        d
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.nrows());
        for (r, row) in self.matrix.row_iter().enumerate() {
            y[r] = row.col_indices().iter().zip(row.values()).map(|(&c, v)| v * x[c]).sum();
        }
        y
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.ncols());
        for (r, row) in self.matrix.row_iter().enumerate() {
            for (&c, v) in row.col_indices().iter().zip(row.values()) {
                x[c] += v * y[r];
            }
        }
        x
    }

    /// `self o other`.
    pub fn compose(&self, other: &GlobalOperator) -> GlobalOperator {
        GlobalOperator { source: other.source, target: self.target, matrix: &self.matrix * &other.matrix }
    }

    pub fn transpose(&self) -> GlobalOperator {
        GlobalOperator { source: self.target, target: self.source, matrix: self.matrix.transpose() }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Assembles an operator from local matrices `target_local x source_local`.
///
/// Rows attached to vertices and edges of the target are shared between
/// cells; they are taken from the first cell that touches them, which is
/// exact for operators whose boundary rows depend on boundary data only.
pub fn assemble_cellwise(
    mesh: &PolyMesh,
    source: SpaceTag,
    target: SpaceTag,
    mut local: impl FnMut(usize) -> Result<DMatrix<f64>>,
) -> Result<GlobalOperator> {
    let (ls, lt) = (DofLayout::new(mesh, source), DofLayout::new(mesh, target));
    let mut done_v = vec![false; mesh.n_vertices()];
    let mut done_e = vec![false; mesh.n_edges()];
    let mut trip = Vec::new();
    for t in 0..mesh.n_cells() {
        let m = local(t)?;
        let (cols, rows) = (ls.local_to_global(mesh, t), lt.local_to_global(mesh, t));
        let mut fresh_v = Vec::new();
        let mut fresh_e = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            let take = match lt.owner(r) {
                Entity::Vertex(v) => {
                    if !done_v[v] {
                        fresh_v.push(v);
                    }
                    !done_v[v]
                }
                Entity::Edge(e) => {
                    if !done_e[e] {
                        fresh_e.push(e);
                    }
                    !done_e[e]
                }
                Entity::Cell(_) => true,
            };
            if !take {
                continue;
            }
            for (ci, &c) in cols.iter().enumerate() {
                let v = m[(ri, ci)];
                if v != 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        for v in fresh_v {
            done_v[v] = true;
        }
        for e in fresh_e {
            done_e[e] = true;
        }
    }
    Ok(GlobalOperator::from_triplets(source, target, lt.dim(), ls.dim(), &trip))
}

/// Sums local symmetric matrices into a global Gram matrix.
pub fn assemble_gram(
    mesh: &PolyMesh,
    space: SpaceTag,
    mut local: impl FnMut(usize) -> Result<DMatrix<f64>>,
) -> Result<CsrMatrix<f64>> {
    let l = DofLayout::new(mesh, space);
    let mut coo = CooMatrix::new(l.dim(), l.dim());
    for t in 0..mesh.n_cells() {
        let m = local(t)?;
        let idx = l.local_to_global(mesh, t);
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                if m[(i, j)] != 0.0 {
                    coo.push(r, c, m[(i, j)]);
                }
            }
        }
    }
    Ok(CsrMatrix::from(&coo))
}

/// Gathers the local dofs of cell `t` from a global vector.
pub fn restrict(mesh: &PolyMesh, space: SpaceTag, x: &DVector<f64>, t: usize) -> DVector<f64> {
    let idx = DofLayout::new(mesh, space).local_to_global(mesh, t);
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]))
}

/// Per-cell operator data.
pub struct CellOps {
    pub stokes: StokesLocal,
    pub ddr: DdrLocal,
    potentials: OnceLock<std::result::Result<PotentialLocal, String>>,
}

/// Every discrete operator of degree `k` on a mesh.
pub struct Discretization<'m> {
    pub mesh: &'m PolyMesh,
    pub k: usize,
    pub polys: MeshPolys,
    pub cells: Vec<CellOps>,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m PolyMesh, k: usize) -> Result<Self> {
        let polys = MeshPolys::new(mesh, k)?;
        let cells = (0..mesh.n_cells())
            .map(|t| {
                let cv = CellView::new(mesh, &polys, t);
                CellOps { stokes: StokesLocal::new(&cv), ddr: DdrLocal::new(&cv), potentials: OnceLock::new() }
            })
            .collect();
        Ok(Discretization { mesh, k, polys, cells })
    }

    pub fn view(&self, t: usize) -> CellView<'_> {
        CellView::new(self.mesh, &self.polys, t)
    }

    /// Lazily built reconstructions of cell `t`.
    pub fn potentials(&self, t: usize) -> Result<&PotentialLocal> {
        let c = &self.cells[t];
        let r = c
            .potentials
            .get_or_init(|| PotentialLocal::new(&self.view(t), &c.stokes, &c.ddr).map_err(|e| e.to_string()));
        r.as_ref().map_err(|e| crate::Error::InvalidArgument(e.clone()))
    }

    pub fn layout(&self, space: SpaceTag) -> DofLayout {
        DofLayout::new(self.mesh, space)
    }

    pub fn sgrad(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::StokesGrad(k), SpaceTag::StokesRot(k), |t| {
            Ok(self.cells[t].stokes.grad.clone())
        })
        .expect("local gradients are infallible")
    }

    pub fn srot(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::StokesRot(k), SpaceTag::BrokenScalar(k), |t| {
            Ok(self.cells[t].stokes.rot.clone())
        })
        .expect("local rotors are infallible")
    }

    pub fn tgrad(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::StokesRot(k), SpaceTag::TensorRot(k), |t| {
            Ok(self.cells[t].ddr.grad.clone())
        })
        .expect("local gradients are infallible")
    }

    pub fn trot(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::TensorRot(k), SpaceTag::BrokenVector(k + 1), |t| {
            Ok(self.cells[t].ddr.rot.clone())
        })
        .expect("local rotors are infallible")
    }

    pub fn sskw(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::TensorRot(k), SpaceTag::BrokenScalar(k), |t| {
            Ok(self.cells[t].ddr.sskw.clone())
        })
        .expect("local skew maps are infallible")
    }

    /// Embedding of the symmetric rotor space into the full one.
    pub fn sym_embedding(&self) -> GlobalOperator {
        let k = self.k;
        assemble_cellwise(self.mesh, SpaceTag::TensorRotSym(k), SpaceTag::TensorRot(k), |t| {
            Ok(sym_embedding_local(k, self.mesh.cells[t].vertices.len()))
        })
        .expect("embedding is infallible")
    }

    /// Discrete Hessian `tGRAD o SGRAD`, viewed in the symmetric rotor space.
    pub fn hess(&self) -> GlobalOperator {
        let h = self.tgrad().compose(&self.sgrad());
        let e = self.sym_embedding();
        let mut out = e.transpose().compose(&h);
        out.target = SpaceTag::TensorRotSym(self.k);
        out
    }

    /// Rotor restricted to the symmetric rotor space.
    pub fn trot_sym(&self) -> GlobalOperator {
        self.trot().compose(&self.sym_embedding())
    }

    /// Discrete L2-like product on the Stokes gradient space.
    pub fn gram_scalar(&self) -> Result<CsrMatrix<f64>> {
        assemble_gram(self.mesh, SpaceTag::StokesGrad(self.k), |t| Ok(self.potentials(t)?.gram_scalar.clone()))
    }

    /// Discrete L2-like product on the Stokes rotor space.
    pub fn gram_vector(&self) -> Result<CsrMatrix<f64>> {
        assemble_gram(self.mesh, SpaceTag::StokesRot(self.k), |t| Ok(self.potentials(t)?.gram_vector.clone()))
    }
}

/// Block operator assembled from sparse blocks at given offsets.
pub fn block_operator(
    nrows: usize,
    ncols: usize,
    blocks: &[(usize, usize, &CsrMatrix<f64>, f64)],
    source: SpaceTag,
    target: SpaceTag,
) -> GlobalOperator {
    let mut trip = Vec::new();
    for &(r0, c0, m, s) in blocks {
        for (r, c, v) in m.triplet_iter() {
            trip.push((r0 + r, c0 + c, s * v));
        }
    }
    GlobalOperator::from_triplets(source, target, nrows, ncols, &trip)
}

pub fn identity_csr(n: usize) -> CsrMatrix<f64> {
    CsrMatrix::identity(n)
}

/// Maps of the twisted complex: `A0 = [[SGRAD, -Id], [0, tGRAD]]` and
/// `A1 = [[SROT, -sskw], [0, tROT]]`.
pub fn twisted_maps(d: &Discretization) -> (GlobalOperator, GlobalOperator) {
    let k = d.k;
    let (g, r, tg, tr, sk) = (d.sgrad(), d.srot(), d.tgrad(), d.trot(), d.sskw());
    let (n_s, n_v, n_r) = (g.ncols(), g.nrows(), tg.nrows());
    let (n_p, n_pv) = (r.nrows(), tr.nrows());
    let id = identity_csr(n_v);
    let a0 = block_operator(
        n_v + n_r,
        n_s + n_v,
        &[(0, 0, &g.matrix, 1.0), (0, n_s, &id, -1.0), (n_v, n_s, &tg.matrix, 1.0)],
        SpaceTag::StokesGrad(k),
        SpaceTag::StokesRot(k),
    );
    let a1 = block_operator(
        n_p + n_pv,
        n_v + n_r,
        &[(0, 0, &r.matrix, 1.0), (0, n_v, &sk.matrix, -1.0), (n_p, n_v, &tr.matrix, 1.0)],
        SpaceTag::StokesRot(k),
        SpaceTag::BrokenScalar(k),
    );
    (a0, a1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn complexes_close_on_every_family() {
        for fam in MeshFamily::ALL {
            let m = generate_mesh(fam, 1).unwrap();
            for k in 0..3 {
                let d = Discretization::new(&m, k).unwrap();
                assert!(d.srot().compose(&d.sgrad()).max_abs() < 1e-12, "{fam:?} {k}");
                assert!(d.trot().compose(&d.tgrad()).max_abs() < 1e-12, "{fam:?} {k}");
                let (a0, a1) = twisted_maps(&d);
                assert!(a1.compose(&a0).max_abs() < 1e-12);
                // Three chained derivatives amplify rounding; see the acceptance sweep.
                assert!(d.trot_sym().compose(&d.hess()).max_abs() < 1e-11, "{fam:?} {k}");
            }
        }
    }

    #[test]
    fn assembly_is_bitwise_deterministic() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
        let a = Discretization::new(&m, 1).unwrap().sgrad();
        let b = Discretization::new(&m, 1).unwrap().sgrad();
        assert_eq!(a.matrix.values(), b.matrix.values());
        assert_eq!(a.matrix.col_indices(), b.matrix.col_indices());
    }
}
