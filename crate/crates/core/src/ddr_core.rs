//! Vector de Rham gradient space of degree `k + 1` and the matrix rotor space:
//! interpolators, the tensor gradient, the row-wise rotor and the skew part.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::layout::{dim_p1, dim_p2, DofLayout, LocalDofs, SpaceTag};
use crate::local::{edge_gradient, element_gradient, element_rot, CellView};
use crate::mesh::{Point, PolyMesh};
use crate::polyquad::MeshPolys;

pub type VectorFn<'a> = &'a dyn Fn(Point) -> nalgebra::Vector2<f64>;
pub type TensorFn<'a> = &'a dyn Fn(Point) -> Matrix2<f64>;

/// Interpolates a vector field into the gradient space: cell and edge L2
/// projections of degree `k - 1` and `k`, plus vertex values.
pub fn interpolate_vector(mesh: &PolyMesh, polys: &MeshPolys, v: VectorFn) -> DVector<f64> {
    let k = polys.k as i64;
    let l = DofLayout::new(mesh, SpaceTag::StokesRot(polys.k));
    let mut x = DVector::zeros(l.dim());
    for (i, &p) in mesh.vertices.iter().enumerate() {
        let val = v(p);
        x[l.vertex_offset(i)] = val.x;
        x[l.vertex_offset(i) + 1] = val.y;
    }
    let ne = dim_p1(k);
    for (e, ep) in polys.edges.iter().enumerate() {
        for c in 0..2 {
            let proj = ep.project(k, &|p| v(p)[c]);
            x.rows_mut(l.edge_offset(e) + c * ne, ne).copy_from(&proj);
        }
    }
    let nt = dim_p2(k - 1);
    for (t, cp) in polys.cells.iter().enumerate() {
        for c in 0..2 {
            let proj = cp.project(k - 1, &|p| v(p)[c]);
            x.rows_mut(l.cell_offset(t) + c * nt, nt).copy_from(&proj);
        }
    }
    x
}

/// Interpolates a matrix field into the rotor space: cell projections of
/// degree `k` and edge projections of degree `k + 1` of `tau t_E`.
pub fn interpolate_tensor(mesh: &PolyMesh, polys: &MeshPolys, tau: TensorFn) -> DVector<f64> {
    let k = polys.k as i64;
    let l = DofLayout::new(mesh, SpaceTag::TensorRot(polys.k));
    let mut x = DVector::zeros(l.dim());
    let ne = dim_p1(k + 1);
    for (e, ep) in polys.edges.iter().enumerate() {
        for a in 0..2 {
            let proj = ep.project(k + 1, &|p| (tau(p) * ep.tangent)[a]);
            x.rows_mut(l.edge_offset(e) + a * ne, ne).copy_from(&proj);
        }
    }
    let nt = dim_p2(k);
    for (t, cp) in polys.cells.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                let proj = cp.project(k, &|p| tau(p)[(a, b)]);
                x.rows_mut(l.cell_offset(t) + (2 * a + b) * nt, nt).copy_from(&proj);
            }
        }
    }
    x
}

/// Local operators of the de Rham pair on one cell.
#[derive(Clone, Debug)]
pub struct DdrLocal {
    /// Cell component of the tensor gradient (`4 N_k x` local vector dofs).
    pub grad_cell: DMatrix<f64>,
    /// Full local tensor gradient into the local rotor dofs.
    pub grad: DMatrix<f64>,
    /// Row-wise rotor into `P^{k+1}(T)^2`.
    pub rot: DMatrix<f64>,
    /// Skew part `tau_12 - tau_21` of the cell component, in `P^k(T)`.
    pub sskw: DMatrix<f64>,
}

impl DdrLocal {
    pub fn new(cv: &CellView) -> Self {
        let k = cv.k as i64;
        let n = cv.n();
        let src = LocalDofs::new(SpaceTag::StokesRot(cv.k), n);
        let dst = LocalDofs::new(SpaceTag::TensorRot(cv.k), n);
        let (nk, nkm1, nkp1) = (dim_p2(k), dim_p2(k - 1), dim_p2(k + 1));
        let (ne_in, ne_out) = (dim_p1(k), dim_p1(k + 1));

        let mut grad = DMatrix::zeros(dst.dim(), src.dim());
        for (i, le) in cv.edges.iter().enumerate() {
            let g = edge_gradient(le.ep, k, k + 1);
            for a in 0..2 {
                let row = dst.edge(i) + a * ne_out;
                grad.view_mut((row, src.edge(i) + a * ne_in), (ne_out, ne_in)).copy_from(&g.columns(0, ne_in));
                for j in 0..ne_out {
                    grad[(row + j, src.vertex(le.start) + a)] += g[(j, ne_in)];
                    grad[(row + j, src.vertex(le.end) + a)] += g[(j, ne_in + 1)];
                }
            }
        }
        let (gc, ge) = element_gradient(cv, k - 1, k, k);
        let mut grad_cell = DMatrix::zeros(4 * nk, src.dim());
        for a in 0..2 {
            for b in 0..2 {
                let rows = (2 * a + b) * nk;
                grad_cell.view_mut((rows, src.cell() + a * nkm1), (nk, nkm1)).copy_from(&gc.rows(b * nk, nk));
                for (i, blk) in ge.iter().enumerate() {
                    grad_cell.view_mut((rows, src.edge(i) + a * ne_in), (nk, ne_in)).copy_from(&blk.rows(b * nk, nk));
                }
            }
        }
        grad.rows_mut(dst.cell(), 4 * nk).copy_from(&grad_cell);

        let (rc, re) = element_rot(cv, k, k + 1, k + 1);
        let mut rot = DMatrix::zeros(2 * nkp1, dst.dim());
        for a in 0..2 {
            let rows = a * nkp1;
            for b in 0..2 {
                rot.view_mut((rows, dst.cell() + (2 * a + b) * nk), (nkp1, nk)).copy_from(&rc.columns(b * nk, nk));
            }
            for (i, blk) in re.iter().enumerate() {
                rot.view_mut((rows, dst.edge(i) + a * ne_out), (nkp1, ne_out)).copy_from(blk);
            }
        }

        let mut sskw = DMatrix::zeros(nk, dst.dim());
        for j in 0..nk {
            sskw[(j, dst.cell() + nk + j)] = 1.0;
            sskw[(j, dst.cell() + 2 * nk + j)] = -1.0;
        }
        DdrLocal { grad_cell, grad, rot, sskw }
    }
}

/// Embedding of the symmetric rotor space into the full rotor space on one
/// cell; columns are orthonormal.
pub fn sym_embedding_local(k: usize, n: usize) -> DMatrix<f64> {
    let full = LocalDofs::new(SpaceTag::TensorRot(k), n);
    let sym = LocalDofs::new(SpaceTag::TensorRotSym(k), n);
    let nk = dim_p2(k as i64);
    let mut m = DMatrix::zeros(full.dim(), sym.dim());
    for r in 0..full.cell() {
        m[(r, r)] = 1.0;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..nk {
        m[(full.cell() + j, sym.cell() + j)] = 1.0;
        m[(full.cell() + 3 * nk + j, sym.cell() + nk + j)] = 1.0;
        m[(full.cell() + nk + j, sym.cell() + 2 * nk + j)] = s;
        m[(full.cell() + 2 * nk + j, sym.cell() + 2 * nk + j)] = s;
    }
    m
}
