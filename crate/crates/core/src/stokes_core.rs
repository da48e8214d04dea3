//! Stokes gradient space: interpolator, the discrete gradient `SGRAD` and the
//! scalar rotor `SROT` on the vector space.

use nalgebra::{DMatrix, DVector};

use crate::fields::SmoothScalar;
use crate::layout::{dim_p1, dim_p2, DofLayout, LocalDofs, SpaceTag};
use crate::local::{edge_gradient, element_gradient, element_rot, CellView};
use crate::mesh::PolyMesh;
use crate::polyquad::MeshPolys;

/// Interpolates a C1 scalar: cell projection of degree `k - 2`, edge
/// projections of the value (degree `k - 1`) and of the normal derivative
/// (degree `k`), vertex values and gradients.
pub fn interpolate_stokes(mesh: &PolyMesh, polys: &MeshPolys, q: &dyn SmoothScalar) -> DVector<f64> {
    let k = polys.k as i64;
    let l = DofLayout::new(mesh, SpaceTag::StokesGrad(polys.k));
    let mut x = DVector::zeros(l.dim());
    for (i, &p) in mesh.vertices.iter().enumerate() {
        let g = q.grad(p);
        let o = l.vertex_offset(i);
        x[o] = q.value(p);
        x[o + 1] = g.x;
        x[o + 2] = g.y;
    }
    let (nq, ng) = (dim_p1(k - 1), dim_p1(k));
    for (e, ep) in polys.edges.iter().enumerate() {
        let o = l.edge_offset(e);
        x.rows_mut(o, nq).copy_from(&ep.project(k - 1, &|p| q.value(p)));
        x.rows_mut(o + nq, ng).copy_from(&ep.project(k, &|p| q.grad(p).dot(&ep.normal)));
    }
    let nt = dim_p2(k - 2);
    for (t, cp) in polys.cells.iter().enumerate() {
        x.rows_mut(l.cell_offset(t), nt).copy_from(&cp.project(k - 2, &|p| q.value(p)));
    }
    x
}

/// Local Stokes operators on one cell.
#[derive(Clone, Debug)]
pub struct StokesLocal {
    /// Cell component of the gradient, in `P^{k-1}(T)^2`.
    pub grad_cell: DMatrix<f64>,
    /// Full local gradient into the local vector dofs.
    pub grad: DMatrix<f64>,
    /// Scalar rotor into `P^k(T)`.
    pub rot: DMatrix<f64>,
}

impl StokesLocal {
    pub fn new(cv: &CellView) -> Self {
        let k = cv.k as i64;
        let n = cv.n();
        let src = LocalDofs::new(SpaceTag::StokesGrad(cv.k), n);
        let dst = LocalDofs::new(SpaceTag::StokesRot(cv.k), n);
        let (nq, ng) = (dim_p1(k - 1), dim_p1(k));
        let (nkm2, nkm1, nk) = (dim_p2(k - 2), dim_p2(k - 1), dim_p2(k));

        let mut grad = DMatrix::zeros(dst.dim(), src.dim());
        for i in 0..n {
            for c in 0..2 {
                grad[(dst.vertex(i) + c, src.vertex(i) + 1 + c)] = 1.0;
            }
        }
        for (i, le) in cv.edges.iter().enumerate() {
            let gt = edge_gradient(le.ep, k - 1, k);
            let (t, nrm) = (le.ep.tangent, le.ep.normal);
            for c in 0..2 {
                let row = dst.edge(i) + c * ng;
                for j in 0..ng {
                    for l in 0..nq {
                        grad[(row + j, src.edge(i) + l)] = t[c] * gt[(j, l)];
                    }
                    grad[(row + j, src.vertex(le.start))] += t[c] * gt[(j, nq)];
                    grad[(row + j, src.vertex(le.end))] += t[c] * gt[(j, nq + 1)];
                    grad[(row + j, src.edge(i) + nq + j)] = nrm[c];
                }
            }
        }
        let (gc, ge) = element_gradient(cv, k - 2, k - 1, k - 1);
        let mut grad_cell = DMatrix::zeros(2 * nkm1, src.dim());
        grad_cell.view_mut((0, src.cell()), (2 * nkm1, nkm2)).copy_from(&gc);
        for (i, blk) in ge.iter().enumerate() {
            grad_cell.view_mut((0, src.edge(i)), (2 * nkm1, nq)).copy_from(blk);
        }
        grad.rows_mut(dst.cell(), 2 * nkm1).copy_from(&grad_cell);

        let (rc, re) = element_rot(cv, k - 1, k, k);
        let mut rot = DMatrix::zeros(nk, dst.dim());
        rot.columns_mut(dst.cell(), 2 * nkm1).copy_from(&rc);
        for (i, (le, blk)) in cv.edges.iter().zip(&re).enumerate() {
            for c in 0..2 {
                let mut v = rot.view_mut((0, dst.edge(i) + c * ng), (nk, ng));
                v += blk * le.ep.tangent[c];
            }
        }
        StokesLocal { grad_cell, grad, rot }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddr_core::{interpolate_vector, DdrLocal};
    use crate::fields::Poly2;
    use crate::mesh::{generate_mesh, MeshFamily};

    fn restrict(x: &DVector<f64>, l: &DofLayout, mesh: &PolyMesh, t: usize) -> DVector<f64> {
        let idx = l.local_to_global(mesh, t);
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]))
    }

    #[test]
    fn gradient_commutes_with_interpolation() {
        for fam in [MeshFamily::SplitTriangles, MeshFamily::AgglomeratedNonconvex] {
            let m = generate_mesh(fam, 2).unwrap();
            for k in 0..4 {
                let polys = MeshPolys::new(&m, k).unwrap();
                let q = Poly2::random(k + 3, 5);
                let iq = interpolate_stokes(&m, &polys, &q);
                let ig = interpolate_vector(&m, &polys, &|p| q.grad(p));
                let (l2, lr) =
                    (DofLayout::new(&m, SpaceTag::StokesGrad(k)), DofLayout::new(&m, SpaceTag::StokesRot(k)));
                for t in 0..m.n_cells() {
                    let loc = StokesLocal::new(&CellView::new(&m, &polys, t));
                    let err = (&loc.grad * restrict(&iq, &l2, &m, t) - restrict(&ig, &lr, &m, t)).amax();
                    assert!(err < 1e-10, "{fam:?} k={k}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn rotor_commutes_with_interpolation() {
        let m = generate_mesh(MeshFamily::DistortedQuads, 2).unwrap();
        for k in 0..4 {
            let polys = MeshPolys::new(&m, k).unwrap();
            let v = [Poly2::random(k + 2, 1), Poly2::random(k + 2, 2)];
            let iv = interpolate_vector(&m, &polys, &|p| nalgebra::Vector2::new(v[0].eval(p), v[1].eval(p)));
            let lr = DofLayout::new(&m, SpaceTag::StokesRot(k));
            for t in 0..m.n_cells() {
                let cv = CellView::new(&m, &polys, t);
                let loc = StokesLocal::new(&cv);
                let rot_v = |p: crate::mesh::Point| v[1].grad(p).x - v[0].grad(p).y;
                let expect = polys.cells[t].project(k as i64, &rot_v);
                let err = (&loc.rot * restrict(&iv, &lr, &m, t) - expect).amax();
                assert!(err < 1e-10, "k={k}: {err:e}");
            }
        }
    }

    #[test]
    fn skew_of_tensor_gradient_is_minus_rotor() {
        for fam in MeshFamily::ALL {
            let m = generate_mesh(fam, 1).unwrap();
            for k in 0..4 {
                let polys = MeshPolys::new(&m, k).unwrap();
                for t in 0..m.n_cells() {
                    let cv = CellView::new(&m, &polys, t);
                    let (s, d) = (StokesLocal::new(&cv), DdrLocal::new(&cv));
                    let err = (&d.sskw * &d.grad + &s.rot).amax();
                    assert!(err < 1e-12, "{fam:?} k={k}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn unit_square_circulation_gives_rotor_four() {
        // Constant tangent field circulating counter-clockwise, k = 0.
        let m = generate_mesh(MeshFamily::Cartesian, 1).unwrap();
        let polys = MeshPolys::new(&m, 0).unwrap();
        let cv = CellView::new(&m, &polys, 0);
        let loc = StokesLocal::new(&cv);
        let dst = LocalDofs::new(SpaceTag::StokesRot(0), 4);
        let mut v = DVector::zeros(dst.dim());
        for (i, le) in cv.edges.iter().enumerate() {
            // Circulating tangent is -omega t_E; constant edge basis is 1 / sqrt(h_E).
            let tau = le.ep.tangent * (-le.omega);
            for c in 0..2 {
                v[dst.edge(i) + c] = tau[c] * le.ep.h.sqrt();
            }
        }
        let r = (&loc.rot * v)[0] / polys.cells[0].area.sqrt();
        assert!((r - 4.0).abs() < 1e-13);
    }
}
