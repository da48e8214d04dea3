//! Lowest-order de Rham complex, reduction and extension cochain maps between
//! it and the Stokes complex, and the Poincaré transfer certificate.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{assemble_cellwise, Discretization, GlobalOperator};
use crate::ddr_core::VectorFn;
use crate::error::Result;
use crate::layout::{dim_p1, dim_p2, DofLayout, LocalDofs, SpaceTag};
use crate::linalg::{self, Slice, TransferCertificate};
use crate::local::{solve, CellView};
use crate::mesh::{Point, PolyMesh};
use crate::polyquad::{edge_gram, EdgePolys, MeshPolys};
use crate::potentials::{scalar_potential, vector_potential};

/// Gradient and rotor of the lowest-order complex (vertex values, edge
/// tangential values, cell values).
pub struct LowestOrder {
    pub grad: GlobalOperator,
    pub curl: GlobalOperator,
}

impl LowestOrder {
    pub fn new(mesh: &PolyMesh) -> Self {
        let mut g = Vec::new();
        for (e, edge) in mesh.edges.iter().enumerate() {
            let [a, b] = edge.vertices;
            g.push((e, a, -1.0 / edge.length));
            g.push((e, b, 1.0 / edge.length));
        }
        let mut c = Vec::new();
        for (t, cell) in mesh.cells.iter().enumerate() {
            for (&e, &w) in cell.edges.iter().zip(&cell.orientations) {
                c.push((t, e, -w * mesh.edges[e].length / cell.area));
            }
        }
        let (nv, ne, nt) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_cells());
        LowestOrder {
            grad: GlobalOperator::from_triplets(SpaceTag::LowestGrad, SpaceTag::LowestCurl, ne, nv, &g),
            curl: GlobalOperator::from_triplets(SpaceTag::LowestCurl, SpaceTag::LowestCell, nt, ne, &c),
        }
    }
}

/// Vertex values.
pub fn interpolate_lowest_grad(mesh: &PolyMesh, q: &dyn Fn(Point) -> f64) -> DVector<f64> {
    DVector::from_iterator(mesh.n_vertices(), mesh.vertices.iter().map(|&p| q(p)))
}

/// Edge averages of the tangential component.
pub fn interpolate_lowest_curl(polys: &MeshPolys, v: VectorFn) -> DVector<f64> {
    DVector::from_iterator(
        polys.edges.len(),
        polys.edges.iter().map(|ep| ep.project(0, &|p| v(p).dot(&ep.tangent))[0] * ep.onb[(0, 0)]),
    )
}

/// Constant vector reconstruction from edge tangential values, fixed by the
/// rotor moments against `x - x_T` and `y - y_T`. Returns the `2 x n` map
/// from loop-ordered edge values to the two components.
pub fn lowest_vector_reconstruction(mesh: &PolyMesh, t: usize) -> DMatrix<f64> {
    let cell = &mesh.cells[t];
    let c = cell.centroid;
    let mut m = DMatrix::zeros(2, cell.edges.len());
    for (i, (&e, &w)) in cell.edges.iter().zip(&cell.orientations).enumerate() {
        let edge = &mesh.edges[e];
        let d = edge.midpoint - c;
        m[(0, i)] = w * edge.length * d.y / cell.area;
        m[(1, i)] = -w * edge.length * d.x / cell.area;
    }
    m
}

/// Gram matrices of the lowest-order spaces: `sum_T h_T^2` per vertex,
/// `sum_T h_T h_E` per edge, `|T|` per cell.
pub fn lowest_grams(mesh: &PolyMesh) -> [CsrMatrix<f64>; 3] {
    let mut gv = vec![0.0; mesh.n_vertices()];
    let mut ge = vec![0.0; mesh.n_edges()];
    let mut gt = vec![0.0; mesh.n_cells()];
    for (t, cell) in mesh.cells.iter().enumerate() {
        let h = cell.diameter;
        for &v in &cell.vertices {
            gv[v] += h * h;
        }
        for &e in &cell.edges {
            ge[e] += h * mesh.edges[e].length;
        }
        gt[t] = cell.area;
    }
    [gv, ge, gt].map(|d| diagonal_csr(&d))
}

fn diagonal_csr(d: &[f64]) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(d.len(), d.len());
    for (i, &v) in d.iter().enumerate() {
        coo.push(i, i, v);
    }
    CsrMatrix::from(&coo)
}

/// Edge component of the gradient extension: the polynomial of degree
/// `k - 1` whose edge gradient with the given endpoint values is constant.
/// Columns act on the start and end values.
fn edge_extension(ep: &EdgePolys, k: i64) -> Option<DMatrix<f64>> {
    let n = dim_p1(k - 1);
    if n == 0 {
        return Some(DMatrix::zeros(0, 2));
    }
    let dpsi = ep.basis_ders(k).columns(1, n).into_owned();
    let a = edge_gram(ep, &dpsi, &ep.basis_vals(k - 1));
    let ones = DMatrix::from_element(ep.quad.len(), 1, 1.0);
    let means = edge_gram(ep, &ep.basis_vals(k).columns(1, n).into_owned(), &ones);
    let mut b = DMatrix::zeros(n, 2);
    for i in 0..n {
        // -G int r + sum_V w_EV q_V r(x_V), with G = (q_end - q_start) / h_E
        let m = means[(i, 0)] / ep.h;
        b[(i, 0)] = -ep.end_vals[0][i + 1] + m;
        b[(i, 1)] = ep.end_vals[1][i + 1] - m;
    }
    solve(&a, &b)
}

/// Reductions, extensions and the cell average linking the Stokes complex
/// of degree `k` to the lowest-order complex.
pub struct TransferMaps {
    /// Vertex values.
    pub reduce_grad: GlobalOperator,
    /// Edge averages of the tangential component.
    pub reduce_rot: GlobalOperator,
    pub extend_grad: GlobalOperator,
    pub extend_rot: GlobalOperator,
    /// Cell averages of broken `P^k` fields.
    pub average: GlobalOperator,
    /// Inclusion of piecewise constants into broken `P^k`.
    pub embed: GlobalOperator,
}

impl TransferMaps {
    pub fn new(d: &Discretization) -> Result<Self> {
        let mesh = d.mesh;
        let k = d.k;
        let kk = k as i64;
        let (ls, lv, lp) =
            (d.layout(SpaceTag::StokesGrad(k)), d.layout(SpaceTag::StokesRot(k)), d.layout(SpaceTag::BrokenScalar(k)));
        let ne = dim_p1(kk);

        let rg: Vec<_> = (0..mesh.n_vertices()).map(|v| (v, ls.vertex_offset(v), 1.0)).collect();
        let mut rr = Vec::new();
        for (e, ep) in d.polys.edges.iter().enumerate() {
            for c in 0..2 {
                rr.push((e, lv.edge_offset(e) + c * ne, ep.tangent[c] * ep.onb[(0, 0)]));
            }
        }
        let mut avg = Vec::new();
        let mut emb = Vec::new();
        for (t, cp) in d.polys.cells.iter().enumerate() {
            avg.push((t, lp.cell_offset(t), cp.onb[(0, 0)]));
            emb.push((lp.cell_offset(t), t, 1.0 / cp.onb[(0, 0)]));
        }
        let (nv, nedges, nt) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_cells());

        let edge_ext = d
            .polys
            .edges
            .iter()
            .map(|ep| edge_extension(ep, kk).ok_or(crate::Error::SingularEdge { edge: ep.edge, what: "extension" }))
            .collect::<Result<Vec<_>>>()?;

        let extend_grad = assemble_cellwise(mesh, SpaceTag::LowestGrad, SpaceTag::StokesGrad(k), |t| {
            let cv = d.view(t);
            extend_grad_local(mesh, &cv, &edge_ext)
        })?;
        let extend_rot = assemble_cellwise(mesh, SpaceTag::LowestCurl, SpaceTag::StokesRot(k), |t| {
            let cv = d.view(t);
            extend_rot_local(mesh, &cv)
        })?;

        Ok(TransferMaps {
            reduce_grad: GlobalOperator::from_triplets(
                SpaceTag::StokesGrad(k),
                SpaceTag::LowestGrad,
                nv,
                ls.dim(),
                &rg,
            ),
            reduce_rot: GlobalOperator::from_triplets(
                SpaceTag::StokesRot(k),
                SpaceTag::LowestCurl,
                nedges,
                lv.dim(),
                &rr,
            ),
            extend_grad,
            extend_rot,
            average: GlobalOperator::from_triplets(SpaceTag::BrokenScalar(k), SpaceTag::LowestCell, nt, lp.dim(), &avg),
            embed: GlobalOperator::from_triplets(SpaceTag::LowestCell, SpaceTag::BrokenScalar(k), lp.dim(), nt, &emb),
        })
    }
}

fn extend_grad_local(mesh: &PolyMesh, cv: &CellView, edge_ext: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k = cv.k as i64;
    let n = cv.n();
    let dst = LocalDofs::new(SpaceTag::StokesGrad(cv.k), n);
    let mut m = DMatrix::zeros(dst.dim(), n);
    for i in 0..n {
        m[(dst.vertex(i), i)] = 1.0;
    }
    let nq = dim_p1(k - 1);
    let mut traces = Vec::with_capacity(n);
    for (i, le) in cv.edges.iter().enumerate() {
        let ext = &edge_ext[le.ep.edge];
        let mut tr = DMatrix::zeros(nq, n);
        for j in 0..nq {
            tr[(j, le.start)] += ext[(j, 0)];
            tr[(j, le.end)] += ext[(j, 1)];
        }
        m.rows_mut(dst.edge(i), nq).copy_from(&tr);
        traces.push(tr);
    }
    if dim_p2(k - 2) > 0 {
        let mut g0 = DMatrix::zeros(n, n);
        for (i, le) in cv.edges.iter().enumerate() {
            g0[(i, le.start)] = -1.0 / le.ep.h;
            g0[(i, le.end)] = 1.0 / le.ep.h;
        }
        let grad = lowest_vector_reconstruction(mesh, cv.t) * g0 / cv.cp.onb[(0, 0)];
        let cell = scalar_potential(cv, k - 2, 0, &grad, k - 1, &traces)?;
        m.rows_mut(dst.cell(), cell.nrows()).copy_from(&cell);
    }
    Ok(m)
}

fn extend_rot_local(mesh: &PolyMesh, cv: &CellView) -> Result<DMatrix<f64>> {
    let k = cv.k as i64;
    let n = cv.n();
    let dst = LocalDofs::new(SpaceTag::StokesRot(cv.k), n);
    let ne = dim_p1(k);
    let mut m = DMatrix::zeros(dst.dim(), n);
    let mut tangential = Vec::with_capacity(n);
    for (i, le) in cv.edges.iter().enumerate() {
        let unit = 1.0 / le.ep.onb[(0, 0)];
        for c in 0..2 {
            m[(dst.edge(i) + c * ne, i)] = le.ep.tangent[c] * unit;
        }
        let mut s = DMatrix::zeros(1, n);
        s[(0, i)] = unit;
        tangential.push(s);
    }
    let nkm1 = dim_p2(k - 1);
    if nkm1 > 0 {
        let s0 = 1.0 / cv.cp.onb[(0, 0)];
        let cell = &mesh.cells[cv.t];
        let rot = DMatrix::from_fn(1, n, |_, i| -cell.orientations[i] * cv.edges[i].ep.h / cell.area * s0);
        let gamma = lowest_vector_reconstruction(mesh, cv.t);
        let mut lift = DMatrix::zeros(2 * nkm1, n);
        for c in 0..2 {
            lift.row_mut(c * nkm1).copy_from(&(gamma.row(c) * s0));
        }
        let e = vector_potential(cv, k - 1, &rot, 0, &tangential, &lift)?;
        m.rows_mut(dst.cell(), 2 * nkm1).copy_from(&e);
    }
    Ok(m)
}

/// Max-entry residuals of the cochain identities and of `R o E = Id`.
#[derive(Clone, Debug, Serialize)]
pub struct CochainResiduals {
    /// `G0 R_grad - R_rot SGRAD`.
    pub reduce_grad: f64,
    /// `C0 R_rot - pi0 SROT`.
    pub reduce_rot: f64,
    /// `SGRAD E_grad - E_rot G0`.
    pub extend_grad: f64,
    /// `SROT E_rot - C0` (as broken fields).
    pub extend_rot: f64,
    /// `R_grad E_grad - Id` and `R_rot E_rot - Id`.
    pub reduce_extend_grad: f64,
    pub reduce_extend_rot: f64,
}

impl CochainResiduals {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("reduction_grad", self.reduce_grad),
            ("reduction_rot", self.reduce_rot),
            ("extension_grad", self.extend_grad),
            ("extension_rot", self.extend_rot),
            ("reduce_extend_grad", self.reduce_extend_grad),
            ("reduce_extend_rot", self.reduce_extend_rot),
        ]
    }
}

fn diff_max(a: &GlobalOperator, b: &GlobalOperator) -> f64 {
    (a.to_dense() - b.to_dense()).amax()
}

fn identity_defect(a: &GlobalOperator) -> f64 {
    (a.to_dense() - DMatrix::identity(a.nrows(), a.ncols())).amax()
}

pub fn cochain_residuals(d: &Discretization, lo: &LowestOrder, maps: &TransferMaps) -> CochainResiduals {
    let (sgrad, srot) = (d.sgrad(), d.srot());
    CochainResiduals {
        reduce_grad: diff_max(&lo.grad.compose(&maps.reduce_grad), &maps.reduce_rot.compose(&sgrad)),
        reduce_rot: diff_max(&lo.curl.compose(&maps.reduce_rot), &maps.average.compose(&srot)),
        extend_grad: diff_max(&sgrad.compose(&maps.extend_grad), &maps.extend_rot.compose(&lo.grad)),
        extend_rot: diff_max(&srot.compose(&maps.extend_rot), &maps.embed.compose(&lo.curl)),
        reduce_extend_grad: identity_defect(&maps.reduce_grad.compose(&maps.extend_grad)),
        reduce_extend_rot: identity_defect(&maps.reduce_rot.compose(&maps.extend_rot)),
    }
}

/// Residuals of the averaged-complex properties on random samples.
#[derive(Clone, Debug, Serialize)]
pub struct AveragedExactness {
    /// `max |(E R - Id) q|` over a basis of the gradient kernel.
    pub grad_kernel: f64,
    /// Worst relative least-squares distance of `(E R - Id) v` to the range of
    /// the gradient, for `v` in the rotor kernel.
    pub rot_kernel: f64,
    /// Worst relative distance of `(pi0 - Id) p` to the range of the rotor.
    pub top: f64,
    pub samples: usize,
}

pub fn averaged_exactness(
    d: &Discretization,
    maps: &TransferMaps,
    samples: usize,
    seed: u64,
) -> Result<AveragedExactness> {
    let tol = linalg::RANK_TOL;
    let (sgrad, srot) = (d.sgrad().to_dense(), d.srot().to_dense());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kg = linalg::kernel_basis(&sgrad, tol)?;
    let er_g = maps.extend_grad.compose(&maps.reduce_grad).to_dense();
    let grad_kernel = ((&er_g - DMatrix::identity(er_g.nrows(), er_g.ncols())) * &kg).amax();

    let kr = linalg::kernel_basis(&srot, tol)?;
    let er_r = maps.extend_rot.compose(&maps.reduce_rot).to_dense();
    let defect_r = &er_r - DMatrix::identity(er_r.nrows(), er_r.ncols());
    let mut rot_kernel: f64 = 0.0;
    for _ in 0..samples {
        let c = DVector::from_fn(kr.ncols(), |_, _| rng.random_range(-1.0..1.0));
        let v = &kr * c;
        let w = &defect_r * &v;
        let rel = linalg::range_residual(&sgrad, &w, tol)? * w.norm() / v.norm().max(f64::MIN_POSITIVE);
        rot_kernel = rot_kernel.max(rel);
    }

    let pe = maps.embed.compose(&maps.average).to_dense();
    let defect_p = &pe - DMatrix::identity(pe.nrows(), pe.ncols());
    let mut top: f64 = 0.0;
    for _ in 0..samples {
        let p = DVector::from_fn(pe.ncols(), |_, _| rng.random_range(-1.0..1.0));
        let w = &defect_p * &p;
        top = top.max(linalg::range_residual(&srot, &w, tol)? * w.norm() / p.norm());
    }
    Ok(AveragedExactness { grad_kernel, rot_kernel, top, samples })
}

/// The two slices of the Stokes complex for which a Poincaré inequality is
/// transferred from the lowest-order complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferSlice {
    Grad,
    Rot,
}

impl TransferSlice {
    pub fn name(self) -> &'static str {
        match self {
            TransferSlice::Grad => "grad",
            TransferSlice::Rot => "rot",
        }
    }
}

/// Runs the transfer certificate on one slice with `probes` random probes.
pub fn poincare_transfer(
    d: &Discretization,
    slice: TransferSlice,
    probes: usize,
    seed: u64,
    tol: f64,
) -> Result<TransferCertificate> {
    let lo = LowestOrder::new(d.mesh);
    let maps = TransferMaps::new(d)?;
    let [g_vertex, g_edge, g_cell] = lowest_grams(d.mesh);
    let (dm, dh, e0, e1, r0, r1, m0, m1, m0h, m1h) = match slice {
        TransferSlice::Grad => (
            d.sgrad(),
            &lo.grad,
            &maps.extend_grad,
            &maps.extend_rot,
            &maps.reduce_grad,
            &maps.reduce_rot,
            d.gram_scalar()?,
            d.gram_vector()?,
            g_vertex,
            g_edge,
        ),
        TransferSlice::Rot => {
            let n = DofLayout::new(d.mesh, SpaceTag::BrokenScalar(d.k)).dim();
            (
                d.srot(),
                &lo.curl,
                &maps.extend_rot,
                &maps.embed,
                &maps.reduce_rot,
                &maps.average,
                d.gram_vector()?,
                CsrMatrix::identity(n),
                g_edge,
                g_cell,
            )
        }
    };
    let l0 = linalg::gram_factor(&m0, "source gram")?;
    let l1 = linalg::gram_factor(&m1, "target gram")?;
    let l0h = linalg::gram_factor(&m0h, "reduced source gram")?;
    let l1h = linalg::gram_factor(&m1h, "reduced target gram")?;
    let (dd, dhd, e0d, e1d, r0d, r1d) =
        (dm.to_dense(), dh.to_dense(), e0.to_dense(), e1.to_dense(), r0.to_dense(), r1.to_dense());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<DVector<f64>> =
        (0..probes).map(|_| DVector::from_fn(dd.ncols(), |_, _| rng.random_range(-1.0..1.0))).collect();
    let s = Slice {
        d: &dd,
        d_hat: &dhd,
        e0: &e0d,
        e1: &e1d,
        r0: &r0d,
        r1: &r1d,
        l0: &l0,
        l1: &l1,
        l0_hat: &l0h,
        l1_hat: &l1h,
    };
    linalg::transfer_certificate(&s, tol, &xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddr_core::interpolate_vector;
    use crate::fields::Poly2;
    use crate::mesh::{generate_mesh, MeshFamily};
    use crate::stokes_core::interpolate_stokes;
    use nalgebra::Vector2;

    #[test]
    fn lowest_order_complex_closes_and_matches_hand_values() {
        for fam in MeshFamily::ALL {
            let m = generate_mesh(fam, 2).unwrap();
            let lo = LowestOrder::new(&m);
            assert!(lo.curl.compose(&lo.grad).max_abs() < 1e-12);
        }
        let m = generate_mesh(MeshFamily::Cartesian, 1).unwrap();
        let lo = LowestOrder::new(&m);
        let v = DVector::from_vec(m.cells[0].orientations.clone());
        // Edge values aligned with the outward orientation: rotor -4.
        let mut ve = DVector::zeros(m.n_edges());
        for (i, &e) in m.cells[0].edges.iter().enumerate() {
            ve[e] = v[i];
        }
        assert!((lo.curl.apply(&ve)[0] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn lowest_gradient_of_affine_is_tangential_slope() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
        let lo = LowestOrder::new(&m);
        let q = interpolate_lowest_grad(&m, &|p| 2.0 * p.x - 3.0 * p.y + 1.0);
        let g = lo.grad.apply(&q);
        for (e, edge) in m.edges.iter().enumerate() {
            assert!((g[e] - edge.tangent.dot(&Vector2::new(2.0, -3.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_reconstruction_is_exact_on_constants() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
        let polys = MeshPolys::new(&m, 0).unwrap();
        let c = Vector2::new(0.7, -1.3);
        let v = interpolate_lowest_curl(&polys, &|_| c);
        for t in 0..m.n_cells() {
            let loc = DVector::from_iterator(m.cells[t].edges.len(), m.cells[t].edges.iter().map(|&e| v[e]));
            let g = lowest_vector_reconstruction(&m, t) * loc;
            assert!((g - c).amax() < 1e-13, "cell {t}");
        }
    }

    #[test]
    fn cochain_identities_hold() {
        for fam in [
            MeshFamily::Cartesian,
            MeshFamily::DistortedQuads,
            MeshFamily::AgglomeratedNonconvex,
            MeshFamily::RingOneHole,
        ] {
            let m = generate_mesh(fam, 1).unwrap();
            for k in 0..4 {
                let d = Discretization::new(&m, k).unwrap();
                let r = cochain_residuals(&d, &LowestOrder::new(&m), &TransferMaps::new(&d).unwrap());
                for (name, v) in r.entries() {
                    assert!(v < 1e-12, "{fam:?} k={k} {name}: {v:e}");
                }
            }
        }
    }

    #[test]
    fn extension_of_constants_is_interpolate() {
        let m = generate_mesh(MeshFamily::SplitTriangles, 2).unwrap();
        for k in 0..4 {
            let d = Discretization::new(&m, k).unwrap();
            let maps = TransferMaps::new(&d).unwrap();
            let q0 = DVector::from_element(m.n_vertices(), 2.5);
            let one = Poly2::new(0, vec![2.5]);
            let diff = maps.extend_grad.apply(&q0) - interpolate_stokes(&m, &d.polys, &one);
            assert!(diff.amax() < 1e-12);
        }
    }

    #[test]
    fn edge_extension_of_affine_data_projects_the_affine_trace() {
        let m = generate_mesh(MeshFamily::DistortedQuads, 2).unwrap();
        let k = 3;
        let d = Discretization::new(&m, k).unwrap();
        let maps = TransferMaps::new(&d).unwrap();
        let f = |p: Point| 0.4 * p.x + 1.1 * p.y - 0.2;
        let x = maps.extend_grad.apply(&interpolate_lowest_grad(&m, &f));
        let l = d.layout(SpaceTag::StokesGrad(k));
        for (e, ep) in d.polys.edges.iter().enumerate() {
            let expect = ep.project(k as i64 - 1, &f);
            let got = x.rows(l.edge_offset(e), expect.len());
            assert!((got - expect).amax() < 1e-12);
        }
    }

    #[test]
    fn rotor_extension_reproduces_constant_fields_through_reduction() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 1).unwrap();
        let d = Discretization::new(&m, 2).unwrap();
        let maps = TransferMaps::new(&d).unwrap();
        let c = Vector2::new(-0.4, 0.9);
        let iv = interpolate_vector(&m, &d.polys, &|_| c);
        let v0 = maps.reduce_rot.apply(&iv);
        assert!((v0 - interpolate_lowest_curl(&d.polys, &|_| c)).amax() < 1e-13);
    }

    #[test]
    fn averaged_complex_properties() {
        let m = generate_mesh(MeshFamily::RingOneHole, 1).unwrap();
        for k in 0..3 {
            let d = Discretization::new(&m, k).unwrap();
            let maps = TransferMaps::new(&d).unwrap();
            let a = averaged_exactness(&d, &maps, 10, 7).unwrap();
            assert!(a.grad_kernel < 1e-12, "k={k} {a:?}");
            assert!(a.rot_kernel < 1e-10, "k={k} {a:?}");
            assert!(a.top < 1e-10, "k={k} {a:?}");
        }
    }

    #[test]
    fn transfer_certificates_pass() {
        let m = generate_mesh(MeshFamily::Cartesian, 2).unwrap();
        let d = Discretization::new(&m, 1).unwrap();
        for slice in [TransferSlice::Grad, TransferSlice::Rot] {
            let c = poincare_transfer(&d, slice, 20, 3, linalg::RANK_TOL).unwrap();
            assert!(c.pass, "{slice:?} {c:?}");
            assert!(c.probe_constant <= c.local_constant * (1.0 + 1e-8));
        }
    }
}
