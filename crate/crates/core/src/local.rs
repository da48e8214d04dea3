//! Cell-level building blocks shared by the discrete operators.
//!
//! All polynomial components are expressed in the orthonormal bases of
//! [`CellPolys`] and [`EdgePolys`]; the matrices below map such coefficients.

use nalgebra::DMatrix;

use crate::layout::{dim_p1, dim_p2};
use crate::mesh::PolyMesh;
use crate::polyquad::{edge_gram, CellPolys, EdgePolys, MeshPolys};

/// One boundary edge seen from a cell.
pub struct LoopEdge<'a> {
    pub ep: &'a EdgePolys,
    /// `+1` when the edge normal points out of the cell.
    pub omega: f64,
    /// Local (loop) indices of the canonical start and end vertices.
    pub start: usize,
    pub end: usize,
    /// Cell monomials at the edge quadrature points.
    pub cell_vals: &'a DMatrix<f64>,
}

/// Polynomial data of one cell together with its oriented boundary.
pub struct CellView<'a> {
    pub t: usize,
    pub k: usize,
    pub cp: &'a CellPolys,
    pub edges: Vec<LoopEdge<'a>>,
}

impl<'a> CellView<'a> {
    pub fn new(mesh: &PolyMesh, polys: &'a MeshPolys, t: usize) -> Self {
        let cell = &mesh.cells[t];
        let cp = &polys.cells[t];
        let n = cell.vertices.len();
        let edges = (0..n)
            .map(|i| {
                let omega = cell.orientations[i];
                let (start, end) = if omega < 0.0 { (i, (i + 1) % n) } else { ((i + 1) % n, i) };
                LoopEdge { ep: &polys.edges[cell.edges[i]], omega, start, end, cell_vals: &cp.edge_vals[i] }
            })
            .collect();
        CellView { t, k: polys.k, cp, edges }
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    /// Values of the orthonormal cell basis of degree `deg` on local edge `i`.
    pub fn basis_on_edge(&self, i: usize, deg: i64) -> DMatrix<f64> {
        self.edges[i].cell_vals * self.cp.basis(deg)
    }

    /// `int_T phi_i d_c phi_j` between the bases of degree `a` (rows) and `b` (columns).
    pub fn mass_derivative(&self, a: i64, b: i64, c: usize) -> DMatrix<f64> {
        let d = if c == 0 { &self.cp.dx } else { &self.cp.dy };
        self.cp.basis(a).transpose() * &self.cp.mass * d * self.cp.basis(b)
    }
}

/// Edge gradient of degree `out_deg` from an edge polynomial of degree
/// `in_deg` and the two endpoint values.
///
/// Columns: edge coefficients, start value, end value.
pub fn edge_gradient(ep: &EdgePolys, in_deg: i64, out_deg: i64) -> DMatrix<f64> {
    let (ni, no) = (dim_p1(in_deg), dim_p1(out_deg));
    let mut g = DMatrix::zeros(no, ni + 2);
    let psi = ep.basis_vals(in_deg);
    let dpsi = ep.basis_ders(out_deg);
    g.columns_mut(0, ni).copy_from(&(-edge_gram(ep, &dpsi, &psi)));
    for j in 0..no {
        g[(j, ni)] = -ep.end_vals[0][j];
        g[(j, ni + 1)] = ep.end_vals[1][j];
    }
    g
}

/// Full gradient in `P^{out_deg}(T)^2` of a scalar known through a cell
/// polynomial of degree `cell_deg` and edge polynomials of degree `edge_deg`.
///
/// Returns the cell block (`2 N_out x N_cell`) and one block per loop edge
/// (`2 N_out x dim_edge`); rows list the x-component first.
pub fn element_gradient(
    cv: &CellView,
    cell_deg: i64,
    edge_deg: i64,
    out_deg: i64,
) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let no = dim_p2(out_deg);
    let nc = dim_p2(cell_deg);
    let mut cell = DMatrix::zeros(2 * no, nc);
    for c in 0..2 {
        cell.rows_mut(c * no, no).copy_from(&(-cv.mass_derivative(cell_deg, out_deg, c).transpose()));
    }
    let edges = cv
        .edges
        .iter()
        .enumerate()
        .map(|(i, le)| {
            let m = edge_gram(le.ep, &cv.basis_on_edge(i, out_deg), &le.ep.basis_vals(edge_deg));
            let mut b = DMatrix::zeros(2 * no, m.ncols());
            for c in 0..2 {
                b.rows_mut(c * no, no).copy_from(&(&m * (le.omega * le.ep.normal[c])));
            }
            b
        })
        .collect();
    (cell, edges)
}

/// Scalar rotor in `P^{out_deg}(T)` of a vector field known through a cell
/// polynomial of degree `cell_deg` and tangential edge polynomials of degree
/// `edge_deg`: `int R r = int v . CURL r - sum_E w_TE int_E v_t r`.
///
/// Returns the cell block (`N_out x 2 N_cell`, x-component first) and one
/// block per loop edge acting on the tangential component.
pub fn element_rot(cv: &CellView, cell_deg: i64, edge_deg: i64, out_deg: i64) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let no = dim_p2(out_deg);
    let nc = dim_p2(cell_deg);
    let mut cell = DMatrix::zeros(no, 2 * nc);
    cell.columns_mut(0, nc).copy_from(&cv.mass_derivative(cell_deg, out_deg, 1).transpose());
    cell.columns_mut(nc, nc).copy_from(&(-cv.mass_derivative(cell_deg, out_deg, 0).transpose()));
    let edges = cv
        .edges
        .iter()
        .enumerate()
        .map(|(i, le)| edge_gram(le.ep, &cv.basis_on_edge(i, out_deg), &le.ep.basis_vals(edge_deg)) * (-le.omega))
        .collect();
    (cell, edges)
}

/// Solves the square system `a x = b`, returning `None` when `a` is singular.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().full_piv_lu();
    if !lu.is_invertible() {
        return None;
    }
    let x = lu.solve(b)?;
    let smax = a.amax();
    let check = (a * &x - b).amax();
    (check <= 1e-8 * (smax * x.amax()).max(b.amax()).max(1e-300)).then_some(x)
}
