//! Scaled monomials and orthonormal polynomial bases on cells and edges.
//!
//! Cell polynomials are stored as coefficient vectors over the monomials
//! `((x - x_T) / h_T)^a ((y - y_T) / h_T)^b`, ordered by total degree, so
//! every polynomial space of degree `l` is a prefix. Vector fields stack the
//! coefficients of the two components.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layout::{dim_p1, dim_p2};
use crate::mesh::{Point, PolyMesh};

use super::quadrature::{cell_rule, edge_rule, QuadRule};

/// Exponents of the two-variable monomials of total degree at most `degree`.
#[derive(Clone, Debug)]
pub struct Monomials {
    pub degree: usize,
    pub exps: Vec<[usize; 2]>,
}

impl Monomials {
    pub fn new(degree: usize) -> Self {
        let mut exps = Vec::with_capacity(dim_p2(degree as i64));
        for d in 0..=degree {
            for b in 0..=d {
                exps.push([d - b, b]);
            }
        }
        Monomials { degree, exps }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn index(a: usize, b: usize) -> usize {
        dim_p2(a as i64 + b as i64 - 1) + b
    }

    pub fn eval(&self, xi: f64, eta: f64) -> DVector<f64> {
        let d = self.degree;
        let mut px = vec![1.0; d + 1];
        let mut py = vec![1.0; d + 1];
        for i in 1..=d {
            px[i] = px[i - 1] * xi;
            py[i] = py[i - 1] * eta;
        }
        DVector::from_iterator(self.len(), self.exps.iter().map(|&[a, b]| px[a] * py[b]))
    }
}

/// Orthonormalises the columns of `gen` for the inner product `mass` by a
/// Cholesky factorisation of the Gram matrix, repeated once to clean up
/// rounding. Columns are combined in lower-triangular fashion, so prefixes
/// span the same spaces as the corresponding prefixes of `gen`.
pub fn orthonormalize(gen: &DMatrix<f64>, mass: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut b = gen.clone();
    if b.ncols() == 0 {
        return Some(b);
    }
    for _ in 0..2 {
        let g = b.transpose() * mass * &b;
        let g = (&g + g.transpose()) * 0.5;
        let l = g.cholesky()?.l();
        let bt = l.solve_lower_triangular(&b.transpose())?;
        b = bt.transpose();
    }
    Some(b)
}

fn block_diag(m: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let (r, c0) = m.shape();
    let mut out = DMatrix::zeros(r * copies, c0 * copies);
    for c in 0..copies {
        out.view_mut((c * r, c * c0), (r, c0)).copy_from(m);
    }
    out
}

/// Polynomial machinery on one cell up to a fixed maximal degree.
#[derive(Clone, Debug)]
pub struct CellPolys {
    pub cell: usize,
    pub center: Point,
    /// Cell diameter.
    pub h: f64,
    /// Length used to scale the monomials: largest vertex distance from `center`.
    pub scale: f64,
    pub area: f64,
    pub mono: Monomials,
    pub quad: QuadRule,
    /// Monomial values at the cell quadrature points (`nq x n`).
    pub vals: DMatrix<f64>,
    /// `int_T m_i m_j`.
    pub mass: DMatrix<f64>,
    /// Column `j` holds the coefficients of the x- (resp. y-) derivative of monomial `j`.
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
    /// Multiplication by the components of `x - x_T`, truncated at the top degree.
    pub mul_x: DMatrix<f64>,
    pub mul_y: DMatrix<f64>,
    /// Orthonormal scalar basis; column `j` lists monomial coefficients.
    pub onb: DMatrix<f64>,
    /// Monomial values at the quadrature points of each boundary edge, in loop order.
    pub edge_vals: Vec<DMatrix<f64>>,
    /// Monomial values at each loop vertex.
    pub vertex_vals: Vec<DVector<f64>>,
}

impl CellPolys {
    pub fn new(mesh: &PolyMesh, t: usize, degree: usize, edges: &[EdgePolys]) -> Result<Self> {
        let cell = &mesh.cells[t];
        let quad = cell_rule(mesh, t, 2 * degree)?;
        let mono = Monomials::new(degree);
        let n = mono.len();
        let center = cell.centroid;
        let h = cell.diameter;
        let scale = cell.vertices.iter().map(|&v| (mesh.vertices[v] - center).norm()).fold(0.0, f64::max);
        let eval = |p: Point| {
            let s = (p - center) / scale;
            mono.eval(s.x, s.y)
        };
        let mut vals = DMatrix::zeros(quad.len(), n);
        for (i, &p) in quad.points.iter().enumerate() {
            vals.row_mut(i).copy_from(&eval(p).transpose());
        }
        let mut weighted = vals.clone();
        for (i, w) in quad.weights.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*w);
        }
        let mass = vals.transpose() * &weighted;
        let mass = (&mass + mass.transpose()) * 0.5;
        let mut dx = DMatrix::zeros(n, n);
        let mut dy = DMatrix::zeros(n, n);
        let mut mul_x = DMatrix::zeros(n, n);
        let mut mul_y = DMatrix::zeros(n, n);
        for (j, &[a, b]) in mono.exps.iter().enumerate() {
            if a > 0 {
                dx[(Monomials::index(a - 1, b), j)] = a as f64 / scale;
            }
            if b > 0 {
                dy[(Monomials::index(a, b - 1), j)] = b as f64 / scale;
            }
            if a + b < degree {
                mul_x[(Monomials::index(a + 1, b), j)] = scale;
                mul_y[(Monomials::index(a, b + 1), j)] = scale;
            }
        }
        let onb = orthonormalize(&DMatrix::identity(n, n), &mass)
            .ok_or(Error::SingularLocal { cell: t, what: "monomial gram" })?;
        let edge_vals = cell
            .edges
            .iter()
            .map(|&e| {
                let q = &edges[e].quad;
                let mut m = DMatrix::zeros(q.len(), n);
                for (i, &p) in q.points.iter().enumerate() {
                    m.row_mut(i).copy_from(&eval(p).transpose());
                }
                m
            })
            .collect();
        let vertex_vals = cell.vertices.iter().map(|&v| eval(mesh.vertices[v])).collect();
        Ok(CellPolys {
            cell: t,
            center,
            h,
            scale,
            area: cell.area,
            mono,
            quad,
            vals,
            mass,
            dx,
            dy,
            mul_x,
            mul_y,
            onb,
            edge_vals,
            vertex_vals,
        })
    }

    pub fn n_mono(&self) -> usize {
        self.mono.len()
    }

    pub fn eval(&self, p: Point) -> DVector<f64> {
        let s = (p - self.center) / self.scale;
        self.mono.eval(s.x, s.y)
    }

    /// Orthonormal basis of the scalar polynomials of degree `deg` (empty when negative).
    pub fn basis(&self, deg: i64) -> DMatrix<f64> {
        self.onb.columns(0, dim_p2(deg)).into_owned()
    }

    /// Orthonormal basis of vector polynomials of degree `deg`, x-components first.
    pub fn vector_basis(&self, deg: i64) -> DMatrix<f64> {
        block_diag(&self.basis(deg), 2)
    }

    pub fn vector_mass(&self) -> DMatrix<f64> {
        block_diag(&self.mass, 2)
    }

    /// Stacks `CURL p = (dy p, -dx p)` for each column of `p`.
    pub fn curl(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(2 * self.n_mono(), p.ncols());
        out.rows_mut(0, self.n_mono()).copy_from(&(&self.dy * p));
        out.rows_mut(self.n_mono(), self.n_mono()).copy_from(&(-&self.dx * p));
        out
    }

    /// Divergence of stacked vector polynomials.
    pub fn div(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n_mono();
        &self.dx * v.rows(0, n) + &self.dy * v.rows(n, n)
    }

    /// Orthonormal basis of `CURL P^{deg+1}`.
    pub fn roly(&self, deg: i64) -> Result<DMatrix<f64>> {
        let full = self.basis(deg + 1);
        let gen = self.curl(&full.columns(1, full.ncols().saturating_sub(1)).into_owned());
        orthonormalize(&gen, &self.vector_mass()).ok_or(Error::SingularLocal { cell: self.cell, what: "roly basis" })
    }

    /// Orthonormal basis of `(x - x_T) P^{deg-1}`.
    pub fn croly(&self, deg: i64) -> Result<DMatrix<f64>> {
        let p = self.basis(deg - 1);
        let n = self.n_mono();
        let mut gen = DMatrix::zeros(2 * n, p.ncols());
        gen.rows_mut(0, n).copy_from(&(&self.mul_x * &p));
        gen.rows_mut(n, n).copy_from(&(&self.mul_y * &p));
        orthonormalize(&gen, &self.vector_mass())
            .ok_or(Error::SingularLocal { cell: self.cell, what: "complement basis" })
    }

    /// Values at the cell quadrature points of the columns of `p`.
    pub fn at_quad(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.vals * p
    }

    /// Weighted integrals `int_T f phi_j` for the orthonormal basis of degree `deg`.
    pub fn project(&self, deg: i64, f: &dyn Fn(Point) -> f64) -> DVector<f64> {
        let phi = self.at_quad(&self.basis(deg));
        let fw = DVector::from_iterator(
            self.quad.len(),
            self.quad.points.iter().zip(&self.quad.weights).map(|(&p, w)| w * f(p)),
        );
        phi.transpose() * fw
    }
}

/// `int_E f_i g_j` for function blocks given by their values at the
/// quadrature points of `edge`.
pub fn edge_gram(edge: &EdgePolys, f: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut gw = g.clone();
    for (r, w) in edge.quad.weights.iter().enumerate() {
        gw.row_mut(r).scale_mut(*w);
    }
    f.transpose() * gw
}

/// Orthonormal polynomials on an edge in the arc-length coordinate along the
/// canonical tangent.
#[derive(Clone, Debug)]
pub struct EdgePolys {
    pub edge: usize,
    pub midpoint: Point,
    pub h: f64,
    pub tangent: Point,
    pub normal: Point,
    pub degree: usize,
    pub quad: QuadRule,
    pub onb: DMatrix<f64>,
    /// Basis values at the quadrature points (`nq x (degree + 1)`).
    pub vals: DMatrix<f64>,
    /// Tangential derivatives at the quadrature points.
    pub ders: DMatrix<f64>,
    /// Basis values at the start and end vertices.
    pub end_vals: [DVector<f64>; 2],
    pub end_ders: [DVector<f64>; 2],
}

impl EdgePolys {
    pub fn new(mesh: &PolyMesh, e: usize, degree: usize, quad_degree: usize) -> Result<Self> {
        let edge = &mesh.edges[e];
        let quad = edge_rule(mesh, e, quad_degree);
        let n = degree + 1;
        let h = edge.length;
        let coord = |p: Point| (p - edge.midpoint).dot(&edge.tangent) / h;
        let mono = |s: f64| DVector::from_iterator(n, (0..n).map(|j| s.powi(j as i32)));
        let dmono = |s: f64| {
            DVector::from_iterator(n, (0..n).map(|j| if j == 0 { 0.0 } else { j as f64 * s.powi(j as i32 - 1) / h }))
        };
        let mut mv = DMatrix::zeros(quad.len(), n);
        let mut md = DMatrix::zeros(quad.len(), n);
        for (i, &p) in quad.points.iter().enumerate() {
            let s = coord(p);
            mv.row_mut(i).copy_from(&mono(s).transpose());
            md.row_mut(i).copy_from(&dmono(s).transpose());
        }
        let mut weighted = mv.clone();
        for (i, w) in quad.weights.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*w);
        }
        let mass = mv.transpose() * weighted;
        let onb = orthonormalize(&DMatrix::identity(n, n), &mass)
            .ok_or(Error::SingularEdge { edge: e, what: "edge gram" })?;
        let ends = edge.vertices.map(|v| coord(mesh.vertices[v]));
        Ok(EdgePolys {
            edge: e,
            midpoint: edge.midpoint,
            h,
            tangent: edge.tangent,
            normal: edge.normal,
            degree,
            vals: &mv * &onb,
            ders: &md * &onb,
            end_vals: ends.map(|s| onb.transpose() * mono(s)),
            end_ders: ends.map(|s| onb.transpose() * dmono(s)),
            quad,
            onb,
        })
    }

    pub fn dim(deg: i64) -> usize {
        dim_p1(deg)
    }

    /// Values of the basis of degree `deg` at the quadrature points.
    pub fn basis_vals(&self, deg: i64) -> DMatrix<f64> {
        self.vals.columns(0, dim_p1(deg)).into_owned()
    }

    pub fn basis_ders(&self, deg: i64) -> DMatrix<f64> {
        self.ders.columns(0, dim_p1(deg)).into_owned()
    }

    /// Coefficients of the L2 projection of `f` onto polynomials of degree `deg`.
    pub fn project(&self, deg: i64, f: &dyn Fn(Point) -> f64) -> DVector<f64> {
        let fw = DVector::from_iterator(
            self.quad.len(),
            self.quad.points.iter().zip(&self.quad.weights).map(|(&p, w)| w * f(p)),
        );
        self.basis_vals(deg).transpose() * fw
    }

    /// Evaluates the polynomial with coefficients `c` at a point of the edge.
    pub fn eval(&self, c: &DVector<f64>, p: Point) -> f64 {
        let s = (p - self.midpoint).dot(&self.tangent) / self.h;
        let m = DVector::from_iterator(c.len(), (0..c.len()).map(|j| s.powi(j as i32)));
        (self.onb.view((0, 0), (c.len(), c.len())) * c).dot(&m)
    }
}

/// Cell and edge polynomial data for a whole mesh at a given degree `k`.
#[derive(Clone, Debug)]
pub struct MeshPolys {
    pub k: usize,
    pub cells: Vec<CellPolys>,
    pub edges: Vec<EdgePolys>,
}

impl MeshPolys {
    /// Highest cell degree needed by the reconstructions of degree `k`.
    pub fn cell_degree(k: usize) -> usize {
        k + 4
    }

    pub fn new(mesh: &PolyMesh, k: usize) -> Result<Self> {
        let dc = Self::cell_degree(k);
        let edges =
            (0..mesh.n_edges()).map(|e| EdgePolys::new(mesh, e, k + 3, 2 * dc + 2)).collect::<Result<Vec<_>>>()?;
        let cells = (0..mesh.n_cells()).map(|t| CellPolys::new(mesh, t, dc, &edges)).collect::<Result<Vec<_>>>()?;
        Ok(MeshPolys { k, cells, edges })
    }
}
