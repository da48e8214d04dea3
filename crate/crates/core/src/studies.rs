//! Polynomial consistency, interpolator commutation, convergence-rate
//! studies and Poincaré constants.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector2};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::Serialize;

use crate::assembly::{restrict, Discretization};
use crate::ddr_core::interpolate_vector;
use crate::error::{Error, Result};
use crate::fields::{Poly2, SinSin, SmoothScalar};
use crate::layout::SpaceTag;
use crate::linalg::{self, csr_to_dense, gram_factor};
use crate::mesh::{generate_mesh, MeshFamily, Point};
use crate::polyquad::CellPolys;
use crate::stokes_core::interpolate_stokes;

fn stack(a: DVector<f64>, b: DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn vector_projection(cp: &CellPolys, deg: i64, v: &dyn Fn(Point) -> Vector2<f64>) -> DVector<f64> {
    stack(cp.project(deg, &|p| v(p).x), cp.project(deg, &|p| v(p).y))
}

fn poly_field(v: &[Poly2; 2]) -> impl Fn(Point) -> Vector2<f64> + '_ {
    move |p| Vector2::new(v[0].eval(p), v[1].eval(p))
}

fn rot_of(v: &[Poly2; 2]) -> impl Fn(Point) -> f64 + '_ {
    move |p| v[1].grad(p).x - v[0].grad(p).y
}

/// Max coefficient errors of every reconstruction on polynomials it must
/// reproduce, with random polynomials drawn from `seed`.
pub fn polynomial_consistency(d: &Discretization, seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let m = d.mesh;
    let k = d.k;
    let kk = k as i64;
    let q1 = Poly2::random(k + 1, seed);
    let q3 = Poly2::random(k + 3, seed + 1);
    let vk = [Poly2::random(k, seed + 2), Poly2::random(k, seed + 3)];
    let v1 = [Poly2::random(k + 1, seed + 4), Poly2::random(k + 1, seed + 5)];
    let v2 = [Poly2::random(k + 2, seed + 6), Poly2::random(k + 2, seed + 7)];

    let iq1 = interpolate_stokes(m, &d.polys, &q1);
    let iq3 = interpolate_stokes(m, &d.polys, &q3);
    let ivk = interpolate_vector(m, &d.polys, &poly_field(&vk));
    let iv1 = interpolate_vector(m, &d.polys, &poly_field(&v1));
    let iv2 = interpolate_vector(m, &d.polys, &poly_field(&v2));
    let hq3 = d.tgrad().compose(&d.sgrad()).apply(&iq3);
    let rv1 = d.srot().apply(&iv1);
    let grad_q1 = [q1.derivative(0), q1.derivative(1)];

    let names = [
        "scalar_potential_k1",
        "rotor_potential_k",
        "lifting_k",
        "vector_potential_k2",
        "scalar_potential_k3",
        "hessian_k3",
        "gradient_k1",
        "rot_k1",
    ];
    let mut worst = [0.0f64; 8];
    for t in 0..m.n_cells() {
        let pl = d.potentials(t)?;
        let cp = &d.polys.cells[t];
        let loc = |space, x: &DVector<f64>| restrict(m, space, x, t);
        let x1 = loc(SpaceTag::StokesGrad(k), &iq1);
        let x3 = loc(SpaceTag::StokesGrad(k), &iq3);
        let xk = loc(SpaceTag::StokesRot(k), &ivk);
        let x2 = loc(SpaceTag::StokesRot(k), &iv2);
        let pk = vector_projection(cp, kk, &poly_field(&vk));
        let hess: Vec<f64> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .flat_map(|&(a, b)| cp.project(kk + 1, &|p| q3.hess(p)[(a, b)]).iter().copied().collect::<Vec<_>>())
            .collect();
        let errs = [
            (&pl.scalar * &x1 - cp.project(kk + 1, &|p| q1.eval(p))).amax(),
            (&pl.vector * &xk - &pk).amax(),
            (&pl.lift * &xk - &pk).amax(),
            (&pl.vector_kp2 * &x2 - vector_projection(cp, kk + 2, &poly_field(&v2))).amax(),
            (&pl.scalar_kp3 * &x3 - cp.project(kk + 3, &|p| q3.eval(p))).amax(),
            (&pl.tensor * loc(SpaceTag::TensorRot(k), &hq3) - DVector::from_vec(hess)).amax(),
            (&pl.vector * &d.cells[t].stokes.grad * &x1 - vector_projection(cp, kk, &poly_field(&grad_q1))).amax(),
            (loc(SpaceTag::BrokenScalar(k), &rv1) - cp.project(kk, &rot_of(&v1))).amax(),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    Ok(names.into_iter().zip(worst).collect())
}

/// Worst max-entry residuals of `SGRAD I q - I grad q` and
/// `SROT I v - pi ROT v` over `samples` random polynomial fields.
pub fn commutation_residuals(d: &Discretization, samples: usize, seed: u64) -> [f64; 2] {
    let m = d.mesh;
    let k = d.k;
    let (sgrad, srot) = (d.sgrad(), d.srot());
    let lp = d.layout(SpaceTag::BrokenScalar(k));
    let mut worst = [0.0f64; 2];
    for s in 0..samples as u64 {
        let q = Poly2::random(k + 3, seed + 3 * s);
        let lhs = sgrad.apply(&interpolate_stokes(m, &d.polys, &q));
        let rhs = interpolate_vector(m, &d.polys, &|p| q.grad(p));
        worst[0] = worst[0].max((lhs - rhs).amax());

        let v = [Poly2::random(k + 2, seed + 3 * s + 1), Poly2::random(k + 2, seed + 3 * s + 2)];
        let lhs = srot.apply(&interpolate_vector(m, &d.polys, &poly_field(&v)));
        let mut rhs = DVector::zeros(lp.dim());
        for (t, cp) in d.polys.cells.iter().enumerate() {
            let pr = cp.project(k as i64, &rot_of(&v));
            rhs.rows_mut(lp.cell_offset(t), pr.len()).copy_from(&pr);
        }
        worst[1] = worst[1].max((lhs - rhs).amax());
    }
    worst
}

/// Quantities whose convergence rates are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// `|P I q - q|`.
    Potential,
    /// `h |P_rot SGRAD I q - grad q|`.
    Gradient,
    /// `|SROT I v - ROT v|`.
    Rot,
    /// Dual norm of `q -> int r P q - (I r, q)` for the Stokes product.
    ProductGrad,
    /// Dual norm of `v -> int w . P_rot v - (I w, v)` for the vector product.
    ProductRot,
    /// Adjoint consistency error of the gradient, over `|SGRAD q|`.
    AdjointGrad,
    /// Adjoint consistency error of the rotor, over `|v|`.
    AdjointRot,
}

impl StudyKind {
    pub const ALL: [StudyKind; 7] = [
        StudyKind::Potential,
        StudyKind::Gradient,
        StudyKind::Rot,
        StudyKind::ProductGrad,
        StudyKind::ProductRot,
        StudyKind::AdjointGrad,
        StudyKind::AdjointRot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Potential => "potential",
            StudyKind::Gradient => "gradient",
            StudyKind::Rot => "rot",
            StudyKind::ProductGrad => "product_grad",
            StudyKind::ProductRot => "product_rot",
            StudyKind::AdjointGrad => "adjoint_grad",
            StudyKind::AdjointRot => "adjoint_rot",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown study `{s}`")))
    }

    pub fn target(self, k: usize) -> f64 {
        let k = k as f64;
        match self {
            StudyKind::Potential | StudyKind::Gradient | StudyKind::ProductGrad => k + 2.0,
            StudyKind::Rot | StudyKind::ProductRot | StudyKind::AdjointGrad | StudyKind::AdjointRot => k + 1.0,
        }
    }

    pub fn is_adjoint(self) -> bool {
        matches!(self, StudyKind::AdjointGrad | StudyKind::AdjointRot)
    }

    /// Slope tolerance: two-sided for primal studies, one-sided for adjoint ones.
    pub fn tolerance(self) -> f64 {
        if self.is_adjoint() {
            0.4
        } else {
            0.3
        }
    }
}

/// `sin(pi x) sin(pi y)`, which vanishes on the boundary of the unit square.
const BUMP: SinSin = SinSin { a: PI, b: PI };

fn smooth_vector(p: Point) -> Vector2<f64> {
    Vector2::new((PI * p.x).cos() * (PI * p.y).sin(), (PI * p.x).sin() * (2.0 * PI * p.y).cos())
}

fn smooth_vector_rot(p: Point) -> f64 {
    PI * (PI * p.x).cos() * (2.0 * PI * p.y).cos() - PI * (PI * p.x).cos() * (PI * p.y).cos()
}

/// Bump times `(1 + y, 1 - x)`: zero normal trace on the unit square.
fn cutoff_vector(p: Point) -> Vector2<f64> {
    BUMP.value(p) * Vector2::new(1.0 + p.y, 1.0 - p.x)
}

fn cutoff_vector_div(p: Point) -> f64 {
    let g = BUMP.grad(p);
    g.x * (1.0 + p.y) + g.y * (1.0 - p.x)
}

/// Bump times `1 + x y`: zero trace on the unit square.
fn cutoff_scalar(p: Point) -> f64 {
    BUMP.value(p) * (1.0 + p.x * p.y)
}

fn cutoff_scalar_curl(p: Point) -> Vector2<f64> {
    let g = BUMP.grad(p) * (1.0 + p.x * p.y) + BUMP.value(p) * Vector2::new(p.y, p.x);
    Vector2::new(g.y, -g.x)
}

/// Squared L2 distance on one cell between `coefs` in the orthonormal basis
/// of degree `deg` and `f`.
fn l2_sq(cp: &CellPolys, deg: i64, coefs: &DVector<f64>, f: &dyn Fn(Point) -> f64) -> f64 {
    let vals = cp.at_quad(&cp.basis(deg)) * coefs;
    cp.quad.points.iter().zip(&cp.quad.weights).zip(vals.iter()).map(|((&p, w), v)| w * (v - f(p)).powi(2)).sum()
}

fn scatter_add(d: &Discretization, space: SpaceTag, t: usize, local: &DVector<f64>, out: &mut DVector<f64>) {
    for (i, g) in d.layout(space).local_to_global(d.mesh, t).into_iter().enumerate() {
        out[g] += local[i];
    }
}

fn csr_apply(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (r, c, v) in a.triplet_iter() {
        y[r] += v * x[c];
    }
    y
}

/// `sqrt(b^T A^{-1} b)` by preconditioned conjugate gradients.
fn dual_norm(a: &CsrMatrix<f64>, b: &DVector<f64>) -> Result<f64> {
    let cg = linalg::pcg(a, b, 1e-12, 20 * b.len().max(50))?;
    Ok(b.dot(&cg.x).max(0.0).sqrt())
}

/// Removes row and column `p`.
fn drop_index(a: &CsrMatrix<f64>, p: usize) -> CsrMatrix<f64> {
    let shift = |i: usize| if i > p { i - 1 } else { i };
    let mut coo = CooMatrix::new(a.nrows() - 1, a.ncols() - 1);
    for (r, c, v) in a.triplet_iter() {
        if r != p && c != p {
            coo.push(shift(r), shift(c), *v);
        }
    }
    CsrMatrix::from(&coo)
}

/// Error measure of one study on one mesh.
pub fn study_error(kind: StudyKind, d: &Discretization) -> Result<f64> {
    let m = d.mesh;
    let k = d.k;
    let kk = k as i64;
    let sg = SpaceTag::StokesGrad(k);
    let sv = SpaceTag::StokesRot(k);
    match kind {
        StudyKind::Potential | StudyKind::Gradient => {
            let iq = interpolate_stokes(m, &d.polys, &BUMP);
            let mut e = 0.0;
            for t in 0..m.n_cells() {
                let pl = d.potentials(t)?;
                let cp = &d.polys.cells[t];
                let x = restrict(m, sg, &iq, t);
                if kind == StudyKind::Potential {
                    e += l2_sq(cp, kk + 1, &(&pl.scalar * &x), &|p| BUMP.value(p));
                } else {
                    let g = &pl.vector * &d.cells[t].stokes.grad * &x;
                    let n = g.len() / 2;
                    e += l2_sq(cp, kk, &g.rows(0, n).into_owned(), &|p| BUMP.grad(p).x);
                    e += l2_sq(cp, kk, &g.rows(n, n).into_owned(), &|p| BUMP.grad(p).y);
                }
            }
            let scale = if kind == StudyKind::Gradient { m.h_max() } else { 1.0 };
            Ok(scale * e.sqrt())
        }
        StudyKind::Rot => {
            let r = d.srot().apply(&interpolate_vector(m, &d.polys, &smooth_vector));
            let mut e = 0.0;
            for t in 0..m.n_cells() {
                let x = restrict(m, SpaceTag::BrokenScalar(k), &r, t);
                e += l2_sq(&d.polys.cells[t], kk, &x, &smooth_vector_rot);
            }
            Ok(e.sqrt())
        }
        StudyKind::ProductGrad => {
            let gram = d.gram_scalar()?;
            let ir = interpolate_stokes(m, &d.polys, &BUMP);
            let mut b = -csr_apply(&gram, &ir);
            for t in 0..m.n_cells() {
                let loc = d.potentials(t)?.scalar.transpose() * d.polys.cells[t].project(kk + 1, &|p| BUMP.value(p));
                scatter_add(d, sg, t, &loc, &mut b);
            }
            dual_norm(&gram, &b)
        }
        StudyKind::ProductRot => {
            let gram = d.gram_vector()?;
            let iw = interpolate_vector(m, &d.polys, &smooth_vector);
            let mut b = -csr_apply(&gram, &iw);
            for t in 0..m.n_cells() {
                let loc =
                    d.potentials(t)?.vector.transpose() * vector_projection(&d.polys.cells[t], kk, &smooth_vector);
                scatter_add(d, sv, t, &loc, &mut b);
            }
            dual_norm(&gram, &b)
        }
        StudyKind::AdjointGrad => {
            let gram = d.gram_vector()?;
            let sgrad = d.sgrad().matrix;
            let iv = interpolate_vector(m, &d.polys, &cutoff_vector);
            let mut b = csr_apply(&sgrad.transpose(), &csr_apply(&gram, &iv));
            for t in 0..m.n_cells() {
                let loc = d.potentials(t)?.scalar.transpose() * d.polys.cells[t].project(kk + 1, &cutoff_vector_div);
                scatter_add(d, sg, t, &loc, &mut b);
            }
            // The seminorm |SGRAD q| vanishes on constants; fixing the value
            // at vertex 0 removes them without changing the supremum.
            let a = &sgrad.transpose() * &(&gram * &sgrad);
            let p = d.layout(sg).vertex_offset(0);
            let reduced: Vec<f64> = b.iter().enumerate().filter(|&(i, _)| i != p).map(|(_, v)| *v).collect();
            dual_norm(&drop_index(&a, p), &DVector::from_vec(reduced))
        }
        StudyKind::AdjointRot => {
            let gram = d.gram_vector()?;
            let mut b = DVector::zeros(d.layout(sv).dim());
            for t in 0..m.n_cells() {
                let cp = &d.polys.cells[t];
                let loc = d.cells[t].stokes.rot.transpose() * cp.project(kk, &cutoff_scalar)
                    - d.potentials(t)?.vector.transpose() * vector_projection(cp, kk, &cutoff_scalar_curl);
                scatter_add(d, sv, t, &loc, &mut b);
            }
            dual_norm(&gram, &b)
        }
    }
}

/// Least-squares slope of `log e` against `log h`, with the root-mean-square
/// residual of the fit.
pub fn fit_slope(h: &[f64], e: &[f64]) -> (f64, f64) {
    let n = h.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let res = x.iter().zip(&y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum::<f64>() / n;
    (slope, res.sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct RateStudy {
    pub kind: StudyKind,
    pub family: &'static str,
    pub k: usize,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub fit_residual: f64,
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn rate_study(kind: StudyKind, family: MeshFamily, ns: &[usize], k: usize) -> Result<RateStudy> {
    if ns.len() < 3 {
        return Err(Error::InvalidArgument("a rate study needs at least three meshes".into()));
    }
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for &n in ns {
        let mesh = generate_mesh(family, n)?;
        let d = Discretization::new(&mesh, k)?;
        h.push(mesh.h_max());
        errors.push(study_error(kind, &d)?);
    }
    let (slope, fit_residual) = fit_slope(&h, &errors);
    let (target, tol) = (kind.target(k), kind.tolerance());
    let pass = if kind.is_adjoint() { slope >= target - tol } else { (slope - target).abs() <= tol };
    Ok(RateStudy { kind, family: family.name(), k, n: ns.to_vec(), h, errors, slope, fit_residual, target, tol, pass })
}

/// Poincaré constants of the gradient and rotor over a mesh sequence.
#[derive(Clone, Debug, Serialize)]
pub struct PoincareSweep {
    pub family: &'static str,
    pub k: usize,
    pub n: Vec<usize>,
    pub grad: Vec<f64>,
    pub rot: Vec<f64>,
    /// `max / min - 1` of each sequence.
    pub grad_variation: f64,
    pub rot_variation: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Gradient constant in the Stokes and vector products, rotor constant in
/// the vector product and the L2 norm.
pub fn poincare_constants(d: &Discretization, tol: f64) -> Result<[f64; 2]> {
    let ls = gram_factor(&d.gram_scalar()?, "stokes gram")?;
    let lv = gram_factor(&d.gram_vector()?, "vector gram")?;
    let grad = linalg::poincare_constant(&d.sgrad().to_dense(), &ls, &lv, tol)?;
    let np = d.layout(SpaceTag::BrokenScalar(d.k)).dim();
    let rot = linalg::poincare_constant(&csr_to_dense(&d.srot().matrix), &lv, &DMatrix::identity(np, np), tol)?;
    Ok([grad, rot])
}

fn variation(c: &[f64]) -> f64 {
    let max = c.iter().copied().fold(f64::MIN, f64::max);
    let min = c.iter().copied().fold(f64::MAX, f64::min);
    max / min - 1.0
}

pub fn poincare_sweep(family: MeshFamily, ns: &[usize], k: usize, tol: f64) -> Result<PoincareSweep> {
    let mut grad = Vec::new();
    let mut rot = Vec::new();
    for &n in ns {
        let mesh = generate_mesh(family, n)?;
        let [g, r] = poincare_constants(&Discretization::new(&mesh, k)?, tol)?;
        grad.push(g);
        rot.push(r);
    }
    let (gv, rv) = (variation(&grad), variation(&rot));
    Ok(PoincareSweep {
        family: family.name(),
        k,
        n: ns.to_vec(),
        grad,
        rot,
        grad_variation: gv,
        rot_variation: rv,
        tol: 0.2,
        pass: gv <= 0.2 && rv <= 0.2,
    })
}
