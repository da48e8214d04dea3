//! Polynomial reconstructions on one cell: liftings, edge traces, scalar and
//! vector potentials, local interpolators of polynomials, and the local
//! component norms and discrete inner products.

use nalgebra::{DMatrix, DVector};

use crate::ddr_core::DdrLocal;
use crate::error::{Error, Result};
use crate::layout::{dim_p1, dim_p2, LocalDofs, SpaceTag};
use crate::local::{element_gradient, solve, CellView};
use crate::polyquad::{edge_gram, EdgePolys};
use crate::stokes_core::StokesLocal;

/// Edge polynomial of degree `top` whose projection of degree `low` is
/// prescribed, matching endpoint values and, with `derivs`, endpoint
/// tangential derivatives.
///
/// Columns: the `low + 1` prescribed coefficients, start value, end value,
/// then start and end derivatives when requested.
pub fn edge_trace(ep: &EdgePolys, low: i64, top: i64, derivs: bool) -> Option<DMatrix<f64>> {
    let nl = dim_p1(low);
    let nt = dim_p1(top);
    let nfree = nt - nl;
    let nend = if derivs { 4 } else { 2 };
    if nfree != nend {
        return None;
    }
    // Endpoint functionals applied to the basis.
    let rows = |j: usize| -> [f64; 4] { [ep.end_vals[0][j], ep.end_vals[1][j], ep.end_ders[0][j], ep.end_ders[1][j]] };
    let mut a = DMatrix::zeros(nend, nfree);
    for f in 0..nfree {
        let r = rows(nl + f);
        for c in 0..nend {
            a[(c, f)] = r[c];
        }
    }
    let mut b = DMatrix::zeros(nend, nl + nend);
    for j in 0..nl {
        let r = rows(j);
        for c in 0..nend {
            b[(c, j)] = -r[c];
        }
    }
    for c in 0..nend {
        b[(c, nl + c)] = 1.0;
    }
    let free = solve(&a, &b)?;
    let mut out = DMatrix::zeros(nt, nl + nend);
    for j in 0..nl {
        out[(j, j)] = 1.0;
    }
    out.rows_mut(nl, nfree).copy_from(&free);
    Some(out)
}

/// What a boundary least-squares lifting matches on each edge.
enum Observed {
    /// Every component of the unknown.
    Full,
    /// The tangential component of a vector unknown.
    Tangential,
}

/// Least-squares lifting: `w` in `P^full(T)^m` with prescribed coefficients
/// up to degree `fixed`, minimising `sum_E h_E^{-1} ||obs(w) - g_E||^2`.
///
/// `fixed_map` gives the prescribed coefficients (`m N_fixed` rows, component
/// blocks); `targets[i][o]` gives edge coefficients of degree `edge_deg` for
/// observed component `o` on loop edge `i`.
#[allow(clippy::too_many_arguments)]
fn boundary_lift(
    cv: &CellView,
    m: usize,
    fixed: i64,
    full: i64,
    observed: Observed,
    fixed_map: &DMatrix<f64>,
    targets: &[Vec<DMatrix<f64>>],
    edge_deg: i64,
) -> Result<DMatrix<f64>> {
    let (nf, nfull) = (dim_p2(fixed), dim_p2(full));
    let nloc = fixed_map.ncols();
    let nfree = nfull - nf;
    let mut a = DMatrix::zeros(m * nfree, m * nfree);
    let mut rhs = DMatrix::zeros(m * nfree, nloc);
    for (i, le) in cv.edges.iter().enumerate() {
        let phi = cv.basis_on_edge(i, full);
        let wts = 1.0 / le.ep.h;
        let psi = le.ep.basis_vals(edge_deg);
        // Observation rows as maps from the (component-blocked) coefficients.
        let obs: Vec<Vec<(usize, f64)>> = match observed {
            Observed::Full => (0..m).map(|c| vec![(c, 1.0)]).collect(),
            Observed::Tangential => vec![(0..m).map(|c| (c, le.ep.tangent[c])).collect()],
        };
        for (o, comps) in obs.iter().enumerate() {
            // Values at quadrature points of the free part and of the fixed part.
            let mut free_vals = DMatrix::zeros(phi.nrows(), m * nfree);
            let mut fixed_vals = DMatrix::zeros(phi.nrows(), nloc);
            for &(c, s) in comps {
                free_vals.columns_mut(c * nfree, nfree).copy_from(&(phi.columns(nf, nfree) * s));
                fixed_vals += phi.columns(0, nf) * fixed_map.rows(c * nf, nf) * s;
            }
            let target_vals = &psi * &targets[i][o];
            a += edge_gram(le.ep, &free_vals, &free_vals) * wts;
            rhs += edge_gram(le.ep, &free_vals, &(target_vals - fixed_vals)) * wts;
        }
    }
    let free = a
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularLocal { cell: cv.t, what: "boundary lifting" })?;
    let mut out = DMatrix::zeros(m * nfull, nloc);
    for c in 0..m {
        out.rows_mut(c * nfull, nf).copy_from(&fixed_map.rows(c * nf, nf));
        out.rows_mut(c * nfull + nf, nfree).copy_from(&free.rows(c * nfree, nfree));
    }
    Ok(out)
}

/// Values of the normal component of stacked vector polynomials `z` on loop edge `i`.
fn normal_on_edge(cv: &CellView, i: usize, z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cv.cp.n_mono();
    let le = &cv.edges[i];
    le.cell_vals * (z.rows(0, n) * le.ep.normal.x + z.rows(n, n) * le.ep.normal.y)
}

/// Scalar potential `P` of degree `out` from a gradient reconstruction of
/// degree `grad_deg` and edge traces of degree `trace_deg`:
/// `int P div z = -int G . z + sum_E w_TE int_E gamma (z . n_E)` for `z`
/// in the complement space of degree `out + 1`.
pub(crate) fn scalar_potential(
    cv: &CellView,
    out: i64,
    grad_deg: i64,
    grad: &DMatrix<f64>,
    trace_deg: i64,
    traces: &[DMatrix<f64>],
) -> Result<DMatrix<f64>> {
    let cp = cv.cp;
    let z = cp.croly(out + 1)?;
    let a = (cp.basis(out).transpose() * &cp.mass * cp.div(&z)).transpose();
    let mut rhs = -(z.transpose() * cp.vector_mass() * cp.vector_basis(grad_deg)) * grad;
    for (i, le) in cv.edges.iter().enumerate() {
        let zn = normal_on_edge(cv, i, &z);
        rhs += edge_gram(le.ep, &zn, &le.ep.basis_vals(trace_deg)) * &traces[i] * le.omega;
    }
    solve(&a, &rhs).ok_or(Error::SingularLocal { cell: cv.t, what: "scalar potential" })
}

/// Vector potential `P` in `P^out(T)^2` from a rotor `R` of degree at most
/// `out`, tangential edge data of degree `edge_deg` and a lifting `L`:
/// `int P . (CURL r + z) = int R r + sum_E w_TE int_E v_t r + int L . z`.
pub(crate) fn vector_potential(
    cv: &CellView,
    out: i64,
    rot: &DMatrix<f64>,
    edge_deg: i64,
    tangential: &[DMatrix<f64>],
    lift: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let cp = cv.cp;
    let full = cp.basis(out + 1);
    let nr = full.ncols() - 1;
    let curls = cp.curl(&full.columns(1, nr).into_owned());
    let z = cp.croly(out)?;
    let vb = cp.vector_basis(out);
    let vm = cp.vector_mass();
    let ntest = nr + z.ncols();
    let mut a = DMatrix::zeros(ntest, vb.ncols());
    a.rows_mut(0, nr).copy_from(&(curls.transpose() * &vm * &vb));
    a.rows_mut(nr, z.ncols()).copy_from(&(z.transpose() * &vm * &vb));
    let nloc = lift.ncols();
    let mut rhs = DMatrix::zeros(ntest, nloc);
    // Orthonormal hierarchy: int R phi_j is the j-th coefficient of R, zero beyond.
    let nrot = rot.nrows().min(nr + 1);
    if nrot > 1 {
        rhs.rows_mut(0, nrot - 1).copy_from(&rot.rows(1, nrot - 1));
    }
    for (i, le) in cv.edges.iter().enumerate() {
        let phi = cv.edges[i].cell_vals * full.columns(1, nr);
        let m = edge_gram(le.ep, &phi, &le.ep.basis_vals(edge_deg));
        let mut top = rhs.rows_mut(0, nr);
        top += m * &tangential[i] * le.omega;
    }
    rhs.rows_mut(nr, z.ncols()).copy_from(&(z.transpose() * &vm * &vb * lift));
    solve(&a, &rhs).ok_or(Error::SingularLocal { cell: cv.t, what: "vector potential" })
}

/// All reconstructions and local products on one cell.
#[derive(Clone, Debug)]
pub struct PotentialLocal {
    /// Lifting of vector dofs to `P^k(T)^2`.
    pub lift: DMatrix<f64>,
    /// Vector potential of degree `k` on the vector space.
    pub vector: DMatrix<f64>,
    /// Scalar potential of degree `k + 1` on the Stokes space.
    pub scalar: DMatrix<f64>,
    /// Component-wise scalar potential of degree `k + 2` on the vector space.
    pub vector_kp2: DMatrix<f64>,
    /// Row-wise potential of degree `k + 1` on the rotor space.
    pub tensor: DMatrix<f64>,
    /// Scalar potential of degree `k + 3` on the Stokes space.
    pub scalar_kp3: DMatrix<f64>,
    /// Interpolation of `P^{k+1}(T)` into local Stokes dofs.
    pub interp_scalar: DMatrix<f64>,
    /// Interpolation of `P^k(T)^2` into local vector dofs.
    pub interp_vector: DMatrix<f64>,
    /// Diagonal weights of the component norms.
    pub norm_scalar: DVector<f64>,
    pub norm_vector: DVector<f64>,
    /// Local discrete inner products (potential plus stabilisation).
    pub gram_scalar: DMatrix<f64>,
    pub gram_vector: DMatrix<f64>,
}

impl PotentialLocal {
    pub fn new(cv: &CellView, stokes: &StokesLocal, ddr: &DdrLocal) -> Result<Self> {
        let k = cv.k as i64;
        let n = cv.n();
        let cp = cv.cp;
        let ls = LocalDofs::new(SpaceTag::StokesGrad(cv.k), n);
        let lv = LocalDofs::new(SpaceTag::StokesRot(cv.k), n);
        let lr = LocalDofs::new(SpaceTag::TensorRot(cv.k), n);
        let (nkm1, nk) = (dim_p2(k - 1), dim_p2(k));
        let ne = dim_p1(k);
        let singular_edge = |le: &crate::local::LoopEdge, what| Error::SingularEdge { edge: le.ep.edge, what };

        // Lifting of vector dofs.
        let mut fixed = DMatrix::zeros(2 * nkm1, lv.dim());
        for c in 0..2 {
            for j in 0..nkm1 {
                fixed[(c * nkm1 + j, lv.cell() + c * nkm1 + j)] = 1.0;
            }
        }
        let edge_targets: Vec<Vec<DMatrix<f64>>> = (0..n)
            .map(|i| {
                (0..2)
                    .map(|c| {
                        let mut s = DMatrix::zeros(ne, lv.dim());
                        for j in 0..ne {
                            s[(j, lv.edge(i) + c * ne + j)] = 1.0;
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let lift = boundary_lift(cv, 2, k - 1, k, Observed::Full, &fixed, &edge_targets, k)?;

        // Vector potential of degree k.
        let tangential: Vec<DMatrix<f64>> = cv
            .edges
            .iter()
            .enumerate()
            .map(|(i, le)| &edge_targets[i][0] * le.ep.tangent.x + &edge_targets[i][1] * le.ep.tangent.y)
            .collect();
        let vector = vector_potential(cv, k, &stokes.rot, k, &tangential, &lift)?;

        // Scalar potential of degree k + 1 from traces of degree k + 1.
        let traces_kp1 = cv
            .edges
            .iter()
            .enumerate()
            .map(|(i, le)| {
                let tr = edge_trace(le.ep, k - 1, k + 1, false).ok_or_else(|| singular_edge(le, "trace"))?;
                let mut sel = DMatrix::zeros(tr.ncols(), ls.dim());
                let nq = dim_p1(k - 1);
                for j in 0..nq {
                    sel[(j, ls.edge(i) + j)] = 1.0;
                }
                sel[(nq, ls.vertex(le.start))] = 1.0;
                sel[(nq + 1, ls.vertex(le.end))] = 1.0;
                Ok(tr * sel)
            })
            .collect::<Result<Vec<_>>>()?;
        let grad_k = &vector * &stokes.grad;
        let scalar = scalar_potential(cv, k + 1, k, &grad_k, k + 1, &traces_kp1)?;

        // Component-wise potential of degree k + 2 on vector dofs.
        let nkp1 = dim_p2(k + 1);
        let nkp2 = dim_p2(k + 2);
        let mut vector_kp2 = DMatrix::zeros(2 * nkp2, lv.dim());
        for c in 0..2 {
            let traces = cv
                .edges
                .iter()
                .enumerate()
                .map(|(i, le)| {
                    let tr = edge_trace(le.ep, k, k + 2, false).ok_or_else(|| singular_edge(le, "trace"))?;
                    let mut sel = DMatrix::zeros(tr.ncols(), lv.dim());
                    for j in 0..ne {
                        sel[(j, lv.edge(i) + c * ne + j)] = 1.0;
                    }
                    sel[(ne, lv.vertex(le.start) + c)] = 1.0;
                    sel[(ne + 1, lv.vertex(le.end) + c)] = 1.0;
                    Ok(tr * sel)
                })
                .collect::<Result<Vec<_>>>()?;
            let fixed = fixed.rows(c * nkm1, nkm1).into_owned();
            let targets: Vec<Vec<DMatrix<f64>>> = traces.iter().map(|t| vec![t.clone()]).collect();
            let serendipity = boundary_lift(cv, 1, k - 1, k + 2, Observed::Full, &fixed, &targets, k + 2)?;
            let (gc, ge) = element_gradient(cv, k + 2, k + 2, k + 1);
            let mut g = &gc * &serendipity;
            for (blk, tr) in ge.iter().zip(&traces) {
                g += blk * tr;
            }
            let p = scalar_potential(cv, k + 2, k + 1, &g, k + 2, &traces)?;
            vector_kp2.rows_mut(c * nkp2, nkp2).copy_from(&p);
        }

        // Row-wise tensor potential of degree k + 1.
        let ner = dim_p1(k + 1);
        let mut tensor = DMatrix::zeros(4 * nkp1, lr.dim());
        for a in 0..2 {
            let mut fixed = DMatrix::zeros(2 * nk, lr.dim());
            for b in 0..2 {
                for j in 0..nk {
                    fixed[(b * nk + j, lr.cell() + (2 * a + b) * nk + j)] = 1.0;
                }
            }
            let edge_rows: Vec<DMatrix<f64>> = (0..n)
                .map(|i| {
                    let mut s = DMatrix::zeros(ner, lr.dim());
                    for j in 0..ner {
                        s[(j, lr.edge(i) + a * ner + j)] = 1.0;
                    }
                    s
                })
                .collect();
            let targets: Vec<Vec<DMatrix<f64>>> = edge_rows.iter().map(|s| vec![s.clone()]).collect();
            let lift_a = boundary_lift(cv, 2, k, k + 1, Observed::Tangential, &fixed, &targets, k + 1)?;
            let rot_a = ddr.rot.rows(a * nkp1, nkp1).into_owned();
            let p = vector_potential(cv, k + 1, &rot_a, k + 1, &edge_rows, &lift_a)?;
            tensor.rows_mut(a * 2 * nkp1, 2 * nkp1).copy_from(&p);
        }

        // Scalar potential of degree k + 3 with Hermite edge traces.
        let grad_kp2 = &vector_kp2 * &stokes.grad;
        let traces_kp3 = cv
            .edges
            .iter()
            .enumerate()
            .map(|(i, le)| {
                let tr = edge_trace(le.ep, k - 1, k + 3, true).ok_or_else(|| singular_edge(le, "trace"))?;
                let mut sel = DMatrix::zeros(tr.ncols(), ls.dim());
                let nq = dim_p1(k - 1);
                for j in 0..nq {
                    sel[(j, ls.edge(i) + j)] = 1.0;
                }
                sel[(nq, ls.vertex(le.start))] = 1.0;
                sel[(nq + 1, ls.vertex(le.end))] = 1.0;
                for c in 0..2 {
                    sel[(nq + 2, ls.vertex(le.start) + 1 + c)] = le.ep.tangent[c];
                    sel[(nq + 3, ls.vertex(le.end) + 1 + c)] = le.ep.tangent[c];
                }
                Ok(tr * sel)
            })
            .collect::<Result<Vec<_>>>()?;
        let scalar_kp3 = scalar_potential(cv, k + 3, k + 2, &grad_kp2, k + 3, &traces_kp3)?;

        // Local interpolators of polynomials.
        let phi = cp.basis(k + 1);
        let mut interp_scalar = DMatrix::zeros(ls.dim(), phi.ncols());
        for (j, mv) in cp.vertex_vals.iter().enumerate() {
            interp_scalar.row_mut(ls.vertex(j)).copy_from(&(mv.transpose() * &phi));
            interp_scalar.row_mut(ls.vertex(j) + 1).copy_from(&(mv.transpose() * &cp.dx * &phi));
            interp_scalar.row_mut(ls.vertex(j) + 2).copy_from(&(mv.transpose() * &cp.dy * &phi));
        }
        let nq = dim_p1(k - 1);
        for (i, le) in cv.edges.iter().enumerate() {
            let vals = le.cell_vals * &phi;
            let dn = le.cell_vals * (&cp.dx * le.ep.normal.x + &cp.dy * le.ep.normal.y) * &phi;
            interp_scalar.rows_mut(ls.edge(i), nq).copy_from(&edge_gram(le.ep, &le.ep.basis_vals(k - 1), &vals));
            interp_scalar.rows_mut(ls.edge(i) + nq, ne).copy_from(&edge_gram(le.ep, &le.ep.basis_vals(k), &dn));
        }
        for j in 0..dim_p2(k - 2) {
            interp_scalar[(ls.cell() + j, j)] = 1.0;
        }

        let phik = cp.basis(k);
        let mut interp_vector = DMatrix::zeros(lv.dim(), 2 * nk);
        for c in 0..2 {
            for (j, mv) in cp.vertex_vals.iter().enumerate() {
                interp_vector.view_mut((lv.vertex(j) + c, c * nk), (1, nk)).copy_from(&(mv.transpose() * &phik));
            }
            for (i, le) in cv.edges.iter().enumerate() {
                let m = edge_gram(le.ep, &le.ep.basis_vals(k), &(le.cell_vals * &phik));
                interp_vector.view_mut((lv.edge(i) + c * ne, c * nk), (ne, nk)).copy_from(&m);
            }
            for j in 0..nkm1 {
                interp_vector[(lv.cell() + c * nkm1 + j, c * nk + j)] = 1.0;
            }
        }

        // Component norms.
        let h = cp.h;
        let mut norm_scalar = DVector::from_element(ls.dim(), 1.0);
        for j in 0..n {
            norm_scalar[ls.vertex(j)] = h * h;
            norm_scalar[ls.vertex(j) + 1] = h.powi(4);
            norm_scalar[ls.vertex(j) + 2] = h.powi(4);
            for l in 0..nq {
                norm_scalar[ls.edge(j) + l] = h;
            }
            for l in 0..ne {
                norm_scalar[ls.edge(j) + nq + l] = h.powi(3);
            }
        }
        let mut norm_vector = DVector::from_element(lv.dim(), 1.0);
        for j in 0..n {
            norm_vector[lv.vertex(j)] = h * h;
            norm_vector[lv.vertex(j) + 1] = h * h;
            for l in 0..2 * ne {
                norm_vector[lv.edge(j) + l] = h;
            }
        }
        let gram = |pot: &DMatrix<f64>, interp: &DMatrix<f64>, w: &DVector<f64>| {
            let defect = DMatrix::identity(pot.ncols(), pot.ncols()) - interp * pot;
            let wd = DMatrix::from_diagonal(w) * &defect;
            let g = pot.transpose() * pot + defect.transpose() * wd;
            (&g + g.transpose()) * 0.5
        };
        let gram_scalar = gram(&scalar, &interp_scalar, &norm_scalar);
        let gram_vector = gram(&vector, &interp_vector, &norm_vector);

        Ok(PotentialLocal {
            lift,
            vector,
            scalar,
            vector_kp2,
            tensor,
            scalar_kp3,
            interp_scalar,
            interp_vector,
            norm_scalar,
            norm_vector,
            gram_scalar,
            gram_vector,
        })
    }
}
