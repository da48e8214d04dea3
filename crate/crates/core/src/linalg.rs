//! Dense spectral tools: certified numerical rank, generalized singular
//! values with respect to Gram matrices, and a Jacobi-preconditioned
//! conjugate gradient for sparse SPD systems.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest matrix dimension handled by the dense spectral routines.
pub const DENSE_LIMIT: usize = 20_000;

/// Ratio between consecutive singular values required to certify a rank.
pub const GAP_CERTIFICATE: f64 = 1e3;

/// Default relative threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;

pub fn csr_to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplet_iter() {
        d[(r, c)] += *v;
    }
    d
}

fn check_size(m: &DMatrix<f64>) -> Result<()> {
    let dofs = m.nrows().max(m.ncols());
    if dofs > DENSE_LIMIT {
        return Err(Error::TooLarge { dofs, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_size(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Numerical rank with its singular-value gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// `sigma_rank / sigma_{rank+1}`; infinite when no singular value is dropped
    /// (or when the matrix vanishes).
    pub gap: f64,
    pub certified: bool,
}

/// Rank from sorted singular values: `#{sigma_i > tol sigma_1}`.
pub fn rank_from_singular_values(s: &[f64], tol: f64) -> RankInfo {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return RankInfo { rank: 0, gap: f64::INFINITY, certified: true };
    }
    let rank = s.iter().take_while(|&&x| x > tol * smax).count();
    let gap = match (rank, s.get(rank)) {
        (_, None) => f64::INFINITY,
        (0, _) => f64::INFINITY,
        (r, Some(&next)) if next > 0.0 => s[r - 1] / next,
        _ => f64::INFINITY,
    };
    RankInfo { rank, gap, certified: gap >= GAP_CERTIFICATE }
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> Result<RankInfo> {
    Ok(rank_from_singular_values(&singular_values(m)?, tol))
}

/// Lower Cholesky factor of a sparse SPD Gram matrix.
pub fn gram_factor(m: &CsrMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let d = csr_to_dense(m);
    check_size(&d)?;
    let d = (&d + d.transpose()) * 0.5;
    Ok(d.cholesky().ok_or(Error::NotPositiveDefinite(what))?.l())
}

/// `L_t^T A L_s^{-T}`: the matrix of `A` in coordinates where both Gram
/// matrices become the identity.
pub fn whiten(a: &DMatrix<f64>, ls: &DMatrix<f64>, lt: &DMatrix<f64>) -> DMatrix<f64> {
    // A L_s^{-T} = (L_s^{-1} A^T)^T
    let y = ls.solve_lower_triangular(&a.transpose()).expect("Cholesky factor has a positive diagonal");
    lt.transpose() * y.transpose()
}

/// Norm of `A` induced by the Gram matrices of its source and target.
pub fn operator_norm(a: &DMatrix<f64>, ls: &DMatrix<f64>, lt: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(&whiten(a, ls, lt))?.first().copied().unwrap_or(0.0))
}

/// Reciprocal of the smallest nonzero generalized singular value of `D`:
/// the best constant in `|x| <= C |D x|` on the orthogonal complement of the kernel.
pub fn poincare_constant(d: &DMatrix<f64>, ls: &DMatrix<f64>, lt: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let s = singular_values(&whiten(d, ls, lt))?;
    let r = rank_from_singular_values(&s, tol);
    if r.rank == 0 {
        return Err(Error::InvalidArgument("operator has no nonzero singular value".into()));
    }
    Ok(1.0 / s[r.rank - 1])
}

/// Ingredients and outcome of a Poincaré transfer between two complexes
/// linked by extension and reduction cochain maps.
#[derive(Clone, Debug, Serialize)]
pub struct TransferCertificate {
    /// Constant of the lower (reduced) complex.
    pub reduced_constant: f64,
    /// Constant of the local inequality on the image of `E0 R0 - Id`.
    pub local_constant: f64,
    /// Largest ratio `|z| / |D z|` over the random probes (never above `local_constant`).
    pub probe_constant: f64,
    pub probes: usize,
    pub norm_e0: f64,
    pub norm_e1: f64,
    pub norm_r1: f64,
    pub transferred_bound: f64,
    pub direct_constant: f64,
    pub pass: bool,
}

/// Operators and Gram factors of a two-space slice `X0 -> X1` together
/// with its reduced counterpart.
pub struct Slice<'a> {
    pub d: &'a DMatrix<f64>,
    pub d_hat: &'a DMatrix<f64>,
    pub e0: &'a DMatrix<f64>,
    pub e1: &'a DMatrix<f64>,
    pub r0: &'a DMatrix<f64>,
    pub r1: &'a DMatrix<f64>,
    /// Cholesky factors of the Grams of `X0, X1, X0_hat, X1_hat`.
    pub l0: &'a DMatrix<f64>,
    pub l1: &'a DMatrix<f64>,
    pub l0_hat: &'a DMatrix<f64>,
    pub l1_hat: &'a DMatrix<f64>,
}

/// Checks `C_direct <= C_hat |E0| |R1| + C_P (|E1| |R1| + 1)`.
///
/// `C_P` is the exact supremum of `|z| / |Dz|` over minimum-norm solutions
/// `z` of `Dz = D(E0 R0 - Id) x`; random probes are evaluated alongside as a
/// cross-check.
pub fn transfer_certificate(s: &Slice, tol: f64, probes: &[DVector<f64>]) -> Result<TransferCertificate> {
    let dt = whiten(s.d, s.l0, s.l1);
    let svd = dt.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rank = rank_from_singular_values(&sorted, tol).rank;
    if rank == 0 {
        return Err(Error::InvalidArgument("operator has no nonzero singular value".into()));
    }
    let direct_constant = 1.0 / sorted[rank - 1];
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let n0 = s.d.ncols();
    let u_r = DMatrix::from_fn(dt.nrows(), rank, |i, j| u[(i, order[j])]);
    let v_r = DMatrix::from_fn(n0, rank, |i, j| vt[(order[j], i)]);
    let inv_s = DVector::from_iterator(rank, sorted[..rank].iter().map(|x| 1.0 / x));

    // Range of D (E0 R0 - Id) in whitened coordinates.
    let defect = s.e0 * s.r0 - DMatrix::identity(n0, n0);
    let bt = whiten(&(s.d * defect), s.l0, s.l1);
    let bsvd = bt.clone().svd(true, false);
    let bmax = bsvd.singular_values.max();
    let keep: Vec<usize> =
        (0..bsvd.singular_values.len()).filter(|&i| bmax > 0.0 && bsvd.singular_values[i] > tol * bmax).collect();
    let local_constant = if keep.is_empty() {
        0.0
    } else {
        let bu = bsvd.u.as_ref().expect("requested");
        let q = DMatrix::from_fn(bt.nrows(), keep.len(), |i, j| bu[(i, keep[j])]);
        let m = DMatrix::from_diagonal(&inv_s) * u_r.transpose() * q;
        singular_values(&m)?[0]
    };

    // Probe cross-check with explicit minimum-norm solutions.
    let pinv = |y: &DVector<f64>| &v_r * DMatrix::from_diagonal(&inv_s) * (u_r.transpose() * y);
    let mut probe_constant: f64 = 0.0;
    for x in probes {
        let y = &bt * (s.l0.transpose() * x);
        let ny = y.norm();
        if ny > 0.0 {
            probe_constant = probe_constant.max(pinv(&y).norm() / ny);
        }
    }

    let reduced_constant = poincare_constant(s.d_hat, s.l0_hat, s.l1_hat, tol)?;
    let norm_e0 = operator_norm(s.e0, s.l0_hat, s.l0)?;
    let norm_e1 = operator_norm(s.e1, s.l1_hat, s.l1)?;
    let norm_r1 = operator_norm(s.r1, s.l1, s.l1_hat)?;
    let transferred_bound = reduced_constant * norm_e0 * norm_r1 + local_constant * (norm_e1 * norm_r1 + 1.0);
    Ok(TransferCertificate {
        reduced_constant,
        local_constant,
        probe_constant,
        probes: probes.len(),
        norm_e0,
        norm_e1,
        norm_r1,
        transferred_bound,
        direct_constant,
        pass: direct_constant <= transferred_bound * (1.0 + 1e-10),
    })
}

/// Least-squares residual `min_y |A y - b|` relative to `|b|` (zero when `b = 0`).
pub fn range_residual(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<f64> {
    check_size(a)?;
    let nb = b.norm();
    if nb == 0.0 {
        return Ok(0.0);
    }
    let svd = a.clone().svd(true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.as_ref().expect("requested");
    let mut proj = DVector::zeros(b.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol * smax {
            let col = u.column(i);
            proj += col * col.dot(b);
        }
    }
    Ok((b - proj).norm() / nb)
}

/// Orthonormal basis of the kernel of `a` (columns), from a full SVD.
pub fn kernel_basis(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_size(a)?;
    let n = a.ncols();
    // Pad to a square matrix so that the SVD returns a full right basis.
    let mut sq = DMatrix::zeros(a.nrows().max(n), n);
    sq.rows_mut(0, a.nrows()).copy_from(a);
    let svd = sq.svd(false, true);
    let smax = svd.singular_values.max();
    let vt = svd.v_t.as_ref().expect("requested");
    let cols: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| smax == 0.0 || svd.singular_values[i] <= tol * smax).collect();
    Ok(DMatrix::from_fn(n, cols.len(), |i, j| vt[(cols[j], i)]))
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn csr_mul(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (r, row) in a.row_iter().enumerate() {
        y[r] = row.col_indices().iter().zip(row.values()).map(|(&c, v)| v * x[c]).sum();
    }
    y
}

/// Jacobi-preconditioned conjugate gradient; stops at relative residual `rtol`.
pub fn pcg(a: &CsrMatrix<f64>, b: &DVector<f64>, rtol: f64, max_iter: usize) -> Result<CgResult> {
    let n = b.len();
    let mut diag = DVector::from_element(n, 0.0);
    for (r, c, v) in a.triplet_iter() {
        if r == c {
            diag[r] += *v;
        }
    }
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite("conjugate gradient matrix"));
    }
    let nb = b.norm();
    let mut x = DVector::zeros(n);
    if nb == 0.0 {
        return Ok(CgResult { x, iterations: 0, residual: 0.0 });
    }
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 0..max_iter {
        let ap = csr_mul(a, &p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite("conjugate gradient matrix"));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let res = r.norm() / nb;
        if res < rtol {
            return Ok(CgResult { x, iterations: it + 1, residual: res });
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    let residual = r.norm() / nb;
    Ok(CgResult { x, iterations: max_iter, residual })
}
