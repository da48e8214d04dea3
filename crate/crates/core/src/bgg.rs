//! Outputs of the BGG diagram: anti-commutativity, the Hessian and twisted
//! complexes, cohomology dimensions and per-triangle dof counts.

use serde::Serialize;

use crate::assembly::{twisted_maps, Discretization};
use crate::ddr_core::sym_embedding_local;
use crate::error::{Error, Result};
use crate::layout::{dim_p2, DofLayout, LocalDofs, SpaceTag};
use crate::linalg::{numerical_rank, RankInfo, RANK_TOL};
use crate::mesh::{Point, PolyMesh};

/// Max-entry residuals of the algebraic identities of the diagram.
#[derive(Clone, Debug, Serialize)]
pub struct ClosureResiduals {
    /// `SROT SGRAD`.
    pub stokes: f64,
    /// `tROT tGRAD`.
    pub tensor: f64,
    /// `tROT|sym Hess`.
    pub hessian: f64,
    /// `A1 A0` of the twisted complex.
    pub twisted: f64,
    /// `sskw tGRAD + SROT`.
    pub anticommutativity: f64,
    /// `sskw` applied to the symmetric embedding.
    pub sym_kernel: f64,
}

impl ClosureResiduals {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("srot_sgrad", self.stokes),
            ("trot_tgrad", self.tensor),
            ("trot_sym_hess", self.hessian),
            ("twisted_a1_a0", self.twisted),
            ("anticommutativity", self.anticommutativity),
            ("sskw_sym_embedding", self.sym_kernel),
        ]
    }
}

pub fn closure_residuals(d: &Discretization) -> ClosureResiduals {
    let (a0, a1) = twisted_maps(d);
    let sskw = d.sskw();
    let anti = sskw.compose(&d.tgrad()).to_dense() + d.srot().to_dense();
    ClosureResiduals {
        stokes: d.srot().compose(&d.sgrad()).max_abs(),
        tensor: d.trot().compose(&d.tgrad()).max_abs(),
        hessian: d.trot_sym().compose(&d.hess()).max_abs(),
        twisted: a1.compose(&a0).max_abs(),
        anticommutativity: anti.amax(),
        sym_kernel: sskw.compose(&d.sym_embedding()).max_abs(),
    }
}

/// One cohomology dimension, or a related rank, against its prediction.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionCheck {
    pub name: String,
    pub measured: i64,
    pub expected: i64,
    pub certified: bool,
    /// Smallest singular-value gap among the ranks involved.
    pub gap: f64,
}

impl DimensionCheck {
    pub fn passes(&self) -> bool {
        self.certified && self.measured == self.expected
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub k: usize,
    pub betti: [usize; 2],
    pub checks: Vec<DimensionCheck>,
    /// `dim X_Sgrad - dim X_rot,sym + dim P^{k+1}(T_h)^2` and `3 (b0 - b1)`.
    pub euler: [i64; 2],
}

impl CohomologyReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(DimensionCheck::passes) && self.euler[0] == self.euler[1]
    }
}

fn check(name: &str, measured: i64, expected: i64, ranks: &[&RankInfo]) -> DimensionCheck {
    DimensionCheck {
        name: name.to_string(),
        measured,
        expected,
        certified: ranks.iter().all(|r| r.certified),
        gap: ranks.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
    }
}

/// Cohomology dimensions of the Stokes, Hessian and twisted complexes from
/// certified dense ranks.
pub fn cohomology_report(d: &Discretization) -> Result<CohomologyReport> {
    let mesh = d.mesh;
    let k = d.k;
    let betti = mesh.betti_numbers();
    let [b0, b1] = betti.map(|b| b as i64);
    let dim = |s: SpaceTag| d.layout(s).dim() as i64;
    let (ns, nv, np) = (dim(SpaceTag::StokesGrad(k)), dim(SpaceTag::StokesRot(k)), dim(SpaceTag::BrokenScalar(k)));
    let (nr, nsym, npv) =
        (dim(SpaceTag::TensorRot(k)), dim(SpaceTag::TensorRotSym(k)), dim(SpaceTag::BrokenVector(k + 1)));

    let rank = |m: &crate::assembly::GlobalOperator| numerical_rank(&m.to_dense(), RANK_TOL);
    let rg = rank(&d.sgrad())?;
    let rr = rank(&d.srot())?;
    let rh = rank(&d.hess())?;
    let rts = rank(&d.trot_sym())?;
    let rsk = rank(&d.sskw())?;
    let (a0, a1) = twisted_maps(d);
    let ra0 = rank(&a0)?;
    let ra1 = rank(&a1)?;
    let r = |x: &RankInfo| x.rank as i64;

    let checks = vec![
        check("ds_h0", ns - r(&rg), b0, &[&rg]),
        check("ds_h1", nv - r(&rr) - r(&rg), b1, &[&rr, &rg]),
        check("ds_h2", np - r(&rr), 0, &[&rr]),
        check("hess_kernel", ns - r(&rh), 3 * b0, &[&rh]),
        check("dh_middle", nsym - r(&rts) - r(&rh), 3 * b1, &[&rts, &rh]),
        check("trot_sym_rank", r(&rts), npv, &[&rts]),
        check("sskw_rank", r(&rsk), np, &[&rsk]),
        check("twisted_h0", ns + nv - r(&ra0), 3 * b0, &[&ra0]),
        check("twisted_h1", nv + nr - r(&ra1) - r(&ra0), 3 * b1, &[&ra1, &ra0]),
        check("twisted_h2", np + npv - r(&ra1), 0, &[&ra1]),
    ];
    Ok(CohomologyReport { k, betti, checks, euler: [ns - nsym + npv, 3 * (b0 - b1)] })
}

/// Per-element dof counts of one space on a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DofCounts {
    pub per_vertex: usize,
    pub per_edge: usize,
    pub interior: usize,
    pub total: usize,
}

impl DofCounts {
    fn from_entities(per_vertex: usize, per_edge: usize, interior: usize) -> Self {
        DofCounts { per_vertex, per_edge, interior, total: 3 * per_vertex + 3 * per_edge + interior }
    }
}

/// Complexes compared in the dof tables. The degree index is `k` in every
/// case: `Dh` and `Hz` stand for the Hessian complexes of degree `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComplexKind {
    Ds,
    Fn,
    Dh,
    Hz,
}

impl ComplexKind {
    pub const ALL: [ComplexKind; 4] = [ComplexKind::Ds, ComplexKind::Fn, ComplexKind::Dh, ComplexKind::Hz];

    pub fn label(self, k: usize) -> String {
        match self {
            ComplexKind::Ds => format!("DS({k})"),
            ComplexKind::Fn => format!("FN({k})"),
            ComplexKind::Dh => format!("DH({})", k + 1),
            ComplexKind::Hz => format!("HZ({})", k + 1),
        }
    }

    /// Smallest admissible `k`.
    pub fn min_k(self) -> usize {
        match self {
            ComplexKind::Ds | ComplexKind::Dh => 0,
            ComplexKind::Fn => 3,
            ComplexKind::Hz => 1,
        }
    }

    /// Closed-form counts of the three spaces, or `None` below `min_k`.
    pub fn formula(self, k: usize) -> Option<[DofCounts; 3]> {
        if k < self.min_k() {
            return None;
        }
        let c = DofCounts::from_entities;
        let tri = (k + 2) * (k + 1) / 2;
        Some(match self {
            ComplexKind::Ds => {
                [c(3, 2 * k + 1, (k * k).saturating_sub(k) / 2), c(2, 2 * (k + 1), k * (k + 1)), c(0, 0, tri)]
            }
            ComplexKind::Fn => {
                [c(6, 2 * k - 5, (k - 3) * (k - 2) / 2), c(6, 2 * (k - 2), (k - 1) * k), c(1, 0, tri - 3)]
            }
            ComplexKind::Dh => [
                c(3, 2 * k + 1, (k * k).saturating_sub(k) / 2),
                c(0, 2 * k + 4, 3 * (k + 1) * (k + 2) / 2),
                c(0, 0, (k + 2) * (k + 3)),
            ],
            ComplexKind::Hz => [
                c(6, 2 * k - 1, (k - 1) * k / 2),
                c(3, 2 * k + 2, 3 * (k + 1) * (k + 2) / 2),
                c(0, 0, (k + 2) * (k + 3)),
            ],
        })
    }

    /// Closed-form totals as printed in the table headers.
    pub fn total_formula(self, k: usize) -> [usize; 3] {
        let tri = (k + 2) * (k + 1) / 2;
        match self {
            ComplexKind::Ds => [12 + (11 * k + k * k) / 2, 12 + 7 * k + k * k, tri],
            ComplexKind::Fn => [6 + (7 * k + k * k) / 2, 6 + 5 * k + k * k, tri],
            ComplexKind::Dh => [12 + (11 * k + k * k) / 2, 15 + 3 * (7 * k + k * k) / 2, (k + 2) * (k + 3)],
            ComplexKind::Hz => [15 + (11 * k + k * k) / 2, 18 + 3 * (7 * k + k * k) / 2, (k + 2) * (k + 3)],
        }
    }

    /// Spaces of the discrete complexes built here; `None` for the finite
    /// element families, which are reference data only.
    pub fn spaces(self, k: usize) -> Option<[SpaceTag; 3]> {
        match self {
            ComplexKind::Ds => Some([SpaceTag::StokesGrad(k), SpaceTag::StokesRot(k), SpaceTag::BrokenScalar(k)]),
            ComplexKind::Dh => {
                Some([SpaceTag::StokesGrad(k), SpaceTag::TensorRotSym(k), SpaceTag::BrokenVector(k + 1)])
            }
            ComplexKind::Fn | ComplexKind::Hz => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DofTableRow {
    pub complex: String,
    pub kind: ComplexKind,
    pub k: usize,
    pub spaces: [DofCounts; 3],
    /// Whether layout counts on a single triangle agree; `None` for the
    /// reference-only families.
    pub layout_agrees: Option<bool>,
}

/// Reference triangle used for the layout cross-check.
pub fn single_triangle() -> PolyMesh {
    PolyMesh::from_loops(
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
        vec![vec![0, 1, 2]],
        "single_triangle",
    )
    .expect("reference triangle is valid")
}

fn layout_counts(mesh: &PolyMesh, space: SpaceTag) -> DofCounts {
    let l = DofLayout::new(mesh, space);
    DofCounts { per_vertex: l.per_vertex, per_edge: l.per_edge, interior: l.per_cell, total: l.dim() }
}

/// Dof counts for `k = 0..=k_max`, with a hard failure when a formula
/// disagrees with the layout of the implemented spaces.
pub fn dof_table(k_max: usize) -> Result<Vec<DofTableRow>> {
    let tri = single_triangle();
    let mut rows = Vec::new();
    for kind in ComplexKind::ALL {
        for k in 0..=k_max {
            let Some(spaces) = kind.formula(k) else { continue };
            let totals = kind.total_formula(k);
            for (s, &t) in spaces.iter().zip(&totals) {
                if s.total != t {
                    return Err(Error::InvalidArgument(format!(
                        "{}: entity counts sum to {} but the closed form gives {t}",
                        kind.label(k),
                        s.total
                    )));
                }
            }
            let layout_agrees = match kind.spaces(k) {
                Some(tags) => {
                    for (s, tag) in spaces.iter().zip(tags) {
                        let l = layout_counts(&tri, tag);
                        if l != *s {
                            return Err(Error::InvalidArgument(format!(
                                "{}: layout of {tag:?} has {l:?}, formula gives {s:?}",
                                kind.label(k)
                            )));
                        }
                    }
                    Some(true)
                }
                None => None,
            };
            rows.push(DofTableRow { complex: kind.label(k), kind, k, spaces, layout_agrees });
        }
    }
    Ok(rows)
}

/// Markdown rendering: one row per complex and degree.
pub fn dof_table_markdown(rows: &[DofTableRow]) -> String {
    let mut s =
        String::from("| complex | totals | per vertex | per edge | interior | layout |\n|---|---|---|---|---|---|\n");
    for r in rows {
        let join =
            |f: fn(&DofCounts) -> usize| r.spaces.iter().map(f).map(|v| v.to_string()).collect::<Vec<_>>().join("/");
        let layout = match r.layout_agrees {
            Some(true) => "ok",
            Some(false) => "mismatch",
            None => "-",
        };
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            r.complex,
            join(|c| c.total),
            join(|c| c.per_vertex),
            join(|c| c.per_edge),
            join(|c| c.interior),
            layout
        ));
    }
    s
}

/// Per-cell check that the symmetric embedding spans the kernel of `sskw`:
/// returns `(rank of cell sskw, dim of symmetric cell block)`, which must be
/// `(N_k, 3 N_k)`.
pub fn sym_kernel_dimensions(k: usize, n: usize) -> Result<(usize, usize)> {
    let nk = dim_p2(k as i64);
    let full = LocalDofs::new(SpaceTag::TensorRot(k), n);
    let e = sym_embedding_local(k, n);
    let cell_block = e.view((full.cell(), 0), (4 * nk, e.ncols())).into_owned();
    let sym_rank = numerical_rank(&cell_block, RANK_TOL)?.rank;
    let mut skw = nalgebra::DMatrix::zeros(nk, 4 * nk);
    for j in 0..nk {
        skw[(j, nk + j)] = 1.0;
        skw[(j, 2 * nk + j)] = -1.0;
    }
    Ok((numerical_rank(&skw, RANK_TOL)?.rank, sym_rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn headline_dof_counts() {
        let rows = dof_table(4).unwrap();
        let totals = |label: &str| rows.iter().find(|r| r.complex == label).unwrap().spaces.map(|s| s.total);
        assert_eq!(totals("DS(0)"), [12, 12, 1]);
        assert_eq!(totals("DH(1)"), [12, 15, 6]);
        assert_eq!(totals("FN(3)"), [21, 30, 10]);
        assert_eq!(totals("HZ(2)"), [21, 30, 12]);
        assert!(rows.iter().filter(|r| r.layout_agrees.is_some()).all(|r| r.layout_agrees == Some(true)));
        assert_eq!(rows.len(), 5 + 2 + 5 + 4);
    }

    #[test]
    fn markdown_lists_every_row() {
        let rows = dof_table(1).unwrap();
        let md = dof_table_markdown(&rows);
        assert_eq!(md.lines().count(), rows.len() + 2);
        assert!(md.contains("| DS(0) | 12/12/1 | 3/2/0 | 1/2/0 | 0/0/1 | ok |"));
    }

    #[test]
    fn symmetric_block_is_kernel_of_skew_part() {
        for k in 0..4 {
            let nk = dim_p2(k as i64);
            assert_eq!(sym_kernel_dimensions(k, 5).unwrap(), (nk, 3 * nk));
        }
    }

    #[test]
    fn anticommutativity_on_all_families() {
        for fam in MeshFamily::ALL {
            let m = generate_mesh(fam, 1).unwrap();
            for k in 0..3 {
                let r = closure_residuals(&Discretization::new(&m, k).unwrap());
                assert!(r.anticommutativity < 1e-12, "{fam:?} {k} {r:?}");
                assert!(r.sym_kernel < 1e-14);
            }
        }
    }

    #[test]
    fn cohomology_of_contractible_and_ring_meshes() {
        for (fam, n) in [(MeshFamily::Cartesian, 2), (MeshFamily::RingOneHole, 1), (MeshFamily::RingTwoHoles, 1)] {
            let m = generate_mesh(fam, n).unwrap();
            for k in 0..2 {
                let rep = cohomology_report(&Discretization::new(&m, k).unwrap()).unwrap();
                assert!(rep.passes(), "{fam:?} k={k}: {rep:#?}");
            }
        }
    }
}
