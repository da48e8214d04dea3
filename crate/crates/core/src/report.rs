//! Verification reports and the suites that fill them.

use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::Discretization;
use crate::bgg::{closure_residuals, cohomology_report, dof_table as dof_rows, ComplexKind};
use crate::cochain_transfer::{
    averaged_exactness, cochain_residuals, poincare_transfer, LowestOrder, TransferMaps, TransferSlice,
};
use crate::error::Result;
use crate::mesh::{MeshFamily, PolyMesh};
use crate::studies::{commutation_residuals, poincare_sweep, polynomial_consistency, rate_study, StudyKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerances of the residual checks.
pub const CLOSURE_TOL: f64 = 1e-12;
pub const COMMUTATION_TOL: f64 = 1e-11;
pub const POLYNOMIAL_TOL: f64 = 1e-9;
pub const RANGE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Uncertified,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Uncertified => "uncertified",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Value,
    pub expected: Value,
    pub tol: Option<f64>,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub version: String,
    pub mesh: String,
    pub k: Option<usize>,
    pub checks: Vec<Check>,
    pub elapsed_s: Option<f64>,
}

impl VerificationReport {
    pub fn new(mesh: impl Into<String>, k: Option<usize>) -> Self {
        VerificationReport { version: VERSION.to_string(), mesh: mesh.into(), k, checks: Vec::new(), elapsed_s: None }
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        measured: Value,
        expected: Value,
        tol: Option<f64>,
        status: Status,
    ) {
        self.checks.push(Check { name: name.into(), measured, expected, tol, status });
    }

    /// `measured <= tol`, expecting zero.
    pub fn residual(&mut self, name: impl Into<String>, measured: f64, tol: f64) {
        self.push(name, json!(measured), json!(0.0), Some(tol), Status::from_bool(measured <= tol));
    }

    /// Exact equality.
    pub fn exact<T: Serialize + PartialEq>(&mut self, name: impl Into<String>, measured: T, expected: T) {
        let ok = measured == expected;
        self.push(name, json!(measured), json!(expected), None, Status::from_bool(ok));
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,measured,expected,tol,status\n");
        for c in &self.checks {
            let tol = c.tol.map(|t| t.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                c.name,
                csv_field(&c.measured),
                csv_field(&c.expected),
                tol,
                c.status.as_str()
            ));
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "# Verification report\n\nversion {} | mesh `{}` | k {}\n\n| check | measured | expected | tol | status |\n|---|---|---|---|---|\n",
            self.version,
            self.mesh,
            self.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into())
        );
        for c in &self.checks {
            let tol = c.tol.map(|t| format!("{t:e}")).unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                c.name,
                c.measured,
                c.expected,
                tol,
                c.status.as_str()
            ));
        }
        s
    }
}

fn csv_field(v: &Value) -> String {
    let s = v.to_string();
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Knobs shared by the suites.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub rank_tol: f64,
    /// Random polynomial fields per commutation check.
    pub samples: usize,
    /// Random probes of the transfer certificate.
    pub probes: usize,
    pub study_family: MeshFamily,
    pub study_n: Vec<usize>,
    pub poincare_n: Vec<usize>,
    pub dof_kmax: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 42,
            rank_tol: crate::linalg::RANK_TOL,
            samples: 20,
            probes: 20,
            study_family: MeshFamily::Cartesian,
            study_n: vec![4, 8, 16],
            poincare_n: vec![2, 4, 8],
            dof_kmax: 4,
        }
    }
}

/// Counts, Euler characteristic and Betti numbers; compares with the
/// expected topology when it is known.
pub fn mesh_info(mesh: &PolyMesh, expected_betti: Option<[usize; 2]>) -> VerificationReport {
    let mut r = VerificationReport::new(&mesh.name, None);
    let st = mesh.stats();
    let info = |r: &mut VerificationReport, name: &str, v: Value| r.push(name, v.clone(), v, None, Status::Pass);
    info(&mut r, "mesh.vertices", json!(st.vertices));
    info(&mut r, "mesh.edges", json!(st.edges));
    info(&mut r, "mesh.cells", json!(st.cells));
    info(&mut r, "mesh.h_max", json!(st.h_max));
    info(&mut r, "mesh.h_min", json!(st.h_min));
    info(&mut r, "mesh.regularity", json!(st.regularity));
    let chi = st.vertices as i64 - st.edges as i64 + st.cells as i64;
    r.exact("mesh.euler_characteristic", chi, st.betti[0] as i64 - st.betti[1] as i64);
    match expected_betti {
        Some(b) => r.exact("mesh.betti", st.betti, b),
        None => info(&mut r, "mesh.betti", json!(st.betti)),
    }
    r
}

/// Closure, anti-commutativity, cochain, commutation and averaged-complex
/// residuals on one mesh.
pub fn verify_complex(mesh: &PolyMesh, k: usize, opts: &SuiteOptions) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(&mesh.name, Some(k));
    let d = Discretization::new(mesh, k)?;
    for (name, v) in closure_residuals(&d).entries() {
        r.residual(format!("complex.{name}"), v, CLOSURE_TOL);
    }
    let maps = TransferMaps::new(&d)?;
    for (name, v) in cochain_residuals(&d, &LowestOrder::new(mesh), &maps).entries() {
        r.residual(format!("cochain.{name}"), v, CLOSURE_TOL);
    }
    let [g, rot] = commutation_residuals(&d, opts.samples, opts.seed);
    r.residual("commutation.grad", g, COMMUTATION_TOL);
    r.residual("commutation.rot", rot, COMMUTATION_TOL);
    let a = averaged_exactness(&d, &maps, opts.samples.min(10), opts.seed)?;
    r.residual("averaged.grad_kernel", a.grad_kernel, CLOSURE_TOL);
    r.residual("averaged.rot_kernel", a.rot_kernel, RANGE_TOL);
    r.residual("averaged.top", a.top, RANGE_TOL);
    Ok(r)
}

/// Cohomology dimensions of the Stokes, Hessian and twisted complexes.
pub fn cohomology(mesh: &PolyMesh, k: usize) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(&mesh.name, Some(k));
    let c = cohomology_report(&Discretization::new(mesh, k)?)?;
    for ch in &c.checks {
        let status = if !ch.certified { Status::Uncertified } else { Status::from_bool(ch.measured == ch.expected) };
        r.push(format!("cohomology.{}", ch.name), json!(ch.measured), json!(ch.expected), None, status);
        let gap = if ch.gap.is_finite() { json!(ch.gap) } else { json!("inf") };
        r.push(
            format!("cohomology.{}.gap", ch.name),
            gap,
            json!(crate::linalg::GAP_CERTIFICATE),
            None,
            if ch.certified { Status::Pass } else { Status::Uncertified },
        );
    }
    r.exact("cohomology.euler_identity", c.euler[0], c.euler[1]);
    Ok(r)
}

/// Per-triangle dof counts, cross-checked against the implemented layouts.
pub fn dof_table(k_max: usize) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("single_triangle", None);
    for row in dof_rows(k_max)? {
        let totals = row.spaces.map(|s| s.total);
        r.exact(format!("dofs.{}", row.complex), totals, row.kind.total_formula(row.k));
        if let Some(ok) = row.layout_agrees {
            r.exact(format!("dofs.{}.layout", row.complex), ok, true);
        }
    }
    for (kind, k, expected) in [
        (ComplexKind::Ds, 0, [12, 12, 1]),
        (ComplexKind::Dh, 0, [12, 15, 6]),
        (ComplexKind::Fn, 3, [21, 30, 10]),
        (ComplexKind::Hz, 1, [21, 30, 12]),
    ] {
        let measured = kind.formula(k).map(|s| s.map(|c| c.total));
        r.exact(format!("dofs.lowest.{}", kind.label(k)), measured, Some(expected));
    }
    Ok(r)
}

/// Polynomial consistency on `mesh` and convergence rates on a family.
pub fn consistency(mesh: &PolyMesh, k: usize, opts: &SuiteOptions) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(&mesh.name, Some(k));
    let d = Discretization::new(mesh, k)?;
    for (name, v) in polynomial_consistency(&d, opts.seed)? {
        r.residual(format!("polynomial.{name}"), v, POLYNOMIAL_TOL);
    }
    for kind in StudyKind::ALL {
        let s = rate_study(kind, opts.study_family, &opts.study_n, k)?;
        let expected = if kind.is_adjoint() { json!(format!(">= {}", s.target - s.tol)) } else { json!(s.target) };
        r.push(
            format!("rate.{}.{}", s.family, kind.name()),
            json!({ "slope": s.slope, "errors": s.errors, "n": s.n, "fit_residual": s.fit_residual }),
            expected,
            Some(s.tol),
            Status::from_bool(s.pass),
        );
    }
    Ok(r)
}

/// Poincaré constants across a family and transfer certificates on `mesh`.
pub fn poincare(mesh: &PolyMesh, k: usize, opts: &SuiteOptions) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(&mesh.name, Some(k));
    let s = poincare_sweep(opts.study_family, &opts.poincare_n, k, opts.rank_tol)?;
    for (name, c, v) in [("grad", &s.grad, s.grad_variation), ("rot", &s.rot, s.rot_variation)] {
        r.push(
            format!("poincare.{}.{name}", s.family),
            json!({ "constants": c, "n": s.n, "variation": v }),
            json!("variation <= tol"),
            Some(s.tol),
            Status::from_bool(v <= s.tol),
        );
    }
    let d = Discretization::new(mesh, k)?;
    for slice in [TransferSlice::Grad, TransferSlice::Rot] {
        let c = poincare_transfer(&d, slice, opts.probes, opts.seed, opts.rank_tol)?;
        r.push(
            format!("transfer.{}", slice.name()),
            json!({
                "direct": c.direct_constant,
                "bound": c.transferred_bound,
                "local": c.local_constant,
                "probe": c.probe_constant,
                "reduced": c.reduced_constant,
            }),
            json!("direct <= bound"),
            None,
            Status::from_bool(c.pass),
        );
    }
    Ok(r)
}

/// Every suite on one mesh and degree.
pub fn full_report(
    mesh: &PolyMesh,
    k: usize,
    expected_betti: Option<[usize; 2]>,
    opts: &SuiteOptions,
) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(&mesh.name, Some(k));
    r.extend(mesh_info(mesh, expected_betti));
    r.extend(verify_complex(mesh, k, opts)?);
    r.extend(cohomology(mesh, k)?);
    r.extend(dof_table(opts.dof_kmax)?);
    r.extend(consistency(mesh, k, opts)?);
    r.extend(poincare(mesh, k, opts)?);
    Ok(r)
}
