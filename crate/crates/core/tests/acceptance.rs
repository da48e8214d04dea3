//! Acceptance run: one PASS/FAIL line per criterion, followed by indented
//! details for the entries that decide it.

use std::time::Instant;

use stokes_bgg::assembly::Discretization;
use stokes_bgg::bgg::{closure_residuals, cohomology_report, ComplexKind};
use stokes_bgg::cochain_transfer::{cochain_residuals, poincare_transfer, LowestOrder, TransferMaps, TransferSlice};
use stokes_bgg::linalg::RANK_TOL;
use stokes_bgg::report::{self, SuiteOptions};
use stokes_bgg::studies::{commutation_residuals, poincare_sweep, polynomial_consistency, rate_study, StudyKind};
use stokes_bgg::{generate_mesh, MeshFamily};

const CLOSURE_TOL: f64 = 1e-12;
const COMMUTATION_TOL: f64 = 1e-11;
const POLY_TOL: f64 = 1e-9;
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn print(id: usize, title: &str, o: &Outcome, secs: f64) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}. {title}: {} ({secs:.1}s)", o.summary);
    for d in &o.details {
        println!("       {d}");
    }
}

/// Worst entry per residual name over the sweep, with where it occurred.
struct Worst(Vec<(&'static str, f64, String)>);

impl Worst {
    fn record(&mut self, name: &'static str, v: f64, at: &str) {
        match self.0.iter_mut().find(|(n, _, _)| *n == name) {
            Some(e) if v > e.1 => {
                e.1 = v;
                e.2 = at.to_string();
            }
            Some(_) => {}
            None => self.0.push((name, v, at.to_string())),
        }
    }
}

fn sweep_closure(names: &[&str]) -> (Outcome, Vec<String>) {
    let mut worst = Worst(Vec::new());
    let mut failures = Vec::new();
    for fam in MeshFamily::ALL {
        let m = generate_mesh(fam, 1).unwrap();
        for k in 0..=3 {
            let r = closure_residuals(&Discretization::new(&m, k).unwrap());
            for (name, v) in r.entries() {
                if names.contains(&name) {
                    let at = format!("{} k={k}", fam.name());
                    worst.record(name, v, &at);
                    if v > CLOSURE_TOL {
                        failures.push(format!("{name} = {v:.2e} on {at}"));
                    }
                }
            }
        }
    }
    let summary = worst.0.iter().map(|(n, v, _)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", ");
    let pass = failures.is_empty();
    (Outcome { pass, summary: format!("worst {summary} (tol {CLOSURE_TOL:e})"), details: failures.clone() }, failures)
}

fn criterion_1() -> Outcome {
    sweep_closure(&["srot_sgrad", "trot_tgrad", "trot_sym_hess", "twisted_a1_a0"]).0
}

fn criterion_2() -> Outcome {
    sweep_closure(&["anticommutativity"]).0
}

fn criterion_3() -> Outcome {
    let mut worst = Worst(Vec::new());
    let mut details = Vec::new();
    for fam in MeshFamily::ALL {
        let m = generate_mesh(fam, 1).unwrap();
        for k in 0..=3 {
            let d = Discretization::new(&m, k).unwrap();
            let at = format!("{} k={k}", fam.name());
            let maps = TransferMaps::new(&d).unwrap();
            for (name, v) in cochain_residuals(&d, &LowestOrder::new(&m), &maps).entries() {
                worst.record(name, v, &at);
                if v > CLOSURE_TOL {
                    details.push(format!("{name} = {v:.2e} on {at}"));
                }
            }
            let [g, r] = commutation_residuals(&d, 20, SEED);
            for (name, v) in [("commutation_grad", g), ("commutation_rot", r)] {
                worst.record(name, v, &at);
                if v > COMMUTATION_TOL {
                    details.push(format!("{name} = {v:.2e} on {at}"));
                }
            }
        }
    }
    let summary = worst.0.iter().map(|(n, v, _)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", ");
    Outcome { pass: details.is_empty(), summary: format!("worst {summary}"), details }
}

fn criterion_4() -> Outcome {
    let mut details = Vec::new();
    let mut min_gap = f64::INFINITY;
    let mut pass = true;
    let meshes = [
        (MeshFamily::Cartesian, 2),
        (MeshFamily::SplitTriangles, 2),
        (MeshFamily::DistortedQuads, 2),
        (MeshFamily::AgglomeratedNonconvex, 2),
        (MeshFamily::RingOneHole, 1),
        (MeshFamily::RingTwoHoles, 1),
    ];
    for (fam, n) in meshes {
        let m = generate_mesh(fam, n).unwrap();
        assert!(m.n_cells() <= 200);
        for k in 0..=2 {
            let rep = cohomology_report(&Discretization::new(&m, k).unwrap()).unwrap();
            for c in &rep.checks {
                min_gap = min_gap.min(c.gap);
            }
            let dims = |name: &str| rep.checks.iter().find(|c| c.name == name).unwrap().measured;
            let line = format!(
                "{} k={k}: DS ({}, {}, {}), ker Hess {}, DH middle {}, twisted ({}, {}, {}), euler {} = {}",
                fam.name(),
                dims("ds_h0"),
                dims("ds_h1"),
                dims("ds_h2"),
                dims("hess_kernel"),
                dims("dh_middle"),
                dims("twisted_h0"),
                dims("twisted_h1"),
                dims("twisted_h2"),
                rep.euler[0],
                rep.euler[1]
            );
            if !rep.passes() {
                pass = false;
                details.push(format!("{line}  <- mismatch or uncertified"));
            } else if k == 1 {
                details.push(line);
            }
        }
    }
    Outcome { pass, summary: format!("all dimensions as predicted, min certified gap {min_gap:.1e}"), details }
}

fn criterion_5() -> Outcome {
    let rep = report::dof_table(4);
    let mut details = Vec::new();
    let pass = match &rep {
        Ok(r) => {
            for (kind, k) in [(ComplexKind::Ds, 0), (ComplexKind::Dh, 0), (ComplexKind::Fn, 3), (ComplexKind::Hz, 1)] {
                let t = kind.formula(k).unwrap().map(|c| c.total);
                details.push(format!("{}: {}/{}/{}", kind.label(k), t[0], t[1], t[2]));
            }
            r.passed()
        }
        Err(e) => {
            details.push(e.to_string());
            false
        }
    };
    let lowest = |kind: ComplexKind, k| kind.formula(k).unwrap().map(|c| c.total);
    let pass = pass
        && lowest(ComplexKind::Ds, 0) == [12, 12, 1]
        && lowest(ComplexKind::Dh, 0) == [12, 15, 6]
        && lowest(ComplexKind::Fn, 3) == [21, 30, 10]
        && lowest(ComplexKind::Hz, 1) == [21, 30, 12];
    Outcome { pass, summary: "formula and single-triangle layout agree for k = 0..4".into(), details }
}

fn criterion_6() -> Outcome {
    let mut worst = Worst(Vec::new());
    let mut details = Vec::new();
    for fam in MeshFamily::ALL {
        let m = generate_mesh(fam, 1).unwrap();
        for k in 0..=3 {
            let d = Discretization::new(&m, k).unwrap();
            for (name, v) in polynomial_consistency(&d, SEED).unwrap() {
                let at = format!("{} k={k}", fam.name());
                worst.record(name, v, &at);
                if v > POLY_TOL {
                    details.push(format!("{name} = {v:.2e} on {at}"));
                }
            }
        }
    }
    let summary = worst.0.iter().map(|(n, v, _)| format!("{n} {v:.0e}")).collect::<Vec<_>>().join(", ");
    Outcome { pass: details.is_empty(), summary: format!("worst {summary} (tol {POLY_TOL:e})"), details }
}

fn criterion_7() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for k in 0..=1 {
        for kind in StudyKind::ALL {
            let s = rate_study(kind, MeshFamily::Cartesian, &[4, 8, 16], k).unwrap();
            pass &= s.pass;
            let window = if kind.is_adjoint() {
                format!(">= {:.1}", s.target - s.tol)
            } else {
                format!("{} +- {}", s.target, s.tol)
            };
            details.push(format!(
                "{} k={k}: slope {:.2} (want {window}) errors {:.2e} {:.2e} {:.2e}{}",
                kind.name(),
                s.slope,
                s.errors[0],
                s.errors[1],
                s.errors[2],
                if s.pass { "" } else { "  <- outside window" }
            ));
        }
    }
    Outcome { pass, summary: "cartesian n = 4, 8, 16, k = 0, 1".into(), details }
}

fn criterion_8() -> Outcome {
    let mut details = Vec::new();
    let sweep = poincare_sweep(MeshFamily::Cartesian, &[2, 4, 8], 0, RANK_TOL).unwrap();
    let fmt = |c: &[f64]| c.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ");
    details.push(format!("grad constants [{}], variation {:.0}%", fmt(&sweep.grad), 100.0 * sweep.grad_variation));
    details.push(format!("rot constants [{}], variation {:.0}%", fmt(&sweep.rot), 100.0 * sweep.rot_variation));
    let m = generate_mesh(MeshFamily::Cartesian, 2).unwrap();
    let d = Discretization::new(&m, 1).unwrap();
    let mut transfer = true;
    for slice in [TransferSlice::Grad, TransferSlice::Rot] {
        let c = poincare_transfer(&d, slice, 20, SEED, RANK_TOL).unwrap();
        transfer &= c.pass;
        details.push(format!(
            "transfer {}: direct {:.4} <= bound {:.4}: {}",
            slice.name(),
            c.direct_constant,
            c.transferred_bound,
            c.pass
        ));
    }
    Outcome {
        pass: sweep.pass && transfer,
        summary: format!(
            "variation tol {:.0}%, sweep {}, transfer certificates {}",
            100.0 * sweep.tol,
            if sweep.pass { "ok" } else { "exceeds tol" },
            if transfer { "ok" } else { "fail" }
        ),
        details,
    }
}

fn criterion_9() -> Outcome {
    let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 1).unwrap();
    let opts = SuiteOptions { seed: SEED, samples: 5, ..Default::default() };
    let run = || {
        let mut r = report::verify_complex(&m, 2, &opts).unwrap();
        r.extend(report::cohomology(&m, 1).unwrap());
        r.extend(report::poincare(&m, 0, &SuiteOptions { poincare_n: vec![1, 2, 3], ..opts.clone() }).unwrap());
        r.to_json()
    };
    let (a, b) = (run(), run());
    Outcome {
        pass: a == b,
        summary: format!("two runs with seed {SEED}: {} bytes each, identical = {}", a.len(), a == b),
        details: Vec::new(),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("complex properties", criterion_1),
        ("anti-commutativity", criterion_2),
        ("cochain and commutation identities", criterion_3),
        ("cohomology dimensions", criterion_4),
        ("dof tables", criterion_5),
        ("polynomial consistency", criterion_6),
        ("rate studies", criterion_7),
        ("Poincaré constants and transfer", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut passed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        passed += o.pass as usize;
        print(i + 1, title, &o, t.elapsed().as_secs_f64());
    }
    println!("{passed}/{} criteria pass", criteria.len());
}
