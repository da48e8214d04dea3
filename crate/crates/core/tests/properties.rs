use nalgebra::DVector;
use proptest::prelude::*;
use stokes_bgg::assembly::{twisted_maps, Discretization};
use stokes_bgg::bgg::closure_residuals;
use stokes_bgg::cochain_transfer::{cochain_residuals, LowestOrder, TransferMaps};
use stokes_bgg::fields::Poly2;
use stokes_bgg::layout::dim_p2;
use stokes_bgg::linalg::{numerical_rank, RANK_TOL};
use stokes_bgg::stokes_core::interpolate_stokes;
use stokes_bgg::studies::commutation_residuals;
use stokes_bgg::{generate_mesh, DofLayout, MeshFamily, Point, PolyMesh, SpaceTag};

fn family() -> impl Strategy<Value = MeshFamily> {
    prop::sample::select(MeshFamily::ALL.to_vec())
}

/// Smooth interior perturbation of the cartesian grid; vanishes on the boundary.
fn perturbed_grid(n: usize, a: f64, b: f64) -> PolyMesh {
    let pi = std::f64::consts::PI;
    generate_mesh(MeshFamily::Cartesian, n)
        .unwrap()
        .mapped(|p| {
            let bump = (pi * p.x).sin() * (pi * p.y).sin();
            Point::new(p.x + a * bump, p.y + b * bump * (2.0 * pi * p.x).cos())
        })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn complexes_close_on_perturbed_grids(a in -0.1..0.1f64, b in -0.1..0.1f64, k in 0usize..3) {
        let m = perturbed_grid(2, a, b);
        let r = closure_residuals(&Discretization::new(&m, k).unwrap());
        prop_assert!(r.stokes <= 1e-12, "srot_sgrad {}", r.stokes);
        prop_assert!(r.tensor <= 1e-12, "trot_tgrad {}", r.tensor);
        prop_assert!(r.twisted <= 1e-12, "twisted {}", r.twisted);
        prop_assert!(r.anticommutativity <= 1e-12, "anticommutativity {}", r.anticommutativity);
    }

    #[test]
    fn transfer_maps_are_cochain_maps(fam in family(), k in 0usize..3) {
        let m = generate_mesh(fam, 1).unwrap();
        let d = Discretization::new(&m, k).unwrap();
        let maps = TransferMaps::new(&d).unwrap();
        for (name, v) in cochain_residuals(&d, &LowestOrder::new(&m), &maps).entries() {
            prop_assert!(v <= 1e-12, "{name} = {v} on {}", fam.name());
        }
    }

    #[test]
    fn interpolators_commute_with_polynomial_data(fam in family(), k in 0usize..3, seed in any::<u64>()) {
        let m = generate_mesh(fam, 1).unwrap();
        let [g, r] = commutation_residuals(&Discretization::new(&m, k).unwrap(), 3, seed);
        prop_assert!(g <= 1e-11 && r <= 1e-11, "{g} {r} on {}", fam.name());
    }

    #[test]
    fn affine_interpolants_lie_in_hessian_kernel(
        fam in family(),
        k in 0usize..3,
        c in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let m = generate_mesh(fam, 1).unwrap();
        let d = Discretization::new(&m, k).unwrap();
        let x = interpolate_stokes(&m, &d.polys, &Poly2::new(1, c.to_vec()));
        let h = d.hess().apply(&x);
        prop_assert!(h.amax() <= 1e-11 * (1.0 + x.amax()), "{}", h.amax());
    }

    #[test]
    fn rank_is_invariant_under_block_scaling(p in -2i32..3, q in -2i32..3, k in 0usize..2) {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 1).unwrap();
        let d = Discretization::new(&m, k).unwrap();
        let g = d.sgrad().to_dense();
        let src = d.layout(SpaceTag::StokesGrad(k));
        let tgt = d.layout(SpaceTag::StokesRot(k));
        let h = m.h_max();
        let mut scaled = g.clone();
        for j in src.vertex_offset(0)..src.edge_offset(0) {
            scaled.column_mut(j).scale_mut(h.powi(p));
        }
        for i in tgt.edge_offset(0)..tgt.dim() {
            scaled.row_mut(i).scale_mut(h.powi(q));
        }
        let r0 = numerical_rank(&g, RANK_TOL).unwrap();
        let r1 = numerical_rank(&scaled, RANK_TOL).unwrap();
        prop_assert!(r0.certified && r1.certified);
        prop_assert_eq!(r0.rank, r1.rank);
    }

    #[test]
    fn assembly_is_deterministic(fam in family(), k in 0usize..3) {
        let m = generate_mesh(fam, 1).unwrap();
        let a = Discretization::new(&m, k).unwrap();
        let b = Discretization::new(&m, k).unwrap();
        for (x, y) in [(a.sgrad(), b.sgrad()), (a.srot(), b.srot()), (a.tgrad(), b.tgrad()), (a.trot(), b.trot())] {
            prop_assert_eq!(x.matrix.values(), y.matrix.values());
            prop_assert_eq!(x.matrix.col_indices(), y.matrix.col_indices());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_identity_holds_for_every_layout(fam in family(), n in 1usize..4, k in 0usize..8) {
        let m = generate_mesh(fam, n).unwrap();
        let [b0, b1] = m.betti_numbers();
        let dim = |s| DofLayout::new(&m, s).dim() as i64;
        let lhs = dim(SpaceTag::StokesGrad(k)) - dim(SpaceTag::TensorRotSym(k)) + dim(SpaceTag::BrokenVector(k + 1));
        prop_assert_eq!(lhs, 3 * (b0 as i64 - b1 as i64));
    }

    #[test]
    fn layout_totals_split_by_entity(fam in family(), n in 1usize..4, k in 0usize..8) {
        let m = generate_mesh(fam, n).unwrap();
        for s in [SpaceTag::StokesGrad(k), SpaceTag::StokesRot(k), SpaceTag::TensorRot(k), SpaceTag::TensorRotSym(k)] {
            let [pv, pe, pt] = s.counts();
            let l = DofLayout::new(&m, s);
            prop_assert_eq!(l.dim(), pv * m.n_vertices() + pe * m.n_edges() + pt * m.n_cells());
            let local: usize = (0..m.n_cells()).map(|t| l.local_to_global(&m, t).len()).sum();
            let expected: usize = m.cells.iter().map(|c| l.local_dim(c.vertices.len())).sum();
            prop_assert_eq!(local, expected);
        }
        prop_assert_eq!(SpaceTag::StokesGrad(k).counts()[2], dim_p2(k as i64 - 2));
    }

    #[test]
    fn boundary_of_boundary_vanishes(fam in family(), n in 1usize..4, seed in any::<u64>()) {
        let m = generate_mesh(fam, n).unwrap();
        let phi = DVector::<f64>::from_fn(m.n_vertices(), |i, _| ((i as u64 ^ seed) % 97) as f64);
        for c in &m.cells {
            let s: f64 = c
                .edges
                .iter()
                .zip(&c.orientations)
                .map(|(&e, &w)| {
                    let [a, b] = m.edges[e].vertices;
                    w * (m.edge_vertex_orientation(e, a) * phi[a] + m.edge_vertex_orientation(e, b) * phi[b])
                })
                .sum();
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn polynomial_derivative_matches_gradient(deg in 0usize..6, seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let q = Poly2::random(deg, seed);
        let p = Point::new(x, y);
        let g = q.grad(p);
        prop_assert!((q.derivative(0).eval(p) - g.x).abs() <= 1e-10 * (1.0 + g.x.abs()));
        prop_assert!((q.derivative(1).eval(p) - g.y).abs() <= 1e-10 * (1.0 + g.y.abs()));
    }
}

#[test]
fn twisted_first_map_kills_interpolated_affine_pairs() {
    let m = generate_mesh(MeshFamily::SplitTriangles, 1).unwrap();
    let d = Discretization::new(&m, 1).unwrap();
    let (a0, _) = twisted_maps(&d);
    let q = Poly2::new(1, vec![1.0, 2.0, -3.0]);
    let x = interpolate_stokes(&m, &d.polys, &q);
    let v = d.sgrad().apply(&x);
    let mut input = DVector::zeros(a0.ncols());
    input.rows_mut(0, x.len()).copy_from(&x);
    input.rows_mut(x.len(), v.len()).copy_from(&v);
    assert!(a0.apply(&input).amax() <= 1e-12);
}
