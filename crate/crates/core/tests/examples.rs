use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, Matrix2};
use stokes_bgg::assembly::{twisted_maps, Discretization};
use stokes_bgg::bgg::{cohomology_report, ComplexKind};
use stokes_bgg::fields::Poly2;
use stokes_bgg::linalg::{numerical_rank, RANK_TOL};
use stokes_bgg::stokes_core::interpolate_stokes;
use stokes_bgg::{generate_mesh, MeshFamily, Point, PolyMesh, SpaceTag};

fn triangle() -> PolyMesh {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    PolyMesh::from_loops(v, vec![vec![0, 1, 2]], "triangle").unwrap()
}

#[test]
fn lowest_gradient_on_one_triangle_has_constant_kernel() {
    let m = triangle();
    let d = Discretization::new(&m, 0).unwrap();
    let g = d.sgrad();
    assert_eq!((g.nrows(), g.ncols()), (12, 12));
    let r = numerical_rank(&g.to_dense(), RANK_TOL).unwrap();
    assert_eq!(r.rank, 11);
    assert!(r.certified);
}

#[test]
fn twisted_maps_compose_to_zero_on_cartesian_grid() {
    let m = generate_mesh(MeshFamily::Cartesian, 2).unwrap();
    let d = Discretization::new(&m, 0).unwrap();
    let (a0, a1) = twisted_maps(&d);
    assert!(a1.compose(&a0).max_abs() <= 1e-12);
}

#[test]
fn twisted_kernel_on_contractible_mesh_has_dimension_three() {
    let m = generate_mesh(MeshFamily::Cartesian, 2).unwrap();
    let rep = cohomology_report(&Discretization::new(&m, 0).unwrap()).unwrap();
    let h0 = rep.checks.iter().find(|c| c.name == "twisted_h0").unwrap();
    assert_eq!(h0.measured, 3);
    assert!(h0.certified);
}

#[test]
fn hessian_of_half_x_squared_on_unit_square() {
    let m = generate_mesh(MeshFamily::Cartesian, 1).unwrap();
    let d = Discretization::new(&m, 0).unwrap();
    // x^2 / 2 in the global monomial order 1, x, y, x^2, xy, y^2.
    let q = Poly2::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
    let h = d.tgrad().apply(&d.sgrad().apply(&interpolate_stokes(&m, &d.polys, &q)));
    let cell = d.layout(SpaceTag::TensorRot(0)).cell_offset(0);
    let expected = Matrix2::new(1.0, 0.0, 0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            assert_abs_diff_eq!(h[cell + 2 * a + b], expected[(a, b)], epsilon = 1e-12);
        }
    }
}

#[test]
fn affine_functions_have_zero_discrete_hessian() {
    for fam in [MeshFamily::DistortedQuads, MeshFamily::AgglomeratedNonconvex] {
        let m = generate_mesh(fam, 1).unwrap();
        for k in 0..=2 {
            let d = Discretization::new(&m, k).unwrap();
            let q = Poly2::new(1, vec![0.3, -1.2, 0.7]);
            let h = d.hess().apply(&interpolate_stokes(&m, &d.polys, &q));
            assert!(h.amax() <= 1e-11, "{} k={k}: {}", fam.name(), h.amax());
        }
    }
}

#[test]
fn rank_of_nearly_singular_diagonal() {
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-14]));
    let r = numerical_rank(&m, 1e-10).unwrap();
    assert_eq!(r.rank, 1);
    assert!(r.certified);
}

#[test]
fn lowest_order_dof_tables() {
    let total = |kind: ComplexKind, k| kind.formula(k).unwrap().map(|c| c.total);
    assert_eq!(total(ComplexKind::Ds, 0), [12, 12, 1]);
    assert_eq!(total(ComplexKind::Dh, 0), [12, 15, 6]);
    assert_eq!(total(ComplexKind::Fn, 3), [21, 30, 10]);
}

#[test]
fn generated_families_have_expected_topology() {
    for fam in MeshFamily::ALL {
        for n in 1..=2 {
            let m = generate_mesh(fam, n).unwrap();
            assert_eq!(m.betti_numbers(), fam.expected_betti(), "{} n={n}", fam.name());
        }
    }
}

#[test]
fn mesh_json_round_trip_preserves_geometry() {
    let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
    let back = PolyMesh::from_json_str(&m.to_json_string(), "copy").unwrap();
    assert_eq!(back.n_cells(), m.n_cells());
    assert_eq!(back.n_edges(), m.n_edges());
    for (a, b) in m.cells.iter().zip(&back.cells) {
        assert_abs_diff_eq!(a.area, b.area, epsilon = 1e-14);
        assert_abs_diff_eq!(a.centroid, b.centroid, epsilon = 1e-14);
    }
}
