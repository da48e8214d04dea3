//! Fixtures shared by the benchmarks.

use stokes_bgg::{generate_mesh, MeshFamily, PolyMesh};

/// Meshes benchmarked at every degree, small enough for dense rank work.
pub fn bench_meshes() -> Vec<(&'static str, PolyMesh)> {
    [
        ("cartesian_4", MeshFamily::Cartesian, 4),
        ("distorted_4", MeshFamily::DistortedQuads, 4),
        ("agglomerated_2", MeshFamily::AgglomeratedNonconvex, 2),
    ]
    .into_iter()
    .map(|(name, fam, n)| (name, generate_mesh(fam, n).expect("generated mesh")))
    .collect()
}
