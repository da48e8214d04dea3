//! Polygonal meshes: storage, validation, JSON i/o, generators and topology.
//!
//! Edges are stored with the canonical orientation from the lower vertex
//! index to the higher one. Cell boundaries are counter-clockwise vertex
//! loops; edge `i` of a cell joins loop vertices `i` and `i + 1`.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::MeshError;

pub type Point = Vector2<f64>;

/// Geometry and orientation data for one polygonal cell.
#[derive(Clone, Debug)]
pub struct Cell {
    /// Counter-clockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[(i + 1) % n]`.
    pub edges: Vec<usize>,
    /// Relative orientation: `+1` when the edge normal points out of the cell.
    pub orientations: Vec<f64>,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    pub inner_point: Point,
}

/// Geometry of an edge with its canonical tangent and normal.
#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, `vertices[0] < vertices[1]`; the tangent points to `vertices[1]`.
    pub vertices: [usize; 2],
    pub length: f64,
    pub midpoint: Point,
    pub tangent: Point,
    /// Tangent rotated by a quarter turn counter-clockwise.
    pub normal: Point,
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PolyMesh {
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub cells: Vec<Cell>,
    pub name: String,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
}

/// Summary statistics reported by `mesh-info`.
#[derive(Clone, Debug, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub edges: usize,
    pub cells: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// Largest `h_T / rho_T` with `rho_T` the distance from the inner point to the boundary.
    pub regularity: f64,
    pub betti: [usize; 2],
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}

fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    let mut c = Point::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        c += (p + q) * cross(p, q);
    }
    c / (6.0 * a)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn boundary_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// True when every fan triangle `(p, v_i, v_{i+1})` has positive area.
pub(crate) fn fan_is_valid(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let scale = poly.iter().map(|q| (q - p).norm_squared()).fold(0.0, f64::max);
    (0..n).all(|i| cross(poly[i] - p, poly[(i + 1) % n] - p) > 1e-12 * scale)
}

fn diameter(poly: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

/// Point well inside the polygon used as the origin of scaled monomials and
/// of the quadrature fan.
///
/// The centroid is kept when it lies at distance at least `0.1 h` from the
/// boundary. Otherwise a refined grid search maximises the boundary distance
/// among points from which the whole boundary is visible.
pub fn inner_point(poly: &[Point]) -> Point {
    let h = diameter(poly);
    let c = polygon_centroid(poly);
    if contains(poly, c) && boundary_distance(poly, c) >= 0.1 * h && fan_is_valid(poly, c) {
        return c;
    }
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut best = c;
    let mut best_score = (false, f64::NEG_INFINITY);
    const STEPS: usize = 10;
    for _level in 0..12 {
        for i in 0..=STEPS {
            for j in 0..=STEPS {
                let p = Point::new(
                    lo.x + (hi.x - lo.x) * i as f64 / STEPS as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / STEPS as f64,
                );
                if !contains(poly, p) {
                    continue;
                }
                let score = (fan_is_valid(poly, p), boundary_distance(poly, p));
                if (score.0 && !best_score.0) || (score.0 == best_score.0 && score.1 > best_score.1) {
                    best = p;
                    best_score = score;
                }
            }
        }
        if best_score.0 && best_score.1 >= 0.05 * h {
            break;
        }
        let half = (hi - lo) / 4.0;
        lo = best - half;
        hi = best + half;
    }
    best
}

impl PolyMesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise cell loops.
    pub fn from_loops(
        vertices: Vec<Point>,
        loops: Vec<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut traversals: Vec<Vec<bool>> = Vec::new();
        let mut cells = Vec::with_capacity(loops.len());
        for (t, raw) in loops.into_iter().enumerate() {
            let mut lp = raw;
            if lp.len() > 1 && lp.first() == lp.last() {
                lp.pop();
            }
            for &v in &lp {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange { cell: t, index: v, count: nv });
                }
            }
            let mut seen = lp.clone();
            seen.sort_unstable();
            if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                return Err(MeshError::DuplicateVertex { cell: t, vertex: w[0] });
            }
            if lp.len() < 3 {
                return Err(MeshError::NotClosed { cell: t });
            }
            let poly: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&poly);
            let diam = diameter(&poly);
            if area <= 1e-14 * diam * diam {
                return Err(MeshError::Clockwise { cell: t, area });
            }
            let n = lp.len();
            let mut cell_edges = Vec::with_capacity(n);
            let mut orient = Vec::with_capacity(n);
            for i in 0..n {
                let (p, q) = (lp[i], lp[(i + 1) % n]);
                let key = (p.min(q), p.max(q));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    let (a, b) = (vertices[key.0], vertices[key.1]);
                    let d = b - a;
                    let len = d.norm();
                    let tangent = d / len;
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        length: len,
                        midpoint: (a + b) / 2.0,
                        tangent,
                        normal: Point::new(-tangent.y, tangent.x),
                        cells: Vec::new(),
                    });
                    traversals.push(Vec::new());
                    edges.len() - 1
                });
                let forward = p < q;
                if edges[e].cells.len() == 2 {
                    return Err(MeshError::EdgeOverShared { a: key.0, b: key.1 });
                }
                if traversals[e].contains(&forward) {
                    return Err(MeshError::OverlappingCells { a: key.0, b: key.1 });
                }
                traversals[e].push(forward);
                edges[e].cells.push(t);
                cell_edges.push(e);
                // The left normal points inward along a counter-clockwise traversal.
                orient.push(if forward { -1.0 } else { 1.0 });
            }
            cells.push(Cell {
                edges: cell_edges,
                orientations: orient,
                area,
                diameter: diam,
                centroid: polygon_centroid(&poly),
                inner_point: inner_point(&poly),
                vertices: lp,
            });
        }
        Ok(PolyMesh { vertices, edges, cells, name: name.into() })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let name = path.as_ref().file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into());
        Self::from_json_str(&text, name)
    }

    pub fn from_json_str(text: &str, name: impl Into<String>) -> Result<Self, MeshError> {
        let file: MeshFile = serde_json::from_str(text)?;
        let vertices = file.vertices.iter().map(|p| Point::new(p[0], p[1])).collect();
        Self::from_loops(vertices, file.cells, name)
    }

    /// Serialises vertices, cell loops and the canonical edge list.
    pub fn to_json_string(&self) -> String {
        let file = MeshFile {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            cells: self.cells.iter().map(|c| c.vertices.clone()).collect(),
            edges: Some(self.edges.iter().map(|e| e.vertices).collect()),
        };
        serde_json::to_string_pretty(&file).expect("mesh serialisation cannot fail")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_polygon(&self, t: usize) -> Vec<Point> {
        self.cells[t].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    /// `+1` if the edge tangent points toward `v`, `-1` if it points away.
    pub fn edge_vertex_orientation(&self, e: usize, v: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        if v == b {
            1.0
        } else {
            debug_assert_eq!(v, a);
            -1.0
        }
    }

    /// Betti numbers `[b0, b1]` from connectivity and the Euler characteristic.
    pub fn betti_numbers(&self) -> [usize; 2] {
        let mut parent: Vec<usize> = (0..self.n_vertices()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut used = vec![false; self.n_vertices()];
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.vertices[0]), find(&mut parent, e.vertices[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
            used[e.vertices[0]] = true;
            used[e.vertices[1]] = true;
        }
        let b0 = (0..self.n_vertices()).filter(|&v| used[v] && find(&mut parent, v) == v).count();
        let nv = used.iter().filter(|&&u| u).count() as i64;
        let chi = nv - self.n_edges() as i64 + self.n_cells() as i64;
        [b0, (b0 as i64 - chi).max(0) as usize]
    }

    pub fn h_max(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn stats(&self) -> MeshStats {
        let regularity = (0..self.n_cells())
            .map(|t| {
                let c = &self.cells[t];
                c.diameter / boundary_distance(&self.cell_polygon(t), c.inner_point)
            })
            .fold(0.0, f64::max);
        MeshStats {
            vertices: self.n_vertices(),
            edges: self.n_edges(),
            cells: self.n_cells(),
            h_max: self.h_max(),
            h_min: self.cells.iter().map(|c| c.diameter).fold(f64::INFINITY, f64::min),
            regularity,
            betti: self.betti_numbers(),
        }
    }

    /// Returns a copy with every vertex moved by `map`.
    pub fn mapped(&self, map: impl Fn(Point) -> Point) -> Result<Self, MeshError> {
        let vertices = self.vertices.iter().map(|&p| map(p)).collect();
        let loops = self.cells.iter().map(|c| c.vertices.clone()).collect();
        Self::from_loops(vertices, loops, self.name.clone())
    }
}

/// Named mesh families used by the verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    Cartesian,
    SplitTriangles,
    DistortedQuads,
    AgglomeratedNonconvex,
    RingOneHole,
    RingTwoHoles,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 6] = [
        MeshFamily::Cartesian,
        MeshFamily::SplitTriangles,
        MeshFamily::DistortedQuads,
        MeshFamily::AgglomeratedNonconvex,
        MeshFamily::RingOneHole,
        MeshFamily::RingTwoHoles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Cartesian => "cartesian",
            MeshFamily::SplitTriangles => "split_triangles",
            MeshFamily::DistortedQuads => "distorted_quads",
            MeshFamily::AgglomeratedNonconvex => "agglomerated_nonconvex",
            MeshFamily::RingOneHole => "ring_one_hole",
            MeshFamily::RingTwoHoles => "ring_two_holes",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MeshError> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| MeshError::UnknownFamily(s.to_string()))
    }

    /// Expected `[b0, b1]` of the generated domain.
    pub fn expected_betti(self) -> [usize; 2] {
        match self {
            MeshFamily::RingOneHole => [1, 1],
            MeshFamily::RingTwoHoles => [1, 2],
            _ => [1, 0],
        }
    }
}

/// Vertex grid with `(nx + 1) x (ny + 1)` points and spacing `h`.
struct Grid {
    nx: usize,
    h: f64,
}

impl Grid {
    fn vid(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn points(&self, ny: usize) -> Vec<Point> {
        let mut pts = Vec::with_capacity((self.nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=self.nx {
                pts.push(Point::new(i as f64 * self.h, j as f64 * self.h));
            }
        }
        pts
    }

    fn square(&self, i: usize, j: usize) -> Vec<usize> {
        vec![self.vid(i, j), self.vid(i + 1, j), self.vid(i + 1, j + 1), self.vid(i, j + 1)]
    }
}

/// Drops vertices that no loop references and renumbers the rest.
fn compact(points: Vec<Point>, loops: Vec<Vec<usize>>) -> (Vec<Point>, Vec<Vec<usize>>) {
    let mut map = vec![usize::MAX; points.len()];
    let mut kept = Vec::new();
    let loops = loops
        .into_iter()
        .map(|lp| {
            lp.into_iter()
                .map(|v| {
                    if map[v] == usize::MAX {
                        map[v] = kept.len();
                        kept.push(points[v]);
                    }
                    map[v]
                })
                .collect()
        })
        .collect();
    (kept, loops)
}

fn masked_grid(nx: usize, ny: usize, h: f64, keep: impl Fn(usize, usize) -> bool) -> (Vec<Point>, Vec<Vec<usize>>) {
    let g = Grid { nx, h };
    let mut loops = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                loops.push(g.square(i, j));
            }
        }
    }
    compact(g.points(ny), loops)
}

/// Generates a member of a mesh family with resolution parameter `n`.
pub fn generate_mesh(family: MeshFamily, n: usize) -> Result<PolyMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::BadResolution);
    }
    let name = format!("{}_{}", family.name(), n);
    let h = 1.0 / n as f64;
    let (points, loops) = match family {
        MeshFamily::Cartesian => masked_grid(n, n, h, |_, _| true),
        MeshFamily::SplitTriangles => {
            let g = Grid { nx: n, h };
            let mut loops = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, d) = (g.vid(i, j), g.vid(i + 1, j), g.vid(i + 1, j + 1), g.vid(i, j + 1));
                    loops.push(vec![a, b, c]);
                    loops.push(vec![a, c, d]);
                }
            }
            (g.points(n), loops)
        }
        MeshFamily::DistortedQuads => {
            let (pts, loops) = masked_grid(n, n, h, |_, _| true);
            let tau = std::f64::consts::TAU;
            let pts = pts
                .into_iter()
                .map(|p| {
                    let s = 0.05 * (tau * p.x).sin() * (tau * p.y).sin();
                    Point::new(p.x + s, p.y + s)
                })
                .collect();
            (pts, loops)
        }
        MeshFamily::AgglomeratedNonconvex => {
            // 2x2 blocks of a 2n x 2n grid: an L-shaped cell plus one square.
            let g = Grid { nx: 2 * n, h: h / 2.0 };
            let mut loops = Vec::new();
            for bj in 0..n {
                for bi in 0..n {
                    let v = |i: usize, j: usize| g.vid(2 * bi + i, 2 * bj + j);
                    if (bi + bj) % 2 == 0 {
                        loops.push(vec![v(0, 0), v(1, 0), v(2, 0), v(2, 1), v(1, 1), v(1, 2), v(0, 2), v(0, 1)]);
                        loops.push(vec![v(1, 1), v(2, 1), v(2, 2), v(1, 2)]);
                    } else {
                        loops.push(vec![v(1, 0), v(2, 0), v(2, 1), v(2, 2), v(1, 2), v(0, 2), v(0, 1), v(1, 1)]);
                        loops.push(vec![v(0, 0), v(1, 0), v(1, 1), v(0, 1)]);
                    }
                }
            }
            (g.points(2 * n), loops)
        }
        MeshFamily::RingOneHole => {
            masked_grid(3 * n, 3 * n, h / 3.0, |i, j| !((n..2 * n).contains(&i) && (n..2 * n).contains(&j)))
        }
        MeshFamily::RingTwoHoles => masked_grid(5 * n, 3 * n, h / 3.0, |i, j| {
            let hole_col = (n..2 * n).contains(&i) || (3 * n..4 * n).contains(&i);
            !(hole_col && (n..2 * n).contains(&j))
        }),
    };
    PolyMesh::from_loops(points, loops, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring4() -> &'static str {
        r#"{"vertices": [[0,0],[3,0],[3,3],[0,3],[1,1],[2,1],[2,2],[1,2]],
            "cells": [[0,1,5,4],[1,2,6,5],[2,3,7,6],[3,0,4,7]]}"#
    }

    #[test]
    fn ring_of_trapezoids_has_one_hole() {
        let m = PolyMesh::from_json_str(ring4(), "ring").unwrap();
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_cells()), (8, 12, 4));
        assert_eq!(m.betti_numbers(), [1, 1]);
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let text = r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": [[0,2,1]]}"#;
        assert!(matches!(PolyMesh::from_json_str(text, "cw"), Err(MeshError::Clockwise { .. })));
    }

    #[test]
    fn orientation_sign_identity_on_every_cell() {
        for fam in MeshFamily::ALL {
            let m = generate_mesh(fam, 2).unwrap();
            for c in &m.cells {
                let phi: Vec<f64> = (0..m.n_vertices()).map(|v| (v as f64 * 1.7).sin()).collect();
                let s: f64 = c
                    .edges
                    .iter()
                    .zip(&c.orientations)
                    .map(|(&e, w)| {
                        let [a, b] = m.edges[e].vertices;
                        w * (phi[b] - phi[a])
                    })
                    .sum();
                assert!(s.abs() < 1e-14);
                // Outward normals weighted by length close the boundary.
                let flux: Point = c
                    .edges
                    .iter()
                    .zip(&c.orientations)
                    .map(|(&e, w)| m.edges[e].normal * (w * m.edges[e].length))
                    .sum();
                assert!(flux.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn outward_orientation_on_unit_square() {
        let m = generate_mesh(MeshFamily::Cartesian, 1).unwrap();
        let c = &m.cells[0];
        for (&e, &w) in c.edges.iter().zip(&c.orientations) {
            let out = (m.edges[e].midpoint - c.centroid).dot(&m.edges[e].normal) * w;
            assert!(out > 0.0);
        }
    }

    #[test]
    fn families_have_expected_topology() {
        for fam in MeshFamily::ALL {
            for n in 1..=3 {
                let m = generate_mesh(fam, n).unwrap();
                assert_eq!(m.betti_numbers(), fam.expected_betti(), "{}", m.name);
                for t in 0..m.n_cells() {
                    assert!(fan_is_valid(&m.cell_polygon(t), m.cells[t].inner_point));
                }
            }
        }
    }

    #[test]
    fn agglomerated_mesh_has_nonconvex_cell_with_collinear_edges() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 2).unwrap();
        let poly = m.cell_polygon(0);
        let n = poly.len();
        let turns: Vec<f64> =
            (0..n).map(|i| cross(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n])).collect();
        assert!(turns.iter().any(|&t| t < 0.0));
        assert!(turns.iter().any(|&t| t.abs() < 1e-14));
    }

    #[test]
    fn json_round_trip_preserves_mesh() {
        let m = generate_mesh(MeshFamily::AgglomeratedNonconvex, 1).unwrap();
        let back = PolyMesh::from_json_str(&m.to_json_string(), "x").unwrap();
        assert_eq!(back.n_edges(), m.n_edges());
        for (a, b) in m.cells.iter().zip(&back.cells) {
            assert_eq!(a.vertices, b.vertices);
            assert_eq!(a.edges, b.edges);
        }
    }

    #[test]
    fn inner_point_of_l_shape_sees_whole_boundary() {
        let l: Vec<Point> = [(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect();
        let p = inner_point(&l);
        assert!(fan_is_valid(&l, p));
        assert!(boundary_distance(&l, p) >= 0.05 * diameter(&l));
    }
}
