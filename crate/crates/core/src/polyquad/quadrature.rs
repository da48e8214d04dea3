//! Gauss rules on segments and polygons.

use crate::error::{Error, Result};
use crate::mesh::{Point, PolyMesh};

/// Points and weights in physical coordinates.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // After the recurrence p1 = P_n(z) and p0 = P_{n-1}(z).
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Collapsed Gauss rule on the reference triangle `(0,0), (1,0), (0,1)`,
/// exact for polynomials of total degree `degree`.
pub fn reference_triangle(degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let m = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(m);
    let mut pts = Vec::with_capacity(m * m);
    let mut wts = Vec::with_capacity(m * m);
    for i in 0..m {
        let u = (x[i] + 1.0) / 2.0;
        for j in 0..m {
            let v = (x[j] + 1.0) / 2.0;
            pts.push([u, v * (1.0 - u)]);
            wts.push(w[i] * w[j] / 4.0 * (1.0 - u));
        }
    }
    (pts, wts)
}

/// Fan triangulation of cell `t` from its inner point, mapped from the
/// reference triangle rule.
pub fn cell_rule(mesh: &PolyMesh, t: usize, degree: usize) -> Result<QuadRule> {
    let cell = &mesh.cells[t];
    let xt = cell.inner_point;
    let (rp, rw) = reference_triangle(degree);
    let n = cell.vertices.len();
    let mut points = Vec::with_capacity(n * rp.len());
    let mut weights = Vec::with_capacity(n * rp.len());
    for i in 0..n {
        let a = mesh.vertices[cell.vertices[i]];
        let b = mesh.vertices[cell.vertices[(i + 1) % n]];
        let (d1, d2) = (a - xt, b - xt);
        let jac = d1.x * d2.y - d1.y * d2.x;
        if jac <= 1e-12 * cell.diameter * cell.diameter {
            return Err(Error::InvertedFan { cell: t, edge: cell.edges[i] });
        }
        for (p, w) in rp.iter().zip(&rw) {
            points.push(xt + d1 * p[0] + d2 * p[1]);
            weights.push(w * jac);
        }
    }
    Ok(QuadRule { points, weights, degree })
}

/// Gauss rule on edge `e`, exact for degree `degree`.
pub fn edge_rule(mesh: &PolyMesh, e: usize, degree: usize) -> QuadRule {
    let edge = &mesh.edges[e];
    let m = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(m);
    let half = edge.length / 2.0;
    QuadRule {
        points: x.iter().map(|&s| edge.midpoint + edge.tangent * (s * half)).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
        degree,
    }
}
