//! Analytic test fields: global polynomials and a few smooth functions with
//! exact derivatives.

use nalgebra::{Matrix2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Point;
use crate::polyquad::Monomials;

/// Polynomial in global coordinates, `sum c_ab x^a y^b`.
#[derive(Clone, Debug)]
pub struct Poly2 {
    pub mono: Monomials,
    pub coeffs: Vec<f64>,
}

fn powi(x: f64, n: usize) -> f64 {
    x.powi(n as i32)
}

impl Poly2 {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Self {
        let mono = Monomials::new(degree);
        assert_eq!(coeffs.len(), mono.len());
        Poly2 { mono, coeffs }
    }

    /// Coefficients drawn uniformly from `[-1, 1]` with a seeded generator.
    pub fn random(degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mono = Monomials::new(degree);
        let coeffs = (0..mono.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Poly2 { mono, coeffs }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.mono.exps.iter().zip(&self.coeffs).map(|(&[a, b], c)| c * powi(p.x, a) * powi(p.y, b)).sum()
    }

    /// Partial derivative along `axis` (0 for x, 1 for y) as a polynomial.
    pub fn derivative(&self, axis: usize) -> Poly2 {
        let deg = self.mono.degree.max(1) - 1;
        let mut out = Poly2::new(deg, vec![0.0; Monomials::new(deg).len()]);
        for (&[a, b], c) in self.mono.exps.iter().zip(&self.coeffs) {
            match axis {
                0 if a > 0 => out.coeffs[Monomials::index(a - 1, b)] += c * a as f64,
                1 if b > 0 => out.coeffs[Monomials::index(a, b - 1)] += c * b as f64,
                _ => {}
            }
        }
        out
    }

    pub fn grad(&self, p: Point) -> Vector2<f64> {
        let mut g = Vector2::zeros();
        for (&[a, b], c) in self.mono.exps.iter().zip(&self.coeffs) {
            if a > 0 {
                g.x += c * a as f64 * powi(p.x, a - 1) * powi(p.y, b);
            }
            if b > 0 {
                g.y += c * b as f64 * powi(p.x, a) * powi(p.y, b - 1);
            }
        }
        g
    }

    pub fn hess(&self, p: Point) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for (&[a, b], c) in self.mono.exps.iter().zip(&self.coeffs) {
            let (a_, b_) = (a as f64, b as f64);
            if a > 1 {
                h[(0, 0)] += c * a_ * (a_ - 1.0) * powi(p.x, a - 2) * powi(p.y, b);
            }
            if b > 1 {
                h[(1, 1)] += c * b_ * (b_ - 1.0) * powi(p.x, a) * powi(p.y, b - 2);
            }
            if a > 0 && b > 0 {
                let v = c * a_ * b_ * powi(p.x, a - 1) * powi(p.y, b - 1);
                h[(0, 1)] += v;
                h[(1, 0)] += v;
            }
        }
        h
    }
}

/// Smooth scalar with value, gradient and Hessian.
pub trait SmoothScalar {
    fn value(&self, p: Point) -> f64;
    fn grad(&self, p: Point) -> Vector2<f64>;
    fn hess(&self, p: Point) -> Matrix2<f64>;
}

impl SmoothScalar for Poly2 {
    fn value(&self, p: Point) -> f64 {
        self.eval(p)
    }
    fn grad(&self, p: Point) -> Vector2<f64> {
        Poly2::grad(self, p)
    }
    fn hess(&self, p: Point) -> Matrix2<f64> {
        Poly2::hess(self, p)
    }
}

/// `sin(a x) sin(b y)`.
#[derive(Clone, Copy, Debug)]
pub struct SinSin {
    pub a: f64,
    pub b: f64,
}

impl SmoothScalar for SinSin {
    fn value(&self, p: Point) -> f64 {
        (self.a * p.x).sin() * (self.b * p.y).sin()
    }
    fn grad(&self, p: Point) -> Vector2<f64> {
        let (sx, cx) = (self.a * p.x).sin_cos();
        let (sy, cy) = (self.b * p.y).sin_cos();
        Vector2::new(self.a * cx * sy, self.b * sx * cy)
    }
    fn hess(&self, p: Point) -> Matrix2<f64> {
        let (sx, cx) = (self.a * p.x).sin_cos();
        let (sy, cy) = (self.b * p.y).sin_cos();
        let off = self.a * self.b * cx * cy;
        Matrix2::new(-self.a * self.a * sx * sy, off, off, -self.b * self.b * sx * sy)
    }
}

/// `exp(x) cos(y) + x y^2`, a non-symmetric smooth test function.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpCos;

impl SmoothScalar for ExpCos {
    fn value(&self, p: Point) -> f64 {
        p.x.exp() * p.y.cos() + p.x * p.y * p.y
    }
    fn grad(&self, p: Point) -> Vector2<f64> {
        Vector2::new(p.x.exp() * p.y.cos() + p.y * p.y, -p.x.exp() * p.y.sin() + 2.0 * p.x * p.y)
    }
    fn hess(&self, p: Point) -> Matrix2<f64> {
        let e = p.x.exp();
        let off = -e * p.y.sin() + 2.0 * p.y;
        Matrix2::new(e * p.y.cos(), off, off, -e * p.y.cos() + 2.0 * p.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn SmoothScalar) {
        let p = Point::new(0.3, 0.7);
        let eps = 1e-6;
        let ex = Point::new(eps, 0.0);
        let ey = Point::new(0.0, eps);
        let g = f.grad(p);
        assert!(((f.value(p + ex) - f.value(p - ex)) / (2.0 * eps) - g.x).abs() < 1e-7);
        assert!(((f.value(p + ey) - f.value(p - ey)) / (2.0 * eps) - g.y).abs() < 1e-7);
        let h = f.hess(p);
        assert!(((f.grad(p + ex) - f.grad(p - ex)) / (2.0 * eps) - h.column(0)).norm() < 1e-6);
        assert!(((f.grad(p + ey) - f.grad(p - ey)) / (2.0 * eps) - h.column(1)).norm() < 1e-6);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&Poly2::random(4, 3));
        fd_check(&SinSin { a: 3.0, b: 2.0 });
        fd_check(&ExpCos);
    }

    #[test]
    fn random_polynomials_are_reproducible() {
        assert_eq!(Poly2::random(3, 9).coeffs, Poly2::random(3, 9).coeffs);
    }
}
