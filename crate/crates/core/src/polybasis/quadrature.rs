//! Gauss–Legendre rules on segments, collapsed Gauss rules on triangles, and
//! fan subtriangulation of star-shaped polygons.

use crate::mesh::{polygon, ElementGeometry};
use crate::{Result, Vec2, VemError};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre: n must be >= 1");
    // (P_n(z), P_n'(z)) by the three-term recurrence.
    let legendre = |z: f64| {
        let (mut p0, mut p1) = (1.0, 0.0);
        for j in 0..n {
            let p2 = p1;
            p1 = p0;
            p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
        }
        (p0, n as f64 * (z * p0 - p1) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        let (_, dp) = legendre(z);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss rule mapped to a segment; weights sum to its length.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub order: usize,
}

impl EdgeQuadrature {
    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

pub fn edge_gauss(a: Vec2, b: Vec2, n_points: usize) -> EdgeQuadrature {
    let (x, w) = gauss_legendre(n_points);
    let half = 0.5 * (b - a).norm();
    EdgeQuadrature {
        points: x.iter().map(|&t| a + (b - a) * (0.5 * (t + 1.0))).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
        order: 2 * n_points - 1,
    }
}

/// Points and weights over a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonQuadrature {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    /// Bivariate polynomial degree integrated exactly.
    pub exactness: usize,
}

impl PolygonQuadrature {
    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Collapsed (Duffy) Gauss product rule on triangle `abc`, exact to degree
/// `exactness`; the weights carry the signed area.
pub fn triangle_rule(a: Vec2, b: Vec2, c: Vec2, exactness: usize, out: &mut PolygonQuadrature) {
    let n = (exactness + 2).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let jac = polygon::cross(b - a, c - a);
    for (i, &xu) in x.iter().enumerate() {
        let u = 0.5 * (xu + 1.0);
        for (j, &xv) in x.iter().enumerate() {
            let v = 0.5 * (xv + 1.0);
            // (u, v) ∈ [0,1]² ↦ a + u(b − a) + uv(c − b), with Jacobian u·|2T|.
            out.points.push(a + (b - a) * u + (c - b) * (u * v));
            out.weights.push(0.25 * w[i] * w[j] * u * jac);
        }
    }
}

/// Exactness-`exactness` rule on `geom`, fanning from the centroid when it
/// sees every edge and otherwise from the centroid of the kernel.
pub fn polygon_quadrature(geom: &ElementGeometry, exactness: usize) -> Result<PolygonQuadrature> {
    let apex = polygon::fan_point(&geom.vertices)
        .ok_or_else(|| VemError::Quadrature("polygon is not star-shaped with respect to any interior point".into()))?;
    Ok(fan_quadrature(&geom.vertices, apex, exactness))
}

pub fn fan_quadrature(vertices: &[Vec2], apex: Vec2, exactness: usize) -> PolygonQuadrature {
    let n = vertices.len();
    let per = (exactness + 2).div_ceil(2).max(1).pow(2);
    let mut q = PolygonQuadrature {
        points: Vec::with_capacity(n * per),
        weights: Vec::with_capacity(n * per),
        exactness,
    };
    for j in 0..n {
        triangle_rule(apex, vertices[j], vertices[(j + 1) % n], exactness, &mut q);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn gauss_legendre_small_rules() {
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
        let (x2, w2) = gauss_legendre(2);
        assert!((x2[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w2[0] - 1.0).abs() < 1e-15);
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for d in 0..2 * n {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d + 1) as f64 };
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn edge_gauss_examples() {
        let q = edge_gauss(v(0.0, 0.0), v(1.0, 0.0), 1);
        assert_eq!(q.points, vec![v(0.5, 0.0)]);
        assert_eq!(q.weights, vec![1.0]);
        let q2 = edge_gauss(v(0.0, 0.0), v(1.0, 0.0), 2);
        assert!((q2.integrate(|p| p.x * p.x) - 1.0 / 3.0).abs() < 1e-15);
        let slanted = edge_gauss(v(1.0, 2.0), v(4.0, 6.0), 3);
        assert!((slanted.weights.iter().sum::<f64>() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn polygon_quadrature_examples() {
        let sq = ElementGeometry::from_polygon(&[v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)]).unwrap();
        let q = polygon_quadrature(&sq, 6).unwrap();
        assert!((q.total_weight() - 1.0).abs() < 1e-14);
        assert!(q.integrate(|p| (p.x - 0.5) * (p.y - 0.5)).abs() < 1e-15);
        assert!((q.integrate(|p| p.x * p.x * p.y) - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_monomials_exact() {
        // ∫_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!.
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        for d in 0..=8 {
            let mut q = PolygonQuadrature {
                points: vec![],
                weights: vec![],
                exactness: d,
            };
            triangle_rule(v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0), d, &mut q);
            for a in 0..=d {
                let b = d - a;
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let got = q.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                assert!((got - exact).abs() <= 1e-14 * exact.max(1e-3), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn nonconvex_dart_integrates_exactly() {
        let dart = ElementGeometry::from_polygon(&[v(0.0, 0.0), v(0.5, 0.4), v(1.0, 0.0), v(0.5, 1.0)]).unwrap();
        let q = polygon_quadrature(&dart, 4).unwrap();
        assert!((q.total_weight() - dart.area).abs() < 1e-15);
        let oracle = fan_quadrature(&dart.vertices, v(0.5, 0.6), 10);
        let f = |p: Vec2| p.x.powi(3) * p.y - 2.0 * p.y * p.y + 1.0;
        assert!((q.integrate(f) - oracle.integrate(f)).abs() < 1e-14);
    }
}
