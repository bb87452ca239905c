//! Scaled harmonic polynomials on an element and the quadrature used to
//! integrate them.

mod quadrature;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use quadrature::{
    edge_gauss, fan_quadrature, gauss_legendre, polygon_quadrature, triangle_rule, EdgeQuadrature,
    PolygonQuadrature,
};

use crate::mesh::ElementGeometry;
use crate::{Result, Vec2, VemError};

/// Gram matrices with a larger condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Bivariate polynomial `Σ c_ab m_x^a m_y^b` in scaled coordinates, stored by
/// total degree (`c_{d,0}, c_{d-1,1}, …, c_{0,d}` for each `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    degree: usize,
    coef: Vec<f64>,
}

#[inline]
fn idx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

impl Poly2 {
    pub fn zero(degree: usize) -> Self {
        Poly2 {
            degree,
            coef: vec![0.0; (degree + 1) * (degree + 2) / 2],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `m_x^a m_y^b`.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.degree {
            0.0
        } else {
            self.coef[idx(a, b)]
        }
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        assert!(a + b <= self.degree, "monomial beyond polynomial degree");
        self.coef[idx(a, b)] = value;
    }

    pub fn eval(&self, mx: f64, my: f64) -> f64 {
        let mut acc = 0.0;
        for d in 0..=self.degree {
            for b in 0..=d {
                let c = self.coef[idx(d - b, b)];
                if c != 0.0 {
                    acc += c * mx.powi((d - b) as i32) * my.powi(b as i32);
                }
            }
        }
        acc
    }

    pub fn d_dx(&self) -> Poly2 {
        let mut out = Poly2::zero(self.degree.saturating_sub(1));
        for d in 1..=self.degree {
            for b in 0..d {
                let a = d - b;
                out.coef[idx(a - 1, b)] += a as f64 * self.coef[idx(a, b)];
            }
        }
        out
    }

    pub fn d_dy(&self) -> Poly2 {
        let mut out = Poly2::zero(self.degree.saturating_sub(1));
        for d in 1..=self.degree {
            for b in 1..=d {
                let a = d - b;
                out.coef[idx(a, b - 1)] += b as f64 * self.coef[idx(a, b)];
            }
        }
        out
    }

    pub fn laplacian(&self) -> Poly2 {
        let xx = self.d_dx().d_dx();
        let yy = self.d_dy().d_dy();
        let mut out = xx;
        for (o, y) in out.coef.iter_mut().zip(&yy.coef) {
            *o += y;
        }
        out
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coef.iter().all(|c| c.abs() <= tol)
    }
}

/// Real and imaginary parts of `w^m`, `w = m_x + i m_y`, as coefficient
/// polynomials.
fn complex_power(m: usize) -> (Poly2, Poly2) {
    let mut re = Poly2::zero(m);
    let mut im = Poly2::zero(m);
    let mut binom = 1.0;
    for b in 0..=m {
        // C(m, b) m_x^{m-b} (i m_y)^b
        let c = binom;
        match b % 4 {
            0 => re.set(m - b, b, c),
            1 => im.set(m - b, b, c),
            2 => re.set(m - b, b, -c),
            _ => im.set(m - b, b, -c),
        }
        binom = binom * (m - b) as f64 / (b + 1) as f64;
    }
    (re, im)
}

/// Basis `{Re w^m, Im w^m}_{m=1..k}` of harmonic polynomials modulo
/// constants, `w = ((x − x_E) + i(y − y_E)) / h_E`. Member `2(m−1)` is
/// `Re w^m`, member `2(m−1)+1` is `Im w^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicGradientBasis {
    pub degree: usize,
    pub center: Vec2,
    pub scale: f64,
    pub members: Vec<Poly2>,
}

pub fn harmonic_basis(geom: &ElementGeometry, k: usize) -> HarmonicGradientBasis {
    assert!(k >= 1, "harmonic basis degree must be >= 1");
    let members = (1..=k)
        .flat_map(|m| {
            let (re, im) = complex_power(m);
            [re, im]
        })
        .collect();
    HarmonicGradientBasis {
        degree: k,
        center: geom.centroid,
        scale: geom.diameter,
        members,
    }
}

impl HarmonicGradientBasis {
    pub fn len(&self) -> usize {
        2 * self.degree
    }

    pub fn is_empty(&self) -> bool {
        self.degree == 0
    }

    #[inline]
    fn w(&self, x: Vec2) -> Complex64 {
        let d = (x - self.center) / self.scale;
        Complex64::new(d.x, d.y)
    }

    /// All member values at `x`.
    pub fn values_into(&self, x: Vec2, out: &mut [f64]) {
        let w = self.w(x);
        let mut p = w;
        for m in 0..self.degree {
            out[2 * m] = p.re;
            out[2 * m + 1] = p.im;
            p *= w;
        }
    }

    /// All member gradients (physical coordinates) at `x`.
    pub fn gradients_into(&self, x: Vec2, out: &mut [Vec2]) {
        // (w^m)' = m w^{m−1}; ∇Re f = (Re f', −Im f')/h, ∇Im f = (Im f', Re f')/h.
        let w = self.w(x);
        let mut p = Complex64::new(1.0 / self.scale, 0.0);
        for m in 0..self.degree {
            let d = p * (m + 1) as f64;
            out[2 * m] = Vec2::new(d.re, -d.im);
            out[2 * m + 1] = Vec2::new(d.im, d.re);
            p *= w;
        }
    }

    pub fn values(&self, x: Vec2) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.values_into(x, &mut v);
        v
    }

    pub fn gradients(&self, x: Vec2) -> Vec<Vec2> {
        let mut g = vec![Vec2::zeros(); self.len()];
        self.gradients_into(x, &mut g);
        g
    }

    /// `Σ_i c_i ∇p_i(x)`.
    pub fn gradient_field(&self, coeffs: &[f64], x: Vec2) -> Vec2 {
        self.gradients(x).iter().zip(coeffs).map(|(g, c)| g * *c).sum()
    }

    /// Scaled coordinates of `x`.
    pub fn scaled(&self, x: Vec2) -> (f64, f64) {
        let d = (x - self.center) / self.scale;
        (d.x, d.y)
    }
}

/// `G_ij = (∇p_i, ∇p_j)_E = Σ_e ∫_e p_i ∇p_j·n ds`, with `k + 1` Gauss points
/// per edge. Fails when `G` is numerically singular.
pub fn gram_matrix_boundary(basis: &HarmonicGradientBasis, geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let mut vals = vec![0.0; n];
    let mut grads = vec![Vec2::zeros(); n];
    for e in 0..geom.n_edges() {
        let (a, b) = geom.edge(e);
        let nrm = geom.normals[e];
        let q = edge_gauss(a, b, basis.degree + 1);
        for (&x, &w) in q.points.iter().zip(&q.weights) {
            basis.values_into(x, &mut vals);
            basis.gradients_into(x, &mut grads);
            for j in 0..n {
                let gn = w * grads[j].dot(&nrm);
                for i in 0..n {
                    g[(i, j)] += vals[i] * gn;
                }
            }
        }
    }
    let g = 0.5 * (&g + g.transpose());
    check_condition(&g)?;
    Ok(g)
}

/// Oracle for [`gram_matrix_boundary`]: area quadrature of `∇p_i·∇p_j`.
pub fn gram_matrix_interior(basis: &HarmonicGradientBasis, geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let q = polygon_quadrature(geom, 2 * basis.degree)?;
    let mut g = DMatrix::zeros(n, n);
    let mut grads = vec![Vec2::zeros(); n];
    for (&x, &w) in q.points.iter().zip(&q.weights) {
        basis.gradients_into(x, &mut grads);
        for j in 0..n {
            for i in 0..n {
                g[(i, j)] += w * grads[i].dot(&grads[j]);
            }
        }
    }
    Ok(g)
}

/// Spectral condition number of a symmetric matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_condition(g: &DMatrix<f64>) -> Result<()> {
    let cond = condition_number(g);
    if !(cond <= MAX_GRAM_CONDITION) {
        return Err(VemError::DegenerateElement(format!(
            "harmonic Gram matrix condition number {cond:e} exceeds {MAX_GRAM_CONDITION:e}"
        )));
    }
    Ok(())
}

/// `∫_E p_i dA` for every member.
pub fn member_integrals(basis: &HarmonicGradientBasis, quad: &PolygonQuadrature) -> DVector<f64> {
    let n = basis.len();
    let mut out = DVector::zeros(n);
    let mut vals = vec![0.0; n];
    for (&x, &w) in quad.points.iter().zip(&quad.weights) {
        basis.values_into(x, &mut vals);
        for i in 0..n {
            out[i] += w * vals[i];
        }
    }
    out
}

/// `∫_E p dA` for a single member.
pub fn integrate_harmonic_over_element(
    basis: &HarmonicGradientBasis,
    member: usize,
    geom: &ElementGeometry,
) -> Result<f64> {
    let q = polygon_quadrature(geom, basis.degree.max(1))?;
    Ok(member_integrals(basis, &q)[member])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn unit_square() -> ElementGeometry {
        ElementGeometry::from_polygon(&[v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn k1_and_k2_members() {
        let g = unit_square();
        let b1 = harmonic_basis(&g, 1);
        assert_eq!(b1.len(), 2);
        assert_eq!(b1.members[0].coeff(1, 0), 1.0);
        assert_eq!(b1.members[1].coeff(0, 1), 1.0);

        let b2 = harmonic_basis(&g, 2);
        assert_eq!(b2.len(), 4);
        let re2 = &b2.members[2];
        assert_eq!((re2.coeff(2, 0), re2.coeff(1, 1), re2.coeff(0, 2)), (1.0, 0.0, -1.0));
        // Im w² = 2 m_x m_y.
        let im2 = &b2.members[3];
        assert_eq!((im2.coeff(2, 0), im2.coeff(1, 1), im2.coeff(0, 2)), (0.0, 2.0, 0.0));
        assert!(re2.laplacian().is_zero(0.0));

        let b3 = harmonic_basis(&g, 3);
        assert_eq!(b3.len(), 6);
        assert_eq!(b3.members[4].coeff(1, 2), -3.0);
        assert_eq!(b3.members[5].coeff(0, 3), -1.0);
    }

    #[test]
    fn every_member_is_harmonic() {
        let b = harmonic_basis(&unit_square(), 9);
        for p in &b.members {
            assert!(p.laplacian().is_zero(0.0));
        }
    }

    #[test]
    fn fast_evaluation_matches_coefficients() {
        let g = ElementGeometry::from_polygon(&[v(0.0, 0.0), v(2.0, 0.0), v(3.0, 1.0), v(1.0, 1.0)]).unwrap();
        let b = harmonic_basis(&g, 5);
        let x = v(1.7, 0.3);
        let (mx, my) = b.scaled(x);
        let vals = b.values(x);
        let grads = b.gradients(x);
        for (i, p) in b.members.iter().enumerate() {
            assert!((vals[i] - p.eval(mx, my)).abs() < 1e-14);
            let gx = p.d_dx().eval(mx, my) / b.scale;
            let gy = p.d_dy().eval(mx, my) / b.scale;
            assert!((grads[i] - v(gx, gy)).norm() < 1e-14);
        }
    }

    #[test]
    fn unit_square_k1_gram_is_half_identity() {
        let g = unit_square();
        let gram = gram_matrix_boundary(&harmonic_basis(&g, 1), &g).unwrap();
        assert!((gram - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn boundary_gram_matches_interior_on_rhombus() {
        let g = ElementGeometry::from_polygon(&[v(0.0, 0.0), v(2.0, 0.0), v(3.0, 1.0), v(1.0, 1.0)]).unwrap();
        for k in 1..=4 {
            let b = harmonic_basis(&g, k);
            let gb = gram_matrix_boundary(&b, &g).unwrap();
            let gi = gram_matrix_interior(&b, &g).unwrap();
            assert!((&gb - &gi).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn member_integrals_examples() {
        let sq = unit_square();
        let b = harmonic_basis(&sq, 2);
        assert!(integrate_harmonic_over_element(&b, 0, &sq).unwrap().abs() < 1e-16);
        assert!(integrate_harmonic_over_element(&b, 2, &sq).unwrap().abs() < 1e-16);

        let rh = ElementGeometry::from_polygon(&[v(0.0, 0.0), v(2.0, 0.0), v(3.0, 1.0), v(1.0, 1.0)]).unwrap();
        let b = harmonic_basis(&rh, 2);
        let got = integrate_harmonic_over_element(&b, 3, &rh).unwrap();
        let h = rh.diameter;
        // Two-triangle split with a high-order rule as the oracle.
        let mut q = PolygonQuadrature {
            points: vec![],
            weights: vec![],
            exactness: 12,
        };
        triangle_rule(v(0.0, 0.0), v(2.0, 0.0), v(3.0, 1.0), 12, &mut q);
        triangle_rule(v(0.0, 0.0), v(3.0, 1.0), v(1.0, 1.0), 12, &mut q);
        let oracle = q.integrate(|p| 2.0 * (p.x - 1.5) * (p.y - 0.5) / (h * h));
        assert!((got - oracle).abs() < 1e-14);
        assert!(oracle.abs() > 1e-3);
    }

    #[test]
    fn singular_gram_is_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(matches!(check_condition(&g), Err(VemError::DegenerateElement(_))));
        assert!(check_condition(&DMatrix::identity(3, 3)).is_ok());
    }
}
