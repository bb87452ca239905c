//! Element-level operators for the lowest-order mixed space: flux DOFs,
//! divergence, the harmonic-gradient projection `Π̂`, the constant projection
//! `Π⁰`, both local bilinear forms, and the quadrilateral hourglass/`p*`
//! diagnostics.
//!
//! Local flux DOFs are edge averages of `τ·n` with the element's outward
//! normals, ordered like the element's edges.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::mesh::{polygon, ElementGeometry};
use crate::polybasis::{
    edge_gauss, gram_matrix_boundary, harmonic_basis, member_integrals, polygon_quadrature,
    HarmonicGradientBasis,
};
use crate::{Method, Result, Vec2, VemError};

/// Exactness of the interior quadrature used for loads and errors.
pub const LOAD_EXACTNESS: usize = 6;

/// Projection degree for an element with `n_edges` edges: the smallest `k`
/// with `2k ≥ n_edges`.
pub fn choose_k(n_edges: usize) -> usize {
    n_edges.div_ceil(2)
}

/// `div τ = (1/|E|) Σ_j |e_j| c_j`.
pub fn local_div(geom: &ElementGeometry, dofs: &[f64]) -> f64 {
    geom.edge_lengths.iter().zip(dofs).map(|(l, c)| l * c).sum::<f64>() / geom.area
}

/// Flux DOFs of a vector field: `(1/|e_j|) ∫_{e_j} τ·n_j`, `n_points` Gauss
/// points per edge.
pub fn field_dofs(geom: &ElementGeometry, field: impl Fn(Vec2) -> Vec2, n_points: usize) -> Vec<f64> {
    geom.normal_flux_averages(field, n_points)
}

/// Matrices turning flux DOFs into projections.
#[derive(Debug, Clone)]
pub struct ProjectionPack {
    pub k: usize,
    pub basis: HarmonicGradientBasis,
    /// `G_ij = (∇p_i, ∇p_j)_E`.
    pub gram: DMatrix<f64>,
    /// `B_ij = (φ_j, ∇p_i)_E`.
    pub rhs: DMatrix<f64>,
    /// `P = G⁻¹B`: coefficients of `Π̂φ_j` in the basis.
    pub proj: DMatrix<f64>,
    /// Column `j` is the constant vector `Π⁰φ_j`.
    pub proj0: DMatrix<f64>,
}

/// [`ProjectionPack`] with `k` from [`choose_k`].
pub fn projection_pack(geom: &ElementGeometry) -> Result<ProjectionPack> {
    projection_pack_with_degree(geom, choose_k(geom.n_edges()))
}

pub fn projection_pack_with_degree(geom: &ElementGeometry, k: usize) -> Result<ProjectionPack> {
    let basis = harmonic_basis(geom, k);
    let gram = gram_matrix_boundary(&basis, geom)?;
    let n = geom.n_edges();
    let nb = basis.len();

    let quad = polygon_quadrature(geom, k)?;
    let area_int = member_integrals(&basis, &quad);
    let mut rhs = DMatrix::zeros(nb, n);
    let mut vals = vec![0.0; nb];
    for j in 0..n {
        let (a, b) = geom.edge(j);
        let q = edge_gauss(a, b, k + 1);
        for (&x, &w) in q.points.iter().zip(&q.weights) {
            basis.values_into(x, &mut vals);
            for i in 0..nb {
                rhs[(i, j)] += w * vals[i];
            }
        }
        let div = geom.edge_lengths[j] / geom.area;
        for i in 0..nb {
            rhs[(i, j)] -= div * area_int[i];
        }
    }

    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| VemError::DegenerateElement("harmonic Gram matrix is not positive definite".into()))?;
    let proj = chol.solve(&rhs);

    let proj0 = constant_projection(geom);
    Ok(ProjectionPack {
        k,
        basis,
        gram,
        rhs,
        proj,
        proj0,
    })
}

/// `Π⁰φ_j = |e_j| (M_j − x_E) / |E|`, from `(φ_j, a)_E = ∫_∂E (φ_j·n)(a·x) − ∫_E div φ_j (a·x)`.
pub fn constant_projection(geom: &ElementGeometry) -> DMatrix<f64> {
    let n = geom.n_edges();
    DMatrix::from_fn(2, n, |r, j| {
        geom.edge_lengths[j] * (geom.midpoints[j][r] - geom.centroid[r]) / geom.area
    })
}

impl ProjectionPack {
    /// Coefficients of `Π̂τ` for flux DOFs `dofs`.
    pub fn project(&self, dofs: &[f64]) -> DVector<f64> {
        &self.proj * DVector::from_column_slice(dofs)
    }

    /// `Π⁰τ` for flux DOFs `dofs`.
    pub fn project_constant(&self, dofs: &[f64]) -> Vec2 {
        let v = &self.proj0 * DVector::from_column_slice(dofs);
        Vec2::new(v[0], v[1])
    }

    /// DOF matrix of `Π⁰`: entry `(i, j)` is `dof_i(Π⁰φ_j) = n_i · Π⁰φ_j`.
    pub fn constant_projection_dofs(&self, geom: &ElementGeometry) -> DMatrix<f64> {
        let n = geom.n_edges();
        DMatrix::from_fn(n, n, |i, j| {
            geom.normals[i].x * self.proj0[(0, j)] + geom.normals[i].y * self.proj0[(1, j)]
        })
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

/// `A_E = Pᵀ G P`, i.e. `(Π̂φ_i, Π̂φ_j)_E`.
pub fn a_stabfree(pack: &ProjectionPack) -> DMatrix<f64> {
    symmetrize(pack.proj.transpose() * &pack.rhs)
}

/// Diagonal of the D-recipe scaling, `max(h_E |e_i|, ‖Π⁰φ_i‖²_E)`.
pub fn drecipe_diagonal(geom: &ElementGeometry, pack: &ProjectionPack) -> Vec<f64> {
    (0..geom.n_edges())
        .map(|i| {
            let c = pack.proj0.column(i);
            (geom.diameter * geom.edge_lengths[i]).max(geom.area * c.norm_squared())
        })
        .collect()
}

/// `|E| P0ᵀP0 + (I − 𝚷⁰)ᵀ D (I − 𝚷⁰)`.
pub fn a_drecipe(geom: &ElementGeometry, pack: &ProjectionPack) -> DMatrix<f64> {
    let n = geom.n_edges();
    let consistency = geom.area * pack.proj0.transpose() * &pack.proj0;
    let r = DMatrix::identity(n, n) - pack.constant_projection_dofs(geom);
    let d = DMatrix::from_diagonal(&DVector::from_vec(drecipe_diagonal(geom, pack)));
    symmetrize(consistency + r.transpose() * d * r)
}

/// `∫_E f dA`.
pub fn local_rhs(geom: &ElementGeometry, f: impl Fn(Vec2) -> f64) -> Result<f64> {
    Ok(polygon_quadrature(geom, LOAD_EXACTNESS)?.integrate(f))
}

/// Element matrices entering the global saddle-point system, in local
/// outward-normal DOF convention.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub a: DMatrix<f64>,
    /// `∫_E div φ_j = |e_j|`.
    pub divrow: Vec<f64>,
    /// `−∫_E f`.
    pub rhs: f64,
}

pub fn local_system(geom: &ElementGeometry, method: Method, f: impl Fn(Vec2) -> f64) -> Result<LocalSystem> {
    let pack = projection_pack(geom)?;
    let a = match method {
        Method::StabFree => a_stabfree(&pack),
        Method::DRecipe => a_drecipe(geom, &pack),
    };
    Ok(LocalSystem {
        a,
        divrow: geom.edge_lengths.clone(),
        rhs: -local_rhs(geom, f)?,
    })
}

fn require_quad(geom: &ElementGeometry, what: &str) -> Result<()> {
    if geom.n_edges() != 4 {
        return Err(VemError::Domain(format!(
            "{what} is defined for quadrilaterals only (element has {} edges)",
            geom.n_edges()
        )));
    }
    Ok(())
}

/// Flux DOFs of the div-free hourglass function of a quadrilateral.
#[derive(Debug, Clone, PartialEq)]
pub struct HourglassVector {
    pub dofs: Vec<f64>,
}

/// `ξ·n_j = (−1)^j / |e_j|` with edges counted from one, i.e. DOF `−1/|e_0|`
/// on the first local edge.
pub fn hourglass_vector(geom: &ElementGeometry) -> Result<HourglassVector> {
    require_quad(geom, "the hourglass mode")?;
    let dofs = (0..4)
        .map(|j| if j % 2 == 0 { -1.0 } else { 1.0 } / geom.edge_lengths[j])
        .collect();
    Ok(HourglassVector { dofs })
}

/// `((τ, e_x)_E, (τ, e_y)_E)` from flux DOFs alone.
pub fn constant_moments(geom: &ElementGeometry, dofs: &[f64]) -> Vec2 {
    let div = local_div(geom, dofs);
    let boundary: Vec2 = (0..geom.n_edges())
        .map(|j| geom.midpoints[j] * (dofs[j] * geom.edge_lengths[j]))
        .sum();
    boundary - geom.centroid * (div * geom.area)
}

/// The harmonic quadratic `p* = Re q` with `p*(M_j) = (−1)^j` (edges counted
/// from one), expressed about the first edge midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PStar {
    pub origin: Vec2,
    /// `q(z) = c0 + c1 z + c2 z²`, `z` relative to `origin`.
    pub coeffs: [Complex64; 3],
}

pub fn pstar(geom: &ElementGeometry) -> Result<PStar> {
    require_quad(geom, "p*")?;
    let m = &geom.midpoints;
    let cz = |v: Vec2| Complex64::new(v.x, v.y);
    let z1 = cz(m[1] - m[0]);
    let z2 = cz(m[3] - m[0]);
    let prod = z1 * z2;
    let scale = geom.diameter * geom.diameter;
    if !(prod.norm() > 1e-14 * scale) {
        return Err(VemError::Geometry("midpoint parallelogram is degenerate".into()));
    }
    Ok(PStar {
        origin: m[0],
        coeffs: [Complex64::new(-1.0, 0.0), 2.0 * (z1 + z2) / prod, -2.0 / prod],
    })
}

impl PStar {
    fn z(&self, x: Vec2) -> Complex64 {
        Complex64::new(x.x - self.origin.x, x.y - self.origin.y)
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        let z = self.z(x);
        let [c0, c1, c2] = self.coeffs;
        (c0 + z * (c1 + z * c2)).re
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let [_, c1, c2] = self.coeffs;
        let d = c1 + 2.0 * c2 * self.z(x);
        Vec2::new(d.re, -d.im)
    }

    /// Coefficients of `∇p*` in a harmonic basis of degree ≥ 2.
    pub fn basis_coefficients(&self, basis: &HarmonicGradientBasis) -> Result<DVector<f64>> {
        if basis.degree < 2 {
            return Err(VemError::InvalidParameter("p* needs a basis of degree >= 2".into()));
        }
        // z − origin = h w + d, with d = center − origin.
        let h = basis.scale;
        let d = self.z(basis.center);
        let [_, c1, c2] = self.coeffs;
        let w1 = c1 * h + 2.0 * c2 * h * d;
        let w2 = c2 * h * h;
        let mut out = DVector::zeros(basis.len());
        // Re(c wᵐ) = Re c · Re wᵐ − Im c · Im wᵐ.
        out[0] = w1.re;
        out[1] = -w1.im;
        out[2] = w2.re;
        out[3] = -w2.im;
        Ok(out)
    }

    /// `‖∇p*‖_{0,E}`.
    pub fn gradient_norm(&self, geom: &ElementGeometry) -> Result<f64> {
        let q = polygon_quadrature(geom, 2)?;
        Ok(q.integrate(|x| self.gradient(x).norm_squared()).sqrt())
    }
}

/// `(τ, ∇p*)_E` via `Π̂`: `(Pτ)ᵀ G q*`.
pub fn pstar_pairing(pack: &ProjectionPack, p: &PStar, dofs: &[f64]) -> Result<f64> {
    let q = p.basis_coefficients(&pack.basis)?;
    let c = pack.project(dofs);
    Ok(c.dot(&(&pack.gram * q)))
}

/// `(τ, ∇p*)_E` via the boundary integral `Σ_j c_j ∫_{e_j} p*` (valid for
/// div-free `τ`).
pub fn pstar_pairing_boundary(geom: &ElementGeometry, p: &PStar, dofs: &[f64]) -> f64 {
    (0..geom.n_edges())
        .map(|j| {
            let (a, b) = geom.edge(j);
            dofs[j] * edge_gauss(a, b, 2).integrate(|x| p.eval(x))
        })
        .sum()
}

/// Coercivity of the stabilization-free form on the local div-free
/// subspace (constants ⊕ hourglass) of a quadrilateral.
#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityScan {
    /// Lower bound of `min a_h(τ,τ)/‖τ‖²` over the div-free subspace.
    pub min_quotient: f64,
    /// `‖Π̂ξ‖_{0,E}`.
    pub projected_norm: f64,
    /// `‖w‖_{0,E}` for a piecewise-constant div-free field `w` with the
    /// normal trace of `ξ`; bounds `‖ξ‖_{0,E}` from above.
    pub lifting_norm: f64,
    /// `(ξ, ∇p*)/‖∇p*‖`, a lower bound for `‖Π̂ξ‖`.
    pub pstar_bound: f64,
}

/// Constant field on triangle `(V_j, V_{j+1}, V_{j+2})` matching `ξ·n` on its
/// two boundary edges; `None` if the diagonal is not interior.
fn diagonal_lifting(geom: &ElementGeometry, xi: &[f64], j: usize) -> Option<f64> {
    let v = &geom.vertices;
    let mut norm2 = 0.0;
    for start in [j, j + 2] {
        let (a, b, c) = (v[start % 4], v[(start + 1) % 4], v[(start + 2) % 4]);
        let area = 0.5 * polygon::cross(b - a, c - a);
        if area <= 0.0 {
            return None;
        }
        let (e0, e1) = (start % 4, (start + 1) % 4);
        let n0 = geom.normals[e0];
        let n1 = geom.normals[e1];
        let m = Matrix2::new(n0.x, n0.y, n1.x, n1.y);
        let w = m.lu().solve(&Vector2::new(xi[e0], xi[e1]))?;
        norm2 += area * w.norm_squared();
    }
    Some(norm2.sqrt())
}

pub fn kernel_coercivity_scan(geom: &ElementGeometry) -> Result<CoercivityScan> {
    let xi = hourglass_vector(geom)?.dofs;
    let pack = projection_pack(geom)?;
    let a = a_stabfree(&pack);
    let x = DVector::from_column_slice(&xi);
    let projected_norm = x.dot(&(&a * &x)).max(0.0).sqrt();
    let lifting_norm = [0, 1]
        .iter()
        .filter_map(|&j| diagonal_lifting(geom, &xi, j))
        .fold(f64::INFINITY, f64::min);
    if !lifting_norm.is_finite() {
        return Err(VemError::Geometry("quadrilateral has no interior diagonal".into()));
    }
    let p = pstar(geom)?;
    let pstar_bound = pstar_pairing(&pack, &p, &xi)? / p.gradient_norm(geom)?;
    // Constants are reproduced exactly and are L²-orthogonal to ξ and to Π̂ξ,
    // so the quotient on the subspace is min(1, ‖Π̂ξ‖²/‖ξ‖²).
    let min_quotient = (projected_norm / lifting_norm).powi(2).min(1.0);
    Ok(CoercivityScan {
        min_quotient,
        projected_norm,
        lifting_norm,
        pstar_bound,
    })
}
