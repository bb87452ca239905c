//! Element-level identity and stability checks on random quadrilaterals and
//! on whole meshes.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::ExecMode;
use crate::local::{
    constant_moments, field_dofs, hourglass_vector, kernel_coercivity_scan, projection_pack, pstar, pstar_pairing,
};
use crate::mesh::{random_quadrilateral, ElementGeometry, PolygonalMesh};
use crate::{Result, Vec2};

/// Corner jitter of the random quadrilaterals.
const QUAD_JITTER: f64 = 0.3;
/// Minimal `|e| / h_E` of the random quadrilaterals.
const QUAD_MIN_GAMMA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadDiagnostics {
    pub n_quads: usize,
    /// `min/max (ξ, ∇p*)_E`.
    pub pairing: (f64, f64),
    /// `max |(ξ, a)_E|` over unit constant directions.
    pub orthogonality: f64,
    /// `max |Π̂(∇p) − ∇p|` in coefficients, over members lying in the local space.
    pub projection_residual: f64,
    /// `min/max` kernel-coercivity quotient.
    pub coercivity: (f64, f64),
}

/// `‖P·dofs(∇p_i) − e_i‖_∞` for member `i`, meaningful when `∇p_i` lies in
/// the local space of `geom`.
pub fn member_reproduction_residual(geom: &ElementGeometry, member: usize) -> Result<f64> {
    let pack = projection_pack(geom)?;
    let basis = &pack.basis;
    let dofs = field_dofs(geom, |x| basis.gradients(x)[member], basis.degree + 1);
    let c = pack.project(&dofs);
    let mut e = DVector::zeros(basis.len());
    e[member] = 1.0;
    Ok((c - e).amax())
}

fn rectangle(rng: &mut ChaCha8Rng, rotation: f64) -> Result<ElementGeometry> {
    let w: f64 = rng.random_range(0.5..2.0);
    let h: f64 = rng.random_range(0.5..2.0);
    let scale = 10f64.powf(rng.random_range(-2.0..1.0));
    let shift = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let (s, c) = rotation.sin_cos();
    let pts: Vec<Vec2> = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
        .iter()
        .map(|&(x, y)| Vec2::new(c * x - s * y, s * x + c * y) * scale + shift)
        .collect();
    ElementGeometry::from_polygon(&pts)
}

/// Runs the pairing, orthogonality, reproduction and coercivity checks on
/// `n` random shape-regular quadrilaterals drawn from `seed`.
pub fn quad_diagnostics(n: usize, seed: u64) -> Result<QuadDiagnostics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairing = (f64::INFINITY, f64::NEG_INFINITY);
    let mut coercivity = (f64::INFINITY, f64::NEG_INFINITY);
    let mut orthogonality: f64 = 0.0;
    let mut projection_residual: f64 = 0.0;
    for _ in 0..n {
        let quad = random_quadrilateral(&mut rng, QUAD_JITTER, QUAD_MIN_GAMMA);
        let g = ElementGeometry::from_polygon(&quad)?;
        let xi = hourglass_vector(&g)?;
        let pack = projection_pack(&g)?;
        let p = pstar(&g)?;
        let v = pstar_pairing(&pack, &p, &xi.dofs)?;
        pairing = (pairing.0.min(v), pairing.1.max(v));
        orthogonality = orthogonality.max(constant_moments(&g, &xi.dofs).amax());
        for member in 0..2 {
            projection_residual = projection_residual.max(member_reproduction_residual(&g, member)?);
        }
        let rect = rectangle(&mut rng, 0.0)?;
        projection_residual = projection_residual.max(member_reproduction_residual(&rect, 2)?);
        let diamond = rectangle(&mut rng, std::f64::consts::FRAC_PI_4)?;
        projection_residual = projection_residual.max(member_reproduction_residual(&diamond, 3)?);
        let s = kernel_coercivity_scan(&g)?;
        coercivity = (coercivity.0.min(s.min_quotient), coercivity.1.max(s.min_quotient));
    }
    Ok(QuadDiagnostics {
        n_quads: n,
        pairing,
        orthogonality,
        projection_residual,
        coercivity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// Number of quadrilateral cells scanned (other cells are skipped).
    pub n_quads: usize,
    pub min_quotient: f64,
    pub worst_cell: Option<usize>,
}

/// Kernel-coercivity scan over every quadrilateral cell of `mesh`.
pub fn coercivity_report(mesh: &PolygonalMesh, mode: ExecMode) -> Result<CoercivityReport> {
    let values = mode.try_map_indexed(mesh.n_cells(), |c| {
        if mesh.cells()[c].len() != 4 {
            return Ok(None);
        }
        let g = mesh.element_geometry(c)?;
        kernel_coercivity_scan(&g).map(|s| Some(s.min_quotient)).map_err(|e| e.at_cell(c))
    })?;
    let mut report = CoercivityReport {
        n_quads: 0,
        min_quotient: f64::INFINITY,
        worst_cell: None,
    };
    for (c, v) in values.into_iter().enumerate() {
        if let Some(q) = v {
            report.n_quads += 1;
            if q < report.min_quotient {
                report.min_quotient = q;
                report.worst_cell = Some(c);
            }
        }
    }
    Ok(report)
}
