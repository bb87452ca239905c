//! Manufactured solutions, error norms, convergence studies, method
//! comparison and element-level stability diagnostics.

mod cases;
mod diagnostics;
mod table;

pub use cases::{check_consistency, Bubble, CaseId, ManufacturedCase, Zero};
pub use diagnostics::{coercivity_report, quad_diagnostics, CoercivityReport, QuadDiagnostics};
pub use table::{compare_methods, least_squares_rate, Comparison, ConvergenceTable, ERROR_NAMES};

use serde::{Deserialize, Serialize};

use crate::exec::ExecMode;
use crate::local::{projection_pack, LOAD_EXACTNESS};
use crate::mesh::{self, AnisotropicParams, PolygonalMesh};
use crate::polybasis::{edge_gauss, polygon_quadrature};
use crate::system::{assemble, SolutionFields};
use crate::{Method, Result, Vec2, VemError};

/// Normalizing norms below this are not divided by.
pub const DEGENERATE_NORM: f64 = 1e-14;
/// Gauss points per edge for the normal-flux error.
pub const EDGE_ERROR_POINTS: usize = 4;

/// The four errors of a solve, relative unless flagged absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dof: usize,
    pub err_u: f64,
    pub err_div: f64,
    pub err_sigma: f64,
    pub err_sigma_n: f64,
    /// Per error, in the order of [`ERROR_NAMES`]: `true` when the exact
    /// norm vanished and the absolute error is reported.
    pub absolute: [bool; 4],
}

impl ErrorReport {
    pub fn values(&self) -> [f64; 4] {
        [self.err_u, self.err_div, self.err_sigma, self.err_sigma_n]
    }
}

fn ratio(num2: f64, den2: f64) -> (f64, bool) {
    let num = num2.max(0.0).sqrt();
    let den = den2.max(0.0).sqrt();
    if den < DEGENERATE_NORM {
        (num, true)
    } else {
        (num / den, false)
    }
}

/// Per-cell squared error integrals and squared exact norms.
#[derive(Debug, Clone, Copy, Default)]
struct CellErrors {
    u: [f64; 2],
    div: [f64; 2],
    sigma: [f64; 2],
}

/// Computes all four errors of `sol` against `case`. Per-cell contributions
/// are summed in cell order, so the result does not depend on `mode`.
pub fn compute_errors(
    mesh: &PolygonalMesh,
    sol: &SolutionFields,
    case: &dyn ManufacturedCase,
    method: Method,
    mode: ExecMode,
) -> Result<ErrorReport> {
    let cells = mode.try_map_indexed(mesh.n_cells(), |c| cell_errors(mesh, sol, case, method, c))?;
    let mut acc = CellErrors::default();
    for ce in &cells {
        for k in 0..2 {
            acc.u[k] += ce.u[k];
            acc.div[k] += ce.div[k];
            acc.sigma[k] += ce.sigma[k];
        }
    }
    let (num_n, den_n) = edge_errors(mesh, sol, case);
    let (err_u, au) = ratio(acc.u[0], acc.u[1]);
    let (err_div, ad) = ratio(acc.div[0], acc.div[1]);
    let (err_sigma, asg) = ratio(acc.sigma[0], acc.sigma[1]);
    let (err_sigma_n, an) = ratio(num_n, den_n);
    Ok(ErrorReport {
        h: mesh.max_diameter(),
        n_dof: mesh.n_edges() + mesh.n_cells(),
        err_u,
        err_div,
        err_sigma,
        err_sigma_n,
        absolute: [au, ad, asg, an],
    })
}

fn cell_errors(
    mesh: &PolygonalMesh,
    sol: &SolutionFields,
    case: &dyn ManufacturedCase,
    method: Method,
    c: usize,
) -> Result<CellErrors> {
    let g = mesh.element_geometry(c)?;
    let q = polygon_quadrature(&g, LOAD_EXACTNESS).map_err(|e| e.at_cell(c))?;
    let dofs = sol.local_fluxes(mesh, c);
    let div_h = crate::local::local_div(&g, &dofs);
    let uh = sol.u[c];
    let projected: Box<dyn Fn(Vec2) -> Vec2> = match method {
        Method::StabFree => {
            let pack = projection_pack(&g).map_err(|e| e.at_cell(c))?;
            let coeffs = pack.project(&dofs);
            Box::new(move |x| pack.basis.gradient_field(coeffs.as_slice(), x))
        }
        Method::DRecipe => {
            let v = crate::local::constant_projection(&g) * nalgebra::DVector::from_vec(dofs);
            let v = Vec2::new(v[0], v[1]);
            Box::new(move |_| v)
        }
    };
    let mut out = CellErrors::default();
    for (&x, &w) in q.points.iter().zip(&q.weights) {
        let u = case.u(x);
        let f = case.f(x);
        let s = case.sigma(x);
        out.u[0] += w * (u - uh).powi(2);
        out.u[1] += w * u * u;
        out.div[0] += w * (-f - div_h).powi(2);
        out.div[1] += w * f * f;
        out.sigma[0] += w * (s - projected(x)).norm_squared();
        out.sigma[1] += w * s.norm_squared();
    }
    Ok(out)
}

/// `(Σ_e h_e ‖(σ − σ_h)·n‖²_e, Σ_e h_e ‖σ·n‖²_e)` with `h_e = |e|`.
fn edge_errors(mesh: &PolygonalMesh, sol: &SolutionFields, case: &dyn ManufacturedCase) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, e) in mesh.edges().iter().enumerate() {
        let a = mesh.vertices()[e.verts[0]];
        let b = mesh.vertices()[e.verts[1]];
        let q = edge_gauss(a, b, EDGE_ERROR_POINTS);
        let sh = sol.sigma[i];
        num += e.length * q.integrate(|x| (case.sigma(x).dot(&e.normal) - sh).powi(2));
        den += e.length * q.integrate(|x| case.sigma(x).dot(&e.normal).powi(2));
    }
    (num, den)
}

/// Mesh sequences; the level parameter is interpreted per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshFamily {
    /// Level = `n` (cells per side).
    Cartesian,
    /// Level = `n` (even).
    ConvexConcave { delta: f64 },
    /// Level = `n`.
    Distorted { amplitude: f64 },
    /// Level = number of seeds.
    Random { lloyd_iters: usize, seed: u64 },
    /// Level = anisotropic refinement step.
    Rhomboidal { nx: usize, ny: usize, shear: f64, alpha: usize },
}

impl MeshFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Cartesian => "cartesian",
            MeshFamily::ConvexConcave { .. } => "convexconcave",
            MeshFamily::Distorted { .. } => "distorted",
            MeshFamily::Random { .. } => "random",
            MeshFamily::Rhomboidal { .. } => "rhomboidal",
        }
    }

    pub fn build(&self, level: usize) -> Result<PolygonalMesh> {
        match *self {
            MeshFamily::Cartesian => mesh::cartesian(level),
            MeshFamily::ConvexConcave { delta } => mesh::convex_concave(level, delta),
            MeshFamily::Distorted { amplitude } => mesh::distorted(level, amplitude),
            MeshFamily::Random { lloyd_iters, seed } => mesh::random_voronoi(level, lloyd_iters, seed),
            MeshFamily::Rhomboidal { nx, ny, shear, alpha } => {
                let step = u32::try_from(level).map_err(|_| VemError::SizeOverflow(format!("step {level}")))?;
                mesh::refine_anisotropic(AnisotropicParams { nx, ny, shear, alpha }, step)
            }
        }
    }

    pub fn is_quadrilateral(&self) -> bool {
        !matches!(self, MeshFamily::Random { .. })
    }
}

/// Assembles and solves one problem and measures its errors.
pub fn solve_and_measure(
    mesh: &PolygonalMesh,
    method: Method,
    case: &dyn ManufacturedCase,
    mode: ExecMode,
) -> Result<(SolutionFields, ErrorReport)> {
    let sys = assemble(mesh, method, |x| case.f(x), mode)?;
    let sol = sys.solve()?;
    let report = compute_errors(mesh, &sol, case, method, mode)?;
    Ok((sol, report))
}

/// Runs generate → assemble → solve → measure on every level.
pub fn convergence_study(
    family: &MeshFamily,
    levels: &[usize],
    method: Method,
    case: &dyn ManufacturedCase,
    mode: ExecMode,
) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(VemError::InvalidParameter(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &level) in levels.iter().enumerate() {
        let run = || -> Result<ErrorReport> {
            let m = family.build(level)?;
            Ok(solve_and_measure(&m, method, case, mode)?.1)
        };
        rows.push(run().map_err(|e| e.at_level(i))?);
    }
    Ok(ConvergenceTable::new(family.name(), method, rows))
}
