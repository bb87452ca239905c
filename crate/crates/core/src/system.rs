//! Global numbering, assembly of the saddle-point system
//! `[A Bᵀ; B 0] [σ; u] = [0; −(f, 1)_E]`, elimination of known fluxes, and the
//! sparse direct solve.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::exec::ExecMode;
use crate::local::{local_div, local_system};
use crate::mesh::PolygonalMesh;
use crate::{Method, Result, Vec2, VemError};

/// Required relative residual of the direct solve.
pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

/// One flux unknown per edge followed by one cell unknown per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalNumbering {
    pub n_edges: usize,
    pub n_cells: usize,
}

impl GlobalNumbering {
    pub fn of(mesh: &PolygonalMesh) -> Self {
        GlobalNumbering {
            n_edges: mesh.n_edges(),
            n_cells: mesh.n_cells(),
        }
    }

    pub fn size(&self) -> usize {
        self.n_edges + self.n_cells
    }

    pub fn flux(&self, edge: usize) -> usize {
        edge
    }

    pub fn cell(&self, cell: usize) -> usize {
        self.n_edges + cell
    }
}

/// Square sparse matrix in compressed-column form with sorted, unique row
/// indices per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Sums duplicates in input order, so the result depends only on the
    /// triplet sequence.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; n + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc != 0.0 {
                for (r, v) in self.column(c) {
                    y[r] += v * xc;
                }
            }
        }
        y
    }

    /// Largest `|K_ij − K_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.n {
            for (r, v) in self.column(c) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n)
            .flat_map(|c| self.column(c).map(move |(r, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| VemError::Solver(format!("cannot build sparse matrix: {e:?}")))
    }

    /// Matrix Market `coordinate real symmetric` text (lower triangle).
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|c| self.column(c).filter(move |&(r, _)| r >= c).map(move |(r, v)| (r, c, v)))
            .collect();
        let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, lower.len());
        for (r, c, v) in lower {
            let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v);
        }
        s
    }
}

/// Assembled global system.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddlePointSystem {
    pub numbering: GlobalNumbering,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub cell_areas: Vec<f64>,
}

impl SaddlePointSystem {
    pub fn size(&self) -> usize {
        self.numbering.size()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.matrix.to_matrix_market().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn solve(&self) -> Result<SolutionFields> {
        let x = solve_linear(&self.matrix, &self.rhs)?;
        let ne = self.numbering.n_edges;
        Ok(SolutionFields {
            sigma: x.values[..ne].to_vec(),
            u: x.values[ne..].to_vec(),
            residual: x.residual,
        })
    }
}

/// Assembles the global system for `method` and load `f`.
///
/// Element matrices are computed under `mode`; scattering runs in cell order,
/// so the result is identical for every mode.
pub fn assemble<F>(mesh: &PolygonalMesh, method: Method, f: F, mode: ExecMode) -> Result<SaddlePointSystem>
where
    F: Fn(Vec2) -> f64 + Sync + Send,
{
    let numbering = GlobalNumbering::of(mesh);
    let locals = mode.try_map_indexed(mesh.n_cells(), |c| {
        let g = mesh.element_geometry(c)?;
        let ls = local_system(&g, method, &f).map_err(|e| e.at_cell(c))?;
        Ok::<_, VemError>((ls, g.area))
    })?;

    let nnz_hint: usize = locals.iter().map(|(l, _)| l.a.len() + 2 * l.divrow.len()).sum();
    let mut triplets = Vec::with_capacity(nnz_hint);
    let mut rhs = vec![0.0; numbering.size()];
    let mut cell_areas = Vec::with_capacity(mesh.n_cells());
    for (c, (ls, area)) in locals.iter().enumerate() {
        let ces = mesh.cell_edges(c);
        let row = numbering.cell(c);
        for (i, ci) in ces.iter().enumerate() {
            for (j, cj) in ces.iter().enumerate() {
                let v = ci.sign_f64() * cj.sign_f64() * ls.a[(i, j)];
                triplets.push((numbering.flux(ci.edge), numbering.flux(cj.edge), v));
            }
            let b = ci.sign_f64() * ls.divrow[i];
            triplets.push((row, numbering.flux(ci.edge), b));
            triplets.push((numbering.flux(ci.edge), row, b));
        }
        rhs[row] = ls.rhs;
        cell_areas.push(*area);
    }
    Ok(SaddlePointSystem {
        numbering,
        matrix: CscMatrix::from_triplets(numbering.size(), triplets),
        rhs,
        cell_areas,
    })
}

/// Discrete solution: one flux per edge (global normal) and one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields {
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    /// Relative residual of the linear solve.
    pub residual: f64,
}

impl SolutionFields {
    /// Flux DOFs of `cell` in its outward-normal convention.
    pub fn local_fluxes(&self, mesh: &PolygonalMesh, cell: usize) -> Vec<f64> {
        mesh.cell_edges(cell).iter().map(|ce| ce.sign_f64() * self.sigma[ce.edge]).collect()
    }

    /// Per-cell `div σ_h`.
    pub fn divergence(&self, mesh: &PolygonalMesh) -> Result<Vec<f64>> {
        (0..mesh.n_cells())
            .map(|c| Ok(local_div(&mesh.element_geometry(c)?, &self.local_fluxes(mesh, c))))
            .collect()
    }
}

struct LinearSolution {
    values: Vec<f64>,
    residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_of(k: &CscMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    k.matvec(x).iter().zip(b).map(|(kx, bi)| bi - kx).collect()
}

fn solve_linear(k: &CscMatrix, b: &[f64]) -> Result<LinearSolution> {
    let n = k.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(LinearSolution {
            values: vec![0.0; n],
            residual: 0.0,
        });
    }
    let lu = k
        .to_faer()?
        .sp_lu()
        .map_err(|e| VemError::Solver(format!("sparse LU failed: {e:?}")))?;
    let apply = |r: &[f64]| -> Vec<f64> {
        let mut m = Mat::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };
    let mut x = apply(b);
    let mut res = residual_of(k, &x, b);
    let mut rel = norm(&res) / bnorm;
    for _ in 0..REFINEMENT_STEPS {
        if !(rel > RESIDUAL_TOL) {
            break;
        }
        let dx = apply(&res);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        res = residual_of(k, &x, b);
        rel = norm(&res) / bnorm;
    }
    if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::Solver(format!(
            "factorization of the {n}×{n} system is numerically singular"
        )));
    }
    if rel > RESIDUAL_TOL {
        log::warn!("relative residual {rel:e} exceeds {RESIDUAL_TOL:e} after refinement");
    }
    Ok(LinearSolution {
        values: x,
        residual: rel,
    })
}

/// System left after eliminating prescribed fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub numbering: GlobalNumbering,
    /// Free flux edges, in increasing order; the reduced unknowns are these
    /// fluxes followed by every cell unknown.
    pub free_edges: Vec<usize>,
    pub fixed: Vec<(usize, f64)>,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    /// Set when every boundary flux is prescribed: `u` is then determined
    /// up to a constant and a zero-mean constraint `Σ |E| u_E = 0` is
    /// appended as one extra row and column.
    pub gauge: bool,
}

impl ReducedSystem {
    /// Number of physical unknowns (excluding the gauge multiplier).
    pub fn n_unknowns(&self) -> usize {
        self.free_edges.len() + self.numbering.n_cells
    }

    pub fn solve(&self) -> Result<SolutionFields> {
        let x = solve_linear(&self.matrix, &self.rhs)?;
        let mut sigma = vec![0.0; self.numbering.n_edges];
        for &(e, v) in &self.fixed {
            sigma[e] = v;
        }
        for (k, &e) in self.free_edges.iter().enumerate() {
            sigma[e] = x.values[k];
        }
        let nf = self.free_edges.len();
        Ok(SolutionFields {
            sigma,
            u: x.values[nf..nf + self.numbering.n_cells].to_vec(),
            residual: x.residual,
        })
    }
}

/// Eliminates the prescribed edge fluxes symmetrically, moving their
/// contribution to the right-hand side.
pub fn apply_known_fluxes(
    system: &SaddlePointSystem,
    mesh: &PolygonalMesh,
    edge_values: &[(usize, f64)],
) -> Result<ReducedSystem> {
    let num = system.numbering;
    let mut value = vec![None; num.n_edges];
    for &(e, v) in edge_values {
        if e >= num.n_edges {
            return Err(VemError::UnknownEdge(e));
        }
        value[e] = Some(v);
    }
    let mut fixed: Vec<(usize, f64)> = value.iter().enumerate().filter_map(|(e, v)| v.map(|v| (e, v))).collect();
    fixed.sort_by_key(|&(e, _)| e);
    let free_edges: Vec<usize> = (0..num.n_edges).filter(|&e| value[e].is_none()).collect();

    // Map full index → reduced index.
    let mut map = vec![usize::MAX; num.size()];
    for (k, &e) in free_edges.iter().enumerate() {
        map[num.flux(e)] = k;
    }
    let nf = free_edges.len();
    for c in 0..num.n_cells {
        map[num.cell(c)] = nf + c;
    }

    let gauge = !fixed.is_empty()
        && mesh
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .all(|(i, _)| value[i].is_some());
    let n_red = nf + num.n_cells + usize::from(gauge);

    let mut fixed_full = vec![0.0; num.size()];
    for &(e, v) in &fixed {
        fixed_full[num.flux(e)] = v;
    }
    let lift = system.matrix.matvec(&fixed_full);

    let mut rhs = vec![0.0; n_red];
    let mut triplets = Vec::with_capacity(system.matrix.nnz() + 2 * num.n_cells);
    for c in 0..num.size() {
        if map[c] == usize::MAX {
            continue;
        }
        rhs[map[c]] = system.rhs[c] - lift[c];
        for (r, v) in system.matrix.column(c) {
            if map[r] != usize::MAX {
                triplets.push((map[r], map[c], v));
            }
        }
    }
    if gauge {
        let g = n_red - 1;
        for (c, &a) in system.cell_areas.iter().enumerate() {
            triplets.push((g, nf + c, a));
            triplets.push((nf + c, g, a));
        }
    }
    Ok(ReducedSystem {
        numbering: num,
        free_edges,
        fixed,
        matrix: CscMatrix::from_triplets(n_red, triplets),
        rhs,
        gauge,
    })
}
