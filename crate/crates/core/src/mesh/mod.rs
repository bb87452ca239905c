//! Polygonal meshes: topology, per-element geometry, generators and
//! regularity diagnostics.

mod generators;
mod io;
pub mod polygon;
mod voronoi;

use std::collections::HashMap;

pub use generators::{
    cartesian, convex_concave, distorted, random_quadrilateral, refine_anisotropic, rhomboidal,
    AnisotropicParams,
};
pub use io::{read_mesh, write_mesh, MeshFile};
pub use voronoi::{random_voronoi, voronoi_from_seeds};

use crate::{Result, Vec2, VemError};

/// A mesh edge. The global normal is the clockwise rotation of the unit
/// tangent running from `verts[0]` to `verts[1]`, with `verts[0] < verts[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub verts: [usize; 2],
    pub normal: Vec2,
    pub length: f64,
    /// Adjacent cells; the second is `None` on the boundary.
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// Local edge of a cell: global edge index plus the sign relating the cell's
/// outward normal to the global edge normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellEdge {
    pub edge: usize,
    pub sign: i8,
}

impl CellEdge {
    #[inline]
    pub fn sign_f64(self) -> f64 {
        f64::from(self.sign)
    }
}

/// Conforming polygonal mesh with counterclockwise cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    vertices: Vec<Vec2>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<CellEdge>>,
    reoriented: Vec<usize>,
}

impl PolygonalMesh {
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Local edges of `cell`; local edge `j` joins local vertices `j` and `j+1`.
    pub fn cell_edges(&self, cell: usize) -> &[CellEdge] {
        &self.cell_edges[cell]
    }

    /// Cells whose input loop was clockwise and got reversed.
    pub fn reoriented_cells(&self) -> &[usize] {
        &self.reoriented
    }

    pub fn cell_polygon(&self, cell: usize) -> Vec<Vec2> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn element_geometry(&self, cell: usize) -> Result<ElementGeometry> {
        ElementGeometry::from_polygon(&self.cell_polygon(cell)).map_err(|e| match e {
            VemError::DegenerateCell { area, .. } => VemError::DegenerateCell { cell, area },
            e => e.at_cell(cell),
        })
    }

    /// Mesh size `h`: the largest cell diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| polygon::diameter(&self.cell_polygon(c)))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| polygon::signed_area(&self.cell_polygon(c)))
            .sum()
    }

    /// `true` if every cell is a quadrilateral.
    pub fn is_quadrilateral(&self) -> bool {
        self.cells.iter().all(|c| c.len() == 4)
    }
}

/// Builds the edge table and orientation signs from raw vertex loops.
///
/// Clockwise loops are reversed (and listed in
/// [`PolygonalMesh::reoriented_cells`]).
pub fn build_topology(raw_vertices: Vec<Vec2>, raw_cells: Vec<Vec<usize>>) -> Result<PolygonalMesh> {
    let nv = raw_vertices.len();
    let mut cells = Vec::with_capacity(raw_cells.len());
    let mut reoriented = Vec::new();

    for (ci, loop_) in raw_cells.into_iter().enumerate() {
        if loop_.len() < 3 {
            return Err(VemError::Topology(format!("cell {ci} has fewer than 3 vertices")));
        }
        if let Some(&bad) = loop_.iter().find(|&&v| v >= nv) {
            return Err(VemError::Topology(format!("cell {ci} references vertex {bad} (only {nv} vertices)")));
        }
        let mut seen = loop_.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(VemError::Topology(format!("cell {ci} repeats a vertex")));
        }
        let poly: Vec<Vec2> = loop_.iter().map(|&v| raw_vertices[v]).collect();
        if !polygon::is_simple(&poly) {
            return Err(VemError::Topology(format!("cell {ci} is not a simple polygon")));
        }
        let area = polygon::signed_area(&poly);
        let scale = polygon::diameter(&poly);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(VemError::DegenerateCell { cell: ci, area });
        }
        let mut loop_ = loop_;
        if area < 0.0 {
            loop_.reverse();
            reoriented.push(ci);
        }
        cells.push(loop_);
    }

    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut cell_edges = Vec::with_capacity(cells.len());

    for (ci, loop_) in cells.iter().enumerate() {
        let n = loop_.len();
        let mut local = Vec::with_capacity(n);
        for j in 0..n {
            let a = loop_[j];
            let b = loop_[(j + 1) % n];
            let key = (a.min(b), a.max(b));
            let sign: i8 = if a < b { 1 } else { -1 };
            let idx = match lookup.get(&key) {
                Some(&e) => {
                    let edge = &mut edges[e];
                    if edge.cells.1.is_some() {
                        return Err(VemError::Topology(format!(
                            "edge ({}, {}) is shared by more than two cells",
                            key.0, key.1
                        )));
                    }
                    let first = edge.cells.0;
                    let first_sign = cell_edges_sign(&cell_edges, &local, first, ci, e);
                    if first_sign == sign {
                        return Err(VemError::Topology(format!(
                            "cells {first} and {ci} traverse edge ({}, {}) in the same direction",
                            key.0, key.1
                        )));
                    }
                    edge.cells.1 = Some(ci);
                    e
                }
                None => {
                    let t = raw_vertices[key.1] - raw_vertices[key.0];
                    let length = t.norm();
                    let e = edges.len();
                    edges.push(Edge {
                        verts: [key.0, key.1],
                        normal: Vec2::new(t.y, -t.x) / length,
                        length,
                        cells: (ci, None),
                    });
                    lookup.insert(key, e);
                    e
                }
            };
            local.push(CellEdge { edge: idx, sign });
        }
        cell_edges.push(local);
    }

    Ok(PolygonalMesh {
        vertices: raw_vertices,
        cells,
        edges,
        cell_edges,
        reoriented,
    })
}

fn cell_edges_sign(done: &[Vec<CellEdge>], current: &[CellEdge], cell: usize, ci: usize, edge: usize) -> i8 {
    let list: &[CellEdge] = if cell == ci { current } else { &done[cell] };
    list.iter().find(|ce| ce.edge == edge).map(|ce| ce.sign).unwrap_or(0)
}

/// Geometric quantities of one polygonal element, local edge `j` running from
/// vertex `j` to vertex `j+1` (counterclockwise).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub vertices: Vec<Vec2>,
    pub area: f64,
    pub centroid: Vec2,
    pub diameter: f64,
    pub edge_lengths: Vec<f64>,
    pub normals: Vec<Vec2>,
    pub midpoints: Vec<Vec2>,
}

impl ElementGeometry {
    /// Geometry of a counterclockwise polygon.
    pub fn from_polygon(poly: &[Vec2]) -> Result<Self> {
        let n = poly.len();
        if n < 3 {
            return Err(VemError::Geometry("polygon needs at least 3 vertices".into()));
        }
        let area = polygon::signed_area(poly);
        let diameter = polygon::diameter(poly);
        if !(area > 1e-14 * diameter * diameter) {
            return Err(VemError::DegenerateCell { cell: usize::MAX, area });
        }
        let mut edge_lengths = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut midpoints = Vec::with_capacity(n);
        for j in 0..n {
            let a = poly[j];
            let b = poly[(j + 1) % n];
            let t = b - a;
            let len = t.norm();
            edge_lengths.push(len);
            normals.push(Vec2::new(t.y, -t.x) / len);
            midpoints.push(0.5 * (a + b));
        }
        Ok(ElementGeometry {
            vertices: poly.to_vec(),
            area,
            centroid: polygon::centroid(poly),
            diameter,
            edge_lengths,
            normals,
            midpoints,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    /// Endpoints of local edge `j`.
    pub fn edge(&self, j: usize) -> (Vec2, Vec2) {
        (self.vertices[j], self.vertices[(j + 1) % self.n_edges()])
    }

    /// `(1 / |e|) ∫_e σ·n ds` for each local edge, with `n_points` Gauss points.
    pub fn normal_flux_averages(&self, field: impl Fn(Vec2) -> Vec2, n_points: usize) -> Vec<f64> {
        (0..self.n_edges())
            .map(|j| {
                let (a, b) = self.edge(j);
                let q = crate::polybasis::edge_gauss(a, b, n_points);
                q.integrate(|x| field(x).dot(&self.normals[j])) / self.edge_lengths[j]
            })
            .collect()
    }
}

/// Mesh-regularity statistics for the star-shapedness and edge-length
/// assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// `min_E min_e |e| / h_E`.
    pub gamma_edge: f64,
    /// `min_E ρ_E / h_E`, `ρ_E` the inradius of the kernel of `E`.
    pub gamma_star: f64,
    /// Cell attaining the smaller of the two ratios.
    pub worst_cell: usize,
}

impl std::fmt::Display for RegularityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "gamma_edge = {:.6}, gamma_star = {:.6}, worst cell = {}",
            self.gamma_edge, self.gamma_star, self.worst_cell
        )
    }
}

pub fn check_regularity(mesh: &PolygonalMesh) -> RegularityReport {
    let mut gamma_edge = f64::INFINITY;
    let mut gamma_star = f64::INFINITY;
    let mut worst_cell = 0;
    let mut worst = f64::INFINITY;
    for c in 0..mesh.n_cells() {
        let poly = mesh.cell_polygon(c);
        let h = polygon::diameter(&poly);
        let ge = mesh
            .cell_edges(c)
            .iter()
            .map(|ce| mesh.edges[ce.edge].length)
            .fold(f64::INFINITY, f64::min)
            / h;
        let gs = polygon::convex_inradius(&polygon::kernel(&poly)) / h;
        gamma_edge = gamma_edge.min(ge);
        gamma_star = gamma_star.min(gs);
        if ge.min(gs) < worst {
            worst = ge.min(gs);
            worst_cell = c;
        }
    }
    RegularityReport {
        gamma_edge,
        gamma_star,
        worst_cell,
    }
}
