//! Lloyd-relaxed Voronoi meshes of the unit square.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_topology, polygon, PolygonalMesh};
use crate::{Result, Vec2, VemError};

const WELD_TOL: f64 = 1e-9;
const MAX_RETRIES: u64 = 8;

fn unit_square() -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ]
}

/// Voronoi cell of `seeds[i]` clipped to the unit square.
fn voronoi_cell(seeds: &[Vec2], i: usize, order: &mut Vec<usize>) -> Vec<Vec2> {
    let s = seeds[i];
    order.clear();
    order.extend((0..seeds.len()).filter(|&j| j != i));
    order.sort_by(|&a, &b| (seeds[a] - s).norm_squared().total_cmp(&(seeds[b] - s).norm_squared()));
    let mut cell = unit_square();
    let mut radius = cell.iter().map(|v| (v - s).norm()).fold(0.0, f64::max);
    for &j in order.iter() {
        let d = seeds[j] - s;
        // A seed farther than twice the current radius cannot cut the cell.
        if d.norm() > 2.0 * radius {
            break;
        }
        let mid = 0.5 * (seeds[j] + s);
        cell = polygon::clip_halfplane(&cell, d, d.dot(&mid));
        if cell.len() < 3 {
            return cell;
        }
        radius = cell.iter().map(|v| (v - s).norm()).fold(0.0, f64::max);
    }
    cell
}

fn all_cells(seeds: &[Vec2]) -> Vec<Vec<Vec2>> {
    let mut order = Vec::with_capacity(seeds.len());
    (0..seeds.len()).map(|i| voronoi_cell(seeds, i, &mut order)).collect()
}

/// Merges coincident points across cells into a shared vertex list.
struct Welder {
    points: Vec<Vec2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Welder {
    fn key(p: Vec2) -> (i64, i64) {
        ((p.x / WELD_TOL).floor() as i64, (p.y / WELD_TOL).floor() as i64)
    }

    fn insert(&mut self, p: Vec2) -> usize {
        let (kx, ky) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.buckets.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = list.iter().find(|&&id| (self.points[id] - p).norm() <= WELD_TOL) {
                        return id;
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(id);
        id
    }
}

fn weld(polys: &[Vec<Vec2>]) -> Result<(Vec<Vec2>, Vec<Vec<usize>>)> {
    let mut w = Welder {
        points: Vec::new(),
        buckets: HashMap::new(),
    };
    let mut cells = Vec::with_capacity(polys.len());
    for (c, poly) in polys.iter().enumerate() {
        let mut ids: Vec<usize> = poly.iter().map(|&p| w.insert(p)).collect();
        ids.dedup();
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() < 3 {
            return Err(VemError::Generation(format!("Voronoi cell {c} collapsed")));
        }
        cells.push(ids);
    }
    Ok((w.points, cells))
}

fn on_square_boundary(p: Vec2) -> bool {
    p.x.abs() <= WELD_TOL || p.y.abs() <= WELD_TOL || (p.x - 1.0).abs() <= WELD_TOL || (p.y - 1.0).abs() <= WELD_TOL
}

fn boundary_is_valid(mesh: &PolygonalMesh) -> bool {
    mesh.edges().iter().filter(|e| e.is_boundary()).all(|e| {
        let a = mesh.vertices()[e.verts[0]];
        let b = mesh.vertices()[e.verts[1]];
        let m = 0.5 * (a + b);
        on_square_boundary(a) && on_square_boundary(b) && on_square_boundary(m)
    })
}

/// Voronoi mesh of the given seeds after `lloyd_iters` Lloyd steps.
pub fn voronoi_from_seeds(seeds: &[Vec2], lloyd_iters: usize) -> Result<PolygonalMesh> {
    if seeds.len() < 4 {
        return Err(VemError::InvalidParameter("Voronoi mesh needs at least 4 seeds".into()));
    }
    if seeds.iter().any(|s| !(s.x > 0.0 && s.x < 1.0 && s.y > 0.0 && s.y < 1.0)) {
        return Err(VemError::InvalidParameter("Voronoi seeds must lie inside (0,1)^2".into()));
    }
    let mut seeds = seeds.to_vec();
    let mut cells = all_cells(&seeds);
    for _ in 0..lloyd_iters {
        if let Some(c) = cells.iter().position(|c| c.len() < 3) {
            return Err(VemError::Generation(format!("Voronoi cell {c} is empty")));
        }
        seeds = cells.iter().map(|c| polygon::centroid(c)).collect();
        cells = all_cells(&seeds);
    }
    let (vertices, loops) = weld(&cells)?;
    let mesh = build_topology(vertices, loops)?;
    if !boundary_is_valid(&mesh) {
        return Err(VemError::Generation("Voronoi mesh has a boundary edge inside the domain".into()));
    }
    Ok(mesh)
}

/// Random Voronoi mesh with `n_seeds` uniformly distributed seeds drawn from
/// `rng_seed`. A degenerate draw is regenerated from a perturbed seed, a
/// bounded number of times.
pub fn random_voronoi(n_seeds: usize, lloyd_iters: usize, rng_seed: u64) -> Result<PolygonalMesh> {
    if n_seeds < 4 {
        return Err(VemError::InvalidParameter("random Voronoi mesh needs n_seeds >= 4".into()));
    }
    let mut last = None;
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let seeds: Vec<Vec2> = (0..n_seeds)
            .map(|_| Vec2::new(rng.random::<f64>(), rng.random::<f64>()))
            .map(|p| p.map(|c| c.clamp(1e-6, 1.0 - 1e-6)))
            .collect();
        match voronoi_from_seeds(&seeds, lloyd_iters) {
            Ok(m) => return Ok(m),
            Err(e) => last = Some(e),
        }
    }
    Err(VemError::Generation(format!(
        "no valid Voronoi mesh after {MAX_RETRIES} attempts: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}
