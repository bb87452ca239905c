//! Structured mesh families on the unit square.

use std::f64::consts::PI;

use rand::Rng;

use super::{build_topology, polygon, PolygonalMesh};
use crate::{Result, Vec2, VemError};

/// `nx × ny` quadrilateral grid whose vertex `(i, j)` sits at `place(i, j)`.
fn structured(nx: usize, ny: usize, place: impl Fn(usize, usize) -> Vec2) -> Result<PolygonalMesh> {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(place(i, j));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    for (c, cell) in cells.iter().enumerate() {
        let poly: Vec<Vec2> = cell.iter().map(|&v| vertices[v]).collect();
        if polygon::signed_area(&poly) <= 0.0 || !polygon::is_simple(&poly) {
            return Err(VemError::Generation(format!("cell {c} is inverted or self-intersecting")));
        }
    }
    build_topology(vertices, cells)
}

fn grid_point(i: usize, j: usize, nx: usize, ny: usize) -> Vec2 {
    Vec2::new(i as f64 / nx as f64, j as f64 / ny as f64)
}

/// `n × n` uniform squares.
pub fn cartesian(n: usize) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::InvalidParameter("cartesian: n must be >= 1".into()));
    }
    structured(n, n, |i, j| grid_point(i, j, n, n))
}

/// Cartesian grid with interior vertices on odd rows pushed along the
/// diagonal by `±2·delta/n` per axis (`+` on even columns, `−` on odd ones).
/// For `delta > 1/6` roughly half of the cells acquire a reflex vertex while
/// the rest stay convex; all cells remain simple for `delta < 1/2`.
pub fn convex_concave(n: usize, delta: f64) -> Result<PolygonalMesh> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(VemError::InvalidParameter("convex_concave: n must be even and >= 2".into()));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(VemError::InvalidParameter("convex_concave: delta must lie in [0, 0.5)".into()));
    }
    let shift = 2.0 * delta / n as f64;
    structured(n, n, |i, j| {
        let p = grid_point(i, j, n, n);
        let interior = i > 0 && i < n && j > 0 && j < n;
        if interior && j % 2 == 1 {
            let s = if i % 2 == 0 { shift } else { -shift };
            p + Vec2::new(s, s)
        } else {
            p
        }
    })
}

/// Smoothly distorted grid `(x, y) ↦ (x + a·s, y + a·s)`,
/// with `s = sin(2πx) sin(2πy)` and `a = amplitude / n`.
pub fn distorted(n: usize, amplitude: f64) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::InvalidParameter("distorted: n must be >= 1".into()));
    }
    if !(0.0..=0.3).contains(&amplitude) {
        return Err(VemError::InvalidParameter("distorted: amplitude must lie in [0, 0.3]".into()));
    }
    let a = amplitude / n as f64;
    structured(n, n, |i, j| {
        let p = grid_point(i, j, n, n);
        if i == 0 || j == 0 || i == n || j == n {
            return p;
        }
        let s = (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin();
        p + Vec2::new(a * s, a * s)
    })
}

/// `nx × ny` grid of parallelograms: interior vertical grid lines are sheared
/// by `x ↦ x + shear·y` with the shear direction flipping every row
/// (herringbone), so every interior cell is a parallelogram congruent to its
/// neighbours and the domain stays the unit square. The per-row offset is
/// `shear · min(1/nx, 1/ny)`.
pub fn rhomboidal(nx: usize, ny: usize, shear: f64) -> Result<PolygonalMesh> {
    if nx == 0 || ny == 0 {
        return Err(VemError::InvalidParameter("rhomboidal: nx, ny must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&shear) {
        return Err(VemError::InvalidParameter("rhomboidal: shear must lie in [0, 1)".into()));
    }
    let offset = shear * (1.0 / nx as f64).min(1.0 / ny as f64);
    structured(nx, ny, |i, j| {
        let p = grid_point(i, j, nx, ny);
        if i == 0 || i == nx || j % 2 == 0 {
            p
        } else {
            p + Vec2::new(offset, 0.0)
        }
    })
}

/// Base grid and refinement factor for the anisotropic rhomboidal sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropicParams {
    pub nx: usize,
    pub ny: usize,
    pub shear: f64,
    pub alpha: usize,
}

impl Default for AnisotropicParams {
    fn default() -> Self {
        AnisotropicParams {
            nx: 4,
            ny: 4,
            shear: 0.5,
            alpha: 2,
        }
    }
}

/// Largest mesh the anisotropic sequence is allowed to request.
const MAX_CELLS: usize = 1 << 26;

/// Step `step` of the anisotropic sequence: `nx·α^step × ny·α^(2·step)`.
pub fn refine_anisotropic(params: AnisotropicParams, step: u32) -> Result<PolygonalMesh> {
    let (nx, ny) = anisotropic_dims(params, step)?;
    rhomboidal(nx, ny, params.shear)
}

pub(crate) fn anisotropic_dims(params: AnisotropicParams, step: u32) -> Result<(usize, usize)> {
    let overflow = || VemError::SizeOverflow(format!("anisotropic step {step} with alpha {}", params.alpha));
    let fx = params.alpha.checked_pow(step).ok_or_else(overflow)?;
    let fy = params.alpha.checked_pow(2 * step).ok_or_else(overflow)?;
    let nx = params.nx.checked_mul(fx).ok_or_else(overflow)?;
    let ny = params.ny.checked_mul(fy).ok_or_else(overflow)?;
    match nx.checked_mul(ny) {
        Some(c) if c <= MAX_CELLS => Ok((nx, ny)),
        _ => Err(overflow()),
    }
}

/// A random simple quadrilateral: the unit square with corners jittered by
/// up to `jitter`, then rotated, scaled and translated. Retries until the
/// result has `min |e| / h ≥ min_gamma`.
pub fn random_quadrilateral<R: Rng + ?Sized>(rng: &mut R, jitter: f64, min_gamma: f64) -> Vec<Vec2> {
    loop {
        let base = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let scale: f64 = 10f64.powf(rng.random_range(-2.0..1.0));
        let shift = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (s, c) = theta.sin_cos();
        let quad: Vec<Vec2> = base
            .iter()
            .map(|&(x, y)| {
                let px = x + rng.random_range(-jitter..jitter);
                let py = y + rng.random_range(-jitter..jitter);
                Vec2::new(c * px - s * py, s * px + c * py) * scale + shift
            })
            .collect();
        if !polygon::is_simple(&quad) || polygon::signed_area(&quad) <= 0.0 {
            continue;
        }
        let h = polygon::diameter(&quad);
        let min_edge = (0..4).map(|j| (quad[(j + 1) % 4] - quad[j]).norm()).fold(f64::INFINITY, f64::min);
        if min_edge / h >= min_gamma && polygon::fan_point(&quad).is_some() {
            return quad;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reflex_count(m: &PolygonalMesh) -> usize {
        (0..m.n_cells())
            .filter(|&c| !polygon::reflex_vertices(&m.cell_polygon(c)).is_empty())
            .count()
    }

    #[test]
    fn cartesian_counts_and_size() {
        let m1 = cartesian(1).unwrap();
        assert_eq!((m1.n_cells(), m1.n_edges()), (1, 4));
        let m4 = cartesian(4).unwrap();
        assert_eq!((m4.n_cells(), m4.n_edges()), (16, 40));
        let m8 = cartesian(8).unwrap();
        assert!((m8.max_diameter() - 2f64.sqrt() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn convex_concave_examples() {
        assert_eq!(convex_concave(4, 0.0).unwrap(), cartesian(4).unwrap());
        let m = convex_concave(4, 0.2).unwrap();
        assert_eq!(m.n_cells(), 16);
        assert!(reflex_count(&m) >= 1);
        let c = cartesian(4).unwrap();
        for (a, b) in m.vertices().iter().zip(c.vertices()) {
            let on_boundary = b.x == 0.0 || b.y == 0.0 || b.x == 1.0 || b.y == 1.0;
            if on_boundary {
                assert_eq!(a, b);
            }
        }
        let fine = convex_concave(16, 0.2).unwrap();
        let frac = reflex_count(&fine) as f64 / fine.n_cells() as f64;
        assert!(frac > 0.3 && frac < 0.6, "concave fraction {frac}");
        assert!(convex_concave(3, 0.2).is_err());
        assert!(convex_concave(16, 0.49).is_ok());
    }

    #[test]
    fn distorted_examples() {
        assert_eq!(distorted(8, 0.0).unwrap(), cartesian(8).unwrap());
        let m = distorted(8, 0.1).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        // Vertex (2, 2) is (0.25, 0.25): sin(π/2)² = 1, moved by a = 0.1/8.
        let p = m.vertices()[2 * 9 + 2];
        let a = 0.1 / 8.0;
        assert!((p - Vec2::new(0.25 + a, 0.25 + a)).norm() < 1e-15);
    }

    #[test]
    fn rhomboidal_examples() {
        assert_eq!(rhomboidal(3, 5, 0.0).unwrap(), structured(3, 5, |i, j| grid_point(i, j, 3, 5)).unwrap());
        let m = rhomboidal(4, 4, 0.5).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        for c in 0..m.n_cells() {
            let (i, _) = (c % 4, c / 4);
            if i == 0 || i == 3 {
                continue;
            }
            let p = m.cell_polygon(c);
            assert!((polygon::signed_area(&p) - 1.0 / 16.0).abs() < 1e-15);
            // Opposite sides equal: parallelogram.
            assert!(((p[1] - p[0]) - (p[2] - p[3])).norm() < 1e-15);
        }
    }

    #[test]
    fn anisotropic_dims_grow() {
        let p = AnisotropicParams::default();
        assert_eq!(anisotropic_dims(p, 0).unwrap(), (4, 4));
        assert_eq!(anisotropic_dims(p, 2).unwrap(), (16, 64));
        assert!(matches!(anisotropic_dims(p, 40), Err(VemError::SizeOverflow(_))));
        let aspect = |s| {
            let (nx, ny) = anisotropic_dims(p, s).unwrap();
            ny as f64 / nx as f64
        };
        assert_eq!(aspect(3) / aspect(0), 8.0);
    }
}
