//! Planar polygon utilities: area, centroid, simplicity, half-plane clipping
//! and the kernel (set of points from which the whole polygon is visible).

use crate::Vec2;

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Shoelace signed area; positive for counterclockwise loops.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let o = poly[0];
    let mut acc = 0.0;
    for i in 1..n.saturating_sub(1) {
        acc += cross(poly[i] - o, poly[i + 1] - o);
    }
    0.5 * acc
}

/// Area centroid. Falls back to the vertex mean for zero-area input.
pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    // Shift to the first vertex to limit cancellation.
    let o = poly[0];
    let mut a = 0.0;
    let mut c = Vec2::zeros();
    for i in 0..n {
        let p = poly[i] - o;
        let q = poly[(i + 1) % n] - o;
        let w = cross(p, q);
        a += w;
        c += (p + q) * w;
    }
    if a.abs() < f64::MIN_POSITIVE {
        return poly.iter().fold(Vec2::zeros(), |s, p| s + p) / n as f64;
    }
    o + c / (3.0 * a)
}

/// Maximum pairwise vertex distance.
pub fn diameter(poly: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// `true` when no two non-adjacent edges touch and adjacent edges do not fold
/// back onto each other.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a1 = poly[i];
        let a2 = poly[(i + 1) % n];
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let b1 = poly[j];
            let b2 = poly[(j + 1) % n];
            if adjacent {
                // Shared vertex; reject only a fold (collinear overlap).
                let (shared, other_a, other_b) = if j == i + 1 { (a2, a1, b2) } else { (a1, a2, b1) };
                let u = other_a - shared;
                let v = other_b - shared;
                if cross(u, v) == 0.0 && u.dot(&v) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Indices of reflex vertices of a counterclockwise polygon.
pub fn reflex_vertices(poly: &[Vec2]) -> Vec<usize> {
    let n = poly.len();
    (0..n)
        .filter(|&i| {
            let prev = poly[(i + n - 1) % n];
            let next = poly[(i + 1) % n];
            orient(prev, poly[i], next) < 0.0
        })
        .collect()
}

/// Keeps the part of a convex polygon where `normal · x <= offset`.
pub fn clip_halfplane(poly: &[Vec2], normal: Vec2, offset: f64) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = normal.dot(&p) - offset;
        let dq = normal.dot(&q) - offset;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Inward half-planes `n·x <= c` of a counterclockwise polygon, one per edge,
/// with `n` the unit outward normal.
pub fn edge_halfplanes(poly: &[Vec2]) -> Vec<(Vec2, f64)> {
    let n = poly.len();
    (0..n)
        .filter_map(|i| {
            let a = poly[i];
            let d = poly[(i + 1) % n] - a;
            let len = d.norm();
            (len > 0.0).then(|| {
                let nrm = Vec2::new(d.y, -d.x) / len;
                (nrm, nrm.dot(&a))
            })
        })
        .collect()
}

/// Kernel of a counterclockwise simple polygon as a convex polygon. Empty
/// (or degenerate) when the polygon is not star-shaped.
pub fn kernel(poly: &[Vec2]) -> Vec<Vec2> {
    if reflex_vertices(poly).is_empty() {
        return poly.to_vec();
    }
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut k = vec![lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)];
    for (nrm, c) in edge_halfplanes(poly) {
        k = clip_halfplane(&k, nrm, c);
        if k.len() < 3 {
            return Vec::new();
        }
    }
    k
}

/// Radius of the largest disc inside a convex polygon, by bisection on the
/// inward offset distance.
pub fn convex_inradius(convex: &[Vec2]) -> f64 {
    if convex.len() < 3 || signed_area(convex) <= 0.0 {
        return 0.0;
    }
    let planes = edge_halfplanes(convex);
    let feasible = |r: f64| {
        let mut p = convex.to_vec();
        for &(nrm, c) in &planes {
            p = clip_halfplane(&p, nrm, c - r);
            if p.len() < 3 {
                return false;
            }
        }
        true
    };
    let mut lo = 0.0;
    let mut hi = 0.5 * diameter(convex);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A point strictly inside the kernel suitable as a triangle-fan apex: the
/// centroid when it sees every edge, otherwise the kernel centroid.
pub fn fan_point(poly: &[Vec2]) -> Option<Vec2> {
    let c = centroid(poly);
    let scale = diameter(poly);
    let planes = edge_halfplanes(poly);
    let margin = 1e-10 * scale;
    if planes.iter().all(|&(n, off)| n.dot(&c) - off < -margin) {
        return Some(c);
    }
    let k = kernel(poly);
    if k.len() < 3 || signed_area(&k) <= margin * scale {
        return None;
    }
    let kc = centroid(&k);
    planes
        .iter()
        .all(|&(n, off)| n.dot(&kc) - off < -margin)
        .then_some(kc)
}
