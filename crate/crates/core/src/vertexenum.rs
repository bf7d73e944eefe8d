//! Vertices of a bounded intersection of halfspaces in three dimensions.
//!
//! The main path uses polar duality. With an interior point `q0` moved to the
//! origin, the halfspace `a . y <= s` (with `s > 0`) becomes the point `a / s`.
//! Each facet `n . x = c` of the hull of these points corresponds to the vertex
//! `q0 + n / c`, and the three points spanning it give the planes that meet
//! there. Vertices are recomputed from those planes, not from the facet normal,
//! so each one solves its own 3-plane system exactly.

use crate::error::{Error, Result};
use crate::hull::{cross, dot, quickhull};
use crate::lp::{self, Cut};
use crate::qregion::{Halfspace3, QPolytope};
use crate::tol::TOL;

#[derive(Debug, Clone, Default)]
pub struct VertexSet {
    /// Sorted lexicographically.
    pub points: Vec<[f64; 3]>,
    /// Indices into the polytope's halfspaces of three planes meeting at each point.
    pub generating_triples: Vec<[usize; 3]>,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest amount by which any point violates any halfspace.
    pub fn max_violation(&self, hs: &[Halfspace3]) -> f64 {
        self.points
            .iter()
            .flat_map(|&q| hs.iter().map(move |h| -h.slack(q)))
            .fold(0.0, f64::max)
    }
}

/// Intersection of the three planes `a_i . q = b_i`, or `None` if they are nearly dependent.
pub fn intersect3(h: [&Halfspace3; 3], min_det: f64) -> Option<[f64; 3]> {
    let [a, b, c] = h.map(|x| x.normal);
    let bc = cross(b, c);
    let det = dot(a, bc);
    if det.abs() < min_det {
        return None;
    }
    let ca = cross(c, a);
    let ab = cross(a, b);
    Some(std::array::from_fn(|k| (h[0].offset * bc[k] + h[1].offset * ca[k] + h[2].offset * ab[k]) / det))
}

fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    (0..3).all(|k| (a[k] - b[k]).abs() <= tol)
}

/// Sorts and merges points closer than `tol` (componentwise), keeping the first of each cluster.
fn dedup_points(mut pts: Vec<([f64; 3], [usize; 3])>, tol: f64) -> VertexSet {
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut kept: Vec<([f64; 3], [usize; 3])> = Vec::with_capacity(pts.len());
    for (p, t) in pts {
        // kept is sorted by first coordinate, so only a short tail can be within tol
        let dup = kept
            .iter()
            .rev()
            .take_while(|(k, _)| p[0] - k[0] <= tol)
            .any(|(k, _)| close(*k, p, tol));
        if !dup {
            kept.push((p, t));
        }
    }
    VertexSet {
        points: kept.iter().map(|x| x.0).collect(),
        generating_triples: kept.iter().map(|x| x.1).collect(),
    }
}

/// Center and radius of the largest ball inside the polytope.
pub fn chebyshev_center(hs: &[Halfspace3]) -> Result<([f64; 3], f64)> {
    // variables (q, r); maximize r subject to a.q + r |a| <= b and r <= 1
    let mut cuts: Vec<Cut<f64>> = hs
        .iter()
        .map(|h| {
            let n = dot(h.normal, h.normal).sqrt();
            Cut::new(vec![-h.normal[0], -h.normal[1], -h.normal[2], -n], -h.offset)
        })
        .collect();
    cuts.push(Cut::new(vec![0.0, 0.0, 0.0, -1.0], -1.0));
    let sol = lp::minimize(&[0.0, 0.0, 0.0, -1.0], &cuts)?;
    Ok(([sol.x[0], sol.x[1], sol.x[2]], sol.x[3]))
}

/// Vertices by the dual convex hull; also stores them in `p.vertices`.
pub fn enumerate_vertices(p: &mut QPolytope) -> Result<VertexSet> {
    let vs = hull_vertices(&p.halfspaces)?;
    p.vertices = vs.points.clone();
    Ok(vs)
}

pub fn hull_vertices(hs: &[Halfspace3]) -> Result<VertexSet> {
    let (q0, r) = chebyshev_center(hs)?;
    if !(r > 1e-9) {
        return Err(Error::Structure(format!("polytope has empty interior (inradius {r:e})")));
    }
    let dual: Vec<[f64; 3]> = hs
        .iter()
        .map(|h| {
            let s = h.slack(q0);
            h.normal.map(|a| a / s)
        })
        .collect();
    let hull = quickhull(&dual, 1e-12)?;
    let mut pts = Vec::new();
    for f in hull.live_faces() {
        if !(f.offset > hull.eps) {
            return Err(Error::Structure("halfspace intersection is unbounded".into()));
        }
        let mut t = f.v;
        t.sort_unstable();
        let q = intersect3([&hs[t[0]], &hs[t[1]], &hs[t[2]]], 0.0)
            .ok_or_else(|| Error::Structure("singular vertex system".into()))?;
        pts.push((q, t));
    }
    Ok(dedup_points(pts, TOL.vertex))
}

/// Brute force over all plane triples; cubic in the number of halfspaces.
pub fn brute_force_vertices(hs: &[Halfspace3]) -> VertexSet {
    let n = hs.len();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if let Some(q) = intersect3([&hs[i], &hs[j], &hs[k]], TOL.triple_det) {
                    if hs.iter().all(|h| h.slack(q) >= -TOL.vertex) {
                        pts.push((q, [i, j, k]));
                    }
                }
            }
        }
    }
    dedup_points(pts, TOL.vertex)
}

/// True when the two point sets match as unordered sets within `tol`.
pub fn same_point_set(a: &[[f64; 3]], b: &[[f64; 3]], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| b.iter().any(|q| close(*p, *q, tol)))
        && b.iter().all(|p| a.iter().any(|q| close(*p, *q, tol)))
}
