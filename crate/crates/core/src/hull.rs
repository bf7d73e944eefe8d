//! Three-dimensional convex hull (quickhull).
//!
//! Faces are triangles oriented counter-clockwise seen from outside. Adjacency
//! is kept as a map from directed edge to owning face; the neighbour across
//! `(a, b)` is the owner of `(b, a)`. Points within `eps` of a face plane count
//! as on it, so coplanar input produces a triangulated facet rather than
//! slivers.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type P3<T> = [T; 3];

pub fn sub<T: Real>(a: P3<T>, b: P3<T>) -> P3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot<T: Real>(a: P3<T>, b: P3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: P3<T>, b: P3<T>) -> P3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm<T: Real>(a: P3<T>) -> T {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct Face<T> {
    pub v: [usize; 3],
    /// Outward unit normal.
    pub normal: P3<T>,
    /// `normal . x = offset` on the face plane.
    pub offset: T,
    outside: Vec<usize>,
    alive: bool,
}

impl<T: Real> Face<T> {
    fn new(pts: &[P3<T>], v: [usize; 3]) -> Option<Self> {
        let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
        let len = norm(n);
        if !(len > T::zero()) {
            return None;
        }
        let normal = [n[0] / len, n[1] / len, n[2] / len];
        Some(Face {
            v,
            normal,
            offset: dot(normal, pts[v[0]]),
            outside: Vec::new(),
            alive: true,
        })
    }

    pub fn distance(&self, p: P3<T>) -> T {
        dot(self.normal, p) - self.offset
    }
}

#[derive(Debug, Clone)]
pub struct Hull<T> {
    pub faces: Vec<Face<T>>,
    /// Distance tolerance used for visibility decisions.
    pub eps: T,
}

impl<T: Real> Hull<T> {
    pub fn live_faces(&self) -> impl Iterator<Item = &Face<T>> {
        self.faces.iter().filter(|f| f.alive)
    }
}

/// Convex hull of `pts`; `rel_eps` scales the coplanarity tolerance by the point cloud extent.
pub fn quickhull<T: Real>(pts: &[P3<T>], rel_eps: T) -> Result<Hull<T>> {
    if pts.len() < 4 {
        return Err(Error::Structure("hull needs at least four points".into()));
    }
    let extent = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    let eps = rel_eps * T::one().max(extent);

    let simplex = initial_simplex(pts, eps)?;
    let mut faces: Vec<Face<T>> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let centroid = {
        let mut c = [T::zero(); 3];
        for &i in &simplex {
            for k in 0..3 {
                c[k] += pts[i][k] / T::lit(4.0);
            }
        }
        c
    };
    let [a, b, c, d] = simplex;
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let mut f = Face::new(pts, tri).ok_or_else(|| Error::Structure("degenerate initial simplex".into()))?;
        if f.distance(centroid) > T::zero() {
            f = Face::new(pts, [tri[0], tri[2], tri[1]]).unwrap();
        }
        add_face(&mut faces, &mut edges, f);
    }

    for (i, &p) in pts.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        assign(&mut faces, 0..4, i, p, eps);
    }

    let mut cursor = 0;
    loop {
        // next face with a non-empty outside set
        let mut found = None;
        for k in 0..faces.len() {
            let fi = (cursor + k) % faces.len();
            if faces[fi].alive && !faces[fi].outside.is_empty() {
                found = Some(fi);
                break;
            }
        }
        let Some(fi) = found else { break };
        cursor = fi;
        let eye = *faces[fi]
            .outside
            .iter()
            .max_by(|&&x, &&y| {
                faces[fi]
                    .distance(pts[x])
                    .partial_cmp(&faces[fi].distance(pts[y]))
                    .unwrap()
                    .then(y.cmp(&x))
            })
            .unwrap();
        let ep = pts[eye];

        // visible region by flood fill
        let mut visible = vec![fi];
        let mut is_visible: HashMap<usize, bool> = HashMap::from([(fi, true)]);
        let mut stack = vec![fi];
        while let Some(f) = stack.pop() {
            let v = faces[f].v;
            for e in 0..3 {
                let (x, y) = (v[e], v[(e + 1) % 3]);
                let nb = edges[&(y, x)];
                if is_visible.contains_key(&nb) {
                    continue;
                }
                let vis = faces[nb].distance(ep) > eps;
                is_visible.insert(nb, vis);
                if vis {
                    visible.push(nb);
                    stack.push(nb);
                }
            }
        }

        let mut horizon = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let (x, y) = (v[e], v[(e + 1) % 3]);
                if !is_visible[&edges[&(y, x)]] {
                    horizon.push((x, y));
                }
            }
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            orphans.append(&mut faces[f].outside);
            faces[f].alive = false;
            let v = faces[f].v;
            for e in 0..3 {
                edges.remove(&(v[e], v[(e + 1) % 3]));
            }
        }

        let first_new = faces.len();
        for (x, y) in horizon {
            match Face::new(pts, [x, y, eye]) {
                Some(f) => add_face(&mut faces, &mut edges, f),
                None => return Err(Error::Structure("degenerate hull face".into())),
            }
        }
        let new_range = first_new..faces.len();
        for i in orphans {
            if i != eye {
                assign(&mut faces, new_range.clone(), i, pts[i], eps);
            }
        }
    }
    Ok(Hull { faces, eps })
}

fn add_face<T: Real>(faces: &mut Vec<Face<T>>, edges: &mut HashMap<(usize, usize), usize>, f: Face<T>) {
    let idx = faces.len();
    for e in 0..3 {
        edges.insert((f.v[e], f.v[(e + 1) % 3]), idx);
    }
    faces.push(f);
}

fn assign<T: Real>(faces: &mut [Face<T>], range: std::ops::Range<usize>, i: usize, p: P3<T>, eps: T) {
    let mut best: Option<(usize, T)> = None;
    for fi in range {
        let d = faces[fi].distance(p);
        if d > eps && best.is_none_or(|(_, bd)| d > bd) {
            best = Some((fi, d));
        }
    }
    if let Some((fi, _)) = best {
        faces[fi].outside.push(i);
    }
}

fn initial_simplex<T: Real>(pts: &[P3<T>], eps: T) -> Result<[usize; 4]> {
    let degenerate = || Error::Structure("points are degenerate (coplanar or collinear)".into());
    // most distant pair among the axis extremes
    let mut ext = Vec::new();
    for k in 0..3 {
        let lo = (0..pts.len()).min_by(|&a, &b| pts[a][k].partial_cmp(&pts[b][k]).unwrap()).unwrap();
        let hi = (0..pts.len()).max_by(|&a, &b| pts[a][k].partial_cmp(&pts[b][k]).unwrap()).unwrap();
        ext.push(lo);
        ext.push(hi);
    }
    let mut best = (0, 0, T::zero());
    for &a in &ext {
        for &b in &ext {
            let d = norm(sub(pts[a], pts[b]));
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    let (a, b, dab) = best;
    if dab <= eps {
        return Err(degenerate());
    }
    let ab = sub(pts[b], pts[a]);
    let c = (0..pts.len())
        .max_by(|&x, &y| {
            norm(cross(ab, sub(pts[x], pts[a])))
                .partial_cmp(&norm(cross(ab, sub(pts[y], pts[a]))))
                .unwrap()
        })
        .unwrap();
    if norm(cross(ab, sub(pts[c], pts[a]))) / dab <= eps {
        return Err(degenerate());
    }
    let n = cross(ab, sub(pts[c], pts[a]));
    let nn = norm(n);
    let d = (0..pts.len())
        .max_by(|&x, &y| {
            dot(n, sub(pts[x], pts[a]))
                .abs()
                .partial_cmp(&dot(n, sub(pts[y], pts[a])).abs())
                .unwrap()
        })
        .unwrap();
    if dot(n, sub(pts[d], pts[a])).abs() / nn <= eps {
        return Err(degenerate());
    }
    Ok([a, b, c, d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn check_convex(h: &Hull<f64>, pts: &[P3<f64>]) {
        for f in h.live_faces() {
            for p in pts {
                assert!(f.distance(*p) <= 1e-9, "point outside face");
            }
        }
    }

    #[test]
    fn cube_corners() {
        let mut pts = vec![];
        for i in 0..8 {
            pts.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.push([0.5, 0.5, 0.5]);
        let h = quickhull(&pts, 1e-12).unwrap();
        assert_eq!(h.live_faces().count(), 12);
        check_convex(&h, &pts);
    }

    #[test]
    fn random_ball_is_closed_and_convex() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<P3<f64>> = (0..2000)
            .map(|_| {
                let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let r = norm(p);
                if r > 0.5 {
                    [p[0] / r, p[1] / r, p[2] / r]
                } else {
                    p
                }
            })
            .collect();
        let h = quickhull(&pts, 1e-12).unwrap();
        check_convex(&h, &pts);
        // closed triangulated sphere: F = 2V - 4
        let nf = h.live_faces().count();
        let mut verts: Vec<usize> = h.live_faces().flat_map(|f| f.v).collect();
        verts.sort();
        verts.dedup();
        assert_eq!(nf, 2 * verts.len() - 4);
    }

    #[test]
    fn coplanar_input_rejected() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(quickhull(&pts, 1e-12).is_err());
    }
}
