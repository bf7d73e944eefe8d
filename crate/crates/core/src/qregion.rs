//! Outer polytope of Bob's achievable conditional-success triples.
//!
//! For priors `p`, every Bob measurement gives `p . q <= P_MEM(p)`, so each
//! certified MEM bound is a supporting halfspace. Permuting the priors permutes
//! the states by a symmetry of the ensemble (the cyclic shift `V` or complex
//! conjugation), which leaves the MEM value unchanged; only one prior per
//! permutation orbit is solved and the bound is copied to the whole orbit.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::mem::solve_mem;
use crate::tol::TOL;

/// `normal . q <= offset`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace3 {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Halfspace3 {
    pub fn new(normal: [f64; 3], offset: f64) -> Self {
        Halfspace3 { normal, offset }
    }

    pub fn value(&self, q: [f64; 3]) -> f64 {
        self.normal[0] * q[0] + self.normal[1] * q[1] + self.normal[2] * q[2]
    }

    /// `offset - normal . q`; negative when `q` lies outside.
    pub fn slack(&self, q: [f64; 3]) -> f64 {
        self.offset - self.value(q)
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self.offset - other.offset).abs() <= tol && (0..3).all(|k| (self.normal[k] - other.normal[k]).abs() <= tol)
    }
}

/// The six faces of `[0, 1]^3`, in the order `q_k >= 0` then `q_k <= 1`.
pub fn box_faces() -> [Halfspace3; 6] {
    let e = |k: usize, s: f64| {
        let mut n = [0.0; 3];
        n[k] = s;
        n
    };
    [
        Halfspace3::new(e(0, -1.0), 0.0),
        Halfspace3::new(e(1, -1.0), 0.0),
        Halfspace3::new(e(2, -1.0), 0.0),
        Halfspace3::new(e(0, 1.0), 1.0),
        Halfspace3::new(e(1, 1.0), 1.0),
        Halfspace3::new(e(2, 1.0), 1.0),
    ]
}

pub const N_BOX_FACES: usize = 6;

#[derive(Debug, Clone, Default)]
pub struct QPolytope {
    /// Box faces first, then supporting halfspaces in canonical order.
    pub halfspaces: Vec<Halfspace3>,
    /// Filled by vertex enumeration.
    pub vertices: Vec<[f64; 3]>,
}

impl QPolytope {
    /// The unit cube alone.
    pub fn unit_box() -> Self {
        QPolytope {
            halfspaces: box_faces().to_vec(),
            vertices: Vec::new(),
        }
    }

    pub fn supporting(&self) -> &[Halfspace3] {
        &self.halfspaces[N_BOX_FACES.min(self.halfspaces.len())..]
    }

    pub fn n_supporting(&self) -> usize {
        self.supporting().len()
    }

    /// Smallest slack over all halfspaces.
    pub fn min_slack(&self, q: [f64; 3]) -> f64 {
        self.halfspaces.iter().map(|h| h.slack(q)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, q: [f64; 3], tol: f64) -> bool {
        self.min_slack(q) >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingScheme {
    Grid,
    Fibonacci,
}

impl fmt::Display for SamplingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingScheme::Grid => "grid",
            SamplingScheme::Fibonacci => "fibonacci",
        })
    }
}

impl std::str::FromStr for SamplingScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(SamplingScheme::Grid),
            "fibonacci" => Ok(SamplingScheme::Fibonacci),
            _ => Err(Error::Parse(format!("unknown sampling scheme '{s}'"))),
        }
    }
}

/// Sum in ascending order, so permuted inputs give bitwise equal results.
fn sorted_sum(v: [f64; 3]) -> f64 {
    let mut w = v;
    w.sort_by(f64::total_cmp);
    w[0] + w[1] + w[2]
}

/// Raises components to the clip floor and takes the excess from the rest in
/// proportion to their distance above it. Commutes with coordinate permutations.
fn clip_normalize(p: [f64; 3]) -> [f64; 3] {
    let floor = TOL.prior_clip;
    let s = sorted_sum(p);
    let y = p.map(|x| (x / s).max(floor));
    let excess = sorted_sum(y) - 1.0;
    let room = sorted_sum(y.map(|x| x - floor));
    if excess <= 0.0 || room <= 0.0 {
        return y;
    }
    y.map(|x| x - excess * (x - floor) / room)
}

/// Points on the probability simplex, all components at least about 1e-6.
///
/// `Grid` places `n` points along each edge of a triangular lattice, giving
/// `n (n + 1) / 2` points; `n = 1` is the centroid. `Fibonacci` returns the same
/// number of points from a golden-ratio sequence mapped area-uniformly onto the
/// triangle. Both always include the centroid, whose bound is the tightest
/// single constraint on the symmetric sum `q_1 + q_2 + q_3`.
pub fn sample_priors(n: usize, scheme: SamplingScheme) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        return Err(Error::Validation("need at least one prior per edge".into()));
    }
    if n == 1 {
        return Ok(vec![[1.0 / 3.0; 3]]);
    }
    let total = n * (n + 1) / 2;
    let mut pts = Vec::with_capacity(total);
    match scheme {
        SamplingScheme::Grid => {
            let k = (n - 1) as f64;
            for i in 0..n {
                for j in 0..(n - i) {
                    let l = n - 1 - i - j;
                    pts.push(clip_normalize([i as f64 / k, j as f64 / k, l as f64 / k]));
                }
            }
        }
        SamplingScheme::Fibonacci => {
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for i in 0..total {
                let u = (i as f64 + 0.5) / total as f64;
                let v = (i as f64 * phi).fract();
                let r = u.sqrt();
                pts.push(clip_normalize([1.0 - r, r * (1.0 - v), r * v]));
            }
        }
    }
    pts.push([1.0 / 3.0; 3]);
    Ok(sorted_unique(pts))
}

/// Sorts lexicographically and drops points within the dedup tolerance of an earlier one.
fn sorted_unique(mut pts: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    let tol = TOL.halfspace_dedup;
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut kept: Vec<[f64; 3]> = Vec::with_capacity(pts.len());
    for p in pts {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| p[0] - k[0] <= tol)
            .any(|k| (0..3).all(|j| (k[j] - p[j]).abs() <= tol));
        if !dup {
            kept.push(p);
        }
    }
    kept
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn permute(p: [f64; 3], s: [usize; 3]) -> [f64; 3] {
    [p[s[0]], p[s[1]], p[s[2]]]
}

fn canonical(p: [f64; 3]) -> [f64; 3] {
    let mut c = p;
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    c
}

/// Certified MEM bound for one prior; a convergence failure still carries a valid bound.
fn certified_offset(e: &CoherentEnsemble, p: [f64; 3]) -> Result<f64> {
    match solve_mem(e, p) {
        Ok(r) => Ok(r.certified_upper),
        Err(Error::Convergence { certified, .. }) => Ok(certified),
        Err(err) => Err(err),
    }
}

/// Certified supporting halfspace for each prior, one MEM per permutation orbit.
pub fn supporting_halfspaces(e: &CoherentEnsemble, priors_list: &[[f64; 3]]) -> Result<Vec<Halfspace3>> {
    let reps = sorted_unique(priors_list.iter().map(|&p| canonical(p)).collect());
    let offsets: Vec<f64> = reps
        .par_iter()
        .map(|&p| certified_offset(e, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(reps.into_iter().zip(offsets).map(|(p, b)| Halfspace3::new(p, b)).collect())
}

/// Adds every coordinate permutation, sorts canonically and removes near duplicates.
pub fn close_under_permutations(hs: &[Halfspace3]) -> Vec<Halfspace3> {
    let mut all: Vec<Halfspace3> = hs
        .iter()
        .flat_map(|h| PERMS.iter().map(move |&s| Halfspace3::new(permute(h.normal, s), h.offset)))
        .collect();
    all.sort_by(|a, b| {
        a.normal
            .partial_cmp(&b.normal)
            .unwrap()
            .then(a.offset.partial_cmp(&b.offset).unwrap())
    });
    // near duplicates can sit apart in lexicographic order, so look back over
    // every kept entry whose first coordinate is within tolerance
    let tol = TOL.halfspace_dedup;
    let mut kept: Vec<Halfspace3> = Vec::with_capacity(all.len());
    for h in all {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| h.normal[0] - k.normal[0] <= tol)
            .any(|k| k.close_to(&h, tol));
        if !dup {
            kept.push(h);
        }
    }
    kept
}

fn assemble(supporting: &[Halfspace3]) -> Result<QPolytope> {
    let closed = close_under_permutations(supporting);
    if closed.is_empty() {
        return Err(Error::Validation("polytope has no supporting halfspaces".into()));
    }
    let mut halfspaces = box_faces().to_vec();
    halfspaces.extend(closed);
    Ok(QPolytope {
        halfspaces,
        vertices: Vec::new(),
    })
}

/// Outer polytope from certified MEM bounds at each prior in `priors_list`.
pub fn build_qpolytope(e: &CoherentEnsemble, priors_list: &[[f64; 3]]) -> Result<QPolytope> {
    if priors_list.is_empty() {
        return Err(Error::Validation("priors list is empty".into()));
    }
    assemble(&supporting_halfspaces(e, priors_list)?)
}

/// On-disk cache of orbit representatives, one `p1,p2,p3,offset` row each.
#[derive(Debug, Clone)]
pub struct HalfspaceCache {
    dir: PathBuf,
}

impl HalfspaceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        HalfspaceCache { dir: dir.into() }
    }

    pub fn path_for(&self, mean_photon: f64, scheme: SamplingScheme, n: usize) -> PathBuf {
        // hex bits keep the key exact without decimal rounding questions
        self.dir
            .join(format!("halfspaces_{:016x}_{scheme}_{n}.csv", mean_photon.to_bits()))
    }

    pub fn load(&self, mean_photon: f64, scheme: SamplingScheme, n: usize) -> Result<Option<Vec<Halfspace3>>> {
        let path = self.path_for(mean_photon, scheme, n);
        if !path.exists() {
            return Ok(None);
        }
        read_halfspaces(&path).map(Some)
    }

    pub fn store(&self, mean_photon: f64, scheme: SamplingScheme, n: usize, hs: &[Halfspace3]) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(mean_photon, scheme, n);
        let tmp = path.with_extension("csv.tmp");
        {
            let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
            writeln!(f, "p1,p2,p3,offset")?;
            for h in hs {
                // `{:?}` is the shortest representation that parses back to the same bits
                writeln!(f, "{:?},{:?},{:?},{:?}", h.normal[0], h.normal[1], h.normal[2], h.offset)?;
            }
        }
        fs::rename(tmp, path)?;
        Ok(())
    }
}

fn read_halfspaces(path: &Path) -> Result<Vec<Halfspace3>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|err| Error::Parse(format!("{}:{}: {err}", path.display(), lineno + 1)))?;
        if vals.len() != 4 {
            return Err(Error::Parse(format!("{}:{}: expected 4 fields", path.display(), lineno + 1)));
        }
        out.push(Halfspace3::new([vals[0], vals[1], vals[2]], vals[3]));
    }
    Ok(out)
}

/// Samples priors and builds the polytope, going through `cache` when given.
pub fn build_sampled(
    e: &CoherentEnsemble,
    n: usize,
    scheme: SamplingScheme,
    cache: Option<&HalfspaceCache>,
) -> Result<QPolytope> {
    if let Some(c) = cache {
        if let Some(hs) = c.load(e.mean_photon, scheme, n)? {
            return assemble(&hs);
        }
    }
    let priors = sample_priors(n, scheme)?;
    let hs = supporting_halfspaces(e, &priors)?;
    if let Some(c) = cache {
        c.store(e.mean_photon, scheme, n, &hs)?;
    }
    assemble(&hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::{srm_for, Povm};
    use rand::SeedableRng;

    fn ens(nbar: f64) -> CoherentEnsemble {
        CoherentEnsemble::equiprobable(nbar).unwrap()
    }

    #[test]
    fn grid_sampling() {
        assert_eq!(sample_priors(1, SamplingScheme::Grid).unwrap(), vec![[1.0 / 3.0; 3]]);
        let pts = sample_priors(3, SamplingScheme::Grid).unwrap();
        assert_eq!(pts.len(), 7);
        assert!(pts.contains(&[1.0 / 3.0; 3]));
        let eps = TOL.prior_clip;
        assert!(pts
            .iter()
            .any(|p| (p[0] - (1.0 - 2.0 * eps)).abs() < 1e-12 && (p[1] - eps).abs() < 1e-12));
        for n in [1, 2, 5, 17, 40] {
            for scheme in [SamplingScheme::Grid, SamplingScheme::Fibonacci] {
                let pts = sample_priors(n, scheme).unwrap();
                assert_eq!(pts, sample_priors(n, scheme).unwrap());
                for p in &pts {
                    assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    assert!(p.iter().all(|&x| x > 0.0));
                }
            }
        }
        assert_eq!(sample_priors(141, SamplingScheme::Grid).unwrap().len(), 10012);
        assert_eq!(sample_priors(4, SamplingScheme::Grid).unwrap().len(), 10);
        assert!(sample_priors(0, SamplingScheme::Grid).is_err());
    }

    #[test]
    fn symmetric_grid_is_already_closed() {
        for n in [2, 3, 40, 141] {
            let pts = sample_priors(n, SamplingScheme::Grid).unwrap();
            let hs: Vec<Halfspace3> = pts.iter().map(|&p| Halfspace3::new(p, 1.0)).collect();
            assert_eq!(close_under_permutations(&hs).len(), pts.len(), "n {n}");
        }
    }

    #[test]
    fn vacuum_offsets_are_max_prior() {
        let p = build_qpolytope(&ens(0.0), &sample_priors(6, SamplingScheme::Grid).unwrap()).unwrap();
        for h in p.supporting() {
            let maxp = h.normal.iter().cloned().fold(0.0, f64::max);
            assert!((h.offset - maxp).abs() < 1e-7, "{h:?}");
            assert!(h.offset >= maxp - 1e-12);
        }
    }

    #[test]
    fn centroid_gives_single_plane() {
        let e = ens(1.0);
        let p = build_qpolytope(&e, &[[1.0 / 3.0; 3]]).unwrap();
        assert_eq!(p.halfspaces.len(), 7);
        let h = p.supporting()[0];
        assert_eq!(h.normal, [1.0 / 3.0; 3]);
        assert!((h.offset - srm_for(&e.split)).abs() < 1e-7);
    }

    #[test]
    fn unit_points_feasible_and_closed() {
        let e = ens(1.3);
        let p = build_qpolytope(&e, &sample_priors(7, SamplingScheme::Fibonacci).unwrap()).unwrap();
        for k in 0..3 {
            let mut q = [0.0; 3];
            q[k] = 1.0;
            assert!(p.contains(q, 0.0));
        }
        for h in p.supporting() {
            for s in PERMS {
                let n = permute(h.normal, s);
                assert!(p.supporting().iter().any(|g| g.close_to(&Halfspace3::new(n, h.offset), 1e-9)));
            }
        }
        assert!(build_qpolytope(&e, &[]).is_err());
    }

    #[test]
    fn orbit_sharing_matches_direct_solves() {
        let e = ens(0.9);
        let p = [0.5, 0.3, 0.2];
        let base = certified_offset(&e, p).unwrap();
        for s in PERMS {
            let direct = certified_offset(&e, permute(p, s)).unwrap();
            assert!((direct - base).abs() < 1e-8);
        }
    }

    #[test]
    fn random_bob_measurements_inside() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for nbar in [0.3, 1.0, 2.0] {
            let e = ens(nbar);
            let p = build_qpolytope(&e, &sample_priors(9, SamplingScheme::Grid).unwrap()).unwrap();
            for _ in 0..100 {
                let b = Povm::random(&mut rng, 3, 3).unwrap();
                let q: [f64; 3] = std::array::from_fn(|m| b.elements[m].quad_form(&e.state_vectors()[m]));
                assert!(p.contains(q, 1e-9), "q {q:?} slack {}", p.min_slack(q));
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = HalfspaceCache::new(dir.path().join("nested"));
        let e = ens(0.7);
        let a = build_sampled(&e, 5, SamplingScheme::Grid, Some(&cache)).unwrap();
        assert!(cache.path_for(0.7, SamplingScheme::Grid, 5).exists());
        let b = build_sampled(&e, 5, SamplingScheme::Grid, Some(&cache)).unwrap();
        assert_eq!(a.halfspaces, b.halfspaces);
        let c = build_sampled(&e, 5, SamplingScheme::Grid, None).unwrap();
        assert_eq!(a.halfspaces, c.halfspaces);
    }
}
