//! Dual bound on sequential success: minimize `Tr X` subject to
//! `X >= H_q = sum_m w q_m |b_m><b_m|` for every vertex `q` of the outer polytope.
//!
//! Solved by cutting planes. Each round solves a small LP over the working
//! cuts, scans the vertex constraints for the largest eigenvalue of `H_q - X`,
//! and adds `u^+ X u >= u^+ H_q u` for the top eigenvector `u` of the worst
//! offenders. Any `X` whatsoever yields the certified bound
//! `Tr X + dim * max(0, max_q lambda_max(H_q - X))`.
//!
//! In the symmetric mode `X` is diagonal in the basis where the cyclic shift is
//! diagonal, which loses nothing when the vertex set is permutation closed.

use std::fmt;

use rayon::prelude::*;

use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::lp::{self, Cut};
use crate::smallmat::{max_eig, CVec};
use crate::tol::TOL;
use crate::vertexenum::VertexSet;
use crate::{Complex64, HermitianMatrix};

/// Weight of each state in the constraint operators (equal priors).
pub const EQUAL_WEIGHT: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DpMode {
    /// Diagonal `X`, three variables.
    Symmetric,
    /// Full Hermitian `X`, nine variables.
    General,
}

impl fmt::Display for DpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DpMode::Symmetric => "symmetric",
            DpMode::General => "general",
        })
    }
}

/// The operator a single vertex forces `X` to dominate.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub vertex: [f64; 3],
    pub h: HermitianMatrix,
}

impl ConstraintMatrix {
    pub fn new(states: &[CVec<f64>; 3], vertex: [f64; 3], weight: f64) -> Self {
        let mut h = HermitianMatrix::zeros(states[0].len());
        for m in 0..3 {
            h += &HermitianMatrix::scaled_outer(weight * vertex[m], &states[m]);
        }
        ConstraintMatrix { vertex, h }
    }

    /// `(lambda_max(H - X), top eigenvector)`.
    pub fn violation(&self, x: &HermitianMatrix) -> Result<(f64, CVec<f64>)> {
        max_eig(&(&self.h - x))
    }
}

pub fn constraint_matrices(e: &CoherentEnsemble, vertices: &VertexSet, weight: f64) -> Vec<ConstraintMatrix> {
    vertices
        .points
        .iter()
        .map(|&q| ConstraintMatrix::new(e.state_vectors(), q, weight))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub x: HermitianMatrix,
    pub trace_value: f64,
    /// `max_q lambda_max(H_q - X)` from the final full scan; nonpositive means strictly feasible.
    pub max_violation: f64,
    /// `trace_value + dim * max(0, max_violation)`.
    pub certified_upper: f64,
    pub iterations: usize,
    pub n_cuts: usize,
    pub mode: DpMode,
}

/// Upper bound on sequential success from any Hermitian `x`.
pub fn certify(e: &CoherentEnsemble, x: &HermitianMatrix, vertices: &VertexSet) -> Result<f64> {
    certify_weighted(e, x, vertices, EQUAL_WEIGHT)
}

pub fn certify_weighted(e: &CoherentEnsemble, x: &HermitianMatrix, vertices: &VertexSet, weight: f64) -> Result<f64> {
    let cons = constraint_matrices(e, vertices, weight);
    let delta = max_violation(&cons, x)?.max(0.0);
    Ok(x.trace() + x.dim() as f64 * delta)
}

/// `max_q lambda_max(H_q - X)` over all constraints.
fn max_violation(cons: &[ConstraintMatrix], x: &HermitianMatrix) -> Result<f64> {
    let all: Vec<f64> = cons
        .par_iter()
        .map(|c| c.violation(x).map(|(l, _)| l))
        .collect::<Result<_>>()?;
    Ok(all.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

struct Formulation {
    mode: DpMode,
    dim: usize,
}

impl Formulation {
    fn matrix(&self, x: &[f64]) -> HermitianMatrix {
        match self.mode {
            DpMode::Symmetric => HermitianMatrix::from_diag(x),
            DpMode::General => HermitianMatrix::from_coords(self.dim, x),
        }
    }

    /// `u^+ X u >= rhs` as a linear cut.
    fn cut(&self, u: &[Complex64], rhs: f64) -> Cut<f64> {
        let coeffs = match self.mode {
            DpMode::Symmetric => u.iter().map(|z| z.norm_sqr()).collect(),
            DpMode::General => HermitianMatrix::outer(u).trace_functional(),
        };
        Cut::new(coeffs, rhs)
    }

    fn objective(&self) -> Vec<f64> {
        match self.mode {
            DpMode::Symmetric => vec![1.0; self.dim],
            DpMode::General => HermitianMatrix::identity(self.dim).trace_functional(),
        }
    }

    /// Cuts implied by `X >= 0`: the diagonal, and in the general mode every 2x2 direction.
    fn psd_cuts(&self) -> Vec<Cut<f64>> {
        let d = self.dim;
        let zero = Complex64::new(0.0, 0.0);
        let basis = |j: usize, a: Complex64, k: usize, b: Complex64| {
            let mut u = vec![zero; d];
            u[j] += a;
            u[k] += b;
            u
        };
        let one = Complex64::new(1.0, 0.0);
        let mut cuts: Vec<Cut<f64>> = (0..d).map(|j| self.cut(&basis(j, one, j, zero), 0.0)).collect();
        if self.mode == DpMode::General {
            for j in 0..d {
                for k in (j + 1)..d {
                    for s in [one, -one, Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
                        cuts.push(self.cut(&basis(j, one, k, s), 0.0));
                    }
                }
            }
        }
        cuts
    }
}

/// Most violators added per round.
const CUTS_PER_ROUND: usize = 12;
/// Constraints evaluated per parallel batch in partial scans.
const SCAN_CHUNK: usize = 2048;
const MAX_ROUNDS: usize = 20_000;

pub fn solve_dp_prime(e: &CoherentEnsemble, vertices: &VertexSet, mode: DpMode) -> Result<DualSolution> {
    solve_dp_prime_weighted(e, vertices, mode, EQUAL_WEIGHT)
}

/// Cutting-plane solve with per-state weight `weight` in the constraint operators.
pub fn solve_dp_prime_weighted(
    e: &CoherentEnsemble,
    vertices: &VertexSet,
    mode: DpMode,
    weight: f64,
) -> Result<DualSolution> {
    if vertices.is_empty() {
        return Err(Error::Validation("vertex set is empty".into()));
    }
    let cons = constraint_matrices(e, vertices, weight);
    // tolerances follow the constraint scale so the solve is equivariant under reweighting
    let scale = weight / EQUAL_WEIGHT;
    let viol_tol = TOL.dp_violation * scale;
    let obj_tol = TOL.dp_objective_change * scale;
    let f = Formulation { mode, dim: cons[0].h.dim() };
    let c = f.objective();

    // heavy constraints first: they are the likeliest to be violated
    let mut order: Vec<usize> = (0..cons.len()).collect();
    order.sort_by(|&a, &b| cons[b].h.trace().partial_cmp(&cons[a].h.trace()).unwrap().then(a.cmp(&b)));

    let mut cuts = f.psd_cuts();
    for (m, v) in e.state_vectors().iter().enumerate() {
        let mut q = [0.0; 3];
        q[m] = 1.0;
        let h = ConstraintMatrix::new(e.state_vectors(), q, weight).h;
        cuts.push(f.cut(v, h.quad_form(v)));
    }

    let mut prev_obj = f64::NEG_INFINITY;
    let mut best_obj = f64::NEG_INFINITY;
    let mut stalled = 0;
    let mut best_cert = f64::INFINITY;
    for round in 1..=MAX_ROUNDS {
        let sol = lp::minimize(&c, &cuts)?;
        let x = f.matrix(&sol.x);
        let full = round % 10 == 0;

        let mut found: Vec<(f64, usize, CVec<f64>)> = Vec::new();
        let mut scanned_all = true;
        for chunk in order.chunks(SCAN_CHUNK) {
            let part: Vec<(f64, usize, CVec<f64>)> = chunk
                .par_iter()
                .map(|&i| cons[i].violation(&x).map(|(l, u)| (l, i, u)))
                .collect::<Result<_>>()?;
            found.extend(part);
            if !full && found.iter().filter(|v| v.0 > 10.0 * viol_tol).count() >= CUTS_PER_ROUND {
                scanned_all = found.len() == cons.len();
                break;
            }
        }
        let worst = found.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        if scanned_all {
            let cert = x.trace() + f.dim as f64 * worst.max(0.0);
            best_cert = best_cert.min(cert);
            if worst <= viol_tol && (sol.objective - prev_obj).abs() <= obj_tol {
                return Ok(DualSolution {
                    trace_value: x.trace(),
                    certified_upper: cert,
                    x,
                    max_violation: worst,
                    iterations: round,
                    n_cuts: cuts.len(),
                    mode,
                });
            }
        }

        if sol.objective > best_obj + 1e-13 * scale {
            best_obj = sol.objective;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= TOL.dp_stall_rounds && worst > viol_tol {
                return Err(Error::Stall {
                    rounds: round,
                    violation: worst,
                    certified: best_cert.min(x.trace() + f.dim as f64 * worst.max(0.0)),
                });
            }
        }
        prev_obj = sol.objective;

        found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut added: Vec<Cut<f64>> = Vec::new();
        for (l, i, u) in found {
            if l <= 0.0 || added.len() >= CUTS_PER_ROUND {
                break;
            }
            let cut = f.cut(&u, cons[i].h.quad_form(&u));
            let dup = added
                .iter()
                .any(|a| (a.rhs - cut.rhs).abs() <= 1e-12 && a.coeffs.iter().zip(&cut.coeffs).all(|(p, q)| (p - q).abs() <= 1e-12));
            if !dup {
                added.push(cut);
            }
        }
        cuts.extend(added);
    }
    Err(Error::Stall {
        rounds: MAX_ROUNDS,
        violation: f64::NAN,
        certified: best_cert,
    })
}

/// Solves both modes; returns `(symmetric trace, general trace)`.
pub fn symmetrize_check(e: &CoherentEnsemble, vertices: &VertexSet) -> Result<(f64, f64)> {
    let s = solve_dp_prime(e, vertices, DpMode::Symmetric)?.trace_value;
    let g = solve_dp_prime(e, vertices, DpMode::General)?.trace_value;
    if (s - g).abs() > 10.0 * TOL.mode_agreement {
        return Err(Error::Structure(format!(
            "symmetric ({s}) and general ({g}) dual values disagree"
        )));
    }
    Ok((s, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::symmetry_power;
    use crate::qregion::{build_qpolytope, sample_priors, SamplingScheme};
    use crate::smallmat::is_psd;
    use crate::vertexenum::enumerate_vertices;

    fn ens(nbar: f64) -> CoherentEnsemble {
        CoherentEnsemble::equiprobable(nbar).unwrap()
    }

    fn vertices(e: &CoherentEnsemble, n: usize) -> VertexSet {
        let mut p = build_qpolytope(e, &sample_priors(n, SamplingScheme::Grid).unwrap()).unwrap();
        enumerate_vertices(&mut p).unwrap()
    }

    fn units() -> VertexSet {
        VertexSet {
            points: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            generating_triples: vec![[0, 0, 0]; 3],
        }
    }

    #[test]
    fn vacuum_gives_one_third() {
        let e = ens(0.0);
        let v = vertices(&e, 5);
        for mode in [DpMode::Symmetric, DpMode::General] {
            let s = solve_dp_prime(&e, &v, mode).unwrap();
            assert!((s.trace_value - 1.0 / 3.0).abs() < 1e-7, "{mode}: {}", s.trace_value);
        }
    }

    #[test]
    fn unit_vertices_in_the_orthogonal_limit() {
        let e = ens(50.0);
        let s = solve_dp_prime(&e, &units(), DpMode::Symmetric).unwrap();
        assert!((s.trace_value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn certify_examples() {
        let e = ens(1.0);
        let v = units();
        assert!((certify(&e, &HermitianMatrix::identity(3), &v).unwrap() - 3.0).abs() < 1e-12);
        assert!((certify(&e, &HermitianMatrix::zeros(3), &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solution_is_feasible_and_recertifies() {
        let e = ens(1.0);
        let v = vertices(&e, 11);
        for mode in [DpMode::Symmetric, DpMode::General] {
            let s = solve_dp_prime(&e, &v, mode).unwrap();
            assert!(s.max_violation <= 1e-7);
            assert!(s.trace_value >= 1.0 / 3.0);
            let c = certify(&e, &s.x, &v).unwrap();
            assert!((c - s.trace_value).abs() <= 3e-7);
            for con in constraint_matrices(&e, &v, EQUAL_WEIGHT) {
                assert!(is_psd(&(&s.x - &con.h), 1e-7).unwrap());
            }
            if mode == DpMode::Symmetric {
                for j in 0..3 {
                    for k in 0..j {
                        assert_eq!(s.x.get(j, k), Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn modes_agree() {
        let e = ens(1.0);
        let v = vertices(&e, 9);
        let (s, g) = symmetrize_check(&e, &v).unwrap();
        assert!((s - g).abs() < 1e-6, "{s} {g}");
        let (s0, g0) = symmetrize_check(&ens(0.0), &vertices(&ens(0.0), 4)).unwrap();
        assert!((s0 - 1.0 / 3.0).abs() < 1e-7 && (g0 - 1.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn shift_conjugation_keeps_certificate() {
        let e = ens(0.8);
        let v = vertices(&e, 7);
        let s = solve_dp_prime(&e, &v, DpMode::General).unwrap();
        let base = certify(&e, &s.x, &v).unwrap();
        for k in [1, 2] {
            let y = s.x.conjugate_by(&symmetry_power(k));
            assert!((certify(&e, &y, &v).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn more_vertices_never_lower_the_bound() {
        let e = ens(1.5);
        let full = vertices(&e, 9);
        let sub = VertexSet {
            points: full.points.iter().step_by(2).cloned().chain(units().points).collect(),
            generating_triples: Vec::new(),
        };
        let a = solve_dp_prime(&e, &sub, DpMode::Symmetric).unwrap().trace_value;
        let b = solve_dp_prime(&e, &full, DpMode::Symmetric).unwrap().trace_value;
        assert!(b >= a - 1e-8, "{a} {b}");
    }

    #[test]
    fn weight_scales_linearly() {
        let e = ens(1.2);
        let v = vertices(&e, 7);
        let a = solve_dp_prime_weighted(&e, &v, DpMode::Symmetric, 1.0 / 3.0).unwrap().trace_value;
        let b = solve_dp_prime_weighted(&e, &v, DpMode::Symmetric, 1.0 / 6.0).unwrap().trace_value;
        assert!((a - 2.0 * b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn empty_vertices_rejected() {
        assert!(solve_dp_prime(&ens(1.0), &VertexSet::default(), DpMode::Symmetric).is_err());
    }
}
