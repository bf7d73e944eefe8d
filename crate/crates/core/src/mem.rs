//! Minimum-error discrimination with dual certificates.
//!
//! The general problem is: given PSD operators `R_1..R_n` on `C^d`, maximize
//! `sum_m Tr(R_m P_m)` over POVMs `{P_m}`. Its dual is `min Tr Y` subject to
//! `Y >= R_m` for every `m`. Both the MEM of weighted pure states
//! (`R_m = p_m |b_m><b_m|`) and Alice's optimization over a library of Bob
//! measurements have this shape, so they share [`solve_operators`].
//!
//! The dual is solved with a log-barrier Newton method in the `d^2` real
//! coordinates of `Y`. On the central path `P_m = t (Y - R_m)^-1` is a POVM, so
//! a primal candidate comes for free; when `n == d` a projective rounding of the
//! near-kernel vectors of `Y - R_m` is also tried, which is far more accurate for
//! linearly independent pure states. The returned dual is inflated by
//! `max(0, -min_m lambda_min(Y - R_m)) I`, so the certified bound holds no matter
//! how the iteration ended.

use num_complex::Complex;

use crate::dense::solve_spd;
use crate::ensemble::{validate_priors, CoherentEnsemble, PskStates};
use crate::error::{Error, Result};
use crate::smallmat::{eigh, inner, min_eig, CVec, Hermitian};
use crate::tol::TOL;
use crate::HermitianMatrix;

/// Positive operator valued measure; one element per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub elements: Vec<HermitianMatrix>,
}

impl Povm {
    /// All weight on outcome `k`.
    pub fn trivial(n_outcomes: usize, dim: usize, k: usize) -> Self {
        let elements = (0..n_outcomes)
            .map(|m| if m == k { HermitianMatrix::identity(dim) } else { HermitianMatrix::zeros(dim) })
            .collect();
        Povm { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Frobenius distance of `sum_m P_m` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let mut s = HermitianMatrix::zeros(self.dim());
        for e in &self.elements {
            s += e;
        }
        (&s - &HermitianMatrix::identity(self.dim())).frobenius_norm()
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.elements
            .iter()
            .map(|e| min_eig(e).map(|(l, _)| l))
            .try_fold(f64::INFINITY, |acc, l| l.map(|l| acc.min(l)))
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        !self.is_empty()
            && self.completeness_error() <= tol
            && self.min_eigenvalue().map(|l| l >= -tol).unwrap_or(false)
    }

    /// Turns approximately-complete PSD operators into an exact POVM:
    /// negative eigenvalues are clipped, then `P_m <- S^-1/2 P_m S^-1/2`.
    pub fn normalize(raw: Vec<HermitianMatrix>) -> Result<Self> {
        let clipped = raw
            .iter()
            .map(|e| e.map_spectrum(|l| l.max(0.0)))
            .collect::<Result<Vec<_>>>()?;
        let dim = clipped[0].dim();
        let mut s = HermitianMatrix::zeros(dim);
        for e in &clipped {
            s += e;
        }
        if min_eig(&s)?.0 <= 1e-300 {
            return Err(Error::Validation("POVM candidate is rank deficient".into()));
        }
        let s_inv_half = s.map_spectrum(|l| 1.0 / l.sqrt())?;
        let w = s_inv_half.to_dense();
        let elements = clipped.iter().map(|e| e.conjugate_by(&w)).collect();
        Ok(Povm { elements })
    }

    /// `Tr(rho P_m)` for every outcome.
    /// A random full-rank POVM: Gram-normalized sums of random complex outer products.
    pub fn random<R: rand::Rng>(rng: &mut R, n_outcomes: usize, dim: usize) -> Result<Self> {
        let raw: Vec<HermitianMatrix> = (0..n_outcomes)
            .map(|_| {
                let rank = rng.gen_range(1..=dim);
                let mut a = HermitianMatrix::zeros(dim);
                for _ in 0..rank {
                    let v: CVec<f64> = (0..dim)
                        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    a += &HermitianMatrix::outer(&v);
                }
                a
            })
            .collect();
        Povm::normalize(raw)
    }

    pub fn probabilities(&self, rho: &HermitianMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| e.trace_product(rho)).collect()
    }
}

/// Outcome of [`solve_operators`].
#[derive(Debug, Clone)]
pub struct OperatorSolution {
    /// `sum_m Tr(R_m P_m)` for the returned POVM (a valid lower bound).
    pub value: f64,
    pub povm: Povm,
    /// Dual-feasible `Y` (already inflated).
    pub dual: HermitianMatrix,
    /// `Tr(dual)`, an upper bound on the optimum.
    pub certified_upper: f64,
    pub newton_steps: usize,
}

impl OperatorSolution {
    pub fn gap(&self) -> f64 {
        self.certified_upper - self.value
    }
}

/// Makes `y` exactly dual feasible: returns `y + delta I` and its trace.
pub fn inflate_dual(ops: &[HermitianMatrix], y: &HermitianMatrix) -> Result<(HermitianMatrix, f64)> {
    let mut worst = 0f64;
    for r in ops {
        let (l, _) = min_eig(&(y - r))?;
        worst = worst.max(-l);
    }
    let y = y.shift(worst);
    let tr = y.trace();
    Ok((y, tr))
}

fn log_det_pd(m: &HermitianMatrix) -> Option<f64> {
    let l = m.cholesky()?;
    Some((0..m.dim()).map(|j| 2.0 * l[j][j].re.ln()).sum())
}

/// `Z E_a Z` for the Hermitian coordinate basis element `E_a`, with `z` dense Hermitian.
fn sandwich_basis(z: &[Vec<Complex<f64>>], a: usize) -> HermitianMatrix {
    let d = z.len();
    let col = |j: usize| -> CVec<f64> { (0..d).map(|r| z[r][j]).collect() };
    if a < d {
        return HermitianMatrix::outer(&col(a));
    }
    // locate the (j, k, re/im) pair of coordinate a
    let mut idx = d;
    for j in 0..d {
        for k in 0..j {
            for imag in [false, true] {
                if idx == a {
                    let (zj, zk) = (col(j), col(k));
                    let c = if imag { Complex::new(0.0, 1.0) } else { Complex::new(1.0, 0.0) };
                    // c z_j z_k^† + conj(c) z_k z_j^†
                    return HermitianMatrix::from_fn(d, |r, s| {
                        c * zj[r] * zk[s].conj() + c.conj() * zk[r] * zj[s].conj()
                    });
                }
                idx += 1;
            }
        }
    }
    unreachable!("coordinate index out of range")
}

type Derivatives = (Vec<f64>, Vec<Vec<f64>>, Vec<HermitianMatrix>);

struct Barrier<'a> {
    ops: &'a [HermitianMatrix],
    dim: usize,
}

impl<'a> Barrier<'a> {
    fn value(&self, y: &HermitianMatrix, t: f64) -> Option<f64> {
        let mut f = y.trace();
        for r in self.ops {
            f -= t * log_det_pd(&(y - r))?;
        }
        Some(f)
    }

    /// Gradient, Hessian and the inverse slacks `(Y - R_m)^-1`.
    fn derivatives(&self, y: &HermitianMatrix, t: f64) -> Option<Derivatives> {
        let nc = self.dim * self.dim;
        let mut grad = HermitianMatrix::identity(self.dim).trace_functional();
        let mut hess = vec![vec![0.0; nc]; nc];
        let mut zs = Vec::with_capacity(self.ops.len());
        for r in self.ops {
            let z = (y - r).inverse_pd()?;
            for (g, zi) in grad.iter_mut().zip(z.trace_functional()) {
                *g -= t * zi;
            }
            let zd = z.to_dense();
            for (a, row) in hess.iter_mut().enumerate() {
                let w = sandwich_basis(&zd, a);
                for (h, wi) in row.iter_mut().zip(w.trace_functional()) {
                    *h += t * wi;
                }
            }
            zs.push(z);
        }
        Some((grad, hess, zs))
    }
}

/// Maximizes `sum_m Tr(R_m P_m)` over POVMs, returning a certified dual as well.
pub fn solve_operators(ops: &[HermitianMatrix]) -> Result<OperatorSolution> {
    if ops.is_empty() {
        return Err(Error::Validation("no operators to discriminate".into()));
    }
    let dim = ops[0].dim();
    let n = ops.len();
    if ops.iter().any(|r| r.dim() != dim || !r.is_finite()) {
        return Err(Error::Validation("operators must be finite and share one dimension".into()));
    }

    // Outcomes with a zero operator never help; they get P_m = 0.
    let active: Vec<usize> = (0..n).filter(|&m| ops[m].frobenius_norm() > 0.0).collect();
    let trivial_values: Vec<f64> = ops.iter().map(|r| r.trace()).collect();
    let best_trivial = argmax_first(&trivial_values);

    if active.len() <= 1 {
        let k = active.first().copied().unwrap_or(best_trivial);
        let (dual, certified_upper) = inflate_dual(ops, &ops[k])?;
        return Ok(OperatorSolution {
            value: trivial_values[k],
            povm: Povm::trivial(n, dim, k),
            dual,
            certified_upper,
            newton_steps: 0,
        });
    }

    let sub: Vec<HermitianMatrix> = active.iter().map(|&m| ops[m].clone()).collect();
    let (y, t, zs, newton_steps) = central_path(&sub, dim)?;
    let (dual, certified_upper) = inflate_dual(ops, &y)?;

    let embed = |sub_povm: Vec<HermitianMatrix>| -> Vec<HermitianMatrix> {
        let mut full = vec![HermitianMatrix::zeros(dim); n];
        for (&m, e) in active.iter().zip(sub_povm) {
            full[m] = e;
        }
        full
    };
    let evaluate = |p: &Povm| -> f64 { ops.iter().zip(&p.elements).map(|(r, e)| r.trace_product(e)).sum() };

    let mut candidates: Vec<Povm> = Vec::new();
    if let Ok(p) = Povm::normalize(embed(zs.iter().map(|z| z.scale(t)).collect())) {
        candidates.push(p);
    }
    if sub.len() == dim {
        if let Some(p) = projective_rounding(&sub, &y)? {
            candidates.push(Povm { elements: embed(p) });
        }
    }
    let mut best = Povm::trivial(n, dim, best_trivial);
    let mut best_value = trivial_values[best_trivial];
    for p in candidates {
        let v = evaluate(&p);
        // ties go to the trivial guess (lowest index of the largest weight)
        if v > best_value + 1e-12 {
            best_value = v;
            best = p;
        }
    }
    Ok(OperatorSolution {
        value: best_value,
        povm: best,
        dual,
        certified_upper,
        newton_steps,
    })
}

fn argmax_first(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[k] {
            k = i;
        }
    }
    k
}

/// Follows the barrier central path down to a duality gap of about `1e-10`.
fn central_path(ops: &[HermitianMatrix], dim: usize) -> Result<(HermitianMatrix, f64, Vec<HermitianMatrix>, usize)> {
    let n = ops.len();
    let barrier = Barrier { ops, dim };
    let top = ops
        .iter()
        .map(|r| eigh(r).map(|e| e.values[0]))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0f64, f64::max);
    let mut y = HermitianMatrix::identity(dim).scale(top + 1.0);
    let mut t = (top + 1.0) / n as f64;
    let t_end = 1e-10 / (n * dim) as f64;
    let mut steps = 0usize;

    loop {
        // centering
        for _ in 0..200 {
            if steps >= TOL.mem_max_newton {
                break;
            }
            let Some((grad, hess, _)) = barrier.derivatives(&y, t) else { break };
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = solve_spd(&hess, &neg) else { break };
            let dec: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
            steps += 1;
            let last = t <= t_end;
            if !(dec > 0.0) || dec / t < if last { 1e-10 } else { 1e-3 } {
                break;
            }
            let f0 = barrier.value(&y, t).unwrap_or(f64::INFINITY);
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = Hermitian::from_coords(
                    dim,
                    &y.to_coords().iter().zip(&step).map(|(a, b)| a + s * b).collect::<Vec<_>>(),
                );
                if let Some(f1) = barrier.value(&cand, t) {
                    if f1 <= f0 - 0.25 * s * dec {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if t <= t_end || steps >= TOL.mem_max_newton {
            break;
        }
        t = (t * 0.02).max(t_end);
    }
    let zs = ops
        .iter()
        .map(|r| (&y - r).inverse_pd().ok_or_else(|| Error::Validation("barrier iterate left the interior".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok((y, t, zs, steps))
}

/// Rank-one projective POVM from the near-kernel vectors of `Y - R_m`,
/// made orthonormal by Lowdin's symmetric orthogonalization.
fn projective_rounding(ops: &[HermitianMatrix], y: &HermitianMatrix) -> Result<Option<Vec<HermitianMatrix>>> {
    let d = y.dim();
    let mut vecs = Vec::with_capacity(d);
    for r in ops {
        vecs.push(min_eig(&(y - r))?.1);
    }
    let overlap = HermitianMatrix::from_fn(d, |j, k| inner(&vecs[j], &vecs[k]));
    let (lmin, _) = min_eig(&overlap)?;
    if lmin < 1e-8 {
        return Ok(None);
    }
    let s = overlap.map_spectrum(|l| 1.0 / l.sqrt())?;
    // w_m = sum_j v_j S^-1/2_{jm}
    let w: Vec<CVec<f64>> = (0..d)
        .map(|m| {
            (0..d)
                .map(|r| (0..d).fold(Complex::new(0.0, 0.0), |acc, j| acc + vecs[j][r] * s.get(j, m)))
                .collect()
        })
        .collect();
    Ok(Some(w.iter().map(|v| HermitianMatrix::outer(v)).collect()))
}

/// MEM of three weighted pure states with its dual certificate.
#[derive(Debug, Clone)]
pub struct MemResult {
    pub priors: [f64; 3],
    /// `sum_m p_m q_m`
    pub success_value: f64,
    pub povm: Povm,
    /// Conditional successes `q_m = <b_m|P_m|b_m>`.
    pub q: [f64; 3],
    pub dual_y: HermitianMatrix,
    /// `Tr(dual_y)`; valid even if the solve did not converge.
    pub certified_upper: f64,
    pub newton_steps: usize,
}

impl MemResult {
    pub fn gap(&self) -> f64 {
        self.certified_upper - self.success_value
    }
}

/// MEM for arbitrary unit state vectors (dimension of the vectors) with the given priors.
pub fn solve_mem_states(states: &[CVec<f64>; 3], priors: [f64; 3]) -> Result<MemResult> {
    validate_priors(&priors)?;
    let ops: Vec<HermitianMatrix> = states
        .iter()
        .zip(priors)
        .map(|(v, p)| HermitianMatrix::scaled_outer(p, v))
        .collect();
    let sol = solve_operators(&ops)?;
    let q: [f64; 3] = std::array::from_fn(|m| sol.povm.elements[m].quad_form(&states[m]));
    let success_value = (0..3).map(|m| priors[m] * q[m]).sum();
    let res = MemResult {
        priors,
        success_value,
        povm: sol.povm,
        q,
        dual_y: sol.dual,
        certified_upper: sol.certified_upper,
        newton_steps: sol.newton_steps,
    };
    if res.gap() > TOL.mem_gap {
        return Err(Error::Convergence {
            gap: res.gap(),
            target: TOL.mem_gap,
            lower: res.success_value,
            certified: res.certified_upper,
        });
    }
    Ok(res)
}

/// MEM for the split states `|b_m>` of `e` with priors `priors`.
pub fn solve_mem(e: &CoherentEnsemble, priors: [f64; 3]) -> Result<MemResult> {
    solve_mem_states(e.state_vectors(), priors)
}

/// `(1/9) (sum_k sqrt(mu_k))^2`: the square-root-measurement value for three
/// equiprobable symmetric pure states with Gram eigenvalues `mu`.
pub fn srm_from_eigenvalues(mu: [f64; 3]) -> f64 {
    let s: f64 = mu.iter().map(|m| m.max(0.0).sqrt()).sum();
    s * s / 9.0
}

pub fn srm_for(states: &PskStates) -> f64 {
    srm_from_eigenvalues(states.eigenvalues())
}

/// Square-root-measurement (optimal) success for the split states; needs equal priors.
pub fn srm_value(e: &CoherentEnsemble) -> Result<f64> {
    if e.priors.iter().any(|p| (p - 1.0 / 3.0).abs() > 1e-12) {
        return Err(Error::Unsupported(
            "square-root measurement closed form needs equal priors; use solve_mem".into(),
        ));
    }
    Ok(srm_for(&e.split))
}

/// Success probability of the globally optimal measurement on the full states.
pub fn quantum_limit(e: &CoherentEnsemble) -> Result<f64> {
    if e.priors.iter().any(|p| (p - 1.0 / 3.0).abs() > 1e-12) {
        return Err(Error::Unsupported("quantum limit closed form needs equal priors".into()));
    }
    Ok(srm_for(&e.full))
}

/// Helstrom success probability for two pure states with `|<a|b>| = overlap_mod`
/// and priors `(prior, 1 - prior)`.
pub fn helstrom_binary(overlap_mod: f64, prior: f64) -> f64 {
    0.5 * (1.0 + (1.0 - 4.0 * prior * (1.0 - prior) * overlap_mod * overlap_mod).max(0.0).sqrt())
}
