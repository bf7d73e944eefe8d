//! Dense revised simplex for small "cut" linear programs.
//!
//! Problems have the form `minimize c.x subject to a_i.x >= b_i` with `x` free
//! and only a handful of variables but possibly thousands of rows. The method
//! runs on the dual standard form `maximize b.y s.t. A^T y = c, y >= 0`, whose
//! basis is only `n_vars` wide; primal `x` is read off the simplex multipliers.
//! Ties and degeneracy are handled with Dantzig pricing that falls back to
//! Bland's rule after a run of degenerate pivots.

use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One inequality `coeffs . x >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut<T> {
    pub coeffs: Vec<T>,
    pub rhs: T,
}

impl<T: Real> Cut<T> {
    pub fn new(coeffs: Vec<T>, rhs: T) -> Self {
        Cut { coeffs, rhs }
    }

    pub fn slack(&self, x: &[T]) -> T {
        self.coeffs.iter().zip(x).map(|(a, b)| *a * *b).sum::<T>() - self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// Indices of the cuts in the optimal basis (tight at `x`).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

fn invert<T: Real>(b: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let m = b.len();
    let mut cols = Vec::with_capacity(m);
    for j in 0..m {
        let e: Vec<T> = (0..m).map(|i| if i == j { T::one() } else { T::zero() }).collect();
        cols.push(dense::solve(b, &e, T::epsilon() * T::lit(16.0))?);
    }
    Some((0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect())
}

/// Standard-form column storage for the dual problem, including artificials.
struct Dual<'a, T> {
    cuts: &'a [Cut<T>],
    signs: Vec<T>,
    m: usize,
}

impl<'a, T: Real> Dual<'a, T> {
    fn n_total(&self) -> usize {
        self.cuts.len() + self.m
    }

    /// Column `j` of the sign-adjusted constraint matrix `S A^T | I`.
    fn column(&self, j: usize, out: &mut [T]) {
        if j < self.cuts.len() {
            for i in 0..self.m {
                out[i] = self.signs[i] * self.cuts[j].coeffs[i];
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = if i == j - self.cuts.len() { T::one() } else { T::zero() };
            }
        }
    }
}

/// `minimize c.x` subject to every cut.
pub fn minimize<T: Real>(c: &[T], cuts: &[Cut<T>]) -> Result<LpSolution<T>> {
    let m = c.len();
    if cuts.iter().any(|k| k.coeffs.len() != m) {
        return Err(Error::Validation("cut dimension mismatch".into()));
    }
    let tol = T::lit(1e-11).max(T::epsilon().sqrt() * T::lit(1e-3));
    let signs: Vec<T> = c.iter().map(|&ci| if ci < T::zero() { -T::one() } else { T::one() }).collect();
    let rhs: Vec<T> = c.iter().zip(&signs).map(|(a, s)| *a * *s).collect();
    let dual = Dual { cuts, signs, m };
    let n_cuts = cuts.len();
    let n_total = dual.n_total();

    let mut basis: Vec<usize> = (n_cuts..n_total).collect();
    let mut iterations = 0usize;
    let max_iter = 50 * (n_total + m) + 1000;
    let mut col = vec![T::zero(); m];

    // phase 1 cost: artificials; phase 2 cost: -b on cuts, artificials pinned out.
    for phase in [1, 2] {
        let cost = |j: usize| -> T {
            match (phase, j < n_cuts) {
                (1, true) => T::zero(),
                (1, false) => T::one(),
                (_, true) => -cuts[j].rhs,
                (_, false) => T::zero(),
            }
        };
        if phase == 2 {
            drive_out_artificials(&dual, &mut basis, tol);
        }
        let mut degenerate_run = 0usize;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Lp("not converging (iteration cap)"));
            }
            let bmat: Vec<Vec<T>> = {
                let mut cols = Vec::with_capacity(m);
                for &j in &basis {
                    dual.column(j, &mut col);
                    cols.push(col.clone());
                }
                (0..m).map(|i| (0..m).map(|k| cols[k][i]).collect()).collect()
            };
            let binv = invert(&bmat).ok_or(Error::Lp("singular basis"))?;
            let xb: Vec<T> = (0..m).map(|i| (0..m).map(|k| binv[i][k] * rhs[k]).sum()).collect();
            let cb: Vec<T> = basis.iter().map(|&j| cost(j)).collect();
            let pi: Vec<T> = (0..m).map(|k| (0..m).map(|i| cb[i] * binv[i][k]).sum()).collect();

            let bland = degenerate_run > 2 * m + 10;
            let mut entering: Option<(usize, T)> = None;
            for j in 0..n_total {
                if phase == 2 && j >= n_cuts {
                    break;
                }
                if basis.contains(&j) {
                    continue;
                }
                dual.column(j, &mut col);
                let d = cost(j) - pi.iter().zip(&col).map(|(p, a)| *p * *a).sum::<T>();
                let scale = T::one().max(col.iter().fold(T::zero(), |acc, a| acc.max(a.abs())));
                if d < -tol * scale {
                    match entering {
                        None => entering = Some((j, d / scale)),
                        Some((_, best)) if !bland && d / scale < best => entering = Some((j, d / scale)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = entering else {
                if phase == 1 {
                    let infeas: T = basis.iter().zip(&xb).filter(|(j, _)| **j >= n_cuts).map(|(_, x)| *x).sum();
                    if infeas > T::lit(1e-9).max(tol) {
                        return Err(Error::Lp("unbounded (the dual is infeasible)"));
                    }
                    break;
                }
                let x: Vec<T> = (0..m).map(|i| -dual.signs[i] * pi[i]).collect();
                let objective = c.iter().zip(&x).map(|(a, b)| *a * *b).sum();
                return Ok(LpSolution {
                    x,
                    objective,
                    basis: basis.iter().copied().filter(|&j| j < n_cuts).collect(),
                    iterations,
                });
            };
            dual.column(q, &mut col);
            let u: Vec<T> = (0..m).map(|i| (0..m).map(|k| binv[i][k] * col[k]).sum()).collect();
            let leave = ratio_test(&u, &xb, &basis, tol, bland);
            let Some((li, ratio)) = leave else {
                return Err(Error::Lp("infeasible (the dual is unbounded)"));
            };
            degenerate_run = if ratio <= tol { degenerate_run + 1 } else { 0 };
            basis[li] = q;
        }
    }
    unreachable!()
}

/// Leaving row for entering direction `u`.
///
/// Harris two-pass test: the first pass finds the step allowed with every basic
/// variable relaxed by a small amount, and the second picks the largest pivot
/// among rows blocking within that step. Tiny pivots are what make bases
/// singular, so they are never taken. In Bland mode the plain minimum ratio
/// with lowest basis index is used to keep the anti-cycling guarantee.
fn ratio_test<T: Real>(u: &[T], xb: &[T], basis: &[usize], tol: T, bland: bool) -> Option<(usize, T)> {
    let umax = u.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let piv_tol = T::lit(1e-9).max(tol) * T::one().max(umax);
    let rows = (0..u.len()).filter(|&i| u[i] > piv_tol);
    if bland {
        let mut leave: Option<(usize, T)> = None;
        for i in rows {
            let ratio = xb[i].max(T::zero()) / u[i];
            let better = match leave {
                None => true,
                Some((l, r)) => ratio < r || (ratio == r && basis[i] < basis[l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        return leave;
    }
    let relax = T::lit(1e-10).max(tol);
    let theta = rows
        .clone()
        .map(|i| (xb[i].max(T::zero()) + relax) / u[i])
        .fold(T::infinity(), |a, b| a.min(b));
    let mut leave: Option<(usize, T)> = None;
    for i in rows {
        let ratio = xb[i].max(T::zero()) / u[i];
        if ratio <= theta {
            let better = match leave {
                None => true,
                Some((l, _)) => u[i] > u[l] || (u[i] == u[l] && basis[i] < basis[l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
    }
    leave
}

/// After phase 1, replace artificial basics (at zero level) by cut columns where possible.
fn drive_out_artificials<T: Real>(dual: &Dual<T>, basis: &mut [usize], tol: T) {
    let n_cuts = dual.cuts.len();
    let m = dual.m;
    let mut col = vec![T::zero(); m];
    for pos in 0..m {
        if basis[pos] < n_cuts {
            continue;
        }
        let bmat: Vec<Vec<T>> = {
            let mut cols = Vec::with_capacity(m);
            for &j in basis.iter() {
                dual.column(j, &mut col);
                cols.push(col.clone());
            }
            (0..m).map(|i| (0..m).map(|k| cols[k][i]).collect()).collect()
        };
        let Some(binv) = invert(&bmat) else { return };
        for j in 0..n_cuts {
            if basis.contains(&j) {
                continue;
            }
            dual.column(j, &mut col);
            let u: T = (0..m).map(|k| binv[pos][k] * col[k]).sum();
            if u.abs() > tol.sqrt() {
                basis[pos] = j;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(a: &[f64], b: f64) -> Cut<f64> {
        Cut::new(a.to_vec(), b)
    }

    #[test]
    fn simple_corner() {
        // min x + y, x + 2y >= 2, 3x + y >= 3, x, y >= 0  ->  x = 0.8, y = 0.6
        let cuts = vec![cut(&[1.0, 2.0], 2.0), cut(&[3.0, 1.0], 3.0), cut(&[1.0, 0.0], 0.0), cut(&[0.0, 1.0], 0.0)];
        let s = minimize(&[1.0, 1.0], &cuts).unwrap();
        assert!((s.x[0] - 0.8).abs() < 1e-12 && (s.x[1] - 0.6).abs() < 1e-12);
        assert!((s.objective - 1.4).abs() < 1e-12);
        for k in &cuts {
            assert!(k.slack(&s.x) >= -1e-12);
        }
    }

    #[test]
    fn negative_and_zero_costs() {
        // max r  s.t.  r <= 1 - x, r <= 1 + x, r <= 0.5  ->  r = 0.5
        let cuts = vec![cut(&[-1.0, -1.0], -1.0), cut(&[1.0, -1.0], -1.0), cut(&[0.0, -1.0], -0.5)];
        let s = minimize(&[0.0, -1.0], &cuts).unwrap();
        assert!((s.x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        assert!(minimize(&[1.0], &[cut(&[-1.0], 0.0)]).is_err());
        assert!((minimize(&[1.0], &[cut(&[1.0], 1.0), cut(&[-1.0], -3.0)]).unwrap().x[0] - 1.0).abs() < 1e-14);
        assert!(minimize(&[1.0], &[cut(&[1.0], 2.0), cut(&[-1.0], -1.0), cut(&[1.0], 0.0)]).is_err());
    }

    #[test]
    fn degenerate_many_tight_cuts() {
        // cuts touching the optimum (1/3, 1/3, 1/3) from many directions
        let mut cuts = vec![];
        for i in 0..30 {
            let a = [1.0 + (i % 3) as f64, 1.0 + (i % 5) as f64, 1.0 + (i % 7) as f64];
            let b: f64 = a.iter().sum::<f64>() / 3.0;
            cuts.push(cut(&a, b));
        }
        for k in 0..3 {
            let mut a = [0.0; 3];
            a[k] = 1.0;
            cuts.push(cut(&a, 0.0));
        }
        cuts.push(cut(&[1.0, 1.0, 1.0], 1.0));
        let s = minimize(&[1.0, 1.0, 1.0], &cuts).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        for k in &cuts {
            assert!(k.slack(&s.x) >= -1e-10);
        }
    }

    #[test]
    fn brute_force_agreement_2d() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mut cuts = vec![cut(&[1.0, 0.0], 0.0), cut(&[0.0, 1.0], 0.0)];
            for _ in 0..rng.gen_range(1..12) {
                let a = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                cuts.push(cut(&a, rng.gen_range(0.0..1.0)));
            }
            let c = [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)];
            let s = minimize(&c, &cuts).unwrap();
            // oracle: best feasible pairwise intersection
            let mut best = f64::INFINITY;
            for i in 0..cuts.len() {
                for j in (i + 1)..cuts.len() {
                    let (a, b) = (&cuts[i], &cuts[j]);
                    let det = a.coeffs[0] * b.coeffs[1] - a.coeffs[1] * b.coeffs[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = [(a.rhs * b.coeffs[1] - a.coeffs[1] * b.rhs) / det, (a.coeffs[0] * b.rhs - a.rhs * b.coeffs[0]) / det];
                    if cuts.iter().all(|k| k.slack(&x) >= -1e-12) {
                        best = best.min(c[0] * x[0] + c[1] * x[1]);
                    }
                }
            }
            assert!((s.objective - best).abs() < 1e-9, "{} vs {}", s.objective, best);
        }
    }

    #[test]
    fn single_precision() {
        let cuts = vec![Cut::new(vec![1.0f32, 2.0], 2.0), Cut::new(vec![3.0, 1.0], 3.0), Cut::new(vec![1.0, 0.0], 0.0), Cut::new(vec![0.0, 1.0], 0.0)];
        let s = minimize(&[1.0f32, 1.0], &cuts).unwrap();
        assert!((s.objective - 1.4).abs() < 1e-5);
    }
}
