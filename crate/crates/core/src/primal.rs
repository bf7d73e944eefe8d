//! Explicit sequential strategies, giving lower bounds on sequential success.
//!
//! Bob picks one measurement from a finite library according to Alice's
//! outcome. With product states `|b_m> (x) |b_m>`, Bob's measurement `B` turns
//! into the scalar `q_m = <b_m|B_m|b_m>` on his side, so Alice faces an ordinary
//! discrimination problem over `F_w = sum_m p_m q_m^w |b_m><b_m|`, one operator per
//! library entry.

use rayon::prelude::*;

use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::mem::{solve_mem, solve_operators, Povm};
use crate::qregion::{sample_priors, SamplingScheme};
use crate::tol::TOL;
use crate::HermitianMatrix;

#[derive(Debug, Clone)]
pub struct BobEntry {
    pub povm: Povm,
    /// `q_m = <b_m|B_m|b_m>`
    pub q: [f64; 3],
    /// Priors the entry was optimized for; `None` for fixed guesses.
    pub source_priors: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default)]
pub struct BobLibrary {
    pub entries: Vec<BobEntry>,
}

impl BobLibrary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `povm` unless an entry with the same `q` (within 1e-9) is present.
    pub fn push(&mut self, e: &CoherentEnsemble, povm: Povm, source_priors: Option<[f64; 3]>) -> Result<bool> {
        if povm.len() != 3 || povm.dim() != 3 || !povm.is_valid(TOL.povm) {
            return Err(Error::Validation("library entries must be valid three-outcome POVMs".into()));
        }
        let q: [f64; 3] = std::array::from_fn(|m| povm.elements[m].quad_form(&e.state_vectors()[m]));
        if self.entries.iter().any(|x| (0..3).all(|k| (x.q[k] - q[k]).abs() <= 1e-9)) {
            return Ok(false);
        }
        self.entries.push(BobEntry { povm, q, source_priors });
        Ok(true)
    }
}

/// Per-state weights `F_w` Alice's outcome `w` would have to discriminate.
pub fn effective_operators(e: &CoherentEnsemble, lib: &BobLibrary) -> Vec<HermitianMatrix> {
    let v = e.state_vectors();
    lib.entries
        .iter()
        .map(|entry| {
            let mut f = HermitianMatrix::zeros(3);
            for m in 0..3 {
                f += &HermitianMatrix::scaled_outer(e.priors[m] * entry.q[m], &v[m]);
            }
            f
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PrimalResult {
    pub success_value: f64,
    /// One element per library entry.
    pub alice_povm: Povm,
    /// Library entries Alice actually uses.
    pub chosen_bob_indices: Vec<usize>,
    /// Upper bound on what this library can achieve.
    pub library_upper: f64,
}

/// Best Alice measurement for the library; its value is a lower bound on sequential success.
pub fn optimize_alice(e: &CoherentEnsemble, lib: &BobLibrary) -> Result<PrimalResult> {
    if lib.is_empty() {
        return Err(Error::Validation("Bob library is empty".into()));
    }
    let f = effective_operators(e, lib);
    let sol = solve_operators(&f)?;
    let success_value: f64 = f.iter().zip(&sol.povm.elements).map(|(x, a)| x.trace_product(a)).sum();
    if sol.certified_upper - success_value > TOL.mem_gap {
        return Err(Error::Convergence {
            gap: sol.certified_upper - success_value,
            target: TOL.mem_gap,
            lower: success_value,
            certified: sol.certified_upper,
        });
    }
    let chosen_bob_indices = (0..lib.len())
        .filter(|&w| sol.povm.elements[w].trace() > TOL.povm)
        .collect();
    Ok(PrimalResult {
        success_value,
        alice_povm: sol.povm,
        chosen_bob_indices,
        library_upper: sol.certified_upper,
    })
}

/// Grid priors per edge giving the most points not exceeding `n`.
fn grid_for_count(n: usize) -> Result<Vec<[f64; 3]>> {
    let mut best = sample_priors(1, SamplingScheme::Grid)?;
    for k in 2.. {
        let pts = sample_priors(k, SamplingScheme::Grid)?;
        if pts.len() > n {
            break;
        }
        best = pts;
    }
    Ok(best)
}

/// MEM measurements at up to `n` grid priors plus the three constant guesses.
pub fn default_library(e: &CoherentEnsemble, n: usize) -> Result<BobLibrary> {
    if n == 0 {
        return Err(Error::Validation("library needs at least one prior".into()));
    }
    let priors = grid_for_count(n)?;
    let povms: Vec<Povm> = priors
        .par_iter()
        .map(|&p| match solve_mem(e, p) {
            Ok(r) => Ok(r.povm),
            // the measurement is still a valid (slightly suboptimal) strategy
            Err(Error::Convergence { .. }) => Ok(mem_povm_unchecked(e, p)?),
            Err(err) => Err(err),
        })
        .collect::<Result<_>>()?;
    let mut lib = BobLibrary::default();
    for (p, povm) in priors.into_iter().zip(povms) {
        lib.push(e, povm, Some(p))?;
    }
    for k in 0..3 {
        lib.push(e, Povm::trivial(3, 3, k), None)?;
    }
    Ok(lib)
}

fn mem_povm_unchecked(e: &CoherentEnsemble, p: [f64; 3]) -> Result<Povm> {
    let ops: Vec<HermitianMatrix> = (0..3)
        .map(|m| HermitianMatrix::scaled_outer(p[m], &e.state_vectors()[m]))
        .collect();
    Ok(solve_operators(&ops)?.povm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::srm_value;

    fn ens(nbar: f64) -> CoherentEnsemble {
        CoherentEnsemble::equiprobable(nbar).unwrap()
    }

    #[test]
    fn always_first_outcome() {
        let e = ens(1.0);
        let mut lib = BobLibrary::default();
        lib.push(&e, Povm::trivial(3, 3, 0), None).unwrap();
        let f = effective_operators(&e, &lib);
        let want = HermitianMatrix::scaled_outer(1.0 / 3.0, &e.state_vectors()[0]);
        assert!((&f[0] - &want).frobenius_norm() < 1e-15);
        let r = optimize_alice(&e, &lib).unwrap();
        assert!((r.success_value - f[0].trace()).abs() < 1e-12);
        assert_eq!(r.chosen_bob_indices, vec![0]);
    }

    #[test]
    fn vacuum_is_rank_one_and_one_third() {
        let e = ens(0.0);
        let lib = default_library(&e, 10).unwrap();
        for f in effective_operators(&e, &lib) {
            let ev = crate::smallmat::eigh(&f).unwrap().values;
            assert!(ev[1].abs() < 1e-12 && ev[2].abs() < 1e-12);
        }
        let r = optimize_alice(&e, &lib).unwrap();
        assert!((r.success_value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_mem_entry_trace_identity() {
        let e = ens(1.0);
        let lib = default_library(&e, 1).unwrap();
        assert_eq!(lib.len(), 4);
        let f = effective_operators(&e, &lib);
        let entry = &lib.entries[0];
        let weighted: f64 = (0..3).map(|m| entry.q[m] / 3.0).sum();
        assert!((f[0].trace() - weighted).abs() < 1e-12);
        assert!((weighted - srm_value(&e).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn library_sizes_and_validity() {
        let e = ens(1.0);
        let lib = default_library(&e, 66).unwrap();
        assert!(lib.len() <= 69 && lib.len() > 40, "{}", lib.len());
        for x in &lib.entries {
            assert!(x.povm.is_valid(1e-9));
        }
        assert!(default_library(&e, 0).is_err());
    }

    #[test]
    fn bigger_library_never_worse() {
        let e = ens(1.2);
        let small = default_library(&e, 6).unwrap();
        let mut big = small.clone();
        for p in [[0.6, 0.3, 0.1], [0.2, 0.2, 0.6]] {
            big.push(&e, solve_mem(&e, p).unwrap().povm, Some(p)).unwrap();
        }
        let a = optimize_alice(&e, &small).unwrap().success_value;
        let b = optimize_alice(&e, &big).unwrap().success_value;
        assert!(b >= a - 1e-9);
        assert!(a >= 1.0 / 3.0 - 1e-12);
    }

    #[test]
    fn value_matches_alice_povm() {
        let e = ens(0.7);
        let lib = default_library(&e, 10).unwrap();
        let r = optimize_alice(&e, &lib).unwrap();
        let f = effective_operators(&e, &lib);
        let direct: f64 = f.iter().zip(&r.alice_povm.elements).map(|(x, a)| x.trace_product(a)).sum();
        assert!((direct - r.success_value).abs() < 1e-9);
        assert!(r.alice_povm.is_valid(1e-9));
        assert!(r.library_upper - r.success_value <= 1e-7);
    }
}
