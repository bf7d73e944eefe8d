//! The ternary PSK coherent ensemble and its half-duration split.
//!
//! States live in the three-dimensional span of the PSK states. Because the
//! Gram matrix is circulant, its eigenbasis is the discrete Fourier basis, and
//! placing state `m` at `sqrt(mu_k) * w^(m k) / sqrt(3)` makes the cyclic shift
//! `V = diag(1, w, w^2)` exact (`w = exp(2 pi i / 3)`).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::smallmat::{inner, CVec};
use crate::{Complex64, HermitianMatrix};

/// `<a|b>` for coherent states with complex amplitudes `a` and `b`.
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (Complex64::new(-(a.norm_sqr() + b.norm_sqr()) / 2.0, 0.0) + a.conj() * b).exp()
}

/// Primitive cube root of unity raised to `k`.
pub fn omega(k: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k.rem_euclid(3) as f64) / 3.0)
}

/// Eigenvalues of the 3-PSK Gram matrix, indexed by Fourier mode.
///
/// `mu_k = 1 + 2 Re(c_1 w^-k)` with `c_1 = <g_0|g_1>` cancels badly at small `|g|^2`,
/// so the same quantity is summed in its exact series form
/// `3 e^{-s} sum_{n = k mod 3} s^n / n!`, which is nonnegative term by term.
pub fn circulant_eigenvalues(amp_sq: f64) -> [f64; 3] {
    let s = amp_sq;
    if s > 500.0 {
        let c1 = coherent_overlap(Complex64::new(s.sqrt(), 0.0), omega(1) * s.sqrt());
        return [0i64, 1, 2].map(|k| (1.0 + 2.0 * (c1 * omega(-k)).re).max(0.0));
    }
    let mut mu = [0.0; 3];
    let mut term = (-s).exp();
    let mut n = 0usize;
    loop {
        mu[n % 3] += term;
        n += 1;
        term *= s / n as f64;
        if n as f64 > s && term < 1e-18 * mu[0].max(f64::MIN_POSITIVE) {
            break;
        }
    }
    mu.map(|x| 3.0 * x)
}

/// Three symmetric coherent states `|g w^m>` embedded in C^3.
#[derive(Debug, Clone)]
pub struct PskStates {
    /// `|g|^2`
    pub amp_sq: f64,
    pub amplitudes: [Complex64; 3],
    /// Gram matrix, entries `<g_j|g_k>`.
    pub gram: HermitianMatrix,
    /// Gram eigenvalues indexed by Fourier mode `k` (not sorted).
    pub fourier_eigenvalues: [f64; 3],
    pub vectors: [CVec<f64>; 3],
}

impl PskStates {
    pub fn new(amp_sq: f64) -> Result<Self> {
        if !(amp_sq >= 0.0) || !amp_sq.is_finite() {
            return Err(Error::Validation(format!("mean photon number must be finite and >= 0, got {amp_sq}")));
        }
        let g = amp_sq.sqrt();
        let amplitudes = [0, 1, 2].map(|m| omega(m) * g);
        let gram = HermitianMatrix::from_fn(3, |j, k| coherent_overlap(amplitudes[j], amplitudes[k]));
        let fourier_eigenvalues = circulant_eigenvalues(amp_sq);
        let s3 = 3f64.sqrt();
        let vectors = [0i64, 1, 2].map(|m| {
            (0..3)
                .map(|k| omega(m * k as i64) * (fourier_eigenvalues[k].max(0.0).sqrt() / s3))
                .collect::<CVec<f64>>()
        });
        Ok(PskStates {
            amp_sq,
            amplitudes,
            gram,
            fourier_eigenvalues,
            vectors,
        })
    }

    /// Gram eigenvalues in descending order, clamped at zero.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut mu = self.fourier_eigenvalues.map(|x| x.max(0.0));
        mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
        mu
    }

    /// `|g_m><g_m|`
    pub fn projector(&self, m: usize) -> HermitianMatrix {
        HermitianMatrix::outer(&self.vectors[m])
    }
}

/// The diagonal cyclic-shift unitary `V = diag(1, w, w^2)`.
pub fn symmetry_op() -> [Complex64; 3] {
    [omega(0), omega(1), omega(2)]
}

/// `V^k` as a dense matrix, for conjugations.
pub fn symmetry_power(k: i64) -> Vec<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    (0..3)
        .map(|j| (0..3).map(|l| if j == l { omega(k * j as i64) } else { zero }).collect())
        .collect()
}

/// 3-PSK ensemble `|a_m> = |b_m> (x) |b_m>` with `b_m = a_m / sqrt(2)`.
#[derive(Debug, Clone)]
pub struct CoherentEnsemble {
    /// `|a|^2`, photons.
    pub mean_photon: f64,
    pub priors: [f64; 3],
    /// The full states `|a_m>`.
    pub full: PskStates,
    /// One half-duration factor `|b_m>`; Alice and Bob each hold a copy.
    pub split: PskStates,
}

pub fn validate_priors(priors: &[f64]) -> Result<()> {
    if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Validation(format!("priors must be finite and nonnegative: {priors:?}")));
    }
    let s: f64 = priors.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("priors must sum to 1 (sum {s})")));
    }
    Ok(())
}

pub const EQUAL_PRIORS: [f64; 3] = [1.0 / 3.0; 3];

impl CoherentEnsemble {
    pub fn new(mean_photon: f64, priors: [f64; 3]) -> Result<Self> {
        validate_priors(&priors)?;
        Ok(CoherentEnsemble {
            mean_photon,
            priors,
            full: PskStates::new(mean_photon)?,
            split: PskStates::new(mean_photon / 2.0)?,
        })
    }

    pub fn equiprobable(mean_photon: f64) -> Result<Self> {
        Self::new(mean_photon, EQUAL_PRIORS)
    }

    pub fn amplitudes(&self) -> [Complex64; 3] {
        self.full.amplitudes
    }

    pub fn split_amplitudes(&self) -> [Complex64; 3] {
        self.split.amplitudes
    }

    /// Gram matrix of the split states `<b_j|b_k>`.
    pub fn gram(&self) -> &HermitianMatrix {
        &self.split.gram
    }

    pub fn state_vectors(&self) -> &[CVec<f64>; 3] {
        &self.split.vectors
    }

    pub fn gram_eigenvalues(&self) -> [f64; 3] {
        self.split.eigenvalues()
    }

    /// Largest deviation of the embedded inner products from the Gram matrix.
    pub fn embedding_error(&self) -> f64 {
        let v = self.state_vectors();
        let mut worst = 0f64;
        for j in 0..3 {
            for k in 0..3 {
                worst = worst.max((inner(&v[j], &v[k]) - self.gram().get(j, k)).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallmat::eigh;

    /// Truncated Fock expansion of `<a|b>`.
    fn fock_overlap(a: Complex64, b: Complex64, nmax: u32) -> Complex64 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..=nmax {
            term = term * a.conj() * b / n as f64;
            sum += term;
        }
        sum * (-(a.norm_sqr() + b.norm_sqr()) / 2.0).exp()
    }

    #[test]
    fn overlap_trivial_cases() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(coherent_overlap(z, z), Complex64::new(1.0, 0.0));
        let a = Complex64::new(0.7, -1.3);
        assert!((coherent_overlap(a, a) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn overlap_matches_fock_series() {
        let a = Complex64::new(0.5f64.sqrt(), 0.0);
        let b = omega(1) * 0.5f64.sqrt();
        let direct = coherent_overlap(a, b);
        let oracle = fock_overlap(a, b, 40);
        assert!((direct - oracle).norm() < 1e-14);
        // frozen from the 40-term series: exp(-0.75 + i 0.4330127...)
        assert!((direct - Complex64::new(0.428_769_821_4, 0.198_208_477_1)).norm() < 1e-6);
        assert!((direct.norm() - (-0.75f64).exp()).abs() < 1e-14);
        assert!(direct.norm() <= 1.0);
    }

    #[test]
    fn vacuum_ensemble() {
        let e = CoherentEnsemble::equiprobable(0.0).unwrap();
        assert_eq!(e.gram_eigenvalues(), [3.0, 0.0, 0.0]);
        for j in 0..3 {
            for k in 0..3 {
                assert!((e.gram().get(j, k) - 1.0).norm() < 1e-15);
            }
        }
        let v = e.state_vectors();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[1], v[2]);
    }

    #[test]
    fn split_gram_at_one_photon() {
        let e = CoherentEnsemble::equiprobable(1.0).unwrap();
        for (j, k) in [(0, 1), (1, 2), (0, 2)] {
            assert!((e.gram().get(j, k).norm() - (-0.75f64).exp()).abs() < 1e-14);
        }
        assert!((e.split_amplitudes()[1] - e.amplitudes()[1] / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn embedding_and_symmetry() {
        for nbar in [0.0, 0.01, 0.3, 1.0, 2.0, 7.5] {
            let e = CoherentEnsemble::equiprobable(nbar).unwrap();
            assert!(e.embedding_error() < 1e-10, "nbar {nbar}");
            let v = symmetry_op();
            for m in 0..3 {
                let shifted: CVec<f64> = (0..3).map(|k| v[k] * e.state_vectors()[m][k]).collect();
                for (x, y) in shifted.iter().zip(&e.state_vectors()[(m + 1) % 3]) {
                    assert!((x - y).norm() < 1e-10);
                }
            }
            for z in v {
                assert!((z * z * z - 1.0).norm() < 1e-14);
            }
            // circulant
            let g = e.gram();
            for j in 0..3 {
                for k in 0..3 {
                    assert!((g.get(j, k) - g.get(0, (k + 3 - j) % 3)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_cross_checked_with_eigh() {
        for nbar in [0.1, 1.0, 2.0] {
            let e = CoherentEnsemble::equiprobable(nbar).unwrap();
            let mu = e.gram_eigenvalues();
            let c1 = e.gram().get(0, 1);
            let mut closed: Vec<f64> = (0..3).map(|k| 1.0 + 2.0 * (c1 * omega(-k)).re).collect();
            closed.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let direct = eigh(e.gram()).unwrap().values;
            for k in 0..3 {
                assert!((mu[k] - direct[k]).abs() < 1e-12);
                assert!((mu[k] - closed[k]).abs() < 1e-13);
            }
            assert!((mu.iter().sum::<f64>() - 3.0).abs() < 1e-10);
            assert!(mu.windows(2).all(|w| w[0] >= w[1]));
        }
        let e = CoherentEnsemble::equiprobable(50.0).unwrap();
        for mu in e.gram_eigenvalues() {
            assert!((mu - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_priors() {
        assert!(CoherentEnsemble::new(1.0, [0.5, 0.5, 0.5]).is_err());
        assert!(CoherentEnsemble::new(1.0, [1.2, -0.2, 0.0]).is_err());
        assert!(CoherentEnsemble::new(-1.0, EQUAL_PRIORS).is_err());
    }
}
