//! Dense complex linear algebra for small Hermitian matrices.
//!
//! Everything here is sized for dimension three (the span of the split coherent
//! states), but nothing assumes it; the eigensolver is a cyclic complex Jacobi
//! iteration, which is unconditionally convergent and deterministic at these sizes.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tol::TOL;

pub type CVec<T> = Vec<Complex<T>>;

/// Hermitian matrix stored as its lower triangle (row-major, `j >= k`).
///
/// Reads above the diagonal return the conjugate of the mirrored entry and the
/// diagonal has its imaginary part dropped on write, so Hermitian symmetry holds
/// exactly no matter how the entries were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian<T> {
    dim: usize,
    lower: Vec<Complex<T>>,
}

#[inline]
fn tri(j: usize, k: usize) -> usize {
    debug_assert!(j >= k);
    j * (j + 1) / 2 + k
}

impl<T: Real> Hermitian<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Hermitian {
            dim,
            lower: vec![Complex::new(T::zero(), T::zero()); dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![T::one(); dim])
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (j, &x) in d.iter().enumerate() {
            m.lower[tri(j, j)] = Complex::new(x, T::zero());
        }
        m
    }

    /// Builds from a closure evaluated on the lower triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            for k in 0..=j {
                m.set(j, k, f(j, k));
            }
        }
        m
    }

    /// Builds from a full dense matrix, reading the lower triangle.
    pub fn from_dense(rows: &[Vec<Complex<T>>]) -> Self {
        Self::from_fn(rows.len(), |j, k| rows[j][k])
    }

    /// `w * v v^†`
    pub fn scaled_outer(w: T, v: &[Complex<T>]) -> Self {
        Self::from_fn(v.len(), |j, k| v[j] * v[k].conj() * w)
    }

    pub fn outer(v: &[Complex<T>]) -> Self {
        Self::scaled_outer(T::one(), v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex<T> {
        if j >= k {
            self.lower[tri(j, k)]
        } else {
            self.lower[tri(k, j)].conj()
        }
    }

    /// Sets entry `(j, k)` and, implicitly, its mirror.
    pub fn set(&mut self, j: usize, k: usize, z: Complex<T>) {
        if j == k {
            self.lower[tri(j, j)] = Complex::new(z.re, T::zero());
        } else if j > k {
            self.lower[tri(j, k)] = z;
        } else {
            self.lower[tri(k, j)] = z.conj();
        }
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|j| self.lower[tri(j, j)].re).collect()
    }

    pub fn trace(&self) -> T {
        self.diag().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for j in 0..self.dim {
            for k in 0..=j {
                let a = self.lower[tri(j, k)].norm_sqr();
                s += if j == k { a } else { a + a };
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: T) -> Self {
        Hermitian {
            dim: self.dim,
            lower: self.lower.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s I`
    pub fn shift(&self, s: T) -> Self {
        let mut m = self.clone();
        for j in 0..self.dim {
            m.lower[tri(j, j)].re += s;
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|k| self.get(j, k)).collect())
            .collect()
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> CVec<T> {
        (0..self.dim)
            .map(|j| (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + self.get(j, k) * v[k]))
            .collect()
    }

    /// `u^† M u`, real by Hermiticity.
    pub fn quad_form(&self, u: &[Complex<T>]) -> T {
        let mu = self.mul_vec(u);
        u.iter().zip(&mu).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `Tr(self * other)` for two Hermitian matrices.
    pub fn trace_product(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        let mut s = T::zero();
        for j in 0..self.dim {
            for k in 0..self.dim {
                s += (self.get(j, k) * other.get(k, j)).re;
            }
        }
        s
    }

    /// `U M U^†` for a square (typically unitary) `U`.
    pub fn conjugate_by(&self, u: &[Vec<Complex<T>>]) -> Self {
        let n = self.dim;
        let m = self.to_dense();
        let zero = Complex::new(T::zero(), T::zero());
        let mut um = vec![vec![zero; n]; n];
        for j in 0..n {
            for k in 0..n {
                um[j][k] = (0..n).fold(zero, |acc, l| acc + u[j][l] * m[l][k]);
            }
        }
        Self::from_fn(n, |j, k| (0..n).fold(zero, |acc, l| acc + um[j][l] * u[k][l].conj()))
    }

    /// Number of real coordinates of a Hermitian matrix of this dimension.
    pub fn n_coords(dim: usize) -> usize {
        dim * dim
    }

    /// Real coordinates: the diagonal, then `(Re, Im)` of each strictly-lower entry.
    pub fn to_coords(&self) -> Vec<T> {
        let mut c = self.diag();
        for j in 0..self.dim {
            for k in 0..j {
                let z = self.lower[tri(j, k)];
                c.push(z.re);
                c.push(z.im);
            }
        }
        c
    }

    pub fn from_coords(dim: usize, c: &[T]) -> Self {
        assert_eq!(c.len(), dim * dim);
        let mut m = Self::from_diag(&c[..dim]);
        let mut idx = dim;
        for j in 0..dim {
            for k in 0..j {
                m.lower[tri(j, k)] = Complex::new(c[idx], c[idx + 1]);
                idx += 2;
            }
        }
        m
    }

    /// Gradient of `X -> Tr(self * X)` in the coordinates of [`Hermitian::to_coords`].
    pub fn trace_functional(&self) -> Vec<T> {
        let two = T::lit(2.0);
        let mut g = self.diag();
        for j in 0..self.dim {
            for k in 0..j {
                let z = self.lower[tri(j, k)];
                g.push(two * z.re);
                g.push(two * z.im);
            }
        }
        g
    }

    /// Cholesky factor `L` (lower, row-major dense) if the matrix is positive definite.
    pub fn cholesky(&self) -> Option<Vec<Vec<Complex<T>>>> {
        let n = self.dim;
        let zero = Complex::new(T::zero(), T::zero());
        let mut l = vec![vec![zero; n]; n];
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[j][j] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of a positive-definite matrix via Cholesky; `None` if not PD.
    pub fn inverse_pd(&self) -> Option<Self> {
        let n = self.dim;
        let l = self.cholesky()?;
        let zero = Complex::new(T::zero(), T::zero());
        // Solve L L^† x = e_c for each column c.
        let mut cols = Vec::with_capacity(n);
        for c in 0..n {
            let mut y = vec![zero; n];
            for i in 0..n {
                let mut s = if i == c { Complex::new(T::one(), T::zero()) } else { zero };
                for k in 0..i {
                    s -= l[i][k] * y[k];
                }
                y[i] = s / l[i][i];
            }
            let mut x = vec![zero; n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s -= l[k][i].conj() * x[k];
                }
                x[i] = s / l[i][i];
            }
            cols.push(x);
        }
        Some(Self::from_fn(n, |j, k| cols[k][j]))
    }

    /// Applies `f` to the eigenvalues: `V f(Λ) V^†`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let e = eigh(self)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            out = &out + &Self::scaled_outer(f(*lam), v);
        }
        Ok(out)
    }
}

impl<T: Real> Add for &Hermitian<T> {
    type Output = Hermitian<T>;
    fn add(self, rhs: Self) -> Hermitian<T> {
        assert_eq!(self.dim, rhs.dim);
        Hermitian {
            dim: self.dim,
            lower: self.lower.iter().zip(&rhs.lower).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Hermitian<T> {
    type Output = Hermitian<T>;
    fn sub(self, rhs: Self) -> Hermitian<T> {
        assert_eq!(self.dim, rhs.dim);
        Hermitian {
            dim: self.dim,
            lower: self.lower.iter().zip(&rhs.lower).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> AddAssign<&Hermitian<T>> for Hermitian<T> {
    fn add_assign(&mut self, rhs: &Hermitian<T>) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.lower.iter_mut().zip(&rhs.lower) {
            *a = *a + b;
        }
    }
}

impl<T: Real> Neg for &Hermitian<T> {
    type Output = Hermitian<T>;
    fn neg(self) -> Hermitian<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for &Hermitian<T> {
    type Output = Hermitian<T>;
    fn mul(self, s: T) -> Hermitian<T> {
        self.scale(s)
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Vec<CVec<T>>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn reconstruct(&self) -> Hermitian<T> {
        let n = self.values.len();
        let mut m = Hermitian::zeros(n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            m += &Hermitian::scaled_outer(*lam, v);
        }
        m
    }
}

fn off_diag_norm<T: Real>(a: &[Vec<Complex<T>>]) -> T {
    let n = a.len();
    let mut s = T::zero();
    for j in 0..n {
        for k in 0..n {
            if j != k {
                s += a[j][k].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh<T: Real>(m: &Hermitian<T>) -> Result<EigenDecomposition<T>> {
    if !m.is_finite() {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let n = m.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut a = m.to_dense();
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| (0..n).map(|k| if j == k { one } else { zero }).collect())
        .collect();

    let scale = T::one().max(m.frobenius_norm());
    let tol = T::lit(TOL.jacobi_off_diag).max(T::epsilon() * T::lit(4.0)) * scale;

    let mut converged = off_diag_norm(&a) <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < TOL.jacobi_max_sweeps {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                // Phase that makes a[p][q] real and positive, then a real rotation.
                let phase = apq / r;
                let theta = (a[p][p].re - a[q][q].re) / (r + r);
                let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = -sgn / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // G = D R with D = diag(1, conj(phase)) on (p, q).
                let gpp = Complex::new(c, T::zero());
                let gpq = Complex::new(s, T::zero());
                let gqp = phase.conj() * (-s);
                let gqq = phase.conj() * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * gpp + y * gqp;
                    row[q] = x * gpq + y * gqq;
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = gpp.conj() * x + gqp.conj() * y;
                    a[q][k] = gpq.conj() * x + gqq.conj() * y;
                }
                a[p][q] = zero;
                a[q][p] = zero;
                a[p][p].im = T::zero();
                a[q][q].im = T::zero();
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * gpp + y * gqp;
                    row[q] = x * gpq + y * gqq;
                }
            }
        }
        sweeps += 1;
        converged = off_diag_norm(&a) <= tol;
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            residual: off_diag_norm(&a).to_f64_lossy(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].re.partial_cmp(&a[i][i].re).unwrap().then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i].re).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|r| v[r][i]).collect())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Largest eigenvalue and a unit eigenvector for it.
pub fn max_eig<T: Real>(m: &Hermitian<T>) -> Result<(T, CVec<T>)> {
    let mut e = eigh(m)?;
    Ok((e.values[0], e.vectors.swap_remove(0)))
}

pub fn min_eig<T: Real>(m: &Hermitian<T>) -> Result<(T, CVec<T>)> {
    let mut e = eigh(m)?;
    let n = e.values.len();
    Ok((e.values[n - 1], e.vectors.swap_remove(n - 1)))
}

/// `true` iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd<T: Real>(m: &Hermitian<T>, tol: T) -> Result<bool> {
    Ok(min_eig(m)?.0 >= -tol)
}

pub fn vnorm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// `<a|b>`
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}
