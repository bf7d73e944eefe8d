//! Small dense real linear solves.

use crate::scalar::Real;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tiny` (singular to working precision).
pub fn solve<T: Real>(a: &[Vec<T>], b: &[T], tiny: T) -> Option<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() <= tiny {
            return None;
        }
        m.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            if f != T::zero() {
                for c in col..=n {
                    let v = m[col][c];
                    m[r][c] -= f * v;
                }
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = m[r][n];
        for c in (r + 1)..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

/// Solves a symmetric positive-definite system after symmetric diagonal scaling.
///
/// Newton systems near the end of a barrier path span many orders of magnitude;
/// equilibrating first keeps Cholesky usable. Falls back to pivoted elimination.
pub fn solve_spd<T: Real>(h: &[Vec<T>], g: &[T]) -> Option<Vec<T>> {
    let n = g.len();
    let d: Vec<T> = (0..n)
        .map(|i| {
            let hii = h[i][i];
            if hii > T::zero() {
                T::one() / hii.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let mut a = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = h[i][j] * d[i] * d[j];
        }
    }
    let rhs: Vec<T> = (0..n).map(|i| g[i] * d[i]).collect();
    let y = cholesky_solve(&a, &rhs).or_else(|| solve(&a, &rhs, T::epsilon() * T::lit(1e-3)))?;
    Some((0..n).map(|i| y[i] * d[i]).collect())
}

fn cholesky_solve<T: Real>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let mut s = a[j][j];
        for k in 0..j {
            s -= l[j][k] * l[j][k];
        }
        if !(s > T::zero()) {
            return None;
        }
        l[j][j] = s.sqrt();
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_solve() {
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let x: Vec<f64> = solve(&a, &[3.0, 2.0, 4.0], 1e-14).unwrap();
        for (xi, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - want).abs() < 1e-14);
        }
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0], 1e-14).is_none());
    }

    #[test]
    fn badly_scaled_spd() {
        let h = vec![vec![1e12, 1.0], vec![1.0, 1e-6]];
        let g = vec![1e12 + 1.0, 1.0 + 1e-6];
        let x: Vec<f64> = solve_spd(&h, &g).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-6);
    }
}
