use num_complex::Complex64;

use super::householder::reflector;
use super::matrix::HermMatrix;
use crate::error::{Error, Result};

/// Iteration budget per eigenvalue before the QL sweep gives up.
pub const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Householder reduction to a real symmetric tridiagonal matrix followed by
/// implicit-shift QL.
pub fn herm_eigenvalues(m: &HermMatrix) -> Result<Vec<f64>> {
    let (diag, off) = tridiagonalize(m);
    let mut eig = tridiagonal_eigenvalues(diag, off)?;
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Reduces `m` to tridiagonal form `Q^H m Q`. Off-diagonal entries are
/// returned by modulus: a diagonal unitary similarity makes them real and
/// non-negative without changing the spectrum.
pub(crate) fn tridiagonalize(m: &HermMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n();
    let mut a: Vec<Complex64> = m.as_matrix().as_slice().to_vec();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut p = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let Some(h) = reflector(&x) else {
            off[k] = x[0].norm();
            continue;
        };
        off[k] = h.beta.norm();
        let m_len = n - k - 1;
        let v = &h.v;
        // p = tau * B v over the trailing block B = a[k+1.., k+1..]
        for (r, pr) in p[..m_len].iter_mut().enumerate() {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            let s: Complex64 = row.iter().zip(v).map(|(b, v)| b * v).sum();
            *pr = s * h.tau;
        }
        let vp: Complex64 = v.iter().zip(&p[..m_len]).map(|(v, p)| v.conj() * p).sum();
        let kfac = vp * (0.5 * h.tau);
        let w: Vec<Complex64> = p[..m_len].iter().zip(v).map(|(p, v)| p - kfac * v).collect();
        for r in 0..m_len {
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            let (vr, wr) = (v[r], w[r]);
            for (c, b) in row.iter_mut().enumerate() {
                *b -= vr * w[c].conj() + wr * v[c].conj();
            }
        }
    }
    for (i, d) in diag.iter_mut().enumerate() {
        *d = a[i * n + i].re;
    }
    (diag, off)
}

/// Eigenvalues (unsorted) of the real symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e` (`e[i]` couples rows `i` and `i+1`).
pub(crate) fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = off;
    e.resize(n, 0.0);
    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let small = f64::EPSILON * anorm;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= small {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::NoConvergence {
                    iterations: iter - 1,
                    remaining: n - l,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn swap_matrix() {
        let m = CMatrix::from_row_major(2, 2, vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap();
        let eig = herm_eigenvalues(&HermMatrix::new(m).unwrap()).unwrap();
        assert!((eig[0] + 1.0).abs() < 1e-15 && (eig[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_is_sorted() {
        let d = [3.0, -1.0, 2.5, 0.0, -7.0];
        let m = CMatrix::diagonal(&d.map(c));
        let eig = herm_eigenvalues(&HermMatrix::new(m).unwrap()).unwrap();
        assert_eq!(eig, vec![-7.0, -1.0, 0.0, 2.5, 3.0]);
    }

    #[test]
    fn rejects_non_hermitian_with_worst_pair() {
        let m = CMatrix::from_row_major(
            3,
            3,
            vec![
                c(1.0),
                c(2.0),
                c(0.0),
                c(2.0),
                c(1.0),
                Complex64::new(0.0, 0.5),
                c(0.0),
                Complex64::new(0.0, 0.5),
                c(1.0),
            ],
        )
        .unwrap();
        match HermMatrix::new(m) {
            Err(Error::NotHermitian {
                row, col, deviation, ..
            }) => {
                assert_eq!((row, col), (1, 2));
                assert!((deviation - 1.0).abs() < 1e-15);
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn zero_diagonal_tridiagonal() {
        // Golub-Kahan form of diag(3, 4): eigenvalues are +-3, +-4.
        let eig = tridiagonal_eigenvalues(vec![0.0; 4], vec![3.0, 0.0, 4.0]).unwrap();
        let mut eig = eig;
        eig.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip([-4.0, -3.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
