use num_complex::Complex64;

use super::hermitian::tridiagonal_eigenvalues;
use super::householder::reflector;
use super::matrix::CMatrix;
use crate::error::Result;

/// Singular values in descending order.
///
/// Householder bidiagonalization, then the eigenvalues of the Golub-Kahan
/// tridiagonal (zero diagonal, interleaved bidiagonal entries) which are
/// exactly plus/minus the singular values.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    m.check_finite()?;
    let owned;
    let a = if m.n_rows() >= m.n_cols() {
        m
    } else {
        owned = m.adjoint();
        &owned
    };
    let (diag, sup) = bidiagonalize(a);
    let n = diag.len();
    let mut off = Vec::with_capacity(2 * n - 1);
    for k in 0..n {
        off.push(diag[k]);
        if k + 1 < n {
            off.push(sup[k]);
        }
    }
    let mut eig = tridiagonal_eigenvalues(vec![0.0; 2 * n], off)?;
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.truncate(n);
    for s in &mut eig {
        *s = s.max(0.0);
    }
    Ok(eig)
}

/// Smallest singular value.
pub fn smallest_singular_value(m: &CMatrix) -> Result<f64> {
    Ok(*singular_values(m)?
        .last()
        .expect("matrix has at least one singular value"))
}

/// Moduli of the diagonal and superdiagonal of an upper bidiagonal form of
/// `a` (requires `rows >= cols`).
fn bidiagonalize(a: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = (a.n_rows(), a.n_cols());
    let mut w = a.as_slice().to_vec();
    let mut diag = vec![0.0; cols];
    let mut sup = vec![0.0; cols.saturating_sub(1)];
    let mut s = vec![Complex64::new(0.0, 0.0); cols];

    for k in 0..cols {
        // Left reflector on column k, rows k..
        let x: Vec<Complex64> = (k..rows).map(|i| w[i * cols + k]).collect();
        match reflector(&x) {
            None => diag[k] = x[0].norm(),
            Some(h) => {
                diag[k] = h.beta.norm();
                let v = &h.v;
                s[k + 1..].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for (r, vr) in v.iter().enumerate() {
                    let vc = vr.conj();
                    let row = &w[(k + r) * cols + k + 1..(k + r) * cols + cols];
                    for (sj, x) in s[k + 1..].iter_mut().zip(row) {
                        *sj += vc * x;
                    }
                }
                for (r, vr) in v.iter().enumerate() {
                    let f = *vr * h.tau;
                    let row = &mut w[(k + r) * cols + k + 1..(k + r) * cols + cols];
                    for (x, sj) in row.iter_mut().zip(&s[k + 1..]) {
                        *x -= f * sj;
                    }
                }
            }
        }
        if k + 1 >= cols {
            continue;
        }
        // Right reflector on row k, columns k+1..; built from the conjugated row.
        let y: Vec<Complex64> = (k + 1..cols).map(|j| w[k * cols + j].conj()).collect();
        match reflector(&y) {
            None => sup[k] = y[0].norm(),
            Some(h) => {
                sup[k] = h.beta.norm();
                let v = &h.v;
                for i in k + 1..rows {
                    let row = &mut w[i * cols + k + 1..i * cols + cols];
                    let t: Complex64 = row.iter().zip(v).map(|(x, v)| x * v).sum::<Complex64>() * h.tau;
                    for (x, v) in row.iter_mut().zip(v) {
                        *x -= t * v.conj();
                    }
                }
            }
        }
    }
    (diag, sup)
}
