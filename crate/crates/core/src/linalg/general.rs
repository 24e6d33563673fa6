use num_complex::Complex64;

use super::hermitian::MAX_SWEEPS_PER_EIGENVALUE;
use super::householder::reflector;
use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::measures::PlanarSpectrum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Eigenvalues of a general square complex matrix.
///
/// Householder reduction to upper Hessenberg form, then single-shift complex
/// QR with Wilkinson shifts and deflation. Only the active block is updated
/// since eigenvectors are never formed.
pub fn general_eigenvalues(m: &CMatrix) -> Result<PlanarSpectrum> {
    let n = m.require_square()?;
    m.check_finite()?;
    let mut h = m.as_slice().to_vec();
    hessenberg_in_place(&mut h, n);
    let eig = hessenberg_qr(&mut h, n)?;
    Ok(PlanarSpectrum::new(eig))
}

fn hessenberg_in_place(a: &mut [Complex64], n: usize) {
    let mut s = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let Some(h) = reflector(&x) else { continue };
        let v = &h.v;
        // Left: rows k+1.., columns k..
        s[k..].iter_mut().for_each(|z| *z = ZERO);
        for (r, vr) in v.iter().enumerate() {
            let vc = vr.conj();
            let row = &a[(k + 1 + r) * n + k..(k + 1 + r) * n + n];
            for (sj, aij) in s[k..].iter_mut().zip(row) {
                *sj += vc * aij;
            }
        }
        for (r, vr) in v.iter().enumerate() {
            let f = *vr * h.tau;
            let row = &mut a[(k + 1 + r) * n + k..(k + 1 + r) * n + n];
            for (aij, sj) in row.iter_mut().zip(&s[k..]) {
                *aij -= f * sj;
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let row = &mut a[i * n + k + 1..i * n + n];
            let t: Complex64 = row.iter().zip(v).map(|(x, v)| x * v).sum::<Complex64>() * h.tau;
            for (x, v) in row.iter_mut().zip(v) {
                *x -= t * v.conj();
            }
        }
        a[(k + 1) * n + k] = h.beta;
        for i in k + 2..n {
            a[i * n + k] = ZERO;
        }
    }
}

fn hessenberg_qr(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let norm = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let small = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let at = |i: usize, j: usize| i * n + j;

    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut rot = vec![(ZERO, ZERO); n];
    loop {
        if hi == 0 {
            eig[0] = h[0];
            break;
        }
        // Locate the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[at(lo, lo - 1)].norm();
            let tst = h[at(lo - 1, lo - 1)].norm() + h[at(lo, lo)].norm();
            if sub <= f64::EPSILON * tst || sub <= small {
                h[at(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[at(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::NoConvergence {
                iterations: iter - 1,
                remaining: hi + 1,
            });
        }

        let sigma = if iter.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            let mut s = h[at(hi, hi)] + Complex64::new(h[at(hi, hi - 1)].re.abs(), 0.0);
            if hi >= 2 {
                s += Complex64::new(h[at(hi - 1, hi - 2)].re.abs(), 0.0);
            }
            s
        } else {
            wilkinson_shift(
                h[at(hi - 1, hi - 1)],
                h[at(hi - 1, hi)],
                h[at(hi, hi - 1)],
                h[at(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[at(k, k)] -= sigma;
        }
        for k in lo..hi {
            let a = h[at(k, k)];
            let b = h[at(k + 1, k)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), ZERO)
            } else {
                (a / r, b / r)
            };
            rot[k] = (c, s);
            for j in k..=hi {
                let x = h[at(k, j)];
                let y = h[at(k + 1, j)];
                h[at(k, j)] = c.conj() * x + s.conj() * y;
                h[at(k + 1, j)] = -s * x + c * y;
            }
        }
        for k in lo..hi {
            let (c, s) = rot[k];
            for i in lo..=(k + 1).min(hi) {
                let x = h[at(i, k)];
                let y = h[at(i, k + 1)];
                h[at(i, k)] = x * c + y * s;
                h[at(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for k in lo..=hi {
            h[at(k, k)] += sigma;
        }
    }
    Ok(eig)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(m: &CMatrix) -> Result<Complex64> {
    let n = m.require_square()?;
    let mut a = m.as_slice().to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
            .unwrap();
        if a[p * n + k] == ZERO {
            return Ok(ZERO);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let pivot = a[k * n + k];
        det *= pivot;
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            if f == ZERO {
                continue;
            }
            for j in k + 1..n {
                let akj = a[k * n + j];
                a[i * n + j] -= f * akj;
            }
        }
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_eigenvalues() {
        let t = PI / 3.0;
        let m = CMatrix::from_row_major(
            2,
            2,
            vec![
                Complex64::new(t.cos(), 0.0),
                Complex64::new(-t.sin(), 0.0),
                Complex64::new(t.sin(), 0.0),
                Complex64::new(t.cos(), 0.0),
            ],
        )
        .unwrap();
        let mut eig = general_eigenvalues(&m).unwrap().into_points();
        eig.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((eig[0] - Complex64::from_polar(1.0, -t)).norm() < 1e-14);
        assert!((eig[1] - Complex64::from_polar(1.0, t)).norm() < 1e-14);
    }

    #[test]
    fn upper_triangular_gives_diagonal() {
        let diag = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.25, -1.0),
            Complex64::new(2.0, 0.0),
        ];
        let m = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                diag[i]
            } else if j > i {
                Complex64::new((i + 2 * j) as f64, -(j as f64))
            } else {
                ZERO
            }
        });
        let eig = general_eigenvalues(&m).unwrap().into_points();
        for d in diag {
            assert!(eig.iter().any(|e| (e - d).norm() < 1e-12), "missing {d}");
        }
    }

    #[test]
    fn determinant_of_permutation() {
        let one = Complex64::new(1.0, 0.0);
        let m = CMatrix::from_fn(3, 3, |i, j| if (i + 1) % 3 == j { one } else { ZERO });
        assert!((determinant(&m).unwrap() - one).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            general_eigenvalues(&CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }
}
