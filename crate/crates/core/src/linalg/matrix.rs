use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                data.push(f(i, j));
            }
        }
        Self { n_rows, n_cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(n_rows: usize, n_cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n_rows}x{n_cols} matrix, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        let m = Self { n_rows, n_cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(k) => Err(Error::NonFinite {
                row: k / self.n_cols,
                col: k % self.n_cols,
            }),
            None => Ok(()),
        }
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.n_rows)
        } else {
            Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            })
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::InvalidArgument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut out = CMatrix::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            let out_row = &mut out.data[i * rhs.n_cols..(i + 1) * rhs.n_cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.n_rows != rhs.n_rows || self.n_cols != rhs.n_cols {
            return Err(Error::InvalidArgument("matrix shapes differ".into()));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(CMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self - v I` for a square matrix.
    pub fn shifted(&self, v: Complex64) -> CMatrix {
        let mut out = self.clone();
        for i in 0..self.n_rows.min(self.n_cols) {
            out[(i, i)] -= v;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n_rows.min(self.n_cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `self` from the identity.
    pub fn identity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixJson::from(self)).expect("matrix serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<CMatrix> {
        let raw: MatrixJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("bad matrix JSON: {e}")))?;
        raw.try_into()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// JSON layout: dimensions plus row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson {
            n_rows: m.n_rows,
            n_cols: m.n_cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        let data = raw.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        CMatrix::from_row_major(raw.n_rows, raw.n_cols, data)
    }
}

/// A square matrix verified to be Hermitian up to
/// `1e-12 * (1 + max |A|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

impl HermMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.require_square()?;
        m.check_finite()?;
        let tolerance = HERMITIAN_TOLERANCE * (1.0 + m.max_abs());
        let mut worst = (0usize, 0usize, 0.0f64);
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        if worst.2 > tolerance {
            return Err(Error::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
                tolerance,
            });
        }
        Ok(HermMatrix(m))
    }

    /// Wraps a matrix whose construction guarantees exact Hermitian symmetry.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        HermMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.n_rows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}
