//! Haar unitary and orthogonal samplers, sums of independent Haar matrices
//! and their hermitization.
//!
//! # Seeding
//!
//! Every random draw is keyed by a 64-bit seed. A summand or replica with
//! index `i` derived from a parent seed `s` uses [`mix_seed`]`(s, i)`:
//!
//! ```text
//! mix_seed(s, i) = splitmix64(s ^ splitmix64(i + 0x9E37_79B9_7F4A_7C15))
//! ```
//!
//! and the matrix itself is drawn from a ChaCha8 stream seeded with that
//! value. Summand `i` of a sum uses `mix_seed(spec.seed, i)`; replica `r` of a
//! Monte Carlo experiment uses [`replica_seed`]`(seed, r)`, which mixes in a
//! separate domain so replica and summand indices never collide. Results
//! depend only on `(seed, index)`, never on evaluation order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, HermMatrix};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const REPLICA_DOMAIN: u64 = 1 << 63;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN_GAMMA);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Sub-seed for index `index` under `seed`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(GOLDEN_GAMMA)))
}

/// Seed of Monte Carlo replica `replica`.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    mix_seed(seed, REPLICA_DOMAIN | replica)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How to build `S = U_1 + ... + U_{d'} + O_{d'+1} + ... + O_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub d: usize,
    pub d_prime: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, d: usize, d_prime: usize, seed: u64) -> Result<Self> {
        let spec = Self { n, d, d_prime, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// All-unitary sum.
    pub fn unitary(n: usize, d: usize, seed: u64) -> Result<Self> {
        Self::new(n, d, d, seed)
    }

    /// All-orthogonal sum.
    pub fn orthogonal(n: usize, d: usize, seed: u64) -> Result<Self> {
        Self::new(n, d, 0, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("ensemble dimension n must be at least 1");
        }
        if self.d == 0 {
            return invalid("ensemble needs at least one summand (d >= 1)");
        }
        if self.d_prime > self.d {
            return invalid(format!("unitary count d' = {} exceeds d = {}", self.d_prime, self.d));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// The same ensemble re-keyed for replica `r`.
    pub fn replica(self, r: u64) -> Self {
        self.with_seed(replica_seed(self.seed, r))
    }
}

/// The spectral parameter `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexShift(Complex64);

impl ComplexShift {
    pub fn new(v: Complex64) -> Result<Self> {
        if !v.re.is_finite() || !v.im.is_finite() {
            return invalid("shift v must be finite");
        }
        Ok(Self(v))
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(Complex64::new(r, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn modulus(&self) -> f64 {
        self.0.norm()
    }
}

/// Haar unitary matrix: complex Ginibre columns orthonormalized by classical
/// Gram-Schmidt with one reorthogonalization pass. Gram-Schmidt produces an
/// `R` factor with positive real diagonal, which is exactly the phase
/// convention under which `Q` is Haar distributed.
pub fn sample_haar_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = rng_from_seed(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();
    let q = orthonormalize(cols);
    CMatrix::from_fn(n, n, |i, j| q[j][i])
}

/// Haar orthogonal matrix from real Ginibre columns, same construction as
/// [`sample_haar_unitary`]. Stored with zero imaginary parts.
pub fn sample_haar_orthogonal(n: usize, seed: u64) -> CMatrix {
    let mut rng = rng_from_seed(seed);
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    for j in 0..n {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    CMatrix::from_fn(n, n, |i, j| Complex64::new(cols[j][i], 0.0))
}

fn orthonormalize(mut cols: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
    }
    cols
}

/// `S_n`: summands `0..d'` are unitary, the rest orthogonal; summand `i` is
/// drawn with seed `mix_seed(spec.seed, i)`.
pub fn sample_sum(spec: &EnsembleSpec) -> Result<CMatrix> {
    spec.validate()?;
    let summands: Vec<CMatrix> = (0..spec.d)
        .into_par_iter()
        .map(|i| {
            let seed = mix_seed(spec.seed, i as u64);
            if i < spec.d_prime {
                sample_haar_unitary(spec.n, seed)
            } else {
                sample_haar_orthogonal(spec.n, seed)
            }
        })
        .collect();
    let mut it = summands.into_iter();
    let first = it.next().expect("d >= 1");
    it.try_fold(first, |acc, m| acc.add(&m))
}

/// `[[0, m - vI], [(m - vI)^H, 0]]`.
pub fn hermitize(m: &CMatrix, v: ComplexShift) -> Result<HermMatrix> {
    let n = m.require_square()?;
    let shifted = m.shifted(v.value());
    let h = CMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => shifted[(i, j - n)],
        (false, true) => shifted[(j, i - n)].conj(),
        _ => Complex64::new(0.0, 0.0),
    });
    Ok(HermMatrix::new_unchecked(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_eigenvalues;

    #[test]
    fn one_by_one_unitary_has_unit_modulus() {
        for seed in 0..20 {
            let u = sample_haar_unitary(1, seed);
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_haar_unitary(6, 9), sample_haar_unitary(6, 9));
        assert_ne!(sample_haar_unitary(6, 9), sample_haar_unitary(6, 10));
        let spec = EnsembleSpec::new(5, 3, 1, 77).unwrap();
        assert_eq!(sample_sum(&spec).unwrap(), sample_sum(&spec).unwrap());
    }

    #[test]
    fn distinct_indices_get_distinct_seeds() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| mix_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(mix_seed(42, 0), replica_seed(42, 0));
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(0, 1, 0, 0).is_err());
        assert!(EnsembleSpec::new(3, 0, 0, 0).is_err());
        assert!(EnsembleSpec::new(3, 2, 3, 0).is_err());
        assert!(ComplexShift::new(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn hermitize_identity_and_zero() {
        let h = hermitize(&CMatrix::identity(4), ComplexShift::real(0.0).unwrap()).unwrap();
        assert!(herm_eigenvalues(&h)
            .unwrap()
            .iter()
            .all(|x| (x.abs() - 1.0).abs() < 1e-14));
        let h = hermitize(&CMatrix::zeros(3, 3), ComplexShift::real(2.0).unwrap()).unwrap();
        assert!(herm_eigenvalues(&h)
            .unwrap()
            .iter()
            .all(|x| (x.abs() - 2.0).abs() < 1e-14));
    }
}
