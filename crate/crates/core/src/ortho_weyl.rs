//! Expected Stieltjes transform of the hermitized `O - vI` for a Haar
//! orthogonal `O` of odd dimension, via Weyl's integration formula, with
//! Monte Carlo cross-checks.
//!
//! For `n = 2l + 1` an element of the class `det = +-1` has eigenvalues
//! `+-1` and `l` conjugate pairs `e^{+-i theta_j}`. Each angle has marginal
//! density `q+-(theta) = (1/2pi)(1 -+ sin(2l theta) / (2l sin theta))`, and the
//! singular values of `R(theta) - vI_2` are
//! `sqrt(1 + |v|^2 - 2|v| cos(theta +- arg v))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::stieltjes_g1;
use crate::ensembles::{replica_seed, sample_haar_orthogonal};
use crate::error::{Error, Result};
use crate::linalg::{determinant, singular_values};

type C64 = Complex64;

/// Trapezoid nodes on `[-pi, pi)` for the angle integrals.
pub const ANGLE_NODES: usize = 2048;
const CONVERGENCE_TOL: f64 = 1e-8;

/// Determinant class of odd-dimensional orthogonal matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrthoClassSpec {
    n: usize,
    sign: i8,
}

impl OrthoClassSpec {
    pub fn new(n: usize, sign: i8) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "angle densities are implemented for odd n >= 3 only, got n = {n}"
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!(
                "class sign must be +1 or -1, got {sign}"
            )));
        }
        Ok(Self { n, sign })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Number of rotation angles `l = (n - 1) / 2`.
    pub fn ell(&self) -> usize {
        (self.n - 1) / 2
    }
}

/// Marginal density of one eigenangle in the given class.
pub fn angle_density_q(spec: OrthoClassSpec, theta: f64) -> Result<f64> {
    if !(-PI - 1e-12..=PI + 1e-12).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [-pi, pi], got {theta}"
        )));
    }
    Ok(q_unchecked(spec, theta))
}

fn q_unchecked(spec: OrthoClassSpec, theta: f64) -> f64 {
    let l2 = 2.0 * spec.ell() as f64;
    let s = theta.sin();
    // sin(2l theta) / (2l sin theta), continued through multiples of pi
    let ratio = if s.abs() < 1e-7 {
        (l2 * theta).cos() / theta.cos()
    } else {
        (l2 * theta).sin() / (l2 * s)
    };
    (1.0 - spec.sign as f64 * ratio) / (2.0 * PI)
}

/// `g(z, s) = z / (z^2 - s)`.
fn g(z: C64, s: f64) -> C64 {
    z / (z * z - s)
}

/// `int g(z, 1 + r^2 - 2 r cos(theta + phi)) q(theta) dtheta` with `nodes`
/// trapezoid points.
fn angle_integral(spec: OrthoClassSpec, r: f64, phi: f64, z: C64, nodes: usize) -> C64 {
    let h = 2.0 * PI / nodes as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = -PI + k as f64 * h;
        acc += g(z, 1.0 + r * r - 2.0 * r * (theta + phi).cos()) * q_unchecked(spec, theta);
    }
    acc * h
}

/// Contribution `(1/n)[g(z, |1 -+ v|^2) + l sum_{+-psi} int g q+-]` of one class.
pub fn weyl_class_transform(spec: OrthoClassSpec, v: C64, z: C64) -> Result<C64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(z));
    }
    let r = v.norm();
    let psi = if r == 0.0 { 0.0 } else { v.arg() };
    let ell = spec.ell() as f64;
    let fixed = if spec.sign == 1 {
        (1.0 - v).norm_sqr()
    } else {
        (1.0 + v).norm_sqr()
    };
    let sum_at = |nodes| angle_integral(spec, r, psi, z, nodes) + angle_integral(spec, r, -psi, z, nodes);
    let fine = sum_at(ANGLE_NODES);
    let coarse = sum_at(ANGLE_NODES / 2);
    let difference = (fine - coarse).norm();
    if difference > CONVERGENCE_TOL * (1.0 + fine.norm()) {
        return Err(Error::QuadratureNoConvergence { difference });
    }
    Ok((g(z, fixed) + ell * fine) / spec.n as f64)
}

/// `E (1/2n) tr (z - H)^{-1}` for the hermitization `H` of `O - vI`, `O` Haar
/// on `O(n)`, `n` odd: the average of the two class contributions.
pub fn weyl_g1_orthogonal(n: usize, v: C64, z: C64) -> Result<C64> {
    let plus = weyl_class_transform(OrthoClassSpec::new(n, 1)?, v, z)?;
    let minus = weyl_class_transform(OrthoClassSpec::new(n, -1)?, v, z)?;
    Ok(0.5 * (plus + minus))
}

/// Monte Carlo mean with per-component standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub mean: C64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub samples: usize,
}

impl ComplexEstimate {
    fn from_samples(xs: &[C64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<C64>() / n;
        let var_re = xs.iter().map(|x| (x.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let var_im = xs.iter().map(|x| (x.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean,
            std_error_re: (var_re / n).sqrt(),
            std_error_im: (var_im / n).sqrt(),
            samples: xs.len(),
        }
    }

    /// Both components of `value` within `k` standard errors of the mean.
    /// A zero standard error is replaced by `1e-12`.
    pub fn compatible(&self, value: C64, k: f64) -> bool {
        (value.re - self.mean.re).abs() <= k * self.std_error_re.max(1e-12)
            && (value.im - self.mean.im).abs() <= k * self.std_error_im.max(1e-12)
    }
}

/// Per-sample `((1/2n) tr (z - H)^{-1}, det O)`.
fn orthogonal_samples(n: usize, v: C64, z: C64, samples: usize, seed: u64) -> Result<Vec<(C64, f64)>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let o = sample_haar_orthogonal(n, replica_seed(seed, i));
            let det = determinant(&o)?.re;
            let sv = singular_values(&o.shifted(v))?;
            let t = sv.iter().map(|s| g(z, s * s)).sum::<C64>() / n as f64;
            Ok((t, det))
        })
        .collect()
}

/// Monte Carlo estimate of [`weyl_g1_orthogonal`] (any `n >= 1`).
pub fn weyl_g1_monte_carlo(n: usize, v: C64, z: C64, samples: usize, seed: u64) -> Result<ComplexEstimate> {
    check_samples(samples)?;
    let xs: Vec<C64> = orthogonal_samples(n, v, z, samples, seed)?
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    Ok(ComplexEstimate::from_samples(&xs))
}

/// Monte Carlo estimate restricted to samples of determinant `sign`.
pub fn weyl_class_monte_carlo(
    spec: OrthoClassSpec,
    v: C64,
    z: C64,
    samples: usize,
    seed: u64,
) -> Result<ComplexEstimate> {
    check_samples(samples)?;
    let xs: Vec<C64> = orthogonal_samples(spec.n, v, z, samples, seed)?
        .into_iter()
        .filter(|(_, det)| det.signum() == spec.sign as f64)
        .map(|(t, _)| t)
        .collect();
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("too few samples in the requested class".into()));
    }
    Ok(ComplexEstimate::from_samples(&xs))
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    Ok(())
}

/// Gap between the finite-`n` transform and its `n -> inf` limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthoLimitReport {
    pub v: C64,
    pub z: C64,
    pub n_list: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Gaps decrease along `n_list` with at most one inversion.
    pub decreasing: bool,
}

impl OrthoLimitReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("n,gap\n");
        for (n, g) in self.n_list.iter().zip(&self.gaps) {
            s.push_str(&format!("{n},{g:?}\n"));
        }
        s
    }
}

pub fn ortho_limit_check(v: C64, z: C64, n_list: &[usize]) -> Result<OrthoLimitReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n_list must be non-empty and increasing".into()));
    }
    let limit = stieltjes_g1(v, z)?;
    let gaps: Vec<f64> = n_list
        .iter()
        .map(|&n| Ok((weyl_g1_orthogonal(n, v, z)? - limit).norm()))
        .collect::<Result<_>>()?;
    let inversions = gaps.windows(2).filter(|w| w[1] > w[0]).count();
    let decreasing = inversions <= 1 && gaps.last() <= gaps.first();
    Ok(OrthoLimitReport {
        v,
        z,
        n_list: n_list.to_vec(),
        gaps,
        decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_values_and_bounds() {
        let p = OrthoClassSpec::new(11, 1).unwrap();
        let m = OrthoClassSpec::new(11, -1).unwrap();
        assert!((angle_density_q(p, PI / 2.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(angle_density_q(p, 0.0).unwrap().abs() < 1e-15);
        assert!((angle_density_q(m, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        for k in 0..=10_000 {
            let t = -PI + 2.0 * PI * k as f64 / 10_000.0;
            for s in [p, m] {
                let q = angle_density_q(s, t).unwrap();
                assert!((-1e-12..=1.0 / PI + 1e-12).contains(&q), "{t} {q}");
            }
        }
    }

    #[test]
    fn q_near_pi_is_continuous() {
        let p = OrthoClassSpec::new(7, 1).unwrap();
        let a = angle_density_q(p, PI).unwrap();
        let b = angle_density_q(p, PI - 1e-5).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn q_has_unit_mass() {
        for n in [3, 5, 11, 31] {
            for sign in [1, -1] {
                let s = OrthoClassSpec::new(n, sign).unwrap();
                let m = crate::quad::integrate(|t| angle_density_q(s, t).unwrap(), -PI, PI, 64);
                assert!((m - 1.0).abs() < 1e-6, "n={n} sign={sign} mass={m}");
            }
        }
    }

    #[test]
    fn even_or_small_n_rejected() {
        assert!(OrthoClassSpec::new(10, 1).is_err());
        assert!(OrthoClassSpec::new(1, 1).is_err());
        assert!(OrthoClassSpec::new(5, 0).is_err());
    }

    #[test]
    fn v_zero_is_exact() {
        let z = C64::new(0.3, 0.4);
        let w = weyl_g1_orthogonal(11, C64::new(0.0, 0.0), z).unwrap();
        assert!((w - z / (z * z - 1.0)).norm() < 1e-13);
    }

    #[test]
    fn large_z_decay() {
        let z = C64::new(0.0, 50.0);
        for v in [C64::new(2.0, 0.0), C64::new(-0.5, 1.2)] {
            assert!((weyl_g1_orthogonal(11, v, z).unwrap() - 1.0 / z).norm() < 1e-3);
        }
    }
}
