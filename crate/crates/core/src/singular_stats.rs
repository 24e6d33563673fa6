//! Finite-`n` singular-value statistics: smallest singular value tails,
//! truncated log integrals near zero, the event `{r_n <= 1/2, r_1 >= 1}`, and
//! the single-ring experiment for `U T` with an atomic diagonal `T`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::brown_girko::{log_potential_of, radial_cdf_of, PotentialQuadrature};
use crate::ensembles::{mix_seed, replica_seed, sample_haar_unitary, sample_sum, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{general_eigenvalues, singular_values, CMatrix};
use crate::measures::{symmetrize, Atom, SpectralMeasure};
use crate::quad::linspace;
use crate::schwinger_dyson::{free_bernoulli_convolve, stieltjes_of_measure, SubordinationParams};

type C64 = Complex64;

/// Diagonal matrix with `round(n p_i)` entries equal to `x_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicDiagSpec {
    atoms: Vec<(f64, f64)>,
    n: usize,
}

impl AtomicDiagSpec {
    pub fn new(atoms: Vec<(f64, f64)>, n: usize) -> Result<Self> {
        if n == 0 || atoms.is_empty() {
            return Err(Error::InvalidArgument("need n >= 1 and at least one atom".into()));
        }
        if atoms.iter().any(|&(x, p)| !(x > 0.0) || !x.is_finite() || !(p > 0.0)) {
            return Err(Error::InvalidArgument(
                "atom values and proportions must be positive".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "proportions sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms, n })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry counts: floors of `n p_i`, with the shortfall handed out by
    /// largest remainder (ties to the lower index).
    pub fn counts(&self) -> Vec<usize> {
        let exact: Vec<f64> = self.atoms.iter().map(|a| a.1 * self.n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let short = self.n.saturating_sub(counts.iter().sum());
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(short) {
            counts[i] += 1;
        }
        counts
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.counts()
            .iter()
            .zip(&self.atoms)
            .flat_map(|(&c, &(x, _))| std::iter::repeat_n(x, c))
            .collect()
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::diagonal(&self.diagonal().iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    fn distinct_values(&self) -> usize {
        let mut xs: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }
}

/// Empirical `P(s_min(S_n - vI) <= t)` per threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

fn replica_singular_values(spec: &EnsembleSpec, v: C64, reps: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let s = sample_sum(&spec.with_seed(replica_seed(spec.seed, r)))?;
            singular_values(&s.shifted(v))
        })
        .collect()
}

pub fn smin_tail(spec: &EnsembleSpec, v: C64, t_list: &[f64], reps: usize) -> Result<TailReport> {
    if reps < 100 {
        return Err(Error::InvalidArgument("smin_tail needs at least 100 replicas".into()));
    }
    let mut thresholds = t_list.to_vec();
    thresholds.sort_by(f64::total_cmp);
    let smins: Vec<f64> = replica_singular_values(spec, v, reps)?
        .into_iter()
        .map(|sv| *sv.last().expect("n >= 1"))
        .collect();
    let probabilities = thresholds
        .iter()
        .map(|&t| smins.iter().filter(|&&s| s <= t).count() as f64 / reps as f64)
        .collect();
    Ok(TailReport {
        thresholds,
        probabilities,
        reps,
        seed: spec.seed,
    })
}

/// Mean over replicas of `(1/n) sum_{s_k < eps} |log s_k|` per `eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogUiProfile {
    pub eps: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl LogUiProfile {
    /// Smallest `C` with `mean(eps) <= C eps |log eps|` for every `eps < 1`.
    pub fn fitted_constant(&self) -> f64 {
        self.eps
            .iter()
            .zip(&self.means)
            .filter(|(e, _)| **e < 1.0)
            .map(|(e, m)| m / (e * e.ln().abs()))
            .fold(0.0, f64::max)
    }

    pub fn decreasing(&self) -> bool {
        self.means.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn log_ui_profile(spec: &EnsembleSpec, v: C64, eps_list: &[f64], reps: usize) -> Result<LogUiProfile> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument(
            "eps_list must be positive and strictly decreasing".into(),
        ));
    }
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicas".into()));
    }
    let svs = replica_singular_values(spec, v, reps)?;
    let n = spec.n as f64;
    let mut means = Vec::with_capacity(eps_list.len());
    let mut std_errors = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let xs: Vec<f64> = svs
            .iter()
            .map(|sv| sv.iter().filter(|&&s| s < eps).map(|s| s.ln().abs()).sum::<f64>() / n)
            .collect();
        let m = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
        means.push(m);
        std_errors.push((var / reps as f64).sqrt());
    }
    Ok(LogUiProfile {
        eps: eps_list.to_vec(),
        means,
        std_errors,
        reps,
        seed: spec.seed,
    })
}

/// Fraction of replicas with smallest singular value `<= 1/2` and largest
/// `>= 1`, for an all-orthogonal sum.
pub fn good_event_frequency(spec: &EnsembleSpec, reps: usize) -> Result<f64> {
    if spec.d < 2 {
        return Err(Error::InvalidArgument("good event needs d >= 2".into()));
    }
    if spec.d_prime != 0 {
        return Err(Error::InvalidArgument(
            "good event is defined for all-orthogonal sums (d' = 0)".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    let hits = replica_singular_values(spec, C64::new(0.0, 0.0), reps)?
        .iter()
        .filter(|sv| sv[0] >= 1.0 && *sv.last().expect("n >= 1") <= 0.5)
        .count();
    Ok(hits as f64 / reps as f64)
}

/// Symmetrized law of the diagonal entries, `(1/2) sum p_i (delta_{x_i} + delta_{-x_i})`.
pub fn symmetrized_atoms(t: &AtomicDiagSpec) -> Result<SpectralMeasure> {
    let atoms = t.atoms.iter().map(|&(x, p)| Atom { location: x, mass: p }).collect();
    symmetrize(&SpectralMeasure::atomic(atoms)?)
}

/// Potential `int log|x| d(sym(T) [+] lambda_r)` at radius `r`.
pub fn single_ring_potential(t: &AtomicDiagSpec, r: f64) -> Result<f64> {
    let base = stieltjes_of_measure(&symmetrized_atoms(t)?);
    let g = free_bernoulli_convolve(&base, SubordinationParams::with_rho(r))?;
    let m2: f64 = t.atoms.iter().map(|&(x, p)| p * x * x).sum::<f64>() + r * r;
    log_potential_of(&g, m2, PotentialQuadrature::default())
}

/// Analytic fraction of eigenvalues of `U T` inside radius `r`, `r f'(r)`.
pub fn single_ring_radial_cdf(t: &AtomicDiagSpec, r: f64, h: f64) -> Result<f64> {
    radial_cdf_of(|s| single_ring_potential(t, s), r, h)
}

/// Outcome of the single-ring experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleRingReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub quantile_01: f64,
    pub quantile_99: f64,
    pub min_modulus: f64,
    /// Eigenvalues with modulus at most `inner_probe`.
    pub inner_probe: f64,
    pub inner_count: usize,
    /// KS distance on `ks_window` between empirical and analytic radial CDFs.
    pub ks_window: (f64, f64),
    pub ks: f64,
    pub radii: Vec<f64>,
    pub analytic_cdf: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
}

/// Eigenvalue moduli of `U T` pooled over `reps` draws of a Haar unitary `U`.
pub fn single_ring_moduli(t: &AtomicDiagSpec, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let tm = t.matrix();
    let parts: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let u = sample_haar_unitary(t.n, mix_seed(replica_seed(seed, r), 0));
            Ok(general_eigenvalues(&u.matmul(&tm)?)?.moduli())
        })
        .collect::<Result<_>>()?;
    let mut all = parts.concat();
    all.sort_by(f64::total_cmp);
    Ok(all)
}

pub fn single_ring_demo(t: &AtomicDiagSpec, reps: usize, seed: u64) -> Result<SingleRingReport> {
    if t.distinct_values() < 2 {
        return Err(Error::InvalidMeasure(
            "single-ring demo needs at least two distinct atoms".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    let moduli = single_ring_moduli(t, reps, seed)?;
    let m = moduli.len();
    let quantile = |p: f64| moduli[((p * m as f64).floor() as usize).min(m - 1)];
    let inner_probe = 0.3;
    let ks_window = (0.4, 1.6);
    let radii = linspace(ks_window.0, ks_window.1, 241);
    let analytic_cdf: Vec<f64> = radii
        .par_iter()
        .map(|&r| single_ring_radial_cdf(t, r, 0.01))
        .collect::<Result<_>>()?;
    let below = |r: f64| moduli.partition_point(|&x| x <= r) as f64 / m as f64;
    let below_strict = |r: f64| moduli.partition_point(|&x| x < r) as f64 / m as f64;
    let empirical_cdf: Vec<f64> = radii.iter().map(|&r| below(r)).collect();
    let mut ks: f64 = 0.0;
    for (i, &r) in radii.iter().enumerate() {
        ks = ks.max((empirical_cdf[i] - analytic_cdf[i]).abs());
        ks = ks.max((below_strict(r) - analytic_cdf[i]).abs());
    }
    // jumps of the empirical CDF between grid radii
    for &x in moduli.iter().filter(|&&x| x > ks_window.0 && x < ks_window.1) {
        let k = radii.partition_point(|&r| r < x).clamp(1, radii.len() - 1);
        let (r0, r1) = (radii[k - 1], radii[k]);
        let w = (x - r0) / (r1 - r0);
        let f = (1.0 - w) * analytic_cdf[k - 1] + w * analytic_cdf[k];
        ks = ks.max((below(x) - f).abs()).max((below_strict(x) - f).abs());
    }
    Ok(SingleRingReport {
        n: t.n,
        reps,
        seed,
        quantile_01: quantile(0.01),
        quantile_99: quantile(0.99),
        min_modulus: moduli[0],
        inner_probe,
        inner_count: moduli.partition_point(|&x| x <= inner_probe),
        ks_window,
        ks,
        radii,
        analytic_cdf,
        empirical_cdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_counts() {
        let t = AtomicDiagSpec::new(vec![(1.0, 1.0 / 3.0), (2.0, 1.0 / 3.0), (3.0, 1.0 / 3.0)], 10).unwrap();
        assert_eq!(t.counts(), vec![4, 3, 3]);
        let t = AtomicDiagSpec::new(vec![(0.5, 0.5), (2.0, 0.5)], 7).unwrap();
        assert_eq!(t.counts(), vec![4, 3]);
        assert_eq!(t.diagonal(), vec![0.5, 0.5, 0.5, 0.5, 2.0, 2.0, 2.0]);
        assert!(AtomicDiagSpec::new(vec![(1.0, 0.6)], 4).is_err());
    }

    #[test]
    fn dirac_rejected() {
        let t = AtomicDiagSpec::new(vec![(1.0, 1.0)], 16).unwrap();
        assert!(matches!(single_ring_demo(&t, 1, 0), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn good_event_preconditions() {
        assert!(good_event_frequency(&EnsembleSpec::orthogonal(8, 1, 0).unwrap(), 4).is_err());
        assert!(good_event_frequency(&EnsembleSpec::new(8, 2, 1, 0).unwrap(), 4).is_err());
    }

    #[test]
    fn tail_extremes() {
        let spec = EnsembleSpec::unitary(16, 2, 5).unwrap();
        let rep = smin_tail(&spec, C64::new(0.5, 0.3), &[10.0, 1e-8, 0.5], 100).unwrap();
        assert_eq!(rep.thresholds, vec![1e-8, 0.5, 10.0]);
        assert_eq!(rep.probabilities[0], 0.0);
        assert_eq!(rep.probabilities[2], 1.0);
        assert!(rep.probabilities.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn single_ring_cdf_is_zero_inside_and_one_outside() {
        let t = AtomicDiagSpec::new(vec![(0.5, 0.5), (2.0, 0.5)], 2).unwrap();
        assert!(single_ring_radial_cdf(&t, 0.4, 0.01).unwrap().abs() < 1e-4);
        assert!((single_ring_radial_cdf(&t, 1.6, 0.01).unwrap() - 1.0).abs() < 1e-4);
    }
}
