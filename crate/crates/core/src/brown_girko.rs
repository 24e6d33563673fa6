//! Log-potentials of the hermitized laws, radial reconstruction of the Brown
//! density, and the finite-`n` Girko identity.
//!
//! The potential `f(v) = int log|x| dTheta^{d,v}(x)` is computed from the
//! Stieltjes transform on the imaginary axis. For a symmetric law `mu`,
//! `-Im G(iy) = int y / (x^2 + y^2) dmu`, and integrating in `y`
//!
//! ```text
//! int log|x| dmu = -int_0^inf ( -Im G(iy) - y / (1 + y^2) ) dy,
//! ```
//!
//! which is evaluated in `u = ln y` with Gauss-Legendre panels. The
//! quadrature nodes, taken from the top down, double as the continuation
//! path of the fixed-point solver.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{hermitize, replica_seed, sample_sum, ComplexShift, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{general_eigenvalues, herm_eigenvalues, singular_values, CMatrix};
use crate::measures::{esd_from_reals, ks_distance, log_moment, LogMomentWindow};
use crate::quad::gl16;
use crate::schwinger_dyson::{invert_to_density, theta_recursion, StieltjesEvaluator};

type C64 = Complex64;

/// Minimum distance of an admissible radius from `{0, 1, ..., d}`.
pub const EXCEPTIONAL_MARGIN: f64 = 0.05;

/// Default finite-difference step `0.02 sqrt(d)`.
pub fn default_step(d: usize) -> f64 {
    0.02 * (d as f64).sqrt()
}

/// Radii and attached values (a potential or a density).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    r_grid: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r_grid.len() < 5 {
            return Err(Error::InvalidArgument("radial profile needs at least 5 radii".into()));
        }
        if r_grid.len() != values.len() {
            return Err(Error::InvalidArgument("radii and values differ in length".into()));
        }
        if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
        }
        if r_grid.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("radial profile entries must be finite".into()));
        }
        Ok(Self { r_grid, values })
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `2 pi int value(r) r dr` by the trapezoid rule.
    pub fn radial_mass(&self) -> f64 {
        self.r_grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(r, v)| PI * (r[1] - r[0]) * (v[0] * r[0] + v[1] * r[1]))
            .sum()
    }
}

/// Smooth bump `psi(v) = exp(1 - 1/(1 - t^2))`, `t = |v - center| / radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BumpSpec {
    center: C64,
    radius: f64,
}

impl BumpSpec {
    pub fn new(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::InvalidArgument(
                "bump needs a finite center and positive radius".into(),
            ));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, v: C64) -> f64 {
        let t = (v - self.center).norm() / self.radius;
        if t >= 1.0 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }

    /// Analytic Laplacian in `v`.
    pub fn laplacian(&self, v: C64) -> f64 {
        let t = (v - self.center).norm() / self.radius;
        if t >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - t * t;
        let phi = (1.0 - 1.0 / q).exp();
        let t2 = t * t;
        phi * (4.0 * t2 / q.powi(4) - 4.0 / (q * q) - 8.0 * t2 / q.powi(3)) / (self.radius * self.radius)
    }
}

/// Rejects radii within `margin` of `{0, 1, ..., d}`.
pub fn check_radius(d: usize, r: f64, margin: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be finite and non-negative, got {r}"
        )));
    }
    let nearest = r.round().min(d as f64);
    if (r - nearest).abs() < margin {
        return Err(Error::ExceptionalRadius {
            r,
            exceptional: nearest,
            margin,
        });
    }
    Ok(())
}

/// Integration window and panel density for [`log_potential_of`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialQuadrature {
    pub y_min: f64,
    pub y_max: f64,
    /// Panels per unit of `ln y`.
    pub panels_per_unit: f64,
}

impl Default for PotentialQuadrature {
    fn default() -> Self {
        Self {
            y_min: 1e-7,
            y_max: 1e4,
            panels_per_unit: 1.0,
        }
    }
}

/// `int log|x| dmu` for the symmetric law `mu` behind `g`; `second_moment` is
/// `int x^2 dmu`, used for the analytic tail beyond `y_max`.
pub fn log_potential_of(g: &StieltjesEvaluator, second_moment: f64, q: PotentialQuadrature) -> Result<f64> {
    let y_max = q.y_max * second_moment.sqrt().max(1.0);
    let (u0, u1) = (q.y_min.ln(), y_max.ln());
    let panels = ((u1 - u0) * q.panels_per_unit).ceil().max(1.0) as usize;
    let h = (u1 - u0) / panels as f64;
    let (x, w) = gl16();
    // nodes ordered from the top down
    let mut us = Vec::with_capacity(panels * x.len());
    let mut ws = Vec::with_capacity(panels * x.len());
    for p in (0..panels).rev() {
        let mid = u0 + (p as f64 + 0.5) * h;
        for k in (0..x.len()).rev() {
            us.push(mid + 0.5 * h * x[k]);
            ws.push(0.5 * h * w[k]);
        }
    }
    let mut path: Vec<C64> = Vec::with_capacity(us.len() + 1);
    path.extend(us.iter().map(|u| C64::new(0.0, u.exp())));
    path.push(C64::new(0.0, q.y_min));
    let evals = g.evaluate_path(&path)?;
    let mut total = 0.0;
    for ((u, wk), e) in us.iter().zip(&ws).zip(&evals) {
        let y = u.exp();
        let m = -e.value.im;
        total += wk * (m - y / (1.0 + y * y)) * y;
    }
    // below y_min: m(y) is nearly constant (or smaller)
    let m_min = -evals.last().expect("non-empty path").value.im;
    total += m_min * q.y_min - 0.5 * q.y_min * q.y_min;
    // above y_max: m(y) - y/(1+y^2) = (1 - M2) / y^3 + O(y^-5)
    total += (1.0 - second_moment) / (2.0 * y_max * y_max);
    Ok(-total)
}

/// `f(v) = int log|x| dTheta^{d,v}` for `|v| = r`, rejecting radii near
/// `{0, ..., d}`.
pub fn log_potential(d: usize, r: f64) -> Result<f64> {
    check_radius(d, r, EXCEPTIONAL_MARGIN)?;
    potential_unchecked(d, r)
}

fn potential_unchecked(d: usize, r: f64) -> Result<f64> {
    let g = theta_recursion(d, C64::new(r, 0.0))?;
    log_potential_of(&g, d as f64 + r * r, PotentialQuadrature::default())
}

/// The same potential computed by integrating `log|x|` against the inverted
/// density on `grid_points` nodes over the support. Slower and less accurate
/// than [`log_potential`]; kept as an independent route.
pub fn log_potential_by_inversion(d: usize, r: f64, grid_points: usize, eta: f64) -> Result<f64> {
    check_radius(d, r, EXCEPTIONAL_MARGIN)?;
    let g = theta_recursion(d, C64::new(r, 0.0))?;
    let edge = d as f64 + r + 0.5;
    let grid = crate::quad::linspace(-edge, edge, grid_points);
    let inv = invert_to_density(&g, &grid, eta, false)?;
    log_moment(&inv.measure, LogMomentWindow::full())
}

/// 5-point central stencils `(f'(r), f''(r))`.
pub fn radial_derivatives<F: Fn(f64) -> Result<f64>>(f: F, r: f64, h: f64) -> Result<(f64, f64)> {
    let fm2 = f(r - 2.0 * h)?;
    let fm1 = f(r - h)?;
    let f0 = f(r)?;
    let fp1 = f(r + h)?;
    let fp2 = f(r + 2.0 * h)?;
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    Ok((d1, d2))
}

/// `(f'' + f'/r) / (2 pi)` for a radial potential `f`.
pub fn brown_density_of<F: Fn(f64) -> Result<f64>>(f: F, r: f64, h: f64) -> Result<f64> {
    let (d1, d2) = radial_derivatives(f, r, h)?;
    Ok((d2 + d1 / r) / (2.0 * PI))
}

/// Mass of the disc of radius `r`, `r f'(r)`.
pub fn radial_cdf_of<F: Fn(f64) -> Result<f64>>(f: F, r: f64, h: f64) -> Result<f64> {
    let (d1, _) = radial_derivatives(f, r, h)?;
    Ok(r * d1)
}

/// Radial Brown density on `r_grid`, from the potential of
/// [`log_potential`] by the radial Laplacian with step `h_step`.
pub fn brown_from_potential(d: usize, r_grid: &[f64], h_step: f64) -> Result<RadialProfile> {
    validate_brown_grid(d, r_grid, h_step)?;
    let values: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| brown_density_of(|s| potential_unchecked(d, s), r, h_step))
        .collect::<Result<_>>()?;
    RadialProfile::new(r_grid.to_vec(), values)
}

/// Potential `f(r)` on `r_grid`.
pub fn potential_profile(d: usize, r_grid: &[f64]) -> Result<RadialProfile> {
    let values: Vec<f64> = r_grid.par_iter().map(|&r| log_potential(d, r)).collect::<Result<_>>()?;
    RadialProfile::new(r_grid.to_vec(), values)
}

fn validate_brown_grid(d: usize, r_grid: &[f64], h_step: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::UnitCircleCase);
    }
    if !(h_step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let rmax = (d as f64).sqrt();
    for &r in r_grid {
        if !(r > 2.0 * h_step && r < rmax) {
            return Err(Error::InvalidArgument(format!("radius {r} outside (2h, sqrt(d))")));
        }
        check_radius(d, r, EXCEPTIONAL_MARGIN)?;
    }
    Ok(())
}

/// `n` radii spread uniformly over `(lo, hi)` minus the exceptional margins.
pub fn admissible_radii(d: usize, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let banned: Vec<(f64, f64)> = (0..=d)
        .map(|k| (k as f64 - EXCEPTIONAL_MARGIN, k as f64 + EXCEPTIONAL_MARGIN))
        .filter(|(a, b)| *b > lo && *a < hi)
        .collect();
    let mut pieces = vec![(lo, hi)];
    for (a, b) in banned {
        pieces = pieces
            .into_iter()
            .flat_map(|(s, e)| {
                let mut out = Vec::new();
                if a > s {
                    out.push((s, a.min(e)));
                }
                if b < e {
                    out.push((b.max(s), e));
                }
                out
            })
            .filter(|(s, e)| e > s)
            .collect();
    }
    let total: f64 = pieces.iter().map(|(s, e)| e - s).sum();
    (0..n)
        .map(|k| {
            let mut t = (k as f64 + 0.5) / n as f64 * total;
            for &(s, e) in &pieces {
                if t <= e - s {
                    return s + t;
                }
                t -= e - s;
            }
            hi
        })
        .collect()
}

/// Both sides of the Girko identity for a fixed matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GirkoCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `(1/n) sum psi(lambda_j)` with
/// `(1/2pi) int Delta psi(v) (1/n) sum_k log s_k(S - vI) dm(v)`,
/// the latter by the midpoint rule on `grid x grid` cells covering the
/// support of `psi`.
pub fn girko_identity_check(s: &CMatrix, psi: BumpSpec, grid: usize) -> Result<GirkoCheck> {
    let n = s.require_square()?;
    if grid == 0 {
        return Err(Error::InvalidArgument("quadrature grid must be non-empty".into()));
    }
    let eig = general_eigenvalues(s)?;
    let lhs = eig.points().iter().map(|&l| psi.value(l)).sum::<f64>() / n as f64;
    let h = 2.0 * psi.radius / grid as f64;
    let corner = psi.center - C64::new(psi.radius, psi.radius);
    let rows: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..grid {
                let v = corner + C64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                let lap = psi.laplacian(v);
                if lap == 0.0 {
                    continue;
                }
                let sv = singular_values(&s.shifted(v))?;
                let logdet: f64 = sv.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
                acc += lap * logdet;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let rhs = rows.iter().sum::<f64>() * h * h / (2.0 * PI);
    Ok(GirkoCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Largest sup-norm difference between the inverted densities of
/// `Theta^{d, r e^{i theta_j}}` over `k` equally spaced directions.
pub fn radial_symmetry_check(d: usize, r: f64, k: usize) -> Result<f64> {
    if k < 4 {
        return Err(Error::InvalidArgument("need at least 4 directions".into()));
    }
    let edge = d as f64 + r + 0.5;
    let grid = crate::quad::linspace(-edge, edge, 801);
    let densities: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let v = C64::from_polar(r, 2.0 * PI * j as f64 / k as f64);
            let g = theta_recursion(d, v)?;
            let inv = invert_to_density(&g, &grid, 1e-3, false)?;
            Ok(grid.iter().map(|&x| inv.measure.density_at(x)).collect())
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for other in &densities[1..] {
        for (a, b) in densities[0].iter().zip(other) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// KS distance between the pooled symmetrized singular-value ESDs of
/// `S_n - vI` and `S_n - v e^{i angle} I` over `replicas` draws.
pub fn radial_symmetry_mc(spec: &EnsembleSpec, v: C64, angle: f64, replicas: u64) -> Result<f64> {
    let pooled = |w: C64| -> Result<Vec<f64>> {
        let shift = ComplexShift::new(w)?;
        let parts: Vec<Vec<f64>> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let s = sample_sum(&spec.with_seed(replica_seed(spec.seed, r)))?;
                herm_eigenvalues(&hermitize(&s, shift)?)
            })
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    };
    let a = esd_from_reals(&pooled(v)?)?;
    let b = esd_from_reals(&pooled(v * C64::from_polar(1.0, angle))?)?;
    Ok(ks_distance(&a, &b))
}
