//! Closed-form densities and transforms: singular-value laws of `U - r I`,
//! the Brown density of a sum of `d` free Haar unitaries, its radial CDF, the
//! law of `|u_1 + ... + u_d|`, and the base Stieltjes transform.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{symmetrize, Atom, SpectralMeasure};

/// Density of the singular values of `U - rI`:
/// `(2/pi) x / sqrt((x^2 - (r-1)^2)((r+1)^2 - x^2))` on `[|r-1|, r+1]`.
///
/// Returns `+inf` at inverse-square-root endpoints.
pub fn density_f_r(r: f64, x: f64) -> Result<f64> {
    check_radius(r)?;
    let (lo, hi) = ((r - 1.0).abs(), r + 1.0);
    if x < lo || x > hi {
        return Ok(0.0);
    }
    // x / sqrt(x^2 - (r-1)^2); equals 1 identically when r = 1
    let ratio = if r == 1.0 {
        1.0
    } else {
        let q = (x - lo) * (x + lo);
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        x / q.sqrt()
    };
    let upper = (hi - x) * (hi + x);
    if upper <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 / PI * ratio / upper.sqrt())
}

/// Density of the squared singular values of `U - rI`:
/// `(1/pi) / sqrt((x - (r-1)^2)((r+1)^2 - x))` on `[(r-1)^2, (r+1)^2]`.
pub fn density_g_r(r: f64, x: f64) -> Result<f64> {
    check_radius(r)?;
    let (lo, hi) = ((r - 1.0).powi(2), (r + 1.0).powi(2));
    if x < lo || x > hi {
        return Ok(0.0);
    }
    let q = (x - lo) * (hi - x);
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (PI * q.sqrt()))
}

fn check_radius(r: f64) -> Result<()> {
    if r == 0.0 {
        return Err(Error::AtomicCase);
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    match d {
        0 => Err(Error::InvalidArgument("d must be at least 1".into())),
        1 => Err(Error::UnitCircleCase),
        _ => Ok(()),
    }
}

/// Brown density of `u_1 + ... + u_d`:
/// `h_d(v) = (1/pi) d^2 (d-1) / (d^2 - |v|^2)^2` for `|v| <= sqrt(d)`.
pub fn brown_density_h_d(d: usize, v: Complex64) -> Result<f64> {
    check_d(d)?;
    Ok(brown_density_radial(d, v.norm()))
}

pub(crate) fn brown_density_radial(d: usize, r: f64) -> f64 {
    let df = d as f64;
    if r > df.sqrt() {
        return 0.0;
    }
    let den = df * df - r * r;
    df * df * (df - 1.0) / (PI * den * den)
}

/// Mass of the Brown measure inside the disc of radius `r`:
/// `(d-1) r^2 / (d^2 - r^2)` for `r <= sqrt(d)`, then 1.
pub fn radial_cdf_f_d(d: usize, r: f64) -> Result<f64> {
    check_d(d)?;
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be non-negative, got {r}")));
    }
    let df = d as f64;
    if r >= df.sqrt() {
        return Ok(1.0);
    }
    Ok((df - 1.0) * r * r / (df * df - r * r))
}

/// Radial CDF of the Brown measure for every `d >= 1`; for `d = 1` the law
/// is uniform on the unit circle.
pub fn brown_radial_cdf(d: usize, r: f64) -> Result<f64> {
    match d {
        1 => Ok(if r >= 1.0 { 1.0 } else { 0.0 }),
        _ => radial_cdf_f_d(d, r),
    }
}

/// Density of `|u_1 + ... + u_d|`:
/// `d sqrt(4(d-1) - x^2) / (pi (d^2 - x^2))` on `[0, 2 sqrt(d-1)]`.
pub fn density_abs_sd(d: usize, x: f64) -> Result<f64> {
    check_d(d)?;
    let df = d as f64;
    let edge2 = 4.0 * (df - 1.0);
    if x < 0.0 || x * x > edge2 {
        return Ok(0.0);
    }
    Ok(df * (edge2 - x * x).sqrt() / (PI * (df * df - x * x)))
}

/// Right edge `2 sqrt(d-1)` of the support of `|u_1 + ... + u_d|`.
pub fn abs_sd_edge(d: usize) -> f64 {
    2.0 * ((d as f64) - 1.0).sqrt()
}

/// `C(k, k/2)` for even `k`, 0 otherwise.
pub fn arcsine_moment(k: u32) -> u64 {
    if k % 2 == 1 {
        return 0;
    }
    let half = (k / 2) as u64;
    let mut c: u64 = 1;
    for i in 0..half {
        c = c * (k as u64 - i) / (i + 1);
    }
    c
}

/// Stieltjes transform of the symmetrized singular-value law of `U - vI`:
/// `G(z) = z / sqrt((z^2 - 1 - r^2)^2 - 4 r^2)`, `r = |v|`, with the branch
/// that maps the upper half-plane into the closed lower half-plane. For
/// `r = 0` this is `z / (z^2 - 1)`.
pub fn stieltjes_g1(v: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(stieltjes_g1_with_derivative(v.norm(), z)?.0)
}

/// `(G(z), G'(z))` for the base transform at radius `r`.
pub fn stieltjes_g1_with_derivative(r: f64, z: Complex64) -> Result<(Complex64, Complex64)> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NotUpperHalfPlane(z));
    }
    if r == 0.0 {
        let den = z * z - 1.0;
        let g = z / den;
        let dg = -(z * z + 1.0) / (den * den);
        return Ok((g, dg));
    }
    let a = z * z - 1.0 - r * r;
    let q = a * a - 4.0 * r * r;
    let root = q.sqrt();
    let plus = z / root;
    let minus = -plus;
    let tie = plus.im.abs() <= 1e-15 * plus.norm();
    let g = if tie {
        g1_by_vertical_continuation(r, z)
    } else if plus.im <= 0.0 {
        plus
    } else {
        minus
    };
    // G' = G (1/z - Q'/(2Q)), Q' = 4 z a
    let dg = g * (1.0 / z - 2.0 * z * a / q);
    Ok((g, dg))
}

/// Sign choice by continuity along the vertical segment from `Re z + 10i`.
fn g1_by_vertical_continuation(r: f64, z: Complex64) -> Complex64 {
    let eval = |w: Complex64| {
        let a = w * w - 1.0 - r * r;
        w / (a * a - 4.0 * r * r).sqrt()
    };
    let top = Complex64::new(z.re, z.im.max(10.0));
    let mut prev = {
        let g = eval(top);
        if g.im <= 0.0 {
            g
        } else {
            -g
        }
    };
    let steps = 200;
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let w = top + (z - top) * t;
        let g = eval(w);
        prev = if (g - prev).norm() <= (-g - prev).norm() { g } else { -g };
    }
    prev
}

/// `Theta^{1,v}`: symmetrized singular-value law of `U - vI` as a measure.
pub fn theta1_measure(r: f64, nodes: usize) -> Result<SpectralMeasure> {
    if r == 0.0 {
        return SpectralMeasure::atomic(vec![
            Atom {
                location: -1.0,
                mass: 0.5,
            },
            Atom {
                location: 1.0,
                mass: 0.5,
            },
        ]);
    }
    let f = SpectralMeasure::from_density_fn(
        &[((r - 1.0).abs(), r + 1.0)],
        nodes,
        |x| density_f_r(r, x).unwrap_or(0.0),
        vec![],
    )?;
    symmetrize(&f)
}

/// Law of `|u_1 + ... + u_d|` as a grid measure on `[0, 2 sqrt(d-1)]`.
pub fn abs_sd_measure(d: usize, nodes: usize) -> Result<SpectralMeasure> {
    check_d(d)?;
    SpectralMeasure::from_density_fn(
        &[(0.0, abs_sd_edge(d))],
        nodes,
        |x| density_abs_sd(d, x).unwrap_or(0.0),
        vec![],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn f_r_values() {
        assert!((density_f_r(1.0, 2f64.sqrt()).unwrap() - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((density_f_r(1.0, 2f64.sqrt()).unwrap() - 0.45016).abs() < 1e-5);
        assert_eq!(density_f_r(1.0, 2.5).unwrap(), 0.0);
        assert_eq!(density_f_r(0.0, 1.0), Err(Error::AtomicCase));
    }

    #[test]
    fn f_r_normalizes() {
        for r in [0.5, 1.0, 1.7, 3.0] {
            let lo = (r - 1.0f64).abs();
            let m = quad::integrate_edge_singular(|x| density_f_r(r, x).unwrap(), lo, r + 1.0, 8);
            assert!((m - 1.0).abs() < 1e-3, "r={r}: mass {m}");
        }
    }

    #[test]
    fn g_r_value_and_endpoints() {
        assert!((density_g_r(1.0, 2.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        for r in [0.3f64, 2.0] {
            // support endpoints of g_r are the squares of those of f_r
            assert_eq!(density_g_r(r, (r - 1.0).powi(2)).unwrap(), f64::INFINITY);
            assert_eq!(density_f_r(r, (r - 1.0).abs()).unwrap(), f64::INFINITY);
            assert_eq!(density_g_r(r, (r + 1.0).powi(2)).unwrap(), f64::INFINITY);
            assert_eq!(density_f_r(r, r + 1.0).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn h_d_values() {
        let v0 = Complex64::new(0.0, 0.0);
        assert!((brown_density_h_d(2, v0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let edge = Complex64::new(3f64.sqrt(), 0.0);
        assert!((brown_density_h_d(3, edge).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert_eq!(brown_density_h_d(2, Complex64::new(2.0, 0.0)).unwrap(), 0.0);
        assert_eq!(brown_density_h_d(1, v0), Err(Error::UnitCircleCase));
    }

    #[test]
    fn radial_cdf_values() {
        assert!((radial_cdf_f_d(2, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((radial_cdf_f_d(2, 1.2).unwrap() - 0.5625).abs() < 1e-15);
        assert_eq!(radial_cdf_f_d(3, 3f64.sqrt()).unwrap(), 1.0);
        assert_eq!(radial_cdf_f_d(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn abs_sd_values() {
        assert!((density_abs_sd(2, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert_eq!(density_abs_sd(3, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn arcsine_moments() {
        assert_eq!(arcsine_moment(2), 2);
        assert_eq!(arcsine_moment(3), 0);
        assert_eq!(arcsine_moment(4), 6);
        assert_eq!(arcsine_moment(10), 252);
        assert_eq!(arcsine_moment(0), 1);
    }

    #[test]
    fn g1_base_values() {
        let z = Complex64::new(0.0, 2.0);
        let g = stieltjes_g1(Complex64::new(0.0, 0.0), z).unwrap();
        assert!((g - Complex64::new(0.0, -0.4)).norm() < 1e-15);
        assert!(stieltjes_g1(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)).is_err());
        for r in [0.0, 0.5, 1.0, 2.0] {
            let z = Complex64::new(0.0, 100.0);
            let g = stieltjes_g1(Complex64::new(r, 0.0), z).unwrap();
            assert!((g - 1.0 / z).norm() < 1e-3);
        }
    }

    #[test]
    fn g1_derivative_matches_finite_difference() {
        let z = Complex64::new(0.7, 0.4);
        let h = 1e-6;
        for r in [0.0, 0.6, 1.3] {
            let (_, dg) = stieltjes_g1_with_derivative(r, z).unwrap();
            let fd = (stieltjes_g1_with_derivative(r, z + h).unwrap().0
                - stieltjes_g1_with_derivative(r, z - h).unwrap().0)
                / (2.0 * h);
            assert!((dg - fd).norm() < 1e-7, "r={r}");
        }
    }
}
