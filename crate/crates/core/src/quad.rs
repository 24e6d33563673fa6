//! Quadrature helpers shared by the analytic modules.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached 16-point rule.
pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite Gauss-Legendre on `[a, b]` with `panels` equal panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(w) {
            total += wi * f(mid + 0.5 * h * xi);
        }
    }
    total * 0.5 * h
}

/// Integral over `[a, b]` of a function with (at worst) inverse-square-root
/// singularities at both endpoints. Uses `x = a + t^2` on the lower half and
/// `x = b - t^2` on the upper half, which removes the singularity.
pub fn integrate_edge_singular<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let t_max = (mid - a).sqrt();
    let lower = integrate(|t| 2.0 * t * f(a + t * t), 0.0, t_max, panels);
    let upper = integrate(|t| 2.0 * t * f(b - t * t), 0.0, t_max, panels);
    lower + upper
}

/// Grid on `[a, b]` clustered towards both ends (Chebyshev-Lobatto points).
pub fn clustered_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut g: Vec<f64> = (0..n)
        .map(|k| {
            let t = (PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) - 0.5 * (b - a) * t
        })
        .collect();
    g[0] = a;
    g[n - 1] = b;
    g
}

/// `n` equally spaced points on `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        // exact up to degree 13
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((approx - 2.0 / 13.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn edge_singular_arcsine_mass() {
        let f = |x: f64| 1.0 / (PI * (4.0 - x * x).sqrt());
        let m = integrate_edge_singular(f, -2.0, 2.0, 8);
        assert!((m - 1.0).abs() < 1e-12);
    }
}
