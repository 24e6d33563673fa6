#![allow(dead_code)]

use std::f64::consts::PI;

use brownring::linalg::CMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

pub fn hermitian_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = gaussian_matrix(n, rng);
    g.add(&g.adjoint()).unwrap().scale(c(0.5, 0.0))
}

/// Coefficients `c_0..c_n` (monic, `c_n = 1`) of `det(zI - A)` by
/// Faddeev-LeVerrier.
pub fn charpoly(a: &CMatrix) -> Vec<C64> {
    let n = a.n_rows();
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    coeffs[n] = c(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m = a
            .matmul(&m)
            .unwrap()
            .add(&CMatrix::identity(n).scale(coeffs[n + 1 - k]))
            .unwrap();
        let am = a.matmul(&m).unwrap();
        coeffs[n - k] = -am.trace() / k as f64;
    }
    coeffs
}

/// `det A` by Leibniz expansion over all permutations.
pub fn leibniz_det(a: &CMatrix) -> C64 {
    let n = a.n_rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = c(0.0, 0.0);
    permute(&mut perm, 0, &mut |p| {
        let inversions = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| p[i] > p[j])
            .count();
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        total += (0..n).map(|i| a[(i, p[i])]).product::<C64>() * sign;
    });
    total
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = c(0.0, 0.0);
    let mut dp = c(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of a monic polynomial by Durand-Kerner, polished by Newton.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let bound = 1.0 + coeffs[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let seed = c(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * bound * 0.5).collect();
    for _ in 0..2000 {
        let mut shift: f64 = 0.0;
        for i in 0..n {
            let (p, _) = horner(coeffs, roots[i]);
            let den: C64 = (0..n).filter(|&j| j != i).map(|j| roots[i] - roots[j]).product();
            let step = p / den;
            roots[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift < 1e-15 * bound {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(coeffs, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    roots
}

/// `min over matchings of max |a_i - b_pi(i)|`, by brute force.
pub fn set_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut perm: Vec<usize> = (0..b.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let d = a.iter().zip(p).map(|(x, &j)| (x - b[j]).norm()).fold(0.0, f64::max);
        best = best.min(d);
    });
    best
}

/// `(1/2pi) int_0^{2pi} z / (z^2 - |e^{it} - r|^2) dt` by the periodic
/// trapezoid rule with `nodes` points.
pub fn g1_trapezoid(r: f64, z: C64, nodes: usize) -> C64 {
    (0..nodes)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / nodes as f64;
            let s2 = 1.0 + r * r - 2.0 * r * t.cos();
            z / (z * z - s2)
        })
        .sum::<C64>()
        / nodes as f64
}

/// Trapezoid oracle refined until two successive levels agree to `tol`.
pub fn g1_oracle(r: f64, z: C64, tol: f64) -> C64 {
    let mut nodes = 256;
    let mut prev = g1_trapezoid(r, z, nodes);
    loop {
        nodes *= 2;
        let next = g1_trapezoid(r, z, nodes);
        if (next - prev).norm() < tol || nodes > 1 << 22 {
            return next;
        }
        prev = next;
    }
}
