use num_complex::Complex64;

/// Householder reflector `P = I - tau v v^H` with `P x = beta e_1`.
///
/// `beta = -e^{i arg x_0} ||x||`, so `|beta| = ||x||`. Returns `None`
/// when `x` is already zero below its first entry and no reflection is needed.
pub(crate) struct Reflector {
    pub v: Vec<Complex64>,
    pub tau: f64,
    pub beta: Complex64,
}

pub(crate) fn reflector(x: &[Complex64]) -> Option<Reflector> {
    let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
    if tail == 0.0 {
        return None;
    }
    let norm = (x[0].norm_sqr() + tail).sqrt();
    let phase = if x[0].norm() > 0.0 {
        x[0] / x[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let beta = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= beta;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    Some(Reflector {
        v,
        tau: 2.0 / vnorm2,
        beta,
    })
}
