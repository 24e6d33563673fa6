//! Stieltjes evaluators and free convolution with the symmetric Bernoulli
//! law `lambda_rho = (delta_rho + delta_{-rho}) / 2` by subordination.
//!
//! Convolving a law with Stieltjes transform `G_prev` by `lambda_rho` gives
//! the transform `G` solving
//!
//! ```text
//! G(z) = G_prev(psi(z)),   psi(z) = z - 2 rho^2 G / (1 + sqrt(1 + 4 rho^2 G^2)).
//! ```
//!
//! Writing `w = (1 + sqrt(1 + 4 rho^2 G^2)) / (2G)` for the second
//! subordination function, the same solution satisfies `G = w / (w^2 - rho^2)`
//! and `psi = z - rho^2 / w`. The square root changes sign along some paths
//! (it vanishes on the imaginary axis for radii inside a ring), so the
//! default solver works in `w` and never selects a branch.
//!
//! The equation is solved per query point by continuation in `Im z`: solve at
//! `Im z = eta_start` from the asymptotic guess `1/z`, then walk down
//! geometrically to the target, warm-starting every level. Nested
//! convolutions share one continuation context, so each inner layer is
//! warm-started from its own previous solution as the outer subordination
//! point moves.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::stieltjes_g1_with_derivative;
use crate::error::{Error, Result};
use crate::measures::SpectralMeasure;

type C64 = Complex64;

/// Maximum leak of `Im G` above the real axis tolerated by the contract.
pub const IM_LEAK_TOLERANCE: f64 = 1e-9;

/// Iteration used for the subordination fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FixedPointSolver {
    /// Newton in the variable `w` with backtracking; falls back to a damped
    /// step of the self-map `w -> 1/G_prev(psi) + rho^2/w` when no Newton
    /// step reduces the residual.
    Newton,
    /// Plain damped Picard iteration `G <- (1 - a) G + a G_prev(psi(G))` on
    /// the square-root form, continuing the sign of the square root.
    Picard,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubordinationParams {
    pub rho: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Imaginary part where the continuation starts.
    pub eta_start: f64,
    /// Geometric ratio between successive continuation levels.
    pub eta_factor: f64,
    pub solver: FixedPointSolver,
}

impl Default for SubordinationParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            damping: 0.5,
            tol: 1e-10,
            max_iter: 500,
            eta_start: 10.0,
            eta_factor: 0.7,
            solver: FixedPointSolver::Newton,
        }
    }
}

impl SubordinationParams {
    pub fn with_rho(rho: f64) -> Self {
        Self { rho, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return bad("rho must be finite and non-negative");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.eta_start > 0.0) || !(self.eta_factor > 0.0 && self.eta_factor < 1.0) {
            return bad("eta schedule needs eta_start > 0 and eta_factor in (0, 1)");
        }
        Ok(())
    }

    /// Strictly decreasing imaginary offsets ending exactly at `target`.
    pub fn eta_schedule(&self, target: f64) -> Vec<f64> {
        let mut s = Vec::new();
        let mut eta = self.eta_start;
        while eta > target {
            s.push(eta);
            eta *= self.eta_factor;
        }
        s.push(target);
        s
    }
}

/// Base transform at the bottom of a convolution chain: value and derivative.
pub trait BaseTransform: Send + Sync {
    fn eval(&self, z: C64) -> Result<(C64, C64)>;
    fn label(&self) -> String;
}

struct Theta1Base {
    r: f64,
}

impl BaseTransform for Theta1Base {
    fn eval(&self, z: C64) -> Result<(C64, C64)> {
        stieltjes_g1_with_derivative(self.r, z)
    }

    fn label(&self) -> String {
        format!("theta1(r={})", self.r)
    }
}

struct MeasureBase {
    measure: SpectralMeasure,
}

impl BaseTransform for MeasureBase {
    fn eval(&self, z: C64) -> Result<(C64, C64)> {
        if !(z.im > 0.0) {
            return Err(Error::NotUpperHalfPlane(z));
        }
        Ok(measure_transform(&self.measure, z))
    }

    fn label(&self) -> String {
        match &self.measure {
            SpectralMeasure::Empirical(p) => format!("empirical({} points)", p.len()),
            SpectralMeasure::Density(d) => format!("density({} nodes, {} atoms)", d.grid().len(), d.atoms().len()),
        }
    }
}

type ClosedFn = dyn Fn(C64) -> Result<(C64, C64)> + Send + Sync;

struct ClosedBase {
    label: String,
    f: Arc<ClosedFn>,
}

impl BaseTransform for ClosedBase {
    fn eval(&self, z: C64) -> Result<(C64, C64)> {
        if !(z.im > 0.0) {
            return Err(Error::NotUpperHalfPlane(z));
        }
        (self.f)(z)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `int (z - x)^{-1} dmu` and its derivative. Density cells integrate their
/// linear profile exactly; atoms contribute `mass / (z - location)`.
fn measure_transform(m: &SpectralMeasure, z: C64) -> (C64, C64) {
    match m {
        SpectralMeasure::Empirical(p) => {
            let mut g = C64::new(0.0, 0.0);
            let mut dg = C64::new(0.0, 0.0);
            for &x in p {
                let inv = 1.0 / (z - x);
                g += inv;
                dg -= inv * inv;
            }
            let n = p.len() as f64;
            (g / n, dg / n)
        }
        SpectralMeasure::Density(d) => {
            let mut g = C64::new(0.0, 0.0);
            let mut dg = C64::new(0.0, 0.0);
            let grid = d.grid();
            for i in 0..d.cell_masses().len() {
                if d.cell_masses()[i] == 0.0 {
                    continue;
                }
                let (a, b) = (grid[i], grid[i + 1]);
                let (alpha, beta) = d.cell_profile(i);
                let za = z - a;
                let zb = z - b;
                let (l, q, p) = cell_logs(za, zb, b - a);
                g += alpha * l + beta * q;
                dg += alpha * (a - b) / (za * zb) + beta * p;
            }
            for atom in d.atoms() {
                let inv = 1.0 / (z - atom.location);
                g += atom.mass * inv;
                dg -= atom.mass * inv * inv;
            }
            (g, dg)
        }
    }
}

/// For a cell `[a, b]` of width `h` and `w = h / (z - b)`: `L = log(1 + w)`,
/// `(z - a) L - h` and `L - w`. Small `|w|` uses power series, since the
/// direct forms cancel when the cell is narrow compared to its distance to `z`.
fn cell_logs(za: C64, zb: C64, h: f64) -> (C64, C64, C64) {
    let w = h / zb;
    if w.norm() >= 0.25 {
        let l = za.ln() - zb.ln();
        return (l, za * l - h, l - w);
    }
    // L = sum (-1)^{k+1} w^k / k; (1 + w) L - w = sum_{k>=2} (-1)^k w^k / (k (k-1))
    let mut l = C64::new(0.0, 0.0);
    let mut r = C64::new(0.0, 0.0);
    let mut wk = w;
    for k in 1..=30 {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        l += sign * wk / kf;
        if k >= 2 {
            r -= sign * wk / (kf * (kf - 1.0));
        }
        wk *= w;
        if wk.norm() < 1e-17 * w.norm() {
            break;
        }
    }
    (l, zb * r, l - w)
}

/// A Stieltjes transform `z -> G(z)` on the upper half-plane, built as a base
/// transform followed by zero or more free convolutions with `lambda_rho`.
#[derive(Clone)]
pub struct StieltjesEvaluator {
    base: Arc<dyn BaseTransform>,
    layers: Vec<SubordinationParams>,
    label: String,
}

impl fmt::Debug for StieltjesEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StieltjesEvaluator")
            .field("label", &self.label)
            .field("layers", &self.layers.len())
            .finish()
    }
}

/// One evaluation together with its fixed-point diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub z: C64,
    pub value: C64,
    pub derivative: C64,
    /// `|G - G_prev(psi)|` of the outermost layer (0 for a bare base).
    pub residual: f64,
    /// Outermost subordination point `psi(z)`, if any layer exists.
    pub subordination: Option<C64>,
}

#[derive(Clone, Copy, Debug)]
struct LayerState {
    g: Option<C64>,
    w: Option<C64>,
    sqrt: C64,
}

impl Default for LayerState {
    fn default() -> Self {
        Self {
            g: None,
            w: None,
            sqrt: C64::new(1.0, 0.0),
        }
    }
}

/// Per-query branch and warm-start state, one entry per convolution layer.
#[derive(Clone, Debug)]
struct Context {
    states: Vec<LayerState>,
}

#[derive(Debug)]
enum Failure {
    NoConvergence(f64),
    Branch,
    Domain,
    Contract,
    Base(Error),
}

struct LayerSolution {
    g: C64,
    dg: C64,
    residual: f64,
    psi: Option<C64>,
}

struct WTrial {
    f: C64,
    residual: f64,
    gp: C64,
    dgp: C64,
    psi: C64,
}

impl StieltjesEvaluator {
    pub fn from_base(base: Arc<dyn BaseTransform>) -> Self {
        let label = base.label();
        Self {
            base,
            layers: Vec::new(),
            label,
        }
    }

    /// Evaluator from an explicit `(G, G')` formula.
    pub fn closed_form<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(C64) -> Result<(C64, C64)> + Send + Sync + 'static,
    {
        Self::from_base(Arc::new(ClosedBase {
            label: label.into(),
            f: Arc::new(f),
        }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[SubordinationParams] {
        &self.layers
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(self.evaluate(z)?.value)
    }

    /// Evaluates at `z` with a fresh continuation from `Im z = eta_start`.
    pub fn evaluate(&self, z: C64) -> Result<Evaluation> {
        check_upper(z)?;
        let mut ctx = self.fresh_context();
        self.continue_vertically(z, &mut ctx)
    }

    /// Evaluates independent points in parallel; order is preserved.
    pub fn evaluate_many(&self, zs: &[C64]) -> Result<Vec<Evaluation>> {
        zs.par_iter().map(|&z| self.evaluate(z)).collect()
    }

    /// Evaluates along a path, warm-starting each point from the previous
    /// one. The first point gets a full vertical continuation; later
    /// segments are subdivided when a step fails.
    pub fn evaluate_path(&self, path: &[C64]) -> Result<Vec<Evaluation>> {
        let mut out = Vec::with_capacity(path.len());
        let mut ctx = self.fresh_context();
        let mut prev: Option<C64> = None;
        for &z in path {
            check_upper(z)?;
            let e = match prev {
                None => self.continue_vertically(z, &mut ctx)?,
                Some(p) => self.step(p, z, &mut ctx, 0).map_err(|f| failure_to_error(f, z))?,
            };
            out.push(e);
            prev = Some(z);
        }
        Ok(out)
    }

    fn fresh_context(&self) -> Context {
        Context {
            states: vec![LayerState::default(); self.layers.len()],
        }
    }

    fn schedule_params(&self) -> SubordinationParams {
        self.layers.last().cloned().unwrap_or_default()
    }

    fn continue_vertically(&self, z: C64, ctx: &mut Context) -> Result<Evaluation> {
        if self.layers.is_empty() {
            let (value, derivative) = self.base.eval(z)?;
            return Ok(Evaluation {
                z,
                value,
                derivative,
                residual: 0.0,
                subordination: None,
            });
        }
        let schedule = self.schedule_params().eta_schedule(z.im);
        let first = C64::new(z.re, schedule[0]);
        let mut last = self.solve_point(first, ctx).map_err(|f| failure_to_error(f, first))?;
        let mut prev = first;
        for &eta in &schedule[1..] {
            let target = C64::new(z.re, eta);
            last = self
                .step(prev, target, ctx, 0)
                .map_err(|f| failure_to_error(f, target))?;
            prev = target;
        }
        Ok(last)
    }

    /// Moves the continuation from `from` to `to`, bisecting on failure.
    fn step(&self, from: C64, to: C64, ctx: &mut Context, depth: usize) -> std::result::Result<Evaluation, Failure> {
        let snapshot = ctx.clone();
        match self.solve_point(to, ctx) {
            Ok(e) => Ok(e),
            Err(f) => {
                *ctx = snapshot;
                if depth >= 16 {
                    return Err(f);
                }
                let mid = if (from.re - to.re).abs() < 1e-300 {
                    C64::new(to.re, (from.im * to.im).sqrt())
                } else {
                    0.5 * (from + to)
                };
                self.step(from, mid, ctx, depth + 1)?;
                self.step(mid, to, ctx, depth + 1)
            }
        }
    }

    fn solve_point(&self, z: C64, ctx: &mut Context) -> std::result::Result<Evaluation, Failure> {
        let top = self.layers.len();
        let sol = self.solve_layer(top, z, ctx)?;
        if let Some(psi) = sol.psi {
            if psi.im < 0.5 * z.im {
                return Err(Failure::Contract);
            }
        }
        Ok(Evaluation {
            z,
            value: sol.g,
            derivative: sol.dg,
            residual: sol.residual,
            subordination: sol.psi,
        })
    }

    fn solve_layer(&self, k: usize, z: C64, ctx: &mut Context) -> std::result::Result<LayerSolution, Failure> {
        if k == 0 {
            let (g, dg) = self.base.eval(z).map_err(Failure::Base)?;
            return Ok(LayerSolution {
                g,
                dg,
                residual: 0.0,
                psi: None,
            });
        }
        let p = &self.layers[k - 1];
        if p.rho == 0.0 {
            return self.solve_layer(k - 1, z, ctx);
        }
        match p.solver {
            FixedPointSolver::Newton => self.solve_layer_newton(k, z, ctx),
            FixedPointSolver::Picard => self.solve_layer_picard(k, z, ctx),
        }
    }

    /// Newton in the second subordination variable `w`, where
    /// `G = w / (w^2 - rho^2)` and `psi = z - rho^2 / w`; the equation
    /// `F(w) = w - rho^2/w - 1/G_prev(psi) = 0` involves no square root.
    fn solve_layer_newton(&self, k: usize, z: C64, ctx: &mut Context) -> std::result::Result<LayerSolution, Failure> {
        let p = &self.layers[k - 1];
        let rho2 = p.rho * p.rho;
        let state = ctx.states[k - 1];

        let trial = |w: C64, ctx: &mut Context| -> std::result::Result<WTrial, Failure> {
            if !(w.im > 0.0) || !w.re.is_finite() || !w.im.is_finite() {
                return Err(Failure::Domain);
            }
            let psi = z - rho2 / w;
            let inner = self.solve_layer(k - 1, psi, ctx)?;
            if inner.g.norm() == 0.0 {
                return Err(Failure::Domain);
            }
            let f = w - rho2 / w - 1.0 / inner.g;
            let g_w = w / (w * w - rho2);
            Ok(WTrial {
                f,
                residual: (g_w - inner.g).norm(),
                gp: inner.g,
                dgp: inner.dg,
                psi,
            })
        };

        let mut w = state.w.unwrap_or(z);
        let mut cur = match trial(w, ctx) {
            Ok(t) => t,
            Err(_) if state.w.is_some() => {
                w = z;
                trial(w, ctx)?
            }
            Err(e) => return Err(e),
        };
        for _ in 0..p.max_iter {
            if cur.residual <= p.tol {
                let g = cur.gp;
                if g.im > IM_LEAK_TOLERANCE * (1.0 + g.norm()) {
                    return Err(Failure::Contract);
                }
                // implicit derivative of F(w, z) = 0
                let q = cur.dgp / (cur.gp * cur.gp);
                let a = rho2 / (w * w);
                let dw = -q / (1.0 + a * (1.0 + q));
                let dg = cur.dgp * (1.0 + a * dw);
                ctx.states[k - 1] = LayerState {
                    g: Some(g),
                    w: Some(w),
                    sqrt: 2.0 * g * w - 1.0,
                };
                return Ok(LayerSolution {
                    g,
                    dg,
                    residual: cur.residual,
                    psi: Some(cur.psi),
                });
            }
            let fnorm = cur.f.norm();
            let a = rho2 / (w * w);
            let jac = 1.0 + a * (1.0 + cur.dgp / (cur.gp * cur.gp));
            let delta = cur.f / jac;
            let mut accepted = false;
            let mut lambda = 1.0;
            while lambda >= 1.0 / 1024.0 {
                let w_try = w - lambda * delta;
                if let Ok(t) = trial(w_try, ctx) {
                    if t.f.norm() < (1.0 - 1e-4 * lambda) * fnorm {
                        w = w_try;
                        cur = t;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                // damped step of the self-map w -> 1/G_prev(psi) + rho^2/w
                let target = 1.0 / cur.gp + rho2 / w;
                let w_try = (1.0 - p.damping) * w + p.damping * target;
                cur = trial(w_try, ctx)?;
                w = w_try;
            }
        }
        Err(Failure::NoConvergence(cur.residual))
    }

    /// Damped Picard on `G <- G_prev(z - 2 rho^2 G / (1 + sqrt(1 + 4 rho^2 G^2)))`,
    /// with the square-root sign chosen closest to the last accepted value.
    fn solve_layer_picard(&self, k: usize, z: C64, ctx: &mut Context) -> std::result::Result<LayerSolution, Failure> {
        let p = &self.layers[k - 1];
        let rho2 = p.rho * p.rho;
        let state = ctx.states[k - 1];
        let sref = state.sqrt;

        let trial = |g: C64, ctx: &mut Context| -> std::result::Result<(C64, C64, C64, C64), Failure> {
            let s = branch_sqrt(1.0 + 4.0 * rho2 * g * g, sref)?;
            let psi = z - 2.0 * rho2 * g / (1.0 + s);
            if !(psi.im > 0.0) || !psi.re.is_finite() {
                return Err(Failure::Domain);
            }
            let inner = self.solve_layer(k - 1, psi, ctx)?;
            Ok((inner.g, inner.dg, s, psi))
        };

        let mut g = state.g.unwrap_or(1.0 / z);
        let (mut gp, mut dgp, mut s, mut psi) = trial(g, ctx)?;
        for _ in 0..p.max_iter {
            let res = (g - gp).norm();
            if res <= p.tol {
                if g.im > IM_LEAK_TOLERANCE * (1.0 + g.norm()) {
                    return Err(Failure::Contract);
                }
                let r_prime = 2.0 * rho2 / (s * (1.0 + s));
                let dg = dgp / (1.0 + dgp * r_prime);
                ctx.states[k - 1] = LayerState {
                    g: Some(g),
                    w: Some((1.0 + s) / (2.0 * g)),
                    sqrt: s,
                };
                return Ok(LayerSolution {
                    g,
                    dg,
                    residual: res,
                    psi: Some(psi),
                });
            }
            g = (1.0 - p.damping) * g + p.damping * gp;
            (gp, dgp, s, psi) = trial(g, ctx)?;
        }
        Err(Failure::NoConvergence((g - gp).norm()))
    }
}

/// Square root of `x` on the branch continuing `reference`.
fn branch_sqrt(x: C64, reference: C64) -> std::result::Result<C64, Failure> {
    let s = x.sqrt();
    let d_plus = (s - reference).norm();
    let d_minus = (s + reference).norm();
    if s.norm() > 1e-8 * (1.0 + reference.norm()) && (d_plus - d_minus).abs() <= 1e-6 * (d_plus + d_minus) {
        return Err(Failure::Branch);
    }
    Ok(if d_plus <= d_minus { s } else { -s })
}

fn check_upper(z: C64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NotUpperHalfPlane(z));
    }
    Ok(())
}

fn failure_to_error(f: Failure, z: C64) -> Error {
    match f {
        Failure::NoConvergence(residual) => Error::FixedPointNoConvergence { z, residual },
        Failure::Branch => Error::BranchAmbiguity { z },
        Failure::Domain | Failure::Contract => Error::FixedPointNoConvergence { z, residual: f64::NAN },
        Failure::Base(e) => e,
    }
}

/// Stieltjes transform `int (z - x)^{-1} dmu(x)` of a measure.
pub fn stieltjes_of_measure(m: &SpectralMeasure) -> StieltjesEvaluator {
    StieltjesEvaluator::from_base(Arc::new(MeasureBase { measure: m.clone() }))
}

/// Closed-form transform of `Theta^{1,v}`, depending on `|v|` only.
pub fn theta1_evaluator(r: f64) -> StieltjesEvaluator {
    StieltjesEvaluator::from_base(Arc::new(Theta1Base { r }))
}

/// `g` convolved with `lambda_rho`, `rho = params.rho`.
pub fn free_bernoulli_convolve(g: &StieltjesEvaluator, params: SubordinationParams) -> Result<StieltjesEvaluator> {
    params.validate()?;
    let mut out = g.clone();
    out.label = format!("{} [+] lambda_{}", g.label, params.rho);
    out.layers.push(params);
    Ok(out)
}

/// Transform of `Theta^{d,v} = Theta^{d-1,v} [+] lambda_1`, starting from the
/// closed form for `d = 1`.
pub fn theta_recursion(d: usize, v: C64) -> Result<StieltjesEvaluator> {
    theta_recursion_with(d, v, SubordinationParams::default())
}

/// [`theta_recursion`] with custom solver settings (`rho` is forced to 1).
pub fn theta_recursion_with(d: usize, v: C64, params: SubordinationParams) -> Result<StieltjesEvaluator> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::InvalidArgument("v must be finite".into()));
    }
    let mut g = theta1_evaluator(v.norm());
    for _ in 1..d {
        g = free_bernoulli_convolve(
            &g,
            SubordinationParams {
                rho: 1.0,
                ..params.clone()
            },
        )?;
    }
    g.label = format!("theta(d={d}, |v|={})", v.norm());
    Ok(g)
}

/// Density recovered by Stieltjes inversion.
#[derive(Clone, Debug)]
pub struct InvertedDensity {
    pub measure: SpectralMeasure,
    /// Factor applied to make the clipped density integrate to one.
    pub renormalization: f64,
    pub warning: Option<String>,
}

/// Accepted range of the renormalization factor.
pub const RENORMALIZATION_BAND: (f64, f64) = (0.98, 1.02);

/// `-Im G(x + i eta) / pi` at a single point, without extrapolation.
pub fn smeared_density(g: &StieltjesEvaluator, x: f64, eta: f64) -> Result<f64> {
    Ok(-g.eval(C64::new(x, eta))?.im / PI)
}

/// Density `-(1/pi) Im G(x + i eta)`, Richardson-extrapolated from `eta` and
/// `eta/2`, clipped at zero and renormalized on `grid`.
pub fn invert_to_density(g: &StieltjesEvaluator, grid: &[f64], eta: f64, strict: bool) -> Result<InvertedDensity> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "inversion grid needs at least two points".into(),
        ));
    }
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            let coarse = -g.eval(C64::new(x, eta))?.im / PI;
            let fine = -g.eval(C64::new(x, 0.5 * eta))?.im / PI;
            Ok((2.0 * fine - coarse).max(0.0))
        })
        .collect::<Result<_>>()?;
    let mass: f64 = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum();
    if !(mass > 0.0) {
        return Err(Error::Renormalization { factor: f64::INFINITY });
    }
    let factor = 1.0 / mass;
    let mut warning = None;
    if factor < RENORMALIZATION_BAND.0 || factor > RENORMALIZATION_BAND.1 {
        if strict {
            return Err(Error::Renormalization { factor });
        }
        warning = Some(format!("renormalization factor {factor} outside [0.98, 1.02]"));
    }
    let measure = SpectralMeasure::scaled_density(grid.to_vec(), values, factor)?;
    Ok(InvertedDensity {
        measure,
        renormalization: factor,
        warning,
    })
}

/// Summary of `|Im G|` inside and outside balls around `+-m +- |v|`.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub centers: Vec<f64>,
    pub gamma: f64,
    pub max_inside: f64,
    pub max_outside: f64,
    pub argmax_outside: Option<C64>,
    /// `max |Im G(z)| Im z`; at most 1 for any probability measure.
    pub max_im_times_eta: f64,
}

/// Probes `|Im G|` on the points `zs` (each with `Im z >= 1e-3`).
pub fn im_region_probe(g: &StieltjesEvaluator, d: usize, v: C64, zs: &[C64], gamma: f64) -> Result<ProbeReport> {
    if zs.iter().any(|z| z.im < 1e-3) {
        return Err(Error::InvalidArgument("probe points need Im z >= 1e-3".into()));
    }
    let r = v.norm();
    let mut centers: Vec<f64> = (0..=d)
        .flat_map(|m| {
            let m = m as f64;
            [m + r, m - r, -m + r, -m - r]
        })
        .collect();
    centers.sort_by(f64::total_cmp);
    centers.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let values = g.evaluate_many(zs)?;
    let mut report = ProbeReport {
        centers: centers.clone(),
        gamma,
        max_inside: 0.0,
        max_outside: 0.0,
        argmax_outside: None,
        max_im_times_eta: 0.0,
    };
    for e in values {
        let im = e.value.im.abs();
        report.max_im_times_eta = report.max_im_times_eta.max(im * e.z.im);
        let inside = centers.iter().any(|&c| (e.z - c).norm() < gamma);
        if inside {
            report.max_inside = report.max_inside.max(im);
        } else if im > report.max_outside {
            report.max_outside = im;
            report.argmax_outside = Some(e.z);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;

    fn lambda1() -> StieltjesEvaluator {
        stieltjes_of_measure(
            &SpectralMeasure::atomic(vec![
                Atom {
                    location: -1.0,
                    mass: 0.5,
                },
                Atom {
                    location: 1.0,
                    mass: 0.5,
                },
            ])
            .unwrap(),
        )
    }

    #[test]
    fn two_atom_transform() {
        let g = lambda1().eval(C64::new(0.0, 2.0)).unwrap();
        assert!((g - C64::new(0.0, -0.4)).norm() < 1e-15);
        let delta0 = stieltjes_of_measure(
            &SpectralMeasure::atomic(vec![Atom {
                location: 0.0,
                mass: 1.0,
            }])
            .unwrap(),
        );
        let z = C64::new(0.3, 0.7);
        assert!((delta0.eval(z).unwrap() - 1.0 / z).norm() < 1e-15);
    }

    #[test]
    fn arcsine_from_lambda1() {
        let g = free_bernoulli_convolve(&lambda1(), SubordinationParams::with_rho(1.0)).unwrap();
        let e = g.evaluate(C64::new(0.0, 3.0)).unwrap();
        assert!((e.value - C64::new(0.0, -1.0 / 13f64.sqrt())).norm() < 1e-8);
        assert!(e.residual <= 1e-10);
    }

    #[test]
    fn picard_agrees_with_newton_away_from_axis() {
        let newton = free_bernoulli_convolve(&lambda1(), SubordinationParams::with_rho(1.0)).unwrap();
        let picard = free_bernoulli_convolve(
            &lambda1(),
            SubordinationParams {
                solver: FixedPointSolver::Picard,
                ..SubordinationParams::with_rho(1.0)
            },
        )
        .unwrap();
        for z in [C64::new(0.5, 1.0), C64::new(-2.5, 0.5), C64::new(1.0, 3.0)] {
            let a = newton.eval(z).unwrap();
            let b = picard.eval(z).unwrap();
            assert!((a - b).norm() < 1e-9, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn rho_zero_is_passthrough() {
        let base = theta1_evaluator(0.7);
        let g = free_bernoulli_convolve(&base, SubordinationParams::with_rho(0.0)).unwrap();
        let z = C64::new(0.4, 0.2);
        assert_eq!(g.eval(z).unwrap(), base.eval(z).unwrap());
        let tiny = free_bernoulli_convolve(&base, SubordinationParams::with_rho(1e-7)).unwrap();
        assert!((tiny.eval(z).unwrap() - base.eval(z).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(matches!(
            theta_recursion(2, C64::new(0.0, 0.0))
                .unwrap()
                .eval(C64::new(0.0, -1.0)),
            Err(Error::NotUpperHalfPlane(_))
        ));
    }

    #[test]
    fn schedule_is_decreasing_and_ends_at_target() {
        let s = SubordinationParams::default().eta_schedule(1e-3);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*s.last().unwrap(), 1e-3);
        assert_eq!(SubordinationParams::default().eta_schedule(20.0), vec![20.0]);
    }

    #[test]
    fn params_validation() {
        assert!(SubordinationParams {
            damping: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SubordinationParams {
            rho: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SubordinationParams {
            eta_factor: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cauchy_spike_for_dirac() {
        let delta0 = stieltjes_of_measure(
            &SpectralMeasure::atomic(vec![Atom {
                location: 0.0,
                mass: 1.0,
            }])
            .unwrap(),
        );
        let grid = crate::quad::linspace(-1.0, 1.0, 20001);
        let inv = invert_to_density(&delta0, &grid, 1e-3, false).unwrap();
        let mass = inv.measure.cdf(0.1) - inv.measure.cdf_left(-0.1);
        assert!(mass >= 0.99, "{mass}");
    }
}
