//! Spectral measures on the real line and planar spectra, with CDFs,
//! Kolmogorov-Smirnov distances, symmetrization and truncated log moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Allowed deviation of a grid density's total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A probability measure on the real line.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralMeasure {
    /// Uniform weights on sorted points.
    Empirical(Vec<f64>),
    Density(GridDensity),
}

/// Non-negative density tabulated on a strictly increasing grid, plus atoms.
///
/// Each cell carries its own mass. Ordinary cells use the trapezoid rule;
/// cells ending at an inverse-square-root singularity get their mass from the
/// substitution `x = edge -+ t^2` and store the cell average as the endpoint
/// value. Inside a cell the density is the linear interpolant rescaled to the
/// cell mass, and the CDF interpolates linearly between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    cell_mass: Vec<f64>,
    cumulative: Vec<f64>,
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    /// ESD of a finite list of reals.
    pub fn empirical(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure(
                "empirical measure needs at least one point".into(),
            ));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("empirical points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(SpectralMeasure::Empirical(points))
    }

    /// Grid density with trapezoid cell masses.
    pub fn from_grid(grid: Vec<f64>, values: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        let cell_mass = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .collect();
        Self::from_cells(grid, values, cell_mass, atoms)
    }

    /// Grid density with explicit per-cell masses.
    pub fn from_cells(grid: Vec<f64>, values: Vec<f64>, cell_mass: Vec<f64>, mut atoms: Vec<Atom>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidMeasure("grid and values differ in length".into()));
        }
        if grid.len() == 1 {
            return Err(Error::InvalidMeasure("a density grid needs at least two nodes".into()));
        }
        if cell_mass.len() != grid.len().saturating_sub(1) {
            return Err(Error::InvalidMeasure("one mass per grid cell expected".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().chain(&cell_mass).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure(
                "density values must be finite and non-negative".into(),
            ));
        }
        if atoms
            .iter()
            .any(|a| !a.location.is_finite() || !a.mass.is_finite() || a.mass <= 0.0)
        {
            return Err(Error::InvalidMeasure(
                "atoms need finite location and positive mass".into(),
            ));
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        if !grid.is_empty() {
            cumulative.push(0.0);
        }
        for m in &cell_mass {
            acc += m;
            cumulative.push(acc);
        }
        let total = acc + atoms.iter().map(|a| a.mass).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} is not 1 within {MASS_TOLERANCE}"
            )));
        }
        Ok(SpectralMeasure::Density(GridDensity {
            grid,
            values,
            cell_mass,
            cumulative,
            atoms,
        }))
    }

    /// Purely atomic measure.
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        Self::from_cells(vec![], vec![], vec![], atoms)
    }

    /// Tabulates a density given in closed form on one or more support
    /// intervals, using Chebyshev-clustered nodes. Endpoints where `f` is
    /// infinite are treated as inverse-square-root edges.
    pub fn from_density_fn<F: Fn(f64) -> f64>(
        intervals: &[(f64, f64)],
        nodes_per_interval: usize,
        f: F,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        let mut grid: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut cell_mass: Vec<f64> = Vec::new();
        for &(a, b) in intervals {
            if !(b > a) {
                return Err(Error::InvalidMeasure(format!("empty support interval [{a}, {b}]")));
            }
            let g = quad::clustered_grid(a, b, nodes_per_interval.max(3));
            let mut v: Vec<f64> = g.iter().map(|&x| f(x)).collect();
            let last = g.len() - 1;
            let mut m: Vec<f64> = g.windows(2).map(|c| quad::integrate(&f, c[0], c[1], 1)).collect();
            // end cells by x = a + t^2, which absorbs inverse-square-root edges
            let w0 = g[1] - g[0];
            m[0] = quad::integrate(|t| 2.0 * t * f(g[0] + t * t), 0.0, w0.sqrt(), 1);
            let wl = g[last] - g[last - 1];
            m[last - 1] = quad::integrate(|t| 2.0 * t * f(g[last] - t * t), 0.0, wl.sqrt(), 1);
            if !v[0].is_finite() {
                v[0] = m[0] / w0;
            }
            if !v[last].is_finite() {
                v[last] = m[last - 1] / wl;
            }
            if let Some(&prev_end) = grid.last() {
                if g[0] < prev_end {
                    return Err(Error::InvalidMeasure("support intervals overlap".into()));
                }
                if g[0] == prev_end {
                    // shared endpoint: merge nodes
                    let k = values.len() - 1;
                    values[k] = 0.5 * (values[k] + v[0]);
                    grid.extend_from_slice(&g[1..]);
                    values.extend_from_slice(&v[1..]);
                    cell_mass.extend(m);
                    continue;
                }
                // zero-mass gap cell
                cell_mass.push(0.0);
            }
            grid.extend(g);
            values.extend(v);
            cell_mass.extend(m);
        }
        Self::from_cells(grid, values, cell_mass, atoms)
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            SpectralMeasure::Empirical(_) => 1.0,
            SpectralMeasure::Density(d) => {
                d.cumulative.last().copied().unwrap_or(0.0) + d.atoms.iter().map(|a| a.mass).sum::<f64>()
            }
        }
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SpectralMeasure::Empirical(p) => p.partition_point(|&y| y <= x) as f64 / p.len() as f64,
            SpectralMeasure::Density(d) => {
                d.continuous_cdf(x) + d.atoms.iter().filter(|a| a.location <= x).map(|a| a.mass).sum::<f64>()
            }
        }
    }

    /// Left limit `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            SpectralMeasure::Empirical(p) => p.partition_point(|&y| y < x) as f64 / p.len() as f64,
            SpectralMeasure::Density(d) => {
                d.continuous_cdf(x) + d.atoms.iter().filter(|a| a.location < x).map(|a| a.mass).sum::<f64>()
            }
        }
    }

    /// Points at which the CDF may jump or change slope.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpectralMeasure::Empirical(p) => p.clone(),
            SpectralMeasure::Density(d) => d
                .grid
                .iter()
                .copied()
                .chain(d.atoms.iter().map(|a| a.location))
                .collect(),
        }
    }

    /// `(min, max)` of the support representation.
    pub fn extent(&self) -> (f64, f64) {
        let b = self.breakpoints();
        let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `int x^k dmu`.
    pub fn moment(&self, k: i32) -> f64 {
        self.integrate(|x| x.powi(k))
    }

    /// `int f dmu`, with 16-point Gauss-Legendre on every density cell.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            SpectralMeasure::Empirical(p) => p.iter().map(|&x| f(x)).sum::<f64>() / p.len() as f64,
            SpectralMeasure::Density(d) => {
                let cont: f64 = (0..d.cell_mass.len())
                    .map(|i| d.integrate_cell(i, d.grid[i], d.grid[i + 1], &f))
                    .sum();
                cont + d.atoms.iter().map(|a| a.mass * f(a.location)).sum::<f64>()
            }
        }
    }

    pub fn as_density(&self) -> Option<&GridDensity> {
        match self {
            SpectralMeasure::Density(d) => Some(d),
            SpectralMeasure::Empirical(_) => None,
        }
    }

    pub fn points(&self) -> Option<&[f64]> {
        match self {
            SpectralMeasure::Empirical(p) => Some(p),
            SpectralMeasure::Density(_) => None,
        }
    }

    /// Multiplies the continuous part and atoms by `factor`; used after
    /// renormalizing inverted densities.
    pub(crate) fn scaled_density(grid: Vec<f64>, values: Vec<f64>, factor: f64) -> Result<Self> {
        let values: Vec<f64> = values.into_iter().map(|v| v * factor).collect();
        Self::from_grid(grid, values, vec![])
    }

    /// Density value (continuous part) at `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            SpectralMeasure::Density(d) => d.density_at(x),
            SpectralMeasure::Empirical(_) => 0.0,
        }
    }

    /// CSV rows `x,density` over the grid.
    pub fn density_csv(&self) -> String {
        let mut s = String::from("x,density\n");
        if let SpectralMeasure::Density(d) = self {
            for (x, v) in d.grid.iter().zip(&d.values) {
                s.push_str(&format!("{x},{v}\n"));
            }
        }
        s
    }

    /// CSV rows `x,cdf` at every breakpoint.
    pub fn cdf_csv(&self) -> String {
        let mut s = String::from("x,cdf\n");
        let mut b = self.breakpoints();
        b.sort_by(f64::total_cmp);
        b.dedup();
        for x in b {
            s.push_str(&format!("{x},{}\n", self.cdf(x)));
        }
        s
    }

    /// Atom list as JSON.
    pub fn atoms_json(&self) -> String {
        let atoms: &[Atom] = match self {
            SpectralMeasure::Density(d) => &d.atoms,
            SpectralMeasure::Empirical(_) => &[],
        };
        serde_json::to_string(atoms).expect("atoms serialize")
    }
}

impl GridDensity {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_masses(&self) -> &[f64] {
        &self.cell_mass
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Cell `i` density as `alpha + beta (x - grid[i])`.
    pub fn cell_profile(&self, i: usize) -> (f64, f64) {
        let h = self.grid[i + 1] - self.grid[i];
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let trap = 0.5 * h * (v0 + v1);
        let m = self.cell_mass[i];
        if m == 0.0 {
            (0.0, 0.0)
        } else if trap > 0.0 {
            let s = m / trap;
            (s * v0, s * (v1 - v0) / h)
        } else {
            (m / h, 0.0)
        }
    }

    fn continuous_cdf(&self, x: f64) -> f64 {
        if self.grid.is_empty() || x <= self.grid[0] {
            return 0.0;
        }
        let last = self.grid.len() - 1;
        if x >= self.grid[last] {
            return self.cumulative[last];
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.cumulative[i] + t * self.cell_mass[i]
    }

    fn density_at(&self, x: f64) -> f64 {
        if self.grid.is_empty() || x < self.grid[0] || x > *self.grid.last().unwrap() {
            return 0.0;
        }
        let i = (self.grid.partition_point(|&g| g <= x).max(1) - 1).min(self.cell_mass.len() - 1);
        let (alpha, beta) = self.cell_profile(i);
        alpha + beta * (x - self.grid[i])
    }

    fn integrate_cell<F: Fn(f64) -> f64>(&self, i: usize, lo: f64, hi: f64, f: &F) -> f64 {
        if hi <= lo || self.cell_mass[i] == 0.0 {
            return 0.0;
        }
        let (alpha, beta) = self.cell_profile(i);
        let g0 = self.grid[i];
        let (x, w) = quad::gl16();
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        x.iter()
            .zip(w)
            .map(|(xi, wi)| {
                let t = mid + half * xi;
                wi * f(t) * (alpha + beta * (t - g0))
            })
            .sum::<f64>()
            * half
    }
}

/// ESD of a list of real eigenvalues.
pub fn esd_from_reals(points: &[f64]) -> Result<SpectralMeasure> {
    SpectralMeasure::empirical(points.to_vec())
}

/// `mu~(B) = (mu(B) + mu(-B)) / 2`.
///
/// Accepts measures supported on `[0, inf)` and measures that are already
/// symmetric (returned unchanged); for empirical measures any input works.
pub fn symmetrize(m: &SpectralMeasure) -> Result<SpectralMeasure> {
    match m {
        SpectralMeasure::Empirical(p) => {
            let mut pts: Vec<f64> = p.iter().map(|x| -x).chain(p.iter().copied()).collect();
            pts.sort_by(f64::total_cmp);
            Ok(SpectralMeasure::Empirical(pts))
        }
        SpectralMeasure::Density(d) => {
            if is_symmetric_density(d, 1e-12) {
                return Ok(m.clone());
            }
            let on_half_line = d.grid.first().is_none_or(|&g| g >= 0.0) && d.atoms.iter().all(|a| a.location >= 0.0);
            if !on_half_line {
                return Err(Error::InvalidMeasure(
                    "symmetrize needs a measure on [0, inf) or an already symmetric one".into(),
                ));
            }
            let mut atoms = Vec::new();
            for a in &d.atoms {
                if a.location == 0.0 {
                    atoms.push(*a);
                } else {
                    atoms.push(Atom {
                        location: -a.location,
                        mass: 0.5 * a.mass,
                    });
                    atoms.push(Atom {
                        location: a.location,
                        mass: 0.5 * a.mass,
                    });
                }
            }
            if d.grid.is_empty() {
                return SpectralMeasure::atomic(atoms);
            }
            let mut grid: Vec<f64> = d.grid.iter().rev().map(|x| -x).collect();
            let mut values: Vec<f64> = d.values.iter().rev().map(|v| 0.5 * v).collect();
            let mut cells: Vec<f64> = d.cell_mass.iter().rev().map(|c| 0.5 * c).collect();
            if d.grid[0] == 0.0 {
                let k = values.len() - 1;
                values[k] = 0.5 * d.values[0];
                grid.extend_from_slice(&d.grid[1..]);
                values.extend(d.values[1..].iter().map(|v| 0.5 * v));
            } else {
                cells.push(0.0);
                grid.extend_from_slice(&d.grid);
                values.extend(d.values.iter().map(|v| 0.5 * v));
            }
            cells.extend(d.cell_mass.iter().map(|c| 0.5 * c));
            SpectralMeasure::from_cells(grid, values, cells, atoms)
        }
    }
}

fn is_symmetric_density(d: &GridDensity, tol: f64) -> bool {
    let n = d.grid.len();
    if n > 0 && d.grid[0] >= 0.0 {
        return false;
    }
    let grid_ok = (0..n).all(|i| (d.grid[i] + d.grid[n - 1 - i]).abs() <= tol * (1.0 + d.grid[i].abs()));
    let cells_ok =
        (0..d.cell_mass.len()).all(|i| (d.cell_mass[i] - d.cell_mass[d.cell_mass.len() - 1 - i]).abs() <= tol);
    let k = d.atoms.len();
    let atoms_ok = (0..k).all(|i| {
        (d.atoms[i].location + d.atoms[k - 1 - i].location).abs() <= tol
            && (d.atoms[i].mass - d.atoms[k - 1 - i].mass).abs() <= tol
    });
    grid_ok && cells_ok && atoms_ok && (n > 0 || k > 0)
}

/// Sup-norm distance between two CDFs.
///
/// Both CDFs are piecewise linear or constant between the merged breakpoints,
/// so the supremum is attained at a breakpoint or as a left limit there.
pub fn ks_distance(a: &SpectralMeasure, b: &SpectralMeasure) -> f64 {
    let mut pts = a.breakpoints();
    pts.extend(b.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.iter()
        .map(|&x| {
            let right = (a.cdf(x) - b.cdf(x)).abs();
            let left = (a.cdf_left(x) - b.cdf_left(x)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
        .min(1.0)
}

/// Truncation window `a < |x| <= b` for log moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMomentWindow {
    a: f64,
    b: f64,
}

impl LogMomentWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && a < b) || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "log-moment window needs 0 <= a < b, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn full() -> Self {
        Self {
            a: 0.0,
            b: f64::INFINITY,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn contains(&self, x: f64) -> bool {
        let r = x.abs();
        r > self.a && r <= self.b
    }
}

/// `int_{a < |x| <= b} log|x| dmu`.
///
/// The upper bound is closed so that windows `(0, a]` and `(a, b]` add up
/// exactly. An atom (or empirical point) at the origin with `a = 0` yields
/// [`Error::LogMomentInfinite`].
pub fn log_moment(m: &SpectralMeasure, w: LogMomentWindow) -> Result<f64> {
    match m {
        SpectralMeasure::Empirical(p) => {
            if w.a == 0.0 {
                let zeros = p.iter().filter(|&&x| x == 0.0).count();
                if zeros > 0 {
                    return Err(Error::LogMomentInfinite {
                        mass: zeros as f64 / p.len() as f64,
                    });
                }
            }
            Ok(p.iter().filter(|&&x| w.contains(x)).map(|x| x.abs().ln()).sum::<f64>() / p.len() as f64)
        }
        SpectralMeasure::Density(d) => {
            if w.a == 0.0 {
                if let Some(a) = d.atoms.iter().find(|a| a.location == 0.0) {
                    return Err(Error::LogMomentInfinite { mass: a.mass });
                }
            }
            let mut total: f64 = d
                .atoms
                .iter()
                .filter(|a| w.contains(a.location))
                .map(|a| a.mass * a.location.abs().ln())
                .sum();
            let log_abs = |x: f64| x.abs().ln();
            for i in 0..d.cell_mass.len() {
                let (g0, g1) = (d.grid[i], d.grid[i + 1]);
                // negative piece [-b, -a) and positive piece (a, b]
                total += d.integrate_cell(i, g0.max(-w.b), g1.min(-w.a), &log_abs);
                total += d.integrate_cell(i, g0.max(w.a), g1.min(w.b), &log_abs);
            }
            Ok(total)
        }
    }
}

/// Complex eigenvalues of a non-Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSpectrum {
    points: Vec<Complex64>,
}

impl PlanarSpectrum {
    pub fn new(points: Vec<Complex64>) -> Self {
        Self { points }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Complex64> {
        self.points
    }

    pub fn sum(&self) -> Complex64 {
        self.points.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.points.iter().product()
    }

    pub fn moduli(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.points.iter().map(|z| z.norm()).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    /// Fraction of eigenvalues with `|lambda| <= r`.
    pub fn fraction_within(&self, r: f64) -> f64 {
        self.points.iter().filter(|z| z.norm() <= r).count() as f64 / self.points.len() as f64
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("re,im\n");
        for z in &self.points {
            s.push_str(&format!("{},{}\n", z.re, z.im));
        }
        s
    }
}
