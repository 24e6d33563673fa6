//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 for invalid configuration, 3 for numerical
//! failures or failed checks.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::brown_girko::{
    admissible_radii, brown_from_potential, default_step, girko_identity_check, log_potential, radial_symmetry_check,
    BumpSpec,
};
use crate::closed_forms::{abs_sd_measure, brown_density_h_d, density_abs_sd, density_f_r};
use crate::ensembles::{mix_seed, sample_sum, ComplexShift, EnsembleSpec};
use crate::error::Error;
use crate::linalg::{general_eigenvalues, singular_values};
use crate::measures::{esd_from_reals, ks_distance};
use crate::ortho_weyl::ortho_limit_check;
use crate::quad::linspace;
use crate::schwinger_dyson::{free_bernoulli_convolve, invert_to_density, theta1_evaluator, SubordinationParams};
use crate::singular_stats::good_event_frequency;
use crate::svg::{line_plot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "brownring",
    version,
    about = "Spectra of sums of Haar unitary and orthogonal matrices"
)]
pub struct Cli {
    /// Maximum worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample S_n and write its singular values and eigenvalues.
    SampleEsd(SampleArgs),
    /// Limiting singular-value density of S - vI by free convolution.
    LimitDensity(LimitArgs),
    /// Brown density reconstructed from log-potentials.
    Brown(BrownArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Escalate warnings to failures.
    #[arg(long)]
    pub strict: bool,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub summands: usize,
    /// Number of unitary summands d' (default: all).
    #[arg(long)]
    pub unitary_count: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_im: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LimitArgs {
    #[arg(long)]
    pub summands: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_im: f64,
    /// Scale of each Bernoulli layer.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 4001)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BrownArgs {
    #[arg(long)]
    pub summands: usize,
    /// Number of radii.
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    /// Finite-difference step (default 0.02 sqrt(d)).
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // an already-initialized pool (e.g. in tests) is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match &cli.command {
        Command::SampleEsd(a) => sample_esd(a),
        Command::LimitDensity(a) => limit_density(a),
        Command::Brown(a) => brown(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            EXIT_NUMERICAL
        }
    }
}

fn header<C: Serialize>(config: &C, seed: Option<u64>) -> String {
    let json = serde_json::to_string(config).unwrap_or_default();
    let mut h = format!("# brownring {}\n# config: {json}\n", env!("CARGO_PKG_VERSION"));
    match seed {
        Some(s) => h.push_str(&format!("# seed: {s}\n")),
        None => h.push_str("# seed: none\n"),
    }
    h
}

fn json_report<C: Serialize>(config: &C, seed: Option<u64>, body: serde_json::Value) -> String {
    let report = serde_json::json!({
        "tool": format!("brownring {}", env!("CARGO_PKG_VERSION")),
        "config": config,
        "seed": seed,
        "report": body,
    });
    format!("{report:#}\n")
}

fn write_output(dir: &Path, name: &str, head: &str, body: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, format!("{head}{body}"))?;
    Ok(path)
}

fn write_svg(common: &Common, name: &str, title: &str, series: &[Series]) -> CliResult<()> {
    if common.svg {
        fs::create_dir_all(&common.out)?;
        fs::write(common.out.join(name), line_plot(title, series))?;
    }
    Ok(())
}

fn shift(re: f64, im: f64) -> CliResult<ComplexShift> {
    Ok(ComplexShift::new(Complex64::new(re, im))?)
}

fn sample_esd(a: &SampleArgs) -> CliResult<i32> {
    let spec = EnsembleSpec::new(a.dim, a.summands, a.unitary_count.unwrap_or(a.summands), a.seed)?;
    let v = shift(a.shift_re, a.shift_im)?;
    let s = sample_sum(&spec)?;
    let sv = singular_values(&s.shifted(v.value()))?;
    let eig = general_eigenvalues(&s)?;
    let head = header(a, Some(a.seed));

    let mut body = String::from("singular_value\n");
    for x in &sv {
        body.push_str(&format!("{x}\n"));
    }
    let p = write_output(&a.common.out, "singular_values.csv", &head, &body)?;
    println!("wrote {}", p.display());
    let p = write_output(&a.common.out, "eigenvalues.csv", &head, &eig.csv())?;
    println!("wrote {}", p.display());

    if spec.d >= 2 && v.modulus() == 0.0 {
        let empirical = esd_from_reals(&sv)?;
        let reference = abs_sd_measure(spec.d, 2001)?;
        println!("ks_vs_limit = {}", ks_distance(&empirical, &reference));
    }
    if a.common.svg {
        let mut sorted = sv.clone();
        sorted.sort_by(f64::total_cmp);
        let cdf: Vec<f64> = (1..=sorted.len()).map(|k| k as f64 / sorted.len() as f64).collect();
        write_svg(
            &a.common,
            "singular_values.svg",
            "singular value CDF",
            &[Series {
                label: "empirical",
                x: &sorted,
                y: &cdf,
            }],
        )?;
    }
    Ok(EXIT_OK)
}

fn limit_density(a: &LimitArgs) -> CliResult<i32> {
    if a.summands == 0 {
        return Err(Failure::Config("--summands must be at least 1".into()));
    }
    if a.grid < 2 {
        return Err(Failure::Config("--grid must be at least 2".into()));
    }
    if !(a.rho >= 0.0) {
        return Err(Failure::Config("--rho must be non-negative".into()));
    }
    let v = shift(a.shift_re, a.shift_im)?;
    let r = v.modulus();
    let params = SubordinationParams {
        rho: a.rho,
        tol: a.tol,
        ..SubordinationParams::default()
    };
    params.validate()?;
    let mut g = theta1_evaluator(r);
    for _ in 1..a.summands {
        g = free_bernoulli_convolve(&g, params.clone())?;
    }
    let edge = 1.0 + r + a.rho * (a.summands - 1) as f64 + 0.25;
    let grid = linspace(-edge, edge, a.grid);
    let inv = invert_to_density(&g, &grid, a.eta, a.common.strict)?;
    if let Some(w) = &inv.warning {
        eprintln!("warning: {w}");
    }
    let reference = |x: f64| -> Option<f64> {
        let x = x.abs();
        if a.summands == 1 && r > 0.0 {
            return density_f_r(r, x).ok().filter(|y| y.is_finite()).map(|y| 0.5 * y);
        }
        if a.summands >= 2 && r == 0.0 && a.rho == 1.0 {
            return density_abs_sd(a.summands, x).ok().map(|y| 0.5 * y);
        }
        None
    };
    let mut body = String::from("x,density,reference\n");
    let mut dens = Vec::with_capacity(grid.len());
    let mut refs = Vec::with_capacity(grid.len());
    for &x in &grid {
        let d = inv.measure.density_at(x);
        let rf = reference(x);
        dens.push(d);
        refs.push(rf.unwrap_or(f64::NAN));
        match rf {
            Some(y) => body.push_str(&format!("{x},{d},{y}\n")),
            None => body.push_str(&format!("{x},{d},\n")),
        }
    }
    let head = header(a, None);
    let p = write_output(&a.common.out, "density.csv", &head, &body)?;
    println!("wrote {}", p.display());
    let report = serde_json::json!({
        "label": g.label(),
        "renormalization": inv.renormalization,
        "warning": inv.warning,
    });
    let p = write_output(&a.common.out, "density_report.json", "", &json_report(a, None, report))?;
    println!("wrote {}", p.display());
    println!("renormalization = {}", inv.renormalization);
    write_svg(
        &a.common,
        "density.svg",
        "limiting singular-value density",
        &[
            Series {
                label: "inverted",
                x: &grid,
                y: &dens,
            },
            Series {
                label: "closed form",
                x: &grid,
                y: &refs,
            },
        ],
    )?;
    Ok(EXIT_OK)
}

fn brown(a: &BrownArgs) -> CliResult<i32> {
    let d = a.summands;
    if d < 2 {
        return Err(Failure::Config(
            "--summands must be at least 2 for a planar Brown density".into(),
        ));
    }
    if a.grid == 0 {
        return Err(Failure::Config("--grid must be positive".into()));
    }
    let sd = (d as f64).sqrt();
    let h = a.step.unwrap_or_else(|| default_step(d));
    let radii = admissible_radii(d, 0.1 * sd, 0.9 * sd, a.grid);
    let profile = brown_from_potential(d, &radii, h)?;
    let mut body = String::from("r,potential,density,h_d_reference,rel_error\n");
    let mut refs = Vec::new();
    let mut errs = Vec::new();
    for (&r, &dens) in radii.iter().zip(profile.values()) {
        let f = log_potential(d, r)?;
        let href = brown_density_h_d(d, Complex64::new(r, 0.0))?;
        let rel = (dens - href).abs() / href;
        refs.push(href);
        errs.push(rel);
        body.push_str(&format!("{r},{f},{dens},{href},{rel}\n"));
    }
    let p = write_output(&a.common.out, "brown.csv", &header(a, None), &body)?;
    println!("wrote {}", p.display());
    let mut sorted = errs.clone();
    sorted.sort_by(f64::total_cmp);
    println!("median_rel_error = {}", sorted[sorted.len() / 2]);
    println!("max_rel_error = {}", sorted[sorted.len() - 1]);
    write_svg(
        &a.common,
        "brown.svg",
        "radial Brown density",
        &[
            Series {
                label: "reconstructed",
                x: &radii,
                y: profile.values(),
            },
            Series {
                label: "closed form",
                x: &radii,
                y: &refs,
            },
        ],
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckRow {
    name: &'static str,
    value: f64,
    threshold: f64,
    monte_carlo: bool,
    passed: bool,
}

fn verify(a: &VerifyArgs) -> CliResult<i32> {
    let mut rows = Vec::new();

    let psi = BumpSpec::new(Complex64::new(0.0, 0.0), 1.5)?;
    let mut worst_gap: f64 = 0.0;
    for k in 0..5 {
        let spec = EnsembleSpec::unitary(8, 2, mix_seed(a.seed, k))?;
        let s = sample_sum(&spec)?;
        worst_gap = worst_gap.max(girko_identity_check(&s, psi, 120)?.gap);
    }
    rows.push(CheckRow {
        name: "girko_identity_gap",
        value: worst_gap,
        threshold: 1e-2,
        monte_carlo: false,
        passed: worst_gap <= 1e-2,
    });

    let ortho = ortho_limit_check(Complex64::new(0.5, 0.0), Complex64::new(0.4, 0.3), &[11, 31, 101])?;
    let last = *ortho.gaps.last().expect("three sizes");
    rows.push(CheckRow {
        name: "ortho_limit_gap_n101",
        value: last,
        threshold: 2e-2,
        monte_carlo: false,
        passed: ortho.decreasing && last <= 2e-2,
    });

    let sym = radial_symmetry_check(2, 0.7, 8)?;
    rows.push(CheckRow {
        name: "radial_symmetry",
        value: sym,
        threshold: 2e-3,
        monte_carlo: false,
        passed: sym <= 2e-3,
    });

    let freq = good_event_frequency(&EnsembleSpec::orthogonal(128, 2, a.seed)?, 200)?;
    rows.push(CheckRow {
        name: "good_event_frequency",
        value: freq,
        threshold: 0.95,
        monte_carlo: true,
        passed: freq >= 0.95,
    });

    let mut failed = false;
    println!("{:<24} {:>14} {:>10}  status", "check", "value", "threshold");
    for r in &rows {
        let status = if r.passed {
            "PASS"
        } else if r.monte_carlo && !a.common.strict {
            "WARN"
        } else {
            failed = true;
            "FAIL"
        };
        println!("{:<24} {:>14.6e} {:>10.3e}  {status}", r.name, r.value, r.threshold);
    }
    let p = write_output(
        &a.common.out,
        "verify.json",
        "",
        &json_report(a, Some(a.seed), serde_json::json!(rows)),
    )?;
    println!("wrote {}", p.display());
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}
