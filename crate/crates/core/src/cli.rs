//! Command-line front end. [`run`] produces the rendered artifact as a string;
//! the binary only parses arguments, writes the result and maps errors to
//! exit codes.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::critical::{alpha_crit, critical_curve, MAX_CURVE_IONS};
use crate::equilibrium::solve_equilibrium;
use crate::error::{Result, ZigzagError};
use crate::measurements::{analyze, load_measurements, AnalysisReport};
use crate::modes::{axial_spectrum, coupling_matrix_axial, radial_eigenvalues};
use crate::oracle::{bisect_transition, default_bracket, DEFAULT_TOLERANCE};
use crate::power_law::{fit_power_law, PowerLawFit};
use crate::trap::{n_crit, TrapConfig, TrapParameters};

pub const OUTPUT_FORMAT_ENV: &str = "ION_ZIGZAG_OUTPUT_FORMAT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ion-zigzag", version, about = "Linear trapped-ion chains and the linear-to-zigzag transition")]
pub struct RunConfig {
    #[arg(long, short = 'f', value_enum, env = OUTPUT_FORMAT_ENV, default_value = "table", global = true)]
    pub output_format: OutputFormat,

    /// Write the result to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Equilibrium positions of an N-ion chain.
    Equilibrium {
        #[arg(long)]
        n: usize,
        /// Axial frequency in Hz; adds positions in metres.
        #[arg(long)]
        nu_z: Option<f64>,
        /// Ion species for physical positions.
        #[arg(long, default_value = "ca40")]
        ion: String,
        /// TOML file with constants and ion presets.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Axial normal modes, optionally with radial eigenvalues at an anisotropy.
    Modes {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
    },
    /// Critical anisotropy of an N-ion chain.
    Alphacrit {
        #[arg(long)]
        n: usize,
    },
    /// Critical anisotropy over a range of N.
    Curve {
        #[arg(long = "from")]
        from: usize,
        #[arg(long = "to")]
        to: usize,
        /// Also fit c·N^β to the curve.
        #[arg(long)]
        fit: bool,
    },
    /// Power-law fit of the exact curve over a range, or of points from a CSV file.
    Fit {
        /// N range as `lo:hi`.
        #[arg(long, value_parser = parse_range, conflicts_with = "input")]
        range: Option<(usize, usize)>,
        /// CSV with columns `n_ions,alpha[,sigma]`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Locate the transition by full 3D minimization and bisection.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Longest chain that stays linear at the given trap frequencies.
    Ncrit {
        /// Axial frequency, Hz.
        #[arg(long)]
        nu_z: Option<f64>,
        /// Radial (weak-axis) frequency, Hz.
        #[arg(long)]
        nu_r: Option<f64>,
        /// N range of the exact-curve fit used for c and β.
        #[arg(long, value_parser = parse_range, default_value = "2:100")]
        fit_range: (usize, usize),
        /// Use these constants instead of fitting.
        #[arg(long, requires = "beta")]
        c: Option<f64>,
        #[arg(long, requires = "c", allow_hyphen_values = true)]
        beta: Option<f64>,
        /// TOML trap description; supplies frequencies not given as flags.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Reduce a measurement CSV to per-N averages and fit the power law.
    Analyze {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_range(text: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{text}'"))?;
    let lo = lo.trim().parse().map_err(|e| format!("lower bound: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("upper bound: {e}"))?;
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutput {
    pub n_ions: usize,
    pub positions: Vec<f64>,
    pub residual_norm: f64,
    pub length_scale_m: Option<f64>,
    pub positions_m: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModesOutput {
    pub n_ions: usize,
    pub eigenvalues: Vec<f64>,
    /// One vector per mode, ordered like `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub alpha: Option<f64>,
    pub radial_eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n_ions: usize,
    pub alpha_crit: f64,
    pub mu_max: f64,
    /// `ν_r/ν_z` along the transition line.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOutput {
    pub points: Vec<CurveRow>,
    pub fit: Option<PowerLawFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub source: String,
    pub fit: PowerLawFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub n_ions: usize,
    pub alpha_oracle: f64,
    pub alpha_crit: f64,
    pub relative_difference: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcritOutput {
    pub nu_z: f64,
    pub nu_r: f64,
    pub anisotropy: f64,
    pub c: f64,
    pub beta: f64,
    pub n_crit: f64,
    pub n_crit_floor: u64,
    /// Largest N whose exact critical anisotropy is at least `anisotropy`.
    pub n_exact: Option<usize>,
}

/// Result of one command, before rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Artifact {
    Equilibrium(EquilibriumOutput),
    Modes(ModesOutput),
    Alphacrit(CurveRow),
    Curve(CurveOutput),
    Fit(FitOutput),
    Oracle(OracleOutput),
    Ncrit(NcritOutput),
    Analyze(AnalysisReport),
}

/// Execute a command and render it in the requested format.
pub fn run(config: &RunConfig) -> Result<String> {
    let artifact = execute(&config.command)?;
    render(&artifact, config.output_format)
}

/// Run and write to `config.output` or return the text for stdout.
pub fn run_to_destination(config: &RunConfig) -> Result<Option<String>> {
    let text = run(config)?;
    match &config.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| ZigzagError::Io(format!("{}: {e}", path.display())))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

pub fn execute(command: &Command) -> Result<Artifact> {
    match command {
        Command::Equilibrium { n, nu_z, ion, config } => {
            let eq = solve_equilibrium(*n)?;
            let (length_scale_m, positions_m) = match nu_z {
                Some(nu_z) => {
                    let cfg = load_config(config.as_deref())?;
                    let species = cfg.ion(ion)?;
                    let ell = cfg.constants.length_scale(
                        cfg.constants.ion_mass(&species),
                        cfg.constants.ion_charge(&species),
                        *nu_z,
                    )?;
                    (Some(ell), Some(eq.positions.iter().map(|u| ell * u).collect()))
                }
                None => (None, None),
            };
            Ok(Artifact::Equilibrium(EquilibriumOutput {
                n_ions: eq.n_ions,
                positions: eq.positions,
                residual_norm: eq.residual_norm,
                length_scale_m,
                positions_m,
            }))
        }
        Command::Modes { n, alpha } => {
            let eq = solve_equilibrium(*n)?;
            let spectrum = axial_spectrum(&coupling_matrix_axial(&eq))?;
            let radial = alpha.map(|a| radial_eigenvalues(&spectrum, a)).transpose()?;
            let table = spectrum.to_table();
            Ok(Artifact::Modes(ModesOutput {
                n_ions: *n,
                eigenvalues: table.eigenvalues,
                eigenvectors: table.eigenvectors,
                alpha: *alpha,
                radial_eigenvalues: radial,
            }))
        }
        Command::Alphacrit { n } => {
            let p = alpha_crit(*n)?;
            Ok(Artifact::Alphacrit(CurveRow {
                n_ions: p.n_ions,
                alpha_crit: p.alpha_crit,
                mu_max: p.mu_max,
                slope: p.slope(),
            }))
        }
        Command::Curve { from, to, fit } => {
            let curve = critical_curve(*from, *to)?;
            let fit = if *fit { Some(fit_power_law(&curve.pairs(), None)?) } else { None };
            let points = curve
                .points
                .iter()
                .map(|p| CurveRow {
                    n_ions: p.n_ions,
                    alpha_crit: p.alpha_crit,
                    mu_max: p.mu_max,
                    slope: p.slope(),
                })
                .collect();
            Ok(Artifact::Curve(CurveOutput { points, fit }))
        }
        Command::Fit { range, input } => {
            let (source, fit) = match (range, input) {
                (_, Some(path)) => (path.display().to_string(), fit_from_file(path)?),
                (Some((lo, hi)), None) => {
                    let curve = critical_curve(*lo, *hi)?;
                    (format!("exact curve N={lo}..{hi}"), fit_power_law(&curve.pairs(), None)?)
                }
                (None, None) => return Err(ZigzagError::domain("range", "give --range lo:hi or --input FILE")),
            };
            Ok(Artifact::Fit(FitOutput { source, fit }))
        }
        Command::Oracle { n, lo, hi, tol } => {
            let (default_lo, default_hi) = default_bracket(*n);
            let bracket = (lo.unwrap_or(default_lo), hi.unwrap_or(default_hi));
            let alpha_oracle = bisect_transition(*n, bracket.0, bracket.1, *tol)?;
            let exact = alpha_crit(*n)?.alpha_crit;
            Ok(Artifact::Oracle(OracleOutput {
                n_ions: *n,
                alpha_oracle,
                alpha_crit: exact,
                relative_difference: (alpha_oracle - exact).abs() / exact,
                bracket,
                tol: *tol,
            }))
        }
        Command::Ncrit { nu_z, nu_r, fit_range, c, beta, config } => {
            let from_file = match config {
                Some(path) => Some(TrapConfig::from_path(path)?.trap_parameters()?),
                None => None,
            };
            let nu_z = nu_z
                .or(from_file.map(|p| p.nu_z))
                .ok_or_else(|| ZigzagError::domain("nu-z", "required (flag or --config)"))?;
            let nu_r = nu_r
                .or(from_file.map(|p| p.nu_r))
                .ok_or_else(|| ZigzagError::domain("nu-r", "required (flag or --config)"))?;
            let params = match from_file {
                Some(p) => TrapParameters::new(nu_z, nu_r, p.mass, p.charge)?,
                None => TrapParameters::ca40(nu_z, nu_r)?,
            };
            let fit = match (c, beta) {
                (Some(c), Some(beta)) => PowerLawFit {
                    c: *c,
                    beta: *beta,
                    c_stderr: None,
                    beta_stderr: None,
                    n_range: (0, 0),
                    n_points: 0,
                },
                _ => fit_power_law(&critical_curve(fit_range.0, fit_range.1)?.pairs(), None)?,
            };
            let value = n_crit(&params, &fit)?;
            let alpha = params.anisotropy();
            let n_exact = exact_linear_limit(alpha, value)?;
            Ok(Artifact::Ncrit(NcritOutput {
                nu_z,
                nu_r,
                anisotropy: alpha,
                c: fit.c,
                beta: fit.beta,
                n_crit: value,
                n_crit_floor: value.floor() as u64,
                n_exact,
            }))
        }
        Command::Analyze { input } => {
            let file = File::open(input).map_err(|e| ZigzagError::Io(format!("{}: {e}", input.display())))?;
            Ok(Artifact::Analyze(analyze(&load_measurements(file)?)?))
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<TrapConfig> {
    path.map_or_else(|| Ok(TrapConfig::default()), TrapConfig::from_path)
}

/// Largest N with `α_crit(N) ≥ alpha`, scanning the exact curve a little past
/// the power-law estimate. `None` when that would exceed the supported range.
fn exact_linear_limit(alpha: f64, estimate: f64) -> Result<Option<usize>> {
    if !(estimate.is_finite()) || estimate > (MAX_CURVE_IONS / 2) as f64 {
        return Ok(None);
    }
    let upper = ((estimate * 1.5).ceil() as usize + 5).clamp(3, MAX_CURVE_IONS);
    Ok(critical_curve(2, upper)?.largest_linear_n(alpha))
}

#[derive(Debug, Deserialize)]
struct FitInputRow {
    n_ions: usize,
    alpha: f64,
    #[serde(default)]
    sigma: Option<f64>,
}

fn fit_from_file(path: &Path) -> Result<PowerLawFit> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ZigzagError::Io(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    let mut sigmas = Vec::new();
    for row in reader.deserialize::<FitInputRow>() {
        let row = row.map_err(|e| ZigzagError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        pairs.push((row.n_ions, row.alpha));
        sigmas.push(row.sigma);
    }
    if sigmas.iter().all(Option::is_some) && !sigmas.is_empty() {
        let weights: Vec<f64> = pairs
            .iter()
            .zip(&sigmas)
            .map(|(&(_, a), s)| (a / s.expect("checked")).powi(2))
            .collect();
        fit_power_law(&pairs, Some(&weights))
    } else {
        fit_power_law(&pairs, None)
    }
}

pub fn render(artifact: &Artifact, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(artifact).map_err(|e| ZigzagError::Io(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
        OutputFormat::Csv => Ok(render_csv(artifact)),
        OutputFormat::Table => Ok(render_table(artifact)),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render_csv(artifact: &Artifact) -> String {
    let mut out = String::new();
    match artifact {
        Artifact::Equilibrium(e) => {
            out.push_str("index,position,position_m\n");
            for (i, u) in e.positions.iter().enumerate() {
                let m = e.positions_m.as_ref().map(|p| p[i]);
                let _ = writeln!(out, "{},{},{}", i + 1, u, opt(m));
            }
        }
        Artifact::Modes(m) => {
            out.push_str("mode,mu,radial");
            for i in 0..m.n_ions {
                let _ = write!(out, ",b{}", i + 1);
            }
            out.push('\n');
            for (p, mu) in m.eigenvalues.iter().enumerate() {
                let radial = m.radial_eigenvalues.as_ref().map(|r| r[p]);
                let _ = write!(out, "{},{},{}", p + 1, mu, opt(radial));
                for b in &m.eigenvectors[p] {
                    let _ = write!(out, ",{b}");
                }
                out.push('\n');
            }
        }
        Artifact::Alphacrit(r) => {
            out.push_str("n_ions,alpha_crit,mu_max,slope\n");
            let _ = writeln!(out, "{},{},{},{}", r.n_ions, r.alpha_crit, r.mu_max, r.slope);
        }
        Artifact::Curve(c) => {
            out.push_str("n_ions,alpha_crit,mu_max,slope,alpha_fit\n");
            for r in &c.points {
                let fitted = c.fit.map(|f| f.evaluate(r.n_ions as f64));
                let _ = writeln!(out, "{},{},{},{},{}", r.n_ions, r.alpha_crit, r.mu_max, r.slope, opt(fitted));
            }
        }
        Artifact::Fit(f) => {
            out.push_str("c,c_stderr,beta,beta_stderr,n_min,n_max,n_points\n");
            let fit = &f.fit;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fit.c,
                opt(fit.c_stderr),
                fit.beta,
                opt(fit.beta_stderr),
                fit.n_range.0,
                fit.n_range.1,
                fit.n_points
            );
        }
        Artifact::Oracle(o) => {
            out.push_str("n_ions,alpha_oracle,alpha_crit,relative_difference\n");
            let _ = writeln!(out, "{},{},{},{}", o.n_ions, o.alpha_oracle, o.alpha_crit, o.relative_difference);
        }
        Artifact::Ncrit(n) => {
            out.push_str("nu_z,nu_r,anisotropy,c,beta,n_crit,n_crit_floor,n_exact\n");
            let exact = n.n_exact.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                n.nu_z, n.nu_r, n.anisotropy, n.c, n.beta, n.n_crit, n.n_crit_floor, exact
            );
        }
        Artifact::Analyze(report) => out = report.to_csv(),
    }
    out
}

fn fit_line(fit: &PowerLawFit) -> String {
    let err = |e: Option<f64>| e.map(|x| format!(" ± {x:.3}")).unwrap_or_default();
    format!(
        "c = {:.3}{}   beta = {:.4}{}   (N = {}..{}, {} points)",
        fit.c,
        err(fit.c_stderr),
        fit.beta,
        err(fit.beta_stderr),
        fit.n_range.0,
        fit.n_range.1,
        fit.n_points
    )
}

fn render_table(artifact: &Artifact) -> String {
    let mut out = String::new();
    match artifact {
        Artifact::Equilibrium(e) => {
            let _ = writeln!(out, "N = {}   residual = {:.2e}", e.n_ions, e.residual_norm);
            if let Some(ell) = e.length_scale_m {
                let _ = writeln!(out, "length scale = {ell:.6e} m");
            }
            let _ = writeln!(out, "{:>5} {:>14} {:>16}", "ion", "u (ell)", "z (m)");
            for (i, u) in e.positions.iter().enumerate() {
                let m = e.positions_m.as_ref().map(|p| format!("{:.6e}", p[i])).unwrap_or_else(|| "-".into());
                let _ = writeln!(out, "{:>5} {:>14.6} {:>16}", i + 1, u, m);
            }
        }
        Artifact::Modes(m) => {
            let _ = writeln!(out, "N = {}", m.n_ions);
            if let Some(a) = m.alpha {
                let _ = writeln!(out, "alpha = {a}");
            }
            let _ = writeln!(out, "{:>5} {:>12} {:>12}   eigenvector", "mode", "mu", "radial");
            for (p, mu) in m.eigenvalues.iter().enumerate() {
                let radial = m
                    .radial_eigenvalues
                    .as_ref()
                    .map(|r| format!("{:.6}", r[p]))
                    .unwrap_or_else(|| "-".into());
                let vec: Vec<String> = m.eigenvectors[p].iter().map(|b| format!("{b:+.4}")).collect();
                let _ = writeln!(out, "{:>5} {:>12.6} {:>12}   {}", p + 1, mu, radial, vec.join(" "));
            }
        }
        Artifact::Alphacrit(r) => {
            let _ = writeln!(out, "n_ions      {}", r.n_ions);
            let _ = writeln!(out, "alpha_crit  {:.6}", r.alpha_crit);
            let _ = writeln!(out, "mu_max      {:.6}", r.mu_max);
            let _ = writeln!(out, "slope       {:.6}", r.slope);
        }
        Artifact::Curve(c) => {
            let _ = writeln!(out, "{:>5} {:>12} {:>12} {:>10}", "N", "alpha_crit", "mu_max", "slope");
            for r in &c.points {
                let _ = writeln!(out, "{:>5} {:>12.6} {:>12.6} {:>10.6}", r.n_ions, r.alpha_crit, r.mu_max, r.slope);
            }
            if let Some(fit) = &c.fit {
                let _ = writeln!(out, "fit: {}", fit_line(fit));
            }
        }
        Artifact::Fit(f) => {
            let _ = writeln!(out, "source: {}", f.source);
            let _ = writeln!(out, "{}", fit_line(&f.fit));
        }
        Artifact::Oracle(o) => {
            let _ = writeln!(out, "N = {}   bracket = [{:.6}, {:.6}]   tol = {:e}", o.n_ions, o.bracket.0, o.bracket.1, o.tol);
            let _ = writeln!(out, "alpha (3D minimization) = {:.8}", o.alpha_oracle);
            let _ = writeln!(out, "alpha (eigenvalue)      = {:.8}", o.alpha_crit);
            let _ = writeln!(out, "relative difference     = {:.2e}", o.relative_difference);
        }
        Artifact::Ncrit(n) => {
            let _ = writeln!(out, "nu_z = {:e} Hz   nu_r = {:e} Hz   alpha = {:.6}", n.nu_z, n.nu_r, n.anisotropy);
            let _ = writeln!(out, "power law: c = {:.4}   beta = {:.4}", n.c, n.beta);
            let _ = writeln!(out, "N_crit = {:.3}   (floor {})", n.n_crit, n.n_crit_floor);
            if let Some(exact) = n.n_exact {
                let _ = writeln!(out, "largest N with alpha_crit(N) >= alpha: {exact}");
            }
        }
        Artifact::Analyze(r) => {
            let _ = writeln!(out, "{:>5} {:>4} {:>12} {:>12} {:>12}", "N", "k", "alpha", "error", "theory");
            for p in &r.points {
                let _ = writeln!(
                    out,
                    "{:>5} {:>4} {:>12.6} {:>12.6} {:>12.6}",
                    p.n_ions, p.n_samples, p.alpha_mean, p.alpha_err, p.alpha_theory
                );
            }
            let _ = writeln!(out, "experiment:  {}", fit_line(&r.fit));
            let _ = writeln!(out, "shifted {:+.0}%: {}", 100.0 * r.systematic_shift, fit_line(&r.shifted_fit));
            let _ = writeln!(out, "theory:      {}", fit_line(&r.theory_fit));
            let _ = writeln!(
                out,
                "delta c = {:+.4} ({})   delta beta = {:+.4} ({})",
                r.comparison.delta_c,
                if r.comparison.c_overlap { "overlap" } else { "no overlap" },
                r.comparison.delta_beta,
                if r.comparison.beta_overlap { "overlap" } else { "no overlap" }
            );
        }
    }
    out
}
