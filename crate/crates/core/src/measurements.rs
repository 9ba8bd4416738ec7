//! Experimental transition observations: CSV ingestion, per-N weighted
//! averages of α_crit and the experimental power-law fit.
//!
//! CSV schema (UTF-8, `#` starts a comment line):
//!
//! ```text
//! n_ions,nu_r_hz,nu_r_err_hz,nu_z_hz,nu_z_err_hz,label
//! 4,350000,12000,120000,1000,run-a
//! ```
//!
//! Error bars of the averages are the weighted mean of the individual errors,
//! not the standard error of the mean: they describe detection resolution,
//! which repeating a measurement does not shrink.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::critical::{critical_curve, CriticalCurve};
use crate::error::{Result, ZigzagError};
use crate::power_law::{compare_fits, fit_power_law, FitComparison, PowerLawFit};

pub const CSV_HEADER: [&str; 6] = ["n_ions", "nu_r_hz", "nu_r_err_hz", "nu_z_hz", "nu_z_err_hz", "label"];

/// One-sided detection-threshold systematic applied in the shifted scenario.
pub const DETECTION_THRESHOLD_SHIFT: f64 = -0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub n_ions: usize,
    #[serde(rename = "nu_r_hz")]
    pub nu_r: f64,
    #[serde(rename = "nu_r_err_hz")]
    pub nu_r_err: f64,
    #[serde(rename = "nu_z_hz")]
    pub nu_z: f64,
    #[serde(rename = "nu_z_err_hz")]
    pub nu_z_err: f64,
    #[serde(default)]
    pub label: String,
}

impl MeasurementRecord {
    fn validate(&self, line: u64) -> Result<()> {
        let invalid = |field, message: String| ZigzagError::Validation { line, field, message };
        if self.n_ions < 2 {
            return Err(invalid("n_ions", format!("need at least 2 ions, got {}", self.n_ions)));
        }
        for (field, value) in [
            ("nu_r_hz", self.nu_r),
            ("nu_r_err_hz", self.nu_r_err),
            ("nu_z_hz", self.nu_z),
            ("nu_z_err_hz", self.nu_z_err),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.nu_z >= self.nu_r {
            log::warn!("line {line}: nu_z >= nu_r is not a linear-phase observation");
        }
        Ok(())
    }
}

/// Read and validate measurement records. Errors carry the 1-based line number.
pub fn load_measurements<R: Read>(source: R) -> Result<Vec<MeasurementRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(|e| csv_error(&e))?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        let line = headers.position().map_or(1, |p| p.line());
        return Err(ZigzagError::Parse {
            line,
            message: format!("expected header '{}', got '{}'", CSV_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line());
        let record: MeasurementRecord = row.deserialize(Some(&headers)).map_err(|e| match csv_error(&e) {
            ZigzagError::Parse { line: 0, message } => ZigzagError::Parse { line, message },
            other => other,
        })?;
        record.validate(line)?;
        records.push(record);
    }
    Ok(records)
}

fn csv_error(err: &csv::Error) -> ZigzagError {
    let line = err.position().map_or(0, |p| p.line());
    let message = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => err.to_string(),
    };
    ZigzagError::Parse { line, message }
}

pub fn write_measurements<W: Write>(sink: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for r in records {
        writer.serialize(r).map_err(|e| ZigzagError::Io(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub sigma: f64,
}

impl AlphaEstimate {
    /// Zero error cannot be inverse-variance weighted.
    pub fn is_degenerate(&self) -> bool {
        self.sigma <= 0.0
    }
}

/// `α = (ν_z/ν_r)²` with `σ/α = 2·√((δν_z/ν_z)² + (δν_r/ν_r)²)`.
pub fn alpha_with_error(rec: &MeasurementRecord) -> AlphaEstimate {
    let alpha = (rec.nu_z / rec.nu_r).powi(2);
    let rel = (rec.nu_z_err / rec.nu_z).hypot(rec.nu_r_err / rec.nu_r);
    AlphaEstimate {
        alpha,
        sigma: 2.0 * alpha * rel,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedCriticalPoint {
    pub n_ions: usize,
    pub alpha_mean: f64,
    pub alpha_err: f64,
    pub n_samples: usize,
}

/// Inverse-variance mean per N; the error bar is `Σwσ/Σw`.
pub fn weighted_average_per_n(records: &[MeasurementRecord]) -> Result<Vec<AveragedCriticalPoint>> {
    let mut groups: BTreeMap<usize, Vec<(usize, AlphaEstimate)>> = BTreeMap::new();
    for (index, rec) in records.iter().enumerate() {
        groups.entry(rec.n_ions).or_default().push((index, alpha_with_error(rec)));
    }
    groups
        .into_iter()
        .map(|(n_ions, samples)| {
            if let Some((index, _)) = samples.iter().find(|(_, e)| e.is_degenerate()) {
                return Err(ZigzagError::Weighting { n_ions, index: *index });
            }
            let mut w_sum = 0.0;
            let mut mean = 0.0;
            let mut err = 0.0;
            for (_, e) in &samples {
                let w = e.sigma.powi(-2);
                w_sum += w;
                mean += w * e.alpha;
                err += w * e.sigma;
            }
            Ok(AveragedCriticalPoint {
                n_ions,
                alpha_mean: mean / w_sum,
                alpha_err: err / w_sum,
                n_samples: samples.len(),
            })
        })
        .collect()
}

/// Weighted log-log fit with `σ_lnα = alpha_err/alpha_mean`.
pub fn fit_experimental(points: &[AveragedCriticalPoint]) -> Result<PowerLawFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n_ions).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(ZigzagError::domain(
            "points",
            format!("need at least 3 distinct N, got {}", ns.len()),
        ));
    }
    let pairs: Vec<(usize, f64)> = points.iter().map(|p| (p.n_ions, p.alpha_mean)).collect();
    let weights: Vec<f64> = points
        .iter()
        .map(|p| (p.alpha_mean / p.alpha_err).powi(2))
        .collect();
    fit_power_law(&pairs, Some(&weights))
}

/// Scales every average (and its error) by `1 + shift`.
pub fn shifted(points: &[AveragedCriticalPoint], shift: f64) -> Vec<AveragedCriticalPoint> {
    let k = 1.0 + shift;
    points
        .iter()
        .map(|p| AveragedCriticalPoint {
            alpha_mean: p.alpha_mean * k,
            alpha_err: p.alpha_err * k,
            ..*p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub n_ions: usize,
    pub alpha_mean: f64,
    pub alpha_err: f64,
    pub n_samples: usize,
    /// Exact critical anisotropy at this N.
    pub alpha_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub points: Vec<ReportPoint>,
    pub fit: PowerLawFit,
    /// Relative shift applied in the systematic scenario.
    pub systematic_shift: f64,
    pub shifted_fit: PowerLawFit,
    /// Unweighted fit of the exact curve over the same N values.
    pub theory_fit: PowerLawFit,
    /// `fit` minus `theory_fit`.
    pub comparison: FitComparison,
}

pub fn analyze(records: &[MeasurementRecord]) -> Result<AnalysisReport> {
    let averages = weighted_average_per_n(records)?;
    let fit = fit_experimental(&averages)?;
    let shifted_fit = fit_experimental(&shifted(&averages, DETECTION_THRESHOLD_SHIFT))?;

    let n_min = averages.first().map(|p| p.n_ions).unwrap_or(2);
    let n_max = averages.last().map(|p| p.n_ions).unwrap_or(2);
    let curve = critical_curve(n_min, n_max)?;
    let theory_pairs: Vec<(usize, f64)> = averages
        .iter()
        .map(|p| (p.n_ions, curve.get(p.n_ions).expect("N inside curve range").alpha_crit))
        .collect();
    let theory_fit = fit_power_law(&theory_pairs, None)?;

    let points = averages
        .iter()
        .zip(&theory_pairs)
        .map(|(p, &(_, alpha_theory))| ReportPoint {
            n_ions: p.n_ions,
            alpha_mean: p.alpha_mean,
            alpha_err: p.alpha_err,
            n_samples: p.n_samples,
            alpha_theory,
        })
        .collect();

    Ok(AnalysisReport {
        points,
        comparison: compare_fits(&fit, &theory_fit),
        fit,
        systematic_shift: DETECTION_THRESHOLD_SHIFT,
        shifted_fit,
        theory_fit,
    })
}

impl AnalysisReport {
    /// Long-format CSV: `quantity,n_ions,value,error`.
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("quantity,n_ions,value,error\n");
        for p in &self.points {
            out += &format!("alpha_mean,{},{},{}\n", p.n_ions, p.alpha_mean, p.alpha_err);
            out += &format!("n_samples,{},{},\n", p.n_ions, p.n_samples);
            out += &format!("alpha_theory,{},{},\n", p.n_ions, p.alpha_theory);
        }
        for (name, fit) in [("fit", &self.fit), ("shifted_fit", &self.shifted_fit), ("theory_fit", &self.theory_fit)] {
            out += &format!("{name}_c,,{},{}\n", fit.c, opt(fit.c_stderr));
            out += &format!("{name}_beta,,{},{}\n", fit.beta, opt(fit.beta_stderr));
        }
        out += &format!("systematic_shift,,{},\n", self.systematic_shift);
        out += &format!("delta_c,,{},\n", self.comparison.delta_c);
        out += &format!("delta_beta,,{},\n", self.comparison.delta_beta);
        out
    }
}

/// How synthetic transition observations are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPlan {
    pub n_values: Vec<usize>,
    pub records_per_n: usize,
    /// Radial frequency window, Hz.
    pub nu_r_range: (f64, f64),
    /// Axial frequency window, Hz.
    pub nu_z_range: (f64, f64),
    /// Assigned radial error window, Hz.
    pub radial_err_range: (f64, f64),
    /// Assigned axial error window, Hz.
    pub axial_err_range: (f64, f64),
}

impl Default for SyntheticPlan {
    /// N = 3–10, five observations each, with the apparatus frequency ranges
    /// and resolutions (8–16 kHz radial, 1–2 kHz axial).
    fn default() -> Self {
        SyntheticPlan {
            n_values: (3..=10).collect(),
            records_per_n: 5,
            nu_r_range: (200e3, 700e3),
            nu_z_range: (80e3, 390e3),
            radial_err_range: (8e3, 16e3),
            axial_err_range: (1e3, 2e3),
        }
    }
}

/// Observations at the exact transition with Gaussian noise equal to the
/// assigned errors. The radial frequency is drawn so that both frequencies
/// fall inside their windows where possible.
pub fn synthetic_records<R: Rng>(curve: &CriticalCurve, plan: &SyntheticPlan, rng: &mut R) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::with_capacity(plan.n_values.len() * plan.records_per_n);
    for &n in &plan.n_values {
        let alpha = curve
            .get(n)
            .ok_or_else(|| ZigzagError::domain("n_values", format!("N={n} not in critical curve")))?
            .alpha_crit;
        let root = alpha.sqrt();
        let mut lo = plan.nu_r_range.0.max(plan.nu_z_range.0 / root);
        let mut hi = plan.nu_r_range.1.min(plan.nu_z_range.1 / root);
        if lo >= hi {
            (lo, hi) = plan.nu_r_range;
        }
        for k in 0..plan.records_per_n {
            let nu_r_true = rng.random_range(lo..=hi);
            let nu_z_true = nu_r_true * root;
            let nu_r_err = rng.random_range(plan.radial_err_range.0..=plan.radial_err_range.1);
            let nu_z_err = rng.random_range(plan.axial_err_range.0..=plan.axial_err_range.1);
            let noise_r = Normal::new(0.0, nu_r_err).map_err(|e| ZigzagError::Numeric(e.to_string()))?;
            let noise_z = Normal::new(0.0, nu_z_err).map_err(|e| ZigzagError::Numeric(e.to_string()))?;
            records.push(MeasurementRecord {
                n_ions: n,
                nu_r: nu_r_true + noise_r.sample(rng),
                nu_r_err,
                nu_z: nu_z_true + noise_z.sample(rng),
                nu_z_err,
                label: format!("synthetic-{n}-{k}"),
            });
        }
    }
    Ok(records)
}
