//! Power-law fits `α = c·N^β` by linear regression of `ln α` on `ln N`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZigzagError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub c: f64,
    pub beta: f64,
    /// Delta-method error of `c`; `None` when fewer than three points were
    /// fitted or the constants were published without errors.
    pub c_stderr: Option<f64>,
    pub beta_stderr: Option<f64>,
    /// Inclusive N interval the fit covers.
    pub n_range: (usize, usize),
    pub n_points: usize,
}

/// Molecular-dynamics fit over ten chains in N = 2–500 (no errors reported).
pub const SCHIFFER: PowerLawFit = PowerLawFit {
    c: 2.53,
    beta: -1.73,
    c_stderr: None,
    beta_stderr: None,
    n_range: (2, 500),
    n_points: 10,
};

/// Published fit of the exact critical curve over N = 3–10.
pub const THEORY_3_10: PowerLawFit = PowerLawFit {
    c: 2.94,
    beta: -1.80,
    c_stderr: Some(0.07),
    beta_stderr: Some(0.01),
    n_range: (3, 10),
    n_points: 8,
};

/// Published fit of the exact critical curve over N = 2–100.
pub const THEORY_2_100: PowerLawFit = PowerLawFit {
    c: 2.88,
    beta: -1.773,
    c_stderr: Some(0.03),
    beta_stderr: Some(0.003),
    n_range: (2, 100),
    n_points: 99,
};

impl PowerLawFit {
    /// `c·N^β`.
    pub fn evaluate(&self, n_ions: f64) -> f64 {
        self.c * n_ions.powf(self.beta)
    }
}

pub fn evaluate(fit: &PowerLawFit, n_ions: f64) -> f64 {
    fit.evaluate(n_ions)
}

/// Least squares of `ln α` on `ln N`.
///
/// Without weights this is ordinary least squares and the standard errors
/// come from the residual variance. With weights (`1/σ²` of `ln α`) the
/// weights are taken as absolute, so the errors are `(XᵀWX)⁻¹`.
pub fn fit_power_law(points: &[(usize, f64)], weights: Option<&[f64]>) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(ZigzagError::domain(
            "points",
            format!("need at least 2 points, got {}", points.len()),
        ));
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(ZigzagError::domain(
                "weights",
                format!("{} weights for {} points", w.len(), points.len()),
            ));
        }
        if let Some(bad) = w.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(ZigzagError::domain("weights", format!("must be positive, got {bad}")));
        }
    }
    for &(n, alpha) in points {
        if n == 0 {
            return Err(ZigzagError::domain("points", "N must be positive"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ZigzagError::domain("points", format!("alpha must be positive, got {alpha} at N={n}")));
        }
    }

    // Sorting by N makes the result independent of input order.
    let mut rows: Vec<(usize, f64, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, &(n, a))| (n, a, weights.map_or(1.0, |w| w[i])))
        .collect();
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ZigzagError::domain("points", format!("duplicate N={}", w[0].0)));
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let w_sum: f64 = ws.iter().sum();
    let x_mean = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / w_sum;
    let y_mean = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / w_sum;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((w, x), y) in ws.iter().zip(&xs).zip(&ys) {
        sxx += w * (x - x_mean) * (x - x_mean);
        sxy += w * (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let c = intercept.exp();

    let n_points = rows.len();
    let (c_stderr, beta_stderr) = if n_points >= 3 {
        let scale = if weights.is_some() {
            1.0
        } else {
            let rss: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (y - intercept - slope * x).powi(2))
                .sum();
            rss / (n_points - 2) as f64
        };
        let var_slope = scale / sxx;
        let var_intercept = scale * (1.0 / w_sum + x_mean * x_mean / sxx);
        (Some(c * var_intercept.sqrt()), Some(var_slope.sqrt()))
    } else {
        (None, None)
    };

    Ok(PowerLawFit {
        c,
        beta: slope,
        c_stderr,
        beta_stderr,
        n_range: (rows[0].0, rows[n_points - 1].0),
        n_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitComparison {
    /// `a.c − b.c`
    pub delta_c: f64,
    /// `a.beta − b.beta`
    pub delta_beta: f64,
    /// Whether `c ± stderr` intervals intersect (missing errors count as zero width).
    pub c_overlap: bool,
    pub beta_overlap: bool,
}

pub fn compare_fits(a: &PowerLawFit, b: &PowerLawFit) -> FitComparison {
    let overlap = |d: f64, ea: Option<f64>, eb: Option<f64>| d.abs() <= ea.unwrap_or(0.0) + eb.unwrap_or(0.0);
    let delta_c = a.c - b.c;
    let delta_beta = a.beta - b.beta;
    FitComparison {
        delta_c,
        delta_beta,
        c_overlap: overlap(delta_c, a.c_stderr, b.c_stderr),
        beta_overlap: overlap(delta_beta, a.beta_stderr, b.beta_stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn synthetic(c: f64, beta: f64, ns: std::ops::RangeInclusive<usize>) -> Vec<(usize, f64)> {
        ns.map(|n| (n, c * (n as f64).powf(beta))).collect()
    }

    #[test]
    fn recovers_exact_power_law() {
        let fit = fit_power_law(&synthetic(2.5, -1.7, 2..=50), None).unwrap();
        assert_relative_eq!(fit.c, 2.5, max_relative = 1e-12);
        assert_relative_eq!(fit.beta, -1.7, max_relative = 1e-12);
        assert!(fit.c_stderr.unwrap() < 1e-12);
        assert!(fit.beta_stderr.unwrap() < 1e-12);
        assert_eq!(fit.n_range, (2, 50));
        assert_eq!(fit.n_points, 49);
    }

    #[test]
    fn two_points_have_no_errors() {
        let fit = fit_power_law(&[(2, 1.0), (4, 0.25)], None).unwrap();
        assert_relative_eq!(fit.beta, -2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.c, 4.0, epsilon = 1e-13);
        assert_eq!(fit.c_stderr, None);
        assert_eq!(fit.beta_stderr, None);
    }

    #[test]
    fn invalid_inputs() {
        assert!(fit_power_law(&[(2, 1.0)], None).is_err());
        assert!(fit_power_law(&[(2, 1.0), (3, 0.0)], None).is_err());
        assert!(fit_power_law(&[(2, 1.0), (3, -0.5)], None).is_err());
        assert!(fit_power_law(&[(2, 1.0), (2, 0.5), (3, 0.4)], None).is_err());
        assert!(fit_power_law(&[(2, 1.0), (3, 0.5)], Some(&[1.0])).is_err());
        assert!(fit_power_law(&[(2, 1.0), (3, 0.5)], Some(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn weighted_fit_uses_absolute_errors() {
        // Exact data: the weighted errors are (XᵀWX)^{-1/2}, independent of residuals.
        let pts = synthetic(3.0, -1.5, 2..=6);
        let w = vec![4.0; pts.len()];
        let fit = fit_power_law(&pts, Some(&w)).unwrap();
        let xs: Vec<f64> = (2..=6).map(|n| (n as f64).ln()).collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let sxx: f64 = xs.iter().map(|x| 4.0 * (x - mean).powi(2)).sum();
        assert_relative_eq!(fit.beta_stderr.unwrap(), sxx.recip().sqrt(), max_relative = 1e-12);
        assert_relative_eq!(fit.beta, -1.5, max_relative = 1e-12);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(SCHIFFER.evaluate(1.0), 2.53);
        assert_relative_eq!(THEORY_3_10.evaluate(10.0), 0.046_595_859_858_356_7, max_relative = 1e-12);
        assert_eq!(evaluate(&THEORY_3_10, 10.0), THEORY_3_10.evaluate(10.0));
    }

    #[test]
    fn comparison_against_errorless_constants() {
        let cmp = compare_fits(&THEORY_3_10, &SCHIFFER);
        assert_relative_eq!(cmp.delta_beta, -0.07, epsilon = 1e-12);
        assert_relative_eq!(cmp.delta_c, 0.41, epsilon = 1e-12);
        assert!(!cmp.c_overlap);

        let same = compare_fits(&THEORY_2_100, &THEORY_2_100);
        assert_eq!(same.delta_c, 0.0);
        assert_eq!(same.delta_beta, 0.0);
        assert!(same.c_overlap && same.beta_overlap);
    }

    proptest! {
        #[test]
        fn exact_laws_recovered(c in 0.01f64..100.0, beta in -3.0f64..0.0, lo in 1usize..20, len in 2usize..40) {
            let fit = fit_power_law(&synthetic(c, beta, lo..=lo + len), None).unwrap();
            prop_assert!((fit.c - c).abs() <= 1e-10 * c);
            prop_assert!((fit.beta - beta).abs() <= 1e-10);
        }

        #[test]
        fn scale_equivariance(k in 0.01f64..100.0, noise in proptest::collection::vec(-0.05f64..0.05, 8)) {
            let pts: Vec<(usize, f64)> = (3..=10)
                .zip(&noise)
                .map(|(n, e)| (n, 2.9 * (n as f64).powf(-1.8) * (1.0 + e)))
                .collect();
            let scaled: Vec<(usize, f64)> = pts.iter().map(|&(n, a)| (n, k * a)).collect();
            let a = fit_power_law(&pts, None).unwrap();
            let b = fit_power_law(&scaled, None).unwrap();
            prop_assert!((b.c - k * a.c).abs() <= 1e-10 * k * a.c);
            prop_assert!((b.beta - a.beta).abs() <= 1e-10);
            prop_assert!((b.beta_stderr.unwrap() - a.beta_stderr.unwrap()).abs() <= 1e-10);
        }

        #[test]
        fn permutation_invariance(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let pts: Vec<(usize, f64)> = (2..=15).map(|n| (n, 2.0 / (n as f64 + 0.3 * (n % 3) as f64))).collect();
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(fit_power_law(&pts, None).unwrap(), fit_power_law(&shuffled, None).unwrap());
        }
    }
}
