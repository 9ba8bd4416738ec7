//! Independent route to the transition: minimize the full three-dimensional
//! potential at fixed α, decide whether the minimizer left the trap axis,
//! and bisect on α.
//!
//! Nothing here touches the coupling matrices. The dimensionless potential is
//!
//! ```text
//! V = Σ_n (z_n² + (x_n² + y_n²)/α) + 2 Σ_{n<m} 1/|r_n − r_m|
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::equilibrium::solve_equilibrium;
use crate::error::{Result, ZigzagError};
use crate::power_law::THEORY_2_100;

/// Transverse excursion above which a configuration counts as zigzag.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_PERTURBATION: f64 = 1e-3;
/// Bisection width in α.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions {
    /// Gradient max-norm required for convergence.
    pub gradient_tolerance: f64,
    /// Newton-step max-norm below which the iterate is considered polished.
    pub step_tolerance: f64,
    pub max_iterations: usize,
    /// Extra iterations allowed after the gradient test passes while the
    /// Newton step is still above `step_tolerance`.
    pub polish_iterations: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        MinimizerOptions {
            gradient_tolerance: 1e-9,
            step_tolerance: 1e-10,
            max_iterations: 100_000,
            polish_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfiguration {
    pub n_ions: usize,
    /// `(x, y, z)` per ion in units of ℓ.
    pub coordinates: Vec<[f64; 3]>,
    pub alpha: f64,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

impl CrystalConfiguration {
    /// Largest distance of any ion from the trap axis.
    pub fn max_transverse(&self) -> f64 {
        self.coordinates
            .iter()
            .map(|r| r[0].hypot(r[1]))
            .fold(0.0, f64::max)
    }

    pub fn classify(&self, threshold: f64) -> Phase {
        classify_configuration(self, threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Linear,
    Zigzag,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ZigzagError::domain("alpha", format!("must be positive and finite, got {alpha}")))
    }
}

fn check_distinct(coords: &[[f64; 3]]) -> Result<()> {
    for (n, a) in coords.iter().enumerate() {
        if a.iter().any(|x| !x.is_finite()) {
            return Err(ZigzagError::domain("coordinates", format!("ion {n} is not finite")));
        }
        for (m, b) in coords.iter().enumerate().skip(n + 1) {
            if a == b {
                return Err(ZigzagError::CoincidentIons { first: n, second: m });
            }
        }
    }
    Ok(())
}

pub fn full_potential(coords: &[[f64; 3]], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_distinct(coords)?;
    Ok(energy_unchecked(coords, alpha))
}

fn energy_unchecked(coords: &[[f64; 3]], alpha: f64) -> f64 {
    let inv_alpha = alpha.recip();
    let mut energy = 0.0;
    for (n, r) in coords.iter().enumerate() {
        energy += r[2] * r[2] + (r[0] * r[0] + r[1] * r[1]) * inv_alpha;
        for s in &coords[n + 1..] {
            energy += 2.0 / distance(r, s);
        }
    }
    energy
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Gradient flattened as `[x_1, y_1, z_1, x_2, …]`.
pub fn full_gradient(coords: &[[f64; 3]], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_distinct(coords)?;
    Ok(gradient_unchecked(coords, alpha))
}

fn gradient_unchecked(coords: &[[f64; 3]], alpha: f64) -> Vec<f64> {
    let trap = [2.0 / alpha, 2.0 / alpha, 2.0];
    let mut grad = vec![0.0; 3 * coords.len()];
    for (n, r) in coords.iter().enumerate() {
        for a in 0..3 {
            grad[3 * n + a] += trap[a] * r[a];
        }
        for (m, s) in coords.iter().enumerate().skip(n + 1) {
            let d = [r[0] - s[0], r[1] - s[1], r[2] - s[2]];
            let dist = distance(r, s);
            let k = 2.0 / (dist * dist * dist);
            for a in 0..3 {
                grad[3 * n + a] -= k * d[a];
                grad[3 * m + a] += k * d[a];
            }
        }
    }
    grad
}

/// Analytic 3N×3N Hessian, same flattening as [`full_gradient`].
pub fn full_hessian(coords: &[[f64; 3]], alpha: f64) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    check_distinct(coords)?;
    Ok(hessian_unchecked(coords, alpha))
}

fn hessian_unchecked(coords: &[[f64; 3]], alpha: f64) -> DMatrix<f64> {
    let dim = 3 * coords.len();
    let trap = [2.0 / alpha, 2.0 / alpha, 2.0];
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..coords.len() {
        for a in 0..3 {
            h[(3 * n + a, 3 * n + a)] += trap[a];
        }
        for m in n + 1..coords.len() {
            let (r, s) = (&coords[n], &coords[m]);
            let d = [r[0] - s[0], r[1] - s[1], r[2] - s[2]];
            let dist2 = d.iter().map(|x| x * x).sum::<f64>();
            let dist5 = dist2 * dist2 * dist2.sqrt();
            for a in 0..3 {
                for b in 0..3 {
                    let delta = if a == b { dist2 } else { 0.0 };
                    let k = 2.0 * (3.0 * d[a] * d[b] - delta) / dist5;
                    h[(3 * n + a, 3 * n + b)] += k;
                    h[(3 * m + a, 3 * m + b)] += k;
                    h[(3 * n + a, 3 * m + b)] -= k;
                    h[(3 * m + a, 3 * n + b)] -= k;
                }
            }
        }
    }
    h
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn min_pair_distance(coords: &[[f64; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for (n, r) in coords.iter().enumerate() {
        for s in &coords[n + 1..] {
            best = best.min(distance(r, s));
        }
    }
    best
}

/// Chain equilibrium on the z axis with transverse offsets `scale·(−1)^n` along x.
pub fn perturbed_chain(n_ions: usize, perturbation_scale: f64) -> Result<Vec<[f64; 3]>> {
    let eq = solve_equilibrium(n_ions)?;
    Ok(eq
        .positions
        .iter()
        .enumerate()
        .map(|(n, &z)| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            [sign * perturbation_scale, 0.0, z]
        })
        .collect())
}

pub fn minimize_full(n_ions: usize, alpha: f64, perturbation_scale: f64) -> Result<CrystalConfiguration> {
    minimize_full_with(n_ions, alpha, perturbation_scale, &MinimizerOptions::default())
}

pub fn minimize_full_with(
    n_ions: usize,
    alpha: f64,
    perturbation_scale: f64,
    options: &MinimizerOptions,
) -> Result<CrystalConfiguration> {
    if n_ions == 0 {
        return Err(ZigzagError::domain("n_ions", "must be at least 1"));
    }
    if !(perturbation_scale >= 0.0 && perturbation_scale.is_finite()) {
        return Err(ZigzagError::domain(
            "perturbation_scale",
            format!("must be non-negative, got {perturbation_scale}"),
        ));
    }
    check_alpha(alpha)?;
    minimize_from(perturbed_chain(n_ions, perturbation_scale)?, alpha, options)
}

/// Local minimization from `start` by a Newton method on `|H|`: the Hessian's
/// eigenvalues are replaced by their absolute values, so saddle directions are
/// descended instead of converged to.
pub fn minimize_from(
    start: Vec<[f64; 3]>,
    alpha: f64,
    options: &MinimizerOptions,
) -> Result<CrystalConfiguration> {
    check_alpha(alpha)?;
    check_distinct(&start)?;
    let n_ions = start.len();
    let mut coords = start;
    let mut energy = energy_unchecked(&coords, alpha);
    let mut grad = gradient_unchecked(&coords, alpha);
    let mut gnorm = max_norm(&grad);
    let mut iterations = 0;
    let mut polish = 0;

    loop {
        let step = modified_newton_step(&coords, alpha, &grad)?;
        let step_norm = max_norm(&step);
        if gnorm <= options.gradient_tolerance
            && (step_norm <= options.step_tolerance || polish >= options.polish_iterations)
        {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(ZigzagError::Convergence {
                solver: "3D minimizer",
                iterations,
                residual: gnorm,
            });
        }
        iterations += 1;
        if gnorm <= options.gradient_tolerance {
            polish += 1;
        }

        // Limit the step to a fraction of the closest approach.
        let cap = 0.25 * min_pair_distance(&coords).min(1.0);
        let mut t = if step_norm > cap { cap / step_norm } else { 1.0 };
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();

        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<[f64; 3]> = coords
                .iter()
                .enumerate()
                .map(|(n, r)| [r[0] + t * step[3 * n], r[1] + t * step[3 * n + 1], r[2] + t * step[3 * n + 2]])
                .collect();
            if check_distinct(&trial).is_ok() {
                let trial_energy = energy_unchecked(&trial, alpha);
                let trial_grad = gradient_unchecked(&trial, alpha);
                let trial_gnorm = max_norm(&trial_grad);
                let sufficient = trial_energy <= energy + 1e-4 * t * slope;
                // rounding floor: energy flat to machine precision but gradient improving
                let flat = trial_energy - energy <= 1e-14 * energy.abs().max(1.0) && trial_gnorm < gnorm;
                if sufficient || flat {
                    coords = trial;
                    energy = trial_energy;
                    grad = trial_grad;
                    gnorm = trial_gnorm;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if gnorm <= options.gradient_tolerance {
                break;
            }
            return Err(ZigzagError::Convergence {
                solver: "3D minimizer",
                iterations,
                residual: gnorm,
            });
        }
    }

    Ok(CrystalConfiguration {
        n_ions,
        coordinates: coords,
        alpha,
        energy,
        gradient_norm: gnorm,
        iterations,
    })
}

fn modified_newton_step(coords: &[[f64; 3]], alpha: f64, grad: &[f64]) -> Result<Vec<f64>> {
    let h = hessian_unchecked(coords, alpha);
    let eigen = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| ZigzagError::Numeric("Hessian eigensolver did not converge".into()))?;
    let largest = eigen.eigenvalues.amax().max(1.0);
    let floor = 1e-12 * largest;
    let g = DVector::from_column_slice(grad);
    let mut step = DVector::zeros(grad.len());
    for (i, lambda) in eigen.eigenvalues.iter().enumerate() {
        let v = eigen.eigenvectors.column(i);
        step -= v * (v.dot(&g) / lambda.abs().max(floor));
    }
    Ok(step.iter().copied().collect())
}

/// Zigzag iff some ion sits farther than `threshold` from the trap axis.
pub fn classify_configuration(config: &CrystalConfiguration, threshold: f64) -> Phase {
    if config.max_transverse() > threshold {
        Phase::Zigzag
    } else {
        Phase::Linear
    }
}

/// `(0.5·cN^β, 2·cN^β)` from the N = 2–100 fit of the exact curve.
pub fn default_bracket(n_ions: usize) -> (f64, f64) {
    let centre = THEORY_2_100.evaluate(n_ions as f64);
    (0.5 * centre, 2.0 * centre)
}

pub fn phase_at(n_ions: usize, alpha: f64) -> Result<Phase> {
    Ok(minimize_full(n_ions, alpha, DEFAULT_PERTURBATION)?.classify(DEFAULT_THRESHOLD))
}

/// Bisect on α for the point where the minimizer stops being linear.
pub fn bisect_transition(n_ions: usize, bracket_lo: f64, bracket_hi: f64, tol: f64) -> Result<f64> {
    if n_ions < 2 {
        return Err(ZigzagError::domain("n_ions", "a zigzag transition needs at least 2 ions"));
    }
    if !(tol > 0.0) {
        return Err(ZigzagError::domain("tol", format!("must be positive, got {tol}")));
    }
    if !(bracket_lo > 0.0 && bracket_lo < bracket_hi) {
        return Err(ZigzagError::Bracket {
            lo: bracket_lo,
            hi: bracket_hi,
            reason: "need 0 < lo < hi".into(),
        });
    }
    if phase_at(n_ions, bracket_lo)? != Phase::Linear {
        return Err(ZigzagError::Bracket {
            lo: bracket_lo,
            hi: bracket_hi,
            reason: "lower end is already zigzag".into(),
        });
    }
    if phase_at(n_ions, bracket_hi)? != Phase::Zigzag {
        return Err(ZigzagError::Bracket {
            lo: bracket_lo,
            hi: bracket_hi,
            reason: "upper end is still linear".into(),
        });
    }
    let (mut lo, mut hi) = (bracket_lo, bracket_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match phase_at(n_ions, mid)? {
            Phase::Linear => lo = mid,
            Phase::Zigzag => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}
