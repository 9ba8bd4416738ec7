//! Axial equilibrium of an N-ion chain.
//!
//! Positions are dimensionless (units of ℓ). The potential, its gradient and
//! its Hessian are all evaluated in closed form; the Hessian at equilibrium is
//! exactly twice the axial coupling matrix of [`crate::modes`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZigzagError};

/// Gradient max-norm at which Newton iteration stops.
pub const GRADIENT_TOLERANCE: f64 = 1e-12;

/// Residual the returned equilibrium is guaranteed to satisfy.
pub const RESIDUAL_BOUND: f64 = 1e-10;

pub const MAX_ITERATIONS: usize = 200;

/// Exponent of the initial-guess half width `N^0.56`.
const SPREAD_EXPONENT: f64 = 0.56;

/// Equilibrium positions of a linear chain, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEquilibrium {
    pub n_ions: usize,
    pub positions: Vec<f64>,
    /// Max-norm of the dimensionless gradient at `positions`.
    pub residual_norm: f64,
}

impl ChainEquilibrium {
    /// Smallest gap between neighbouring ions, `None` for a single ion.
    pub fn min_spacing(&self) -> Option<f64> {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }
}

fn check_distinct(positions: &[f64]) -> Result<()> {
    for (n, &a) in positions.iter().enumerate() {
        if !a.is_finite() {
            return Err(ZigzagError::domain("positions", format!("position {n} is not finite")));
        }
        for (m, &b) in positions.iter().enumerate().skip(n + 1) {
            if a == b {
                return Err(ZigzagError::CoincidentIons { first: n, second: m });
            }
        }
    }
    Ok(())
}

/// `V(u) = Σ u_n² + 2 Σ_{n<m} 1/|u_n − u_m|`.
pub fn dimensionless_potential(positions: &[f64]) -> Result<f64> {
    check_distinct(positions)?;
    Ok(potential_unchecked(positions))
}

fn potential_unchecked(u: &[f64]) -> f64 {
    let mut energy: f64 = u.iter().map(|x| x * x).sum();
    for (n, &a) in u.iter().enumerate() {
        for &b in &u[n + 1..] {
            energy += 2.0 / (a - b).abs();
        }
    }
    energy
}

/// Component n is `2u_n − 2 Σ_{m≠n} sign(u_n − u_m)/(u_n − u_m)²`.
pub fn potential_gradient(positions: &[f64]) -> Result<Vec<f64>> {
    check_distinct(positions)?;
    Ok(gradient_unchecked(positions))
}

fn gradient_unchecked(u: &[f64]) -> Vec<f64> {
    let mut grad: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    for n in 0..u.len() {
        for m in n + 1..u.len() {
            let d = u[n] - u[m];
            let f = 2.0 * d.signum() / (d * d);
            grad[n] -= f;
            grad[m] += f;
        }
    }
    grad
}

/// Analytic Hessian of [`dimensionless_potential`].
pub fn potential_hessian(positions: &[f64]) -> Result<DMatrix<f64>> {
    check_distinct(positions)?;
    Ok(hessian_unchecked(positions))
}

fn hessian_unchecked(u: &[f64]) -> DMatrix<f64> {
    let n_ions = u.len();
    let mut h = DMatrix::from_diagonal_element(n_ions, n_ions, 2.0);
    for n in 0..n_ions {
        for m in n + 1..n_ions {
            let k = 4.0 / (u[n] - u[m]).abs().powi(3);
            h[(n, m)] -= k;
            h[(m, n)] -= k;
            h[(n, n)] += k;
            h[(m, m)] += k;
        }
    }
    h
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Initial guess: equally spaced on `[−N^0.56, N^0.56]`.
pub fn initial_guess(n_ions: usize) -> Vec<f64> {
    if n_ions == 1 {
        return vec![0.0];
    }
    let half = (n_ions as f64).powf(SPREAD_EXPONENT);
    let step = 2.0 * half / (n_ions - 1) as f64;
    (0..n_ions).map(|i| -half + step * i as f64).collect()
}

/// Solve `∇V = 0` for an N-ion chain by damped Newton iteration.
pub fn solve_equilibrium(n_ions: usize) -> Result<ChainEquilibrium> {
    if n_ions == 0 {
        return Err(ZigzagError::domain("n_ions", "must be at least 1"));
    }
    let mut u = initial_guess(n_ions);
    let mut grad = gradient_unchecked(&u);
    let mut residual = max_norm(&grad);
    let mut energy = potential_unchecked(&u);
    let mut iterations = 0;

    while residual > GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let step = newton_step(&u, &grad)?;
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();

        let mut t = 1.0;
        let mut accepted = false;
        let mut stalled = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            if strictly_increasing(&trial) {
                let trial_energy = potential_unchecked(&trial);
                let trial_grad = gradient_unchecked(&trial);
                let trial_residual = max_norm(&trial_grad);
                // Near the minimum the energy decrease drowns in rounding; fall
                // back to requiring a smaller gradient.
                if trial_energy <= energy + 1e-4 * t * slope || trial_residual < residual {
                    // long chains bottom out above GRADIENT_TOLERANCE in rounding
                    stalled = residual <= RESIDUAL_BOUND && trial_residual > 0.5 * residual;
                    u = trial;
                    grad = trial_grad;
                    residual = trial_residual;
                    energy = trial_energy;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || stalled {
            break;
        }
    }

    symmetrize(&mut u);
    let residual = max_norm(&gradient_unchecked(&u));
    if residual > RESIDUAL_BOUND || !strictly_increasing(&u) {
        return Err(ZigzagError::Convergence {
            solver: "chain equilibrium",
            iterations,
            residual,
        });
    }
    Ok(ChainEquilibrium {
        n_ions,
        positions: u,
        residual_norm: residual,
    })
}

fn newton_step(u: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    let h = hessian_unchecked(u);
    let rhs = -DVector::from_column_slice(grad);
    let step = match h.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => h
            .lu()
            .solve(&rhs)
            .ok_or_else(|| ZigzagError::Numeric("singular chain Hessian".into()))?,
    };
    Ok(step.iter().copied().collect())
}

/// Enforce `u_n = −u_{N+1−n}`, which the exact solution satisfies.
fn symmetrize(u: &mut [f64]) {
    let n = u.len();
    for i in 0..n / 2 {
        let half = 0.5 * (u[n - 1 - i] - u[i]);
        u[i] = -half;
        u[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Central differences of the potential; independent of the analytic gradient.
    fn fd_gradient(u: &[f64], h: f64) -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                let mut plus = u.to_vec();
                let mut minus = u.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (dimensionless_potential(&plus).unwrap() - dimensionless_potential(&minus).unwrap())
                    / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn single_ion_potential_is_zero() {
        assert_eq!(dimensionless_potential(&[0.0]).unwrap(), 0.0);
        assert_eq!(potential_gradient(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn two_ion_potential_value() {
        let u = 0.25f64.cbrt();
        let v = dimensionless_potential(&[-u, u]).unwrap();
        // 2u² + 1/u at u³ = 1/4, i.e. 6·4^{-2/3}
        assert_relative_eq!(v, 2.381_101_577_952_299, max_relative = 1e-14);
    }

    #[test]
    fn potential_is_permutation_and_reflection_symmetric() {
        let u = [-1.3, 0.2, 0.9, 2.4];
        let v = dimensionless_potential(&u).unwrap();
        let permuted = [0.9, -1.3, 2.4, 0.2];
        let flipped: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_relative_eq!(v, dimensionless_potential(&permuted).unwrap(), max_relative = 1e-15);
        assert_relative_eq!(v, dimensionless_potential(&flipped).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn coincident_positions_rejected() {
        let err = dimensionless_potential(&[0.5, 0.1, 0.5]).unwrap_err();
        assert_eq!(err, ZigzagError::CoincidentIons { first: 0, second: 2 });
        assert!(potential_gradient(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn two_ion_equilibrium_is_stationary() {
        let u = 0.25f64.cbrt();
        for g in potential_gradient(&[-u, u]).unwrap() {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = [-2.1, -0.7, 0.15, 1.05, 2.6];
        let analytic = potential_gradient(&u).unwrap();
        let numeric = fd_gradient(&u, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            assert_relative_eq!(*a, *n, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient() {
        let u = [-1.9, -0.4, 0.6, 2.2];
        let h = potential_hessian(&u).unwrap();
        let step = 1e-6;
        for j in 0..u.len() {
            let mut plus = u.to_vec();
            let mut minus = u.to_vec();
            plus[j] += step;
            minus[j] -= step;
            let gp = potential_gradient(&plus).unwrap();
            let gm = potential_gradient(&minus).unwrap();
            for i in 0..u.len() {
                assert_relative_eq!(h[(i, j)], (gp[i] - gm[i]) / (2.0 * step), max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn small_chains_match_closed_forms() {
        assert_eq!(solve_equilibrium(1).unwrap().positions, vec![0.0]);

        let two = solve_equilibrium(2).unwrap();
        let outer = 0.25f64.cbrt();
        assert_relative_eq!(two.positions[1], outer, max_relative = 1e-12);
        assert_relative_eq!(two.positions[0], -outer, max_relative = 1e-12);
        assert_relative_eq!(outer, 0.629_960_524_947_436_6, max_relative = 1e-15);

        let three = solve_equilibrium(3).unwrap();
        let outer = 1.25f64.cbrt();
        assert_relative_eq!(three.positions[2], outer, max_relative = 1e-12);
        assert_eq!(three.positions[1], 0.0);
        assert!((outer - 1.077_217).abs() < 1e-6);
    }

    #[test]
    fn zero_ions_rejected() {
        assert!(matches!(solve_equilibrium(0), Err(ZigzagError::Domain { .. })));
    }

    #[test]
    fn chains_up_to_thirty_are_symmetric_minima() {
        for n in 1..=30 {
            let eq = solve_equilibrium(n).unwrap();
            assert!(eq.residual_norm <= RESIDUAL_BOUND, "N={n}");
            let g = potential_gradient(&eq.positions).unwrap();
            assert!(max_norm(&g) <= RESIDUAL_BOUND);
            assert!(strictly_increasing(&eq.positions));
            for i in 0..n {
                assert!((eq.positions[i] + eq.positions[n - 1 - i]).abs() <= 1e-10);
            }
            let eig = potential_hessian(&eq.positions).unwrap().symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > 0.0), "Hessian not PD at N={n}");
        }
    }

    #[test]
    fn minimum_spacing_shrinks_with_n() {
        let spacings: Vec<f64> = (2..=40)
            .map(|n| solve_equilibrium(n).unwrap().min_spacing().unwrap())
            .collect();
        assert!(spacings.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn solver_is_deterministic() {
        assert_eq!(solve_equilibrium(17).unwrap(), solve_equilibrium(17).unwrap());
    }
}
