//! Critical anisotropy of the linear-to-zigzag transition.
//!
//! The softest radial eigenvalue `1/α + 1/2 − μ_N/2` crosses zero at
//! `α_crit = 2/(μ_N − 1)`; beyond it the linear chain is unstable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::solve_equilibrium;
use crate::error::{Result, ZigzagError};
use crate::modes::{axial_spectrum, coupling_matrix_axial, ModeSpectrum};

/// Largest chain length accepted by [`critical_curve`].
pub const MAX_CURVE_IONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub n_ions: usize,
    pub alpha_crit: f64,
    pub mu_max: f64,
}

impl CriticalPoint {
    fn from_spectrum(n_ions: usize, spectrum: &ModeSpectrum) -> Self {
        let mu_max = spectrum.mu_max();
        CriticalPoint {
            n_ions,
            alpha_crit: 2.0 / (mu_max - 1.0),
            mu_max,
        }
    }

    /// `ν_r/ν_z = α_crit^{-1/2}` along the transition line in the (ν_z, ν_r) plane.
    pub fn slope(&self) -> f64 {
        self.alpha_crit.sqrt().recip()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub points: Vec<CriticalPoint>,
}

impl CriticalCurve {
    pub fn n_range(&self) -> Option<(usize, usize)> {
        Some((self.points.first()?.n_ions, self.points.last()?.n_ions))
    }

    /// `(N, α_crit)` pairs, the input format of the power-law fit.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.n_ions, p.alpha_crit)).collect()
    }

    pub fn get(&self, n_ions: usize) -> Option<&CriticalPoint> {
        self.points.iter().find(|p| p.n_ions == n_ions)
    }

    pub fn slopes(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.n_ions, p.slope())).collect()
    }

    /// Largest N whose critical anisotropy is still at least `alpha`.
    pub fn largest_linear_n(&self, alpha: f64) -> Option<usize> {
        self.points
            .iter()
            .filter(|p| p.alpha_crit >= alpha)
            .map(|p| p.n_ions)
            .max()
    }
}

/// Critical point of an N-ion chain, with the axial spectrum it was derived from.
pub fn critical_point_with_spectrum(n_ions: usize) -> Result<(CriticalPoint, ModeSpectrum)> {
    if n_ions < 2 {
        return Err(ZigzagError::domain(
            "n_ions",
            format!("a zigzag transition needs at least 2 ions, got {n_ions}"),
        ));
    }
    let eq = solve_equilibrium(n_ions)?;
    let spectrum = axial_spectrum(&coupling_matrix_axial(&eq))?;
    Ok((CriticalPoint::from_spectrum(n_ions, &spectrum), spectrum))
}

pub fn alpha_crit(n_ions: usize) -> Result<CriticalPoint> {
    critical_point_with_spectrum(n_ions).map(|(point, _)| point)
}

/// One critical point per N in `n_min..=n_max`, ordered by N.
pub fn critical_curve(n_min: usize, n_max: usize) -> Result<CriticalCurve> {
    if n_min < 2 {
        return Err(ZigzagError::domain("n_min", format!("must be at least 2, got {n_min}")));
    }
    if n_max < n_min {
        return Err(ZigzagError::domain("n_max", format!("{n_max} is below n_min {n_min}")));
    }
    if n_max > MAX_CURVE_IONS {
        return Err(ZigzagError::domain(
            "n_max",
            format!("{n_max} exceeds the supported maximum {MAX_CURVE_IONS}"),
        ));
    }
    let points = (n_min..=n_max)
        .into_par_iter()
        .map(alpha_crit)
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalCurve { points })
}

pub fn critical_slope(n_ions: usize) -> Result<f64> {
    alpha_crit(n_ions).map(|p| p.slope())
}
