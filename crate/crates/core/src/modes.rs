//! Axial and radial coupling matrices of a chain and their spectra.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::equilibrium::ChainEquilibrium;
use crate::error::{Result, ZigzagError};

/// Axial coupling matrix
///
/// ```text
/// A_nn = 1 + 2 Σ_{p≠n} 1/|u_n − u_p|³
/// A_nm = −2/|u_n − u_m|³        (n ≠ m)
/// ```
///
/// Every row sums to one, so the uniform vector is the centre-of-mass mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrixAxial {
    pub n_ions: usize,
    pub entries: DMatrix<f64>,
}

/// Eigenpairs of `A`, ascending. Column `p` of `eigenvectors` pairs with
/// `eigenvalues[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl ModeSpectrum {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest axial eigenvalue μ_N.
    pub fn mu_max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum of at least one ion")
    }

    pub fn mode(&self, p: usize) -> Vec<f64> {
        self.eigenvectors.column(p).iter().copied().collect()
    }

    pub fn to_table(&self) -> ModeTable {
        ModeTable {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: (0..self.n_modes()).map(|p| self.mode(p)).collect(),
        }
    }
}

/// Serializable form of a [`ModeSpectrum`] (eigenvectors listed per mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

pub fn coupling_matrix_axial(eq: &ChainEquilibrium) -> CouplingMatrixAxial {
    let u = &eq.positions;
    let n_ions = u.len();
    let mut a = DMatrix::from_diagonal_element(n_ions, n_ions, 1.0);
    for n in 0..n_ions {
        for m in n + 1..n_ions {
            let k = 2.0 / (u[n] - u[m]).abs().powi(3);
            a[(n, m)] = -k;
            a[(m, n)] = -k;
            a[(n, n)] += k;
            a[(m, m)] += k;
        }
    }
    CouplingMatrixAxial { n_ions, entries: a }
}

/// Diagonalize `A`, sorting ascending and fixing each eigenvector's first
/// non-negligible component positive.
pub fn axial_spectrum(a: &CouplingMatrixAxial) -> Result<ModeSpectrum> {
    symmetric_spectrum(&a.entries)
}

pub(crate) fn symmetric_spectrum(matrix: &DMatrix<f64>) -> Result<ModeSpectrum> {
    let n = matrix.nrows();
    let eigen = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| ZigzagError::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps solver order on ties
    order.sort_by(|&i, &j| eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]));

    let eigenvalues = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (p, &i) in order.iter().enumerate() {
        let mut v = eigen.eigenvectors.column(i).clone_owned();
        let scale = v.amax();
        if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-10 * scale) {
            if first < 0.0 {
                v.neg_mut();
            }
        }
        eigenvectors.set_column(p, &v);
    }
    Ok(ModeSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Radial eigenvalues `1/α + 1/2 − μ_p/2`, in the order of `spectrum`.
pub fn radial_eigenvalues(spectrum: &ModeSpectrum, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let offset = 1.0 / alpha + 0.5;
    Ok(spectrum.eigenvalues.iter().map(|mu| offset - 0.5 * mu).collect())
}

/// Radial coupling matrix `B = (1/α + 1/2)·I − A/2`.
pub fn coupling_matrix_radial(a: &CouplingMatrixAxial, alpha: f64) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    let n = a.n_ions;
    Ok(DMatrix::from_diagonal_element(n, n, 1.0 / alpha + 0.5) - &a.entries * 0.5)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ZigzagError::domain("alpha", format!("must be positive and finite, got {alpha}")))
    }
}
