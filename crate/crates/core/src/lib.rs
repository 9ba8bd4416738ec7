//! Linear trapped-ion crystals and their linear-to-zigzag transition.
//!
//! The crate works in dimensionless units: axial positions are measured in
//! the length scale `ℓ = [e²/4πε₀M(2πν_z)²]^{1/3}` and energies in
//! `M(2πν_z)²ℓ²/2`, so the axial potential of an N-ion chain is
//!
//! ```text
//! V(u) = Σ u_n² + 2 Σ_{n<m} 1/|u_n − u_m|
//! ```
//!
//! The pipeline is:
//!
//! 1. [`equilibrium::solve_equilibrium`] finds the chain positions.
//! 2. [`modes::coupling_matrix_axial`] and [`modes::axial_spectrum`] build
//!    the axial coupling matrix `A` and its eigenpairs `μ_p`.
//! 3. [`critical::alpha_crit`] returns the critical anisotropy
//!    `α_crit = 2/(μ_N − 1)` at which the softest radial mode reaches zero.
//! 4. [`power_law::fit_power_law`] condenses a range of critical points into
//!    `α_crit ≈ c·N^β`.
//!
//! [`oracle`] locates the same transition independently by minimizing the
//! full three-dimensional potential, [`trap`] converts to physical units,
//! and [`measurements`] reduces experimental observations to per-N averages.
//!
//! ```
//! use ion_zigzag::critical::alpha_crit;
//!
//! let point = alpha_crit(3).unwrap();
//! assert!((point.alpha_crit - 5.0 / 12.0).abs() < 1e-10);
//! ```

pub mod cli;
pub mod critical;
pub mod equilibrium;
mod error;
pub mod measurements;
pub mod modes;
pub mod oracle;
pub mod power_law;
pub mod trap;

pub use crate::critical::{alpha_crit, critical_curve, critical_slope, CriticalCurve, CriticalPoint};
pub use crate::equilibrium::{solve_equilibrium, ChainEquilibrium};
pub use crate::error::{Result, ZigzagError};
pub use crate::modes::{axial_spectrum, coupling_matrix_axial, CouplingMatrixAxial, ModeSpectrum};
pub use crate::oracle::{bisect_transition, minimize_full, CrystalConfiguration, Phase};
pub use crate::power_law::{fit_power_law, PowerLawFit};
pub use crate::trap::TrapParameters;
