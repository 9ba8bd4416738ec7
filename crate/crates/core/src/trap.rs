//! Physical units: anisotropy from secular frequencies, the length scale ℓ,
//! the maximum linear-chain length, and rf/endcap voltage calibration.
//!
//! Constants and ion species can be read from a TOML file:
//!
//! ```toml
//! [constants]                      # optional, CODATA 2022 by default
//! vacuum_permittivity = 8.8541878188e-12
//! elementary_charge = 1.602176634e-19
//! atomic_mass_unit = 1.66053906892e-27
//!
//! [ions.ca40]                      # ca40 is built in; entries here override it
//! mass_u = 39.962042
//! charge_state = 1
//!
//! [trap]                           # optional
//! ion = "ca40"
//! nu_z = 150e3                     # Hz; or give endcap_volts + calibration
//! nu_r = 500e3                     # Hz; or give rf_volts + calibration
//! rf_drive = 6e6                   # Hz, informational
//!
//! [trap.calibration]
//! radial_hz_per_volt = 3.5e3
//! axial_hz_per_sqrt_volt = 2.7e4
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equilibrium::ChainEquilibrium;
use crate::error::{Result, ZigzagError};
use crate::power_law::PowerLawFit;

pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_818_8e-12;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_068_92e-27;
/// Electron mass in atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_441e-4;
/// Neutral ⁴⁰Ca atomic mass in u.
pub const CA40_ATOMIC_MASS_U: f64 = 39.962_590_85;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub vacuum_permittivity: f64,
    pub elementary_charge: f64,
    pub atomic_mass_unit: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            vacuum_permittivity: VACUUM_PERMITTIVITY,
            elementary_charge: ELEMENTARY_CHARGE,
            atomic_mass_unit: ATOMIC_MASS_UNIT,
        }
    }
}

impl PhysicalConstants {
    /// `ℓ = [q²/(4πε₀·M·(2πν_z)²)]^{1/3}`
    pub fn length_scale(&self, mass: f64, charge: f64, nu_z: f64) -> Result<f64> {
        positive("mass", mass)?;
        positive("charge", charge)?;
        positive("nu_z", nu_z)?;
        let omega = 2.0 * PI * nu_z;
        Ok((charge * charge / (4.0 * PI * self.vacuum_permittivity * mass * omega * omega)).cbrt())
    }

    pub fn ion_mass(&self, species: &IonSpecies) -> f64 {
        species.mass_u * self.atomic_mass_unit
    }

    pub fn ion_charge(&self, species: &IonSpecies) -> f64 {
        species.charge_state as f64 * self.elementary_charge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSpecies {
    /// Ion mass in atomic mass units.
    pub mass_u: f64,
    #[serde(default = "default_charge_state")]
    pub charge_state: u32,
}

fn default_charge_state() -> u32 {
    1
}

impl IonSpecies {
    pub fn ca40() -> Self {
        IonSpecies {
            mass_u: CA40_ATOMIC_MASS_U - ELECTRON_MASS_U,
            charge_state: 1,
        }
    }
}

/// Proportionality constants of the pseudo-potential calibration:
/// `ν_r = k_r·V_rf` and `ν_z = k_z·√V_endcap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub radial_hz_per_volt: f64,
    pub axial_hz_per_sqrt_volt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParameters {
    /// Axial secular frequency, Hz.
    pub nu_z: f64,
    /// Radial secular frequency of the weaker transverse axis, Hz.
    pub nu_r: f64,
    /// Ion mass, kg.
    pub mass: f64,
    /// Ion charge, C.
    pub charge: f64,
    pub rf_drive: Option<f64>,
    pub calibration: Option<Calibration>,
}

fn positive(parameter: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ZigzagError::domain(parameter, format!("must be positive and finite, got {value}")))
    }
}

impl TrapParameters {
    pub fn new(nu_z: f64, nu_r: f64, mass: f64, charge: f64) -> Result<Self> {
        positive("nu_z", nu_z)?;
        positive("nu_r", nu_r)?;
        positive("mass", mass)?;
        positive("charge", charge)?;
        let params = TrapParameters {
            nu_z,
            nu_r,
            mass,
            charge,
            rf_drive: None,
            calibration: None,
        };
        if !params.is_linear_regime() {
            log::warn!(
                "anisotropy {:.4} >= 1: axial confinement is not the weak direction",
                params.anisotropy()
            );
        }
        Ok(params)
    }

    /// ⁴⁰Ca⁺ with CODATA constants.
    pub fn ca40(nu_z: f64, nu_r: f64) -> Result<Self> {
        let constants = PhysicalConstants::default();
        let ion = IonSpecies::ca40();
        Self::new(nu_z, nu_r, constants.ion_mass(&ion), constants.ion_charge(&ion))
    }

    pub fn with_calibration(mut self, calibration: Calibration) -> Self {
        self.calibration = Some(calibration);
        self
    }

    pub fn with_rf_drive(mut self, rf_drive: f64) -> Self {
        self.rf_drive = Some(rf_drive);
        self
    }

    /// `(ν_z/ν_r)²`
    pub fn anisotropy(&self) -> f64 {
        (self.nu_z / self.nu_r).powi(2)
    }

    pub fn is_linear_regime(&self) -> bool {
        self.anisotropy() < 1.0
    }

    pub fn length_scale(&self) -> Result<f64> {
        length_scale(self.mass, self.charge, self.nu_z)
    }
}

pub fn anisotropy(params: &TrapParameters) -> f64 {
    params.anisotropy()
}

/// Length scale ℓ in metres with CODATA constants.
pub fn length_scale(mass: f64, charge: f64, nu_z: f64) -> Result<f64> {
    PhysicalConstants::default().length_scale(mass, charge, nu_z)
}

/// `N_crit = (ν_z/(√c·ν_r))^{2/β}`, the longest chain that stays linear under
/// the power law. Real valued; floor it for a register size.
pub fn n_crit(params: &TrapParameters, fit: &PowerLawFit) -> Result<f64> {
    positive("nu_z", params.nu_z)?;
    positive("nu_r", params.nu_r)?;
    positive("c", fit.c)?;
    if !(fit.beta < 0.0) {
        return Err(ZigzagError::domain("beta", format!("must be negative, got {}", fit.beta)));
    }
    Ok((params.nu_z / (fit.c.sqrt() * params.nu_r)).powf(2.0 / fit.beta))
}

/// Chain positions in metres, `z_n = ℓ·u_n`.
pub fn physical_positions(eq: &ChainEquilibrium, params: &TrapParameters) -> Result<Vec<f64>> {
    let ell = params.length_scale()?;
    Ok(eq.positions.iter().map(|u| ell * u).collect())
}

/// `(ν_r, ν_z)` from the rf amplitude and endcap voltage.
pub fn frequencies_from_voltages(
    rf_volts: f64,
    endcap_volts: f64,
    calibration: Option<&Calibration>,
) -> Result<(f64, f64)> {
    let cal = calibration.ok_or_else(|| {
        ZigzagError::Config("voltage conversion needs a calibration (radial_hz_per_volt, axial_hz_per_sqrt_volt)".into())
    })?;
    positive("rf_volts", rf_volts)?;
    positive("endcap_volts", endcap_volts)?;
    positive("radial_hz_per_volt", cal.radial_hz_per_volt)?;
    positive("axial_hz_per_sqrt_volt", cal.axial_hz_per_sqrt_volt)?;
    Ok((cal.radial_hz_per_volt * rf_volts, cal.axial_hz_per_sqrt_volt * endcap_volts.sqrt()))
}

/// `[trap]` table of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    #[serde(default = "default_ion")]
    pub ion: String,
    pub nu_z: Option<f64>,
    pub nu_r: Option<f64>,
    pub rf_volts: Option<f64>,
    pub endcap_volts: Option<f64>,
    pub rf_drive: Option<f64>,
    pub calibration: Option<Calibration>,
}

fn default_ion() -> String {
    "ca40".to_string()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapConfig {
    pub constants: PhysicalConstants,
    pub ions: BTreeMap<String, IonSpecies>,
    pub trap: Option<TrapSection>,
}

impl TrapConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ZigzagError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ZigzagError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Looks up an ion by name; `ca40` resolves to the built-in preset unless overridden.
    pub fn ion(&self, name: &str) -> Result<IonSpecies> {
        if let Some(ion) = self.ions.get(name) {
            return Ok(*ion);
        }
        match name {
            "ca40" => Ok(IonSpecies::ca40()),
            _ => Err(ZigzagError::Config(format!("unknown ion species '{name}'"))),
        }
    }

    /// Builds trap parameters from the `[trap]` table. Frequencies given
    /// directly take precedence over voltages.
    pub fn trap_parameters(&self) -> Result<TrapParameters> {
        let section = self
            .trap
            .as_ref()
            .ok_or_else(|| ZigzagError::Config("missing [trap] table".into()))?;
        let ion = self.ion(&section.ion)?;
        let missing = |what: &str| {
            ZigzagError::Config(format!("[trap] needs {what} or its voltage with a calibration"))
        };
        let cal = section.calibration.as_ref();
        let nu_r = match (section.nu_r, section.rf_volts, cal) {
            (Some(nu_r), _, _) => nu_r,
            (None, Some(volts), Some(cal)) => {
                positive("rf_volts", volts)?;
                cal.radial_hz_per_volt * volts
            }
            _ => return Err(missing("nu_r")),
        };
        let nu_z = match (section.nu_z, section.endcap_volts, cal) {
            (Some(nu_z), _, _) => nu_z,
            (None, Some(volts), Some(cal)) => {
                positive("endcap_volts", volts)?;
                cal.axial_hz_per_sqrt_volt * volts.sqrt()
            }
            _ => return Err(missing("nu_z")),
        };
        let mut params = TrapParameters::new(
            nu_z,
            nu_r,
            self.constants.ion_mass(&ion),
            self.constants.ion_charge(&ion),
        )?;
        params.rf_drive = section.rf_drive;
        params.calibration = section.calibration;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::critical_curve;
    use crate::equilibrium::solve_equilibrium;
    use crate::power_law::THEORY_2_100;
    use approx::assert_relative_eq;

    #[test]
    fn anisotropy_examples() {
        let p = TrapParameters::ca40(300e3, 300e3).unwrap();
        assert_eq!(p.anisotropy(), 1.0);
        let q = TrapParameters::ca40(80e3, 700e3).unwrap();
        assert_relative_eq!(anisotropy(&q), 0.013_061_224_489_795_918, max_relative = 1e-14);
        let doubled = TrapParameters::ca40(160e3, 1400e3).unwrap();
        assert_relative_eq!(doubled.anisotropy(), q.anisotropy(), max_relative = 1e-15);
        assert!(TrapParameters::ca40(0.0, 1e5).is_err());
    }

    #[test]
    fn length_scale_value_and_scaling() {
        // closed form evaluated independently at 30 digits
        let ell = length_scale(6.642e-26, 1.602e-19, 100e3).unwrap();
        assert_relative_eq!(ell, 2.064_283_179_378_92e-5, max_relative = 1e-12);
        assert_relative_eq!(length_scale(6.642e-26, 1.602e-19, 800e3).unwrap(), ell / 4.0, max_relative = 1e-14);
        assert_relative_eq!(length_scale(8.0 * 6.642e-26, 1.602e-19, 100e3).unwrap(), ell / 2.0, max_relative = 1e-14);
        assert!(length_scale(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn n_crit_examples() {
        let c = THEORY_2_100.c;
        let unit = TrapParameters::ca40(c.sqrt() * 100e3, 100e3).unwrap();
        assert_relative_eq!(n_crit(&unit, &THEORY_2_100).unwrap(), 1.0, max_relative = 1e-12);

        let p = TrapParameters::ca40(80e3, 700e3).unwrap();
        let n = n_crit(&p, &THEORY_2_100).unwrap();
        assert_relative_eq!(n, 20.975_844_511_723_81, max_relative = 1e-12);
        let curve = critical_curve(2, 40).unwrap();
        assert_eq!(curve.largest_linear_n(p.anisotropy()), Some(20));
        assert_eq!(n.floor() as usize, 20);

        let stiffer = TrapParameters::ca40(80e3, 900e3).unwrap();
        assert!(n_crit(&stiffer, &THEORY_2_100).unwrap() > n);

        let bad = PowerLawFit { beta: 0.1, ..THEORY_2_100 };
        assert!(n_crit(&p, &bad).is_err());
    }

    #[test]
    fn physical_positions_scale_with_ell() {
        let p = TrapParameters::ca40(100e3, 500e3).unwrap();
        assert_eq!(physical_positions(&solve_equilibrium(1).unwrap(), &p).unwrap(), vec![0.0]);
        let two = physical_positions(&solve_equilibrium(2).unwrap(), &p).unwrap();
        let ell = p.length_scale().unwrap();
        assert_relative_eq!(two[1], 0.25f64.cbrt() * ell, max_relative = 1e-12);
        let tighter = TrapParameters::ca40(200e3, 500e3).unwrap();
        let closer = physical_positions(&solve_equilibrium(2).unwrap(), &tighter).unwrap();
        assert!(closer[1] - closer[0] < two[1] - two[0]);
    }

    #[test]
    fn voltage_calibration() {
        let cal = Calibration {
            radial_hz_per_volt: 3.5e3,
            axial_hz_per_sqrt_volt: 2.0e4,
        };
        let (r1, z1) = frequencies_from_voltages(100.0, 16.0, Some(&cal)).unwrap();
        let (r2, z2) = frequencies_from_voltages(200.0, 64.0, Some(&cal)).unwrap();
        assert_relative_eq!(r2, 2.0 * r1);
        assert_relative_eq!(z2, 2.0 * z1);
        assert_relative_eq!(r2, 700e3);
        // proportional law through the origin: 60 V lands on 210 kHz, not 200 kHz
        assert_relative_eq!(frequencies_from_voltages(60.0, 16.0, Some(&cal)).unwrap().0, 210e3);
        assert!(matches!(frequencies_from_voltages(1.0, 1.0, None), Err(ZigzagError::Config(_))));

        // anisotropy is unchanged when V_rf scales by s and V_endcap by s²
        let a1 = (z1 / r1).powi(2);
        let (r3, z3) = frequencies_from_voltages(300.0, 144.0, Some(&cal)).unwrap();
        assert_relative_eq!((z3 / r3).powi(2), a1, max_relative = 1e-14);
    }

    #[test]
    fn ca40_preset_mass() {
        let c = PhysicalConstants::default();
        let m = c.ion_mass(&IonSpecies::ca40());
        assert!((m - 6.636e-26).abs() < 1e-29);
    }

    #[test]
    fn config_file_round() {
        let text = r#"
            [constants]
            vacuum_permittivity = 8.8541878128e-12

            [ions.be9]
            mass_u = 9.01167

            [trap]
            ion = "be9"
            endcap_volts = 25.0
            nu_r = 1.2e6
            rf_drive = 6e6

            [trap.calibration]
            radial_hz_per_volt = 1e4
            axial_hz_per_sqrt_volt = 4e4
        "#;
        let cfg = TrapConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.constants.vacuum_permittivity, 8.8541878128e-12);
        assert_eq!(cfg.constants.elementary_charge, ELEMENTARY_CHARGE);
        let p = cfg.trap_parameters().unwrap();
        assert_eq!(p.nu_z, 200e3);
        assert_eq!(p.nu_r, 1.2e6);
        assert_eq!(p.rf_drive, Some(6e6));
        assert_relative_eq!(p.mass, 9.01167 * ATOMIC_MASS_UNIT);
        assert_eq!(cfg.ion("ca40").unwrap(), IonSpecies::ca40());
        assert!(cfg.ion("xe129").is_err());

        assert!(TrapConfig::from_toml_str("[trap]\nion = \"ca40\"\n").unwrap().trap_parameters().is_err());
        assert!(TrapConfig::from_toml_str("bogus = 1").is_err());
        assert!(TrapConfig::default().trap_parameters().is_err());
    }
}
