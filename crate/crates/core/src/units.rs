//! Physical constants (CODATA 2018) and conversions between SI and the
//! eV / µm / fs units used at the API boundary.
//!
//! Everything inside the crate computes in SI.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Electron rest mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Joules per electronvolt.
pub const JOULE_PER_EV: f64 = ELEMENTARY_CHARGE;

/// The constant set as a value, for callers that want to carry it around or
/// serialize it next to results.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    pub electron_mass: f64,
    pub elementary_charge: f64,
    pub reduced_planck: f64,
    pub planck: f64,
    pub speed_of_light: f64,
    pub ev_per_joule: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        electron_mass: ELECTRON_MASS,
        elementary_charge: ELEMENTARY_CHARGE,
        reduced_planck: HBAR,
        planck: PLANCK,
        speed_of_light: SPEED_OF_LIGHT,
        ev_per_joule: 1.0 / JOULE_PER_EV,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

#[inline]
pub fn ev_to_joule(ev: f64) -> f64 {
    ev * JOULE_PER_EV
}

#[inline]
pub fn joule_to_ev(joule: f64) -> f64 {
    joule / JOULE_PER_EV
}

#[inline]
pub fn um_to_m(um: f64) -> f64 {
    um * 1e-6
}

#[inline]
pub fn m_to_um(m: f64) -> f64 {
    m * 1e6
}

#[inline]
pub fn fs_to_s(fs: f64) -> f64 {
    fs * 1e-15
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength > 0.0 && wavelength.is_finite() || wavelength == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "wavelength",
            reason: format!("must be positive, got {wavelength}"),
        })
    }
}

/// Photon energy `hc/λ` in eV for a wavelength in metres.
pub fn photon_energy(wavelength: f64) -> Result<f64> {
    check_wavelength(wavelength)?;
    Ok(joule_to_ev(PLANCK * SPEED_OF_LIGHT / wavelength))
}

/// Photon momentum `h/λ` in kg·m/s for a wavelength in metres.
pub fn photon_momentum(wavelength: f64) -> Result<f64> {
    check_wavelength(wavelength)?;
    Ok(PLANCK / wavelength)
}

/// Kinetic energy `p²/2m` of an electron, in eV.
pub fn electron_kinetic_energy_ev(momentum: f64) -> f64 {
    joule_to_ev(momentum * momentum / (2.0 * ELECTRON_MASS))
}

/// Momentum `√(2mE)` of a free electron with kinetic energy in eV.
pub fn electron_momentum(energy_ev: f64) -> f64 {
    (2.0 * ELECTRON_MASS * ev_to_joule(energy_ev)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ev_conversion() {
        assert_eq!(ev_to_joule(0.0), 0.0);
        assert_eq!(ev_to_joule(1.0), 1.602176634e-19);
        assert!(rel(ev_to_joule(0.54), 8.6518e-20) < 1e-4);
    }

    #[test]
    fn planck_pair_consistent() {
        let back = 2.0 * PI * HBAR;
        assert!((back - PLANCK).abs() <= PLANCK * f64::EPSILON);
    }

    #[test]
    fn photon_energy_examples() {
        // 1.064 µm -> 1.165 eV
        let e = photon_energy(1.064e-6).unwrap();
        assert!((e - 1.165).abs() < 5e-4, "{e}");
        assert!((photon_energy(1239.84e-9).unwrap() - 1.0).abs() < 1e-5);
        assert!((photon_energy(0.532e-6).unwrap() - 2.331).abs() < 5e-4);
        assert!(photon_energy(0.0).is_err());
        assert!(photon_energy(-1.0).is_err());
    }

    #[test]
    fn photon_momentum_examples() {
        let p = photon_momentum(1.064e-6).unwrap();
        assert!(rel(p, 6.228e-28) < 1e-3);
        assert_eq!(photon_momentum(f64::INFINITY).unwrap(), 0.0);
        let recoil = electron_kinetic_energy_ev(p);
        assert!(rel(recoil, 1.33e-6) < 5e-3, "{recoil}");
        assert!(photon_momentum(0.0).is_err());
    }

    proptest! {
        #[test]
        fn ev_round_trip(exp in -9.0f64..9.0, mant in 1.0f64..10.0) {
            let x = mant * 10f64.powf(exp);
            let back = joule_to_ev(ev_to_joule(x));
            prop_assert!((back - x).abs() <= x * f64::EPSILON);
        }

        #[test]
        fn energy_times_wavelength_constant(l in 1e-9f64..1e-3) {
            let hc = photon_energy(l).unwrap() * l;
            let reference = photon_energy(1e-6).unwrap() * 1e-6;
            prop_assert!(((hc - reference) / reference).abs() < 1e-12);
        }
    }
}
