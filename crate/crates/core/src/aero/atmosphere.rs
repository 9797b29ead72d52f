//! 1976 US Standard Atmosphere (troposphere and lower stratosphere) with
//! Sutherland viscosity.

use crate::error::{Error, Result};

const FT_TO_M: f64 = 0.3048;
const G0: f64 = 9.80665;
const R_AIR: f64 = 287.053_07;
const GAMMA: f64 = 1.4;
const T0: f64 = 288.15;
const P0: f64 = 101_325.0;
const LAPSE: f64 = 0.0065;
const TROPOPAUSE_M: f64 = 11_000.0;
const T_TROPOPAUSE: f64 = 216.65;

const SUTHERLAND_MU_REF: f64 = 1.716e-5;
const SUTHERLAND_T_REF: f64 = 273.15;
const SUTHERLAND_S: f64 = 110.4;

/// Supported altitude band in kft.
pub const ALTITUDE_BAND_KFT: (f64, f64) = (0.0, 47.0);

/// Parameter names and sampling bounds: altitude (kft), Mach, Reynolds
/// length (m), angle of attack (deg).
pub const FLIGHT_NAMES: [&str; 4] = ["altitude", "mach", "reynolds_length", "alpha"];
pub const FLIGHT_BOUNDS: [(f64, f64); 4] = [(0.0, 40.0), (0.05, 0.5), (0.1, 10.0), (-10.0, 20.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightCondition {
    /// kft
    pub altitude: f64,
    pub mach: f64,
    /// m
    pub reynolds_length: f64,
    /// degrees
    pub alpha: f64,
}

impl FlightCondition {
    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            altitude: v[0],
            mach: v[1],
            reynolds_length: v[2],
            alpha: v[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.altitude, self.mach, self.reynolds_length, self.alpha]
    }

    pub fn validate(&self) -> Result<()> {
        let offenders: Vec<String> = self
            .to_array()
            .iter()
            .zip(FLIGHT_NAMES.iter().zip(FLIGHT_BOUNDS))
            .filter(|(v, (_, (lo, hi)))| !(**v >= *lo && **v <= *hi))
            .map(|(v, (name, (lo, hi)))| format!("{name}={v} outside [{lo}, {hi}]"))
            .collect();
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(offenders.join("; ")))
        }
    }

    pub fn normalized(&self) -> [f64; 4] {
        let mut v = self.to_array();
        for (x, (lo, hi)) in v.iter_mut().zip(FLIGHT_BOUNDS) {
            *x = (*x - lo) / (hi - lo);
        }
        v
    }
}

/// Ambient state at altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atmosphere {
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// kg/m^3
    pub density: f64,
    /// Pa s
    pub dynamic_viscosity: f64,
    /// m/s
    pub speed_of_sound: f64,
}

/// Ambient state plus the Reynolds number of a flight condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreestreamState {
    pub temperature: f64,
    pub density: f64,
    pub dynamic_viscosity: f64,
    pub speed_of_sound: f64,
    pub reynolds_number: f64,
}

pub fn sutherland_viscosity(temperature: f64) -> f64 {
    SUTHERLAND_MU_REF
        * (temperature / SUTHERLAND_T_REF).powf(1.5)
        * (SUTHERLAND_T_REF + SUTHERLAND_S)
        / (temperature + SUTHERLAND_S)
}

pub fn standard_atmosphere(altitude_kft: f64) -> Result<Atmosphere> {
    let (lo, hi) = ALTITUDE_BAND_KFT;
    if !(altitude_kft >= lo && altitude_kft <= hi) {
        return Err(Error::domain(format!(
            "altitude {altitude_kft} kft outside supported band [{lo}, {hi}]"
        )));
    }
    let h = altitude_kft * 1000.0 * FT_TO_M;
    let exponent = G0 / (R_AIR * LAPSE);
    let (temperature, pressure) = if h <= TROPOPAUSE_M {
        let t = T0 - LAPSE * h;
        (t, P0 * (t / T0).powf(exponent))
    } else {
        let p11 = P0 * (T_TROPOPAUSE / T0).powf(exponent);
        (
            T_TROPOPAUSE,
            p11 * (-G0 * (h - TROPOPAUSE_M) / (R_AIR * T_TROPOPAUSE)).exp(),
        )
    };
    Ok(Atmosphere {
        temperature,
        pressure,
        density: pressure / (R_AIR * temperature),
        dynamic_viscosity: sutherland_viscosity(temperature),
        speed_of_sound: (GAMMA * R_AIR * temperature).sqrt(),
    })
}

pub fn freestream(fc: &FlightCondition) -> Result<FreestreamState> {
    if !(fc.mach >= 0.0) || !(fc.reynolds_length >= 0.0) {
        return Err(Error::domain("mach and reynolds length must be non-negative"));
    }
    let atm = standard_atmosphere(fc.altitude)?;
    let velocity = fc.mach * atm.speed_of_sound;
    Ok(FreestreamState {
        temperature: atm.temperature,
        density: atm.density,
        dynamic_viscosity: atm.dynamic_viscosity,
        speed_of_sound: atm.speed_of_sound,
        reynolds_number: atm.density * velocity * fc.reynolds_length / atm.dynamic_viscosity,
    })
}

pub fn reynolds_number(fc: &FlightCondition) -> Result<f64> {
    freestream(fc).map(|s| s.reynolds_number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sea_level() {
        let a = standard_atmosphere(0.0).unwrap();
        assert!(rel(a.temperature, 288.15) < 1e-3);
        assert!(rel(a.density, 1.2250) < 1e-3);
        assert!(rel(a.speed_of_sound, 340.29) < 1e-3);
        assert!(rel(a.dynamic_viscosity, 1.7894e-5) < 1e-3);
    }

    #[test]
    fn tropopause_and_monotone_density() {
        let a = standard_atmosphere(36.089).unwrap();
        assert!(rel(a.temperature, 216.65) < 1e-3);
        let top = standard_atmosphere(40.0).unwrap();
        assert!(top.density < standard_atmosphere(0.0).unwrap().density);
        assert_eq!(top.temperature, 216.65);
    }

    #[test]
    fn band_is_enforced() {
        assert!(standard_atmosphere(-0.1).is_err());
        assert!(standard_atmosphere(47.5).is_err());
        assert!(standard_atmosphere(f64::NAN).is_err());
    }

    #[test]
    fn reynolds_fixtures() {
        let still = FlightCondition::from_array([20.0, 0.0, 3.0, 5.0]);
        assert_eq!(reynolds_number(&still).unwrap(), 0.0);

        let fc = FlightCondition::from_array([0.0, 0.3, 1.0, 0.0]);
        let re = reynolds_number(&fc).unwrap();
        let hand = 1.2250 * (0.3 * 340.29) * 1.0 / 1.7894e-5;
        assert!(rel(re, hand) < 0.01);
        assert!(rel(re, 6.99e6) < 0.01);

        let doubled = FlightCondition { reynolds_length: 2.0, ..fc };
        assert_eq!(reynolds_number(&doubled).unwrap(), 2.0 * re);
    }

    #[test]
    fn flight_validation() {
        FlightCondition::from_array([10.0, 0.3, 1.0, 0.0]).validate().unwrap();
        let err = FlightCondition::from_array([10.0, 0.7, 1.0, 25.0]).validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mach") && msg.contains("alpha"));
    }
}
