//! Surface force and moment integration plus freestream post-processing.
//!
//! Angles are in degrees at every public interface.

mod atmosphere;
mod frames;
mod integrate;

pub use atmosphere::{
    freestream, reynolds_number, standard_atmosphere, sutherland_viscosity, Atmosphere,
    FlightCondition, FreestreamState, ALTITUDE_BAND_KFT, FLIGHT_BOUNDS, FLIGHT_NAMES,
};
pub use frames::{body_frame_coefficients, wind_frame};
pub use integrate::{
    integrate, integrate_forces, integrate_moment, IntegratedCoefficients, Reference,
    COMPENSATED_THRESHOLD,
};
