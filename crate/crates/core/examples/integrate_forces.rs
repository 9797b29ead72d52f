//! Integrate pointwise pressure and friction into lift, drag and pitching moment.

use bwb_surrogate::aero::{freestream, integrate, standard_atmosphere, wind_frame, FlightCondition, Reference};
use bwb_surrogate::dataset::{synthetic_field_oracle, FieldQuad};
use bwb_surrogate::geometry::{sample_surface, CstSection, PlanformParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlanformParams::midpoint();
    let cloud = sample_surface(&params, &CstSection::default(), 32, 11, true)?;
    let flight = FlightCondition {
        altitude: 30.0,
        mach: 0.3,
        reynolds_length: 1.0,
        alpha: 4.0,
    };
    flight.validate()?;

    let atm = standard_atmosphere(flight.altitude)?;
    let fs = freestream(&flight)?;
    println!(
        "T={:.2} K rho={:.4} kg/m^3 a={:.1} m/s Re={:.3e}",
        atm.temperature, atm.density, atm.speed_of_sound, fs.reynolds_number
    );

    let (cd, cl) = wind_frame(0.01, 0.5, 10.0);
    println!("body (0.01, 0.5) at 10 deg -> cd {cd:.7} cl {cl:.7}");

    let fields = synthetic_field_oracle(&cloud, &flight, &params, 0)?;
    let reference = Reference {
        a_ref: cloud.total_area() / 2.0,
        ..Default::default()
    };
    let ic = integrate(&cloud, &fields, flight.alpha, &reference)?;
    println!("CL {:.5} CD {:.5} CMy {:.5}", ic.cl, ic.cd, ic.cmy);

    let uniform = FieldQuad {
        cp: vec![1.0; cloud.len()],
        ..FieldQuad::zeros(cloud.len())
    };
    let closed = integrate(&cloud, &uniform, flight.alpha, &reference)?;
    println!("uniform Cp on the closed surface: CL {:.2e} CD {:.2e}", closed.cl, closed.cd);
    Ok(())
}
