//! Build a planform from its nine parameters and sample a watertight surface.

use bwb_surrogate::geometry::{
    build_planform, sample_surface, write_geometry_config, CstSection, PlanformParams, PARAM_NAMES,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlanformParams {
        s1: 60.0,
        c4_over_c1: 0.065,
        ..PlanformParams::midpoint()
    };
    params.validate()?;
    for (name, v) in PARAM_NAMES.iter().zip(params.to_array()) {
        println!("{name:>12} = {v}");
    }

    let planform = build_planform(&params, true)?;
    for s in &planform.stations {
        println!("station y={:.3} le_x={:.3} chord={:.3}", s.y, s.le_x, s.chord);
    }

    let section = CstSection::default();
    let cloud = sample_surface(&params, &section, 32, 11, true)?.with_id("demo");
    cloud.check_invariants()?;
    println!("{} points, wetted area {:.4}", cloud.len(), cloud.total_area());

    print!("{}", write_geometry_config(&params, &section));

    let mut bad = params;
    bad.s1 = 70.0;
    println!("s1 = 70 rejected: {}", bad.validate().unwrap_err());
    Ok(())
}
