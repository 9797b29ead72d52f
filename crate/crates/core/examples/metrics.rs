//! Field error metrics and integrated-coefficient correlation.

use bwb_surrogate::aero::IntegratedCoefficients;
use bwb_surrogate::metrics::{channel_metrics, integrated_correlation, r2, ChannelAccumulator, ScatterRow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [0.5, -0.2, 0.1, 0.8];
    let pred = [0.48, -0.25, 0.12, 0.79];
    println!("{:?}", channel_metrics(&pred, &truth)?);
    println!("R2 {:?}", r2(&pred, &truth)?);

    let mut acc = ChannelAccumulator::new();
    acc.push_case(&pred, &truth)?;
    acc.push_case(&[0.0, 0.1], &[0.0, 0.0])?;
    println!("{:?}", acc.finish()?);

    let coeffs = |cl: f64, cd: f64| IntegratedCoefficients {
        cl,
        cd,
        cmy: -0.1 * cl,
        a_ref: 1.0,
        c_ref: 1.0,
    };
    let rows = (0..5)
        .map(|i| {
            let cl = 0.1 * i as f64;
            ScatterRow {
                case_id: format!("c{i}"),
                truth: coeffs(cl, 0.01 + 0.02 * cl * cl),
                pred: coeffs(cl + 0.003, 0.0101 + 0.02 * cl * cl),
            }
        })
        .collect();
    let corr = integrated_correlation(rows)?;
    println!("R2 CL {:?} CD {:?}", corr.r2_cl, corr.r2_cd);
    print!("{}", corr.scatter_csv("example"));
    Ok(())
}
