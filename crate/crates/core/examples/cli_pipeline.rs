//! Drive the `bwb` subcommands in-process from geometry to exported predictions.

use bwb_surrogate::cli;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("bwb_cli_pipeline");
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["geom".into(), "--sample".into(), "12".into(), "--holdout".into(), "2".into(), "--n-chord".into(), "16".into(), "--n-span".into(), "6".into(), "--out".into(), p("geoms")],
        vec!["synth".into(), "--geometries".into(), p("geoms"), "--conditions".into(), "3".into(), "--out".into(), p("data")],
        vec!["train".into(), "--model".into(), "pointnet".into(), "--data".into(), p("data"), "--epochs".into(), "10".into(), "--out".into(), p("pointnet.ckpt")],
        vec!["train".into(), "--model".into(), "film".into(), "--data".into(), p("data"), "--epochs".into(), "5".into(), "--out".into(), p("film.ckpt")],
        vec!["eval".into(), "--data".into(), p("data"), "--pointnet".into(), p("pointnet.ckpt"), "--film".into(), p("film.ckpt"), "--report".into(), p("report")],
        vec!["integrate".into(), "--case".into(), p("data/cases/g0011_c0.bwbc")],
        vec!["export".into(), "--input".into(), p("data/cases/g0011_c0.bwbc"), "--output".into(), p("g0011_c0.vtk"), "--film".into(), p("film.ckpt"), "--pointnet".into(), p("pointnet.ckpt")],
    ];
    for args in runs {
        println!("$ bwb {}", args.join(" "));
        let code = cli::run(std::iter::once("bwb".to_string()).chain(args));
        if code != 0 {
            return Err(format!("exit code {code}").into());
        }
    }
    Ok(())
}
