//! Train the point-cloud regressor on a small corpus and recover planform parameters.

use bwb_surrogate::geometry::PARAM_NAMES;
use bwb_surrogate::pipeline::{evaluate_pointnet, train_pointnet_on, Corpus, CorpusConfig};
use bwb_surrogate::pointnet::{predict_params_ensembled, PointNetConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::synthetic(&CorpusConfig {
        n_geometries: 100,
        n_holdout: 10,
        conditions_per_geometry: 1,
        ..Default::default()
    })?;
    let split = corpus.split_indices(0.9, 0)?;
    let cfg = PointNetConfig {
        epochs: 300,
        ..Default::default()
    };
    let (model, log) = train_pointnet_on(&corpus, &split, &cfg)?;
    println!("best epoch {} val mse {:.5}", log.best_epoch, log.best_val());

    let test = corpus.geometry_indices(&split.test);
    let g = &corpus.geometries[test[0]];
    let p = predict_params_ensembled(&model, &g.cloud, 0)?;
    for ((name, t), (m, v)) in PARAM_NAMES
        .iter()
        .zip(g.params.to_array())
        .zip(p.mean.to_array().into_iter().zip(p.variance))
    {
        println!("{name:>12} true {t:9.4} predicted {m:9.4} (batch sd {:.4})", v.sqrt());
    }
    for (name, r2) in evaluate_pointnet(&corpus, &test, &model, 0)? {
        println!("R2 {name} {r2:?}");
    }
    Ok(())
}
