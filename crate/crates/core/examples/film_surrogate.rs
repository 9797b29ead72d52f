//! Train the FiLM field network and predict surface fields and integrated coefficients.

use bwb_surrogate::film::{predict_case, CondMode, FilmConfig};
use bwb_surrogate::pipeline::{evaluate, train_film_on, train_pointnet_on, Corpus, CorpusConfig, Predictor};
use bwb_surrogate::pointnet::PointNetConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::synthetic(&CorpusConfig {
        n_geometries: 20,
        n_holdout: 3,
        conditions_per_geometry: 4,
        n_chord: 16,
        n_span: 6,
        ..Default::default()
    })?;
    let split = corpus.split_indices(0.9, 0)?;
    let (pointnet, _) = train_pointnet_on(
        &corpus,
        &split,
        &PointNetConfig {
            epochs: 20,
            ..Default::default()
        },
    )?;
    let cfg = FilmConfig {
        epochs: 15,
        ..Default::default()
    };
    let (film, log) = train_film_on(&corpus, &split, CondMode::GroundTruth, None, &cfg)?;
    println!("film best epoch {} val mse {:.5}", log.best_epoch, log.best_val());

    let report = evaluate(
        &corpus,
        &split.test,
        Predictor::Film {
            film: &film,
            mode: CondMode::Predicted,
            pointnet: Some(&pointnet),
        },
        0,
        "film",
        "example",
    )?;
    print!("{}", report.to_text());

    let case = &corpus.cases[split.test[0]];
    let cloud = &corpus.geometry_of(case).cloud;
    let (fields, ic) = predict_case(&pointnet, &film, cloud, &case.flight, &corpus.reference(case), 0)?;
    println!(
        "{}: predicted CL {:.4} CD {:.4}, true CL {:.4} CD {:.4}, {} points",
        case.case_id,
        ic.cl,
        ic.cd,
        case.integrated.cl,
        case.integrated.cd,
        fields.len()
    );
    Ok(())
}
