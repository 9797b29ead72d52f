//! Corpus assembly and the end-to-end steps that tie the modules together:
//! synthetic corpus generation, dataset directories, splits, and model
//! training/evaluation over a corpus.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::aero::{integrate, FlightCondition, IntegratedCoefficients, Reference, FLIGHT_BOUNDS};
use crate::dataset::{
    lhs_sample, read_manifest, read_native, split_by_geometry, synthetic_field_oracle_with,
    write_manifest, write_native, CaseRecord, DatasetSplit, FieldQuad, Manifest, ManifestEntry,
    OracleConstants, CASE_EXTENSION,
};
use crate::error::{Error, Result};
use crate::film::{train_film, trunk_inputs, CondMode, FilmConfig, FilmModel, FilmSample, CHANNELS};
use crate::geometry::{sample_surface, CstSection, PlanformParams, SurfaceCloud, PARAM_BOUNDS, PARAM_NAMES};
use crate::nn::Matrix;
use crate::metrics::{integrated_correlation, r2, ChannelAccumulator, MetricReport, ScatterRow};
use crate::nn::TrainingLog;
use crate::pointnet::{
    predict_params_ensembled, train_pointnet, GeometrySample, PointNetConfig, PointNetModel, BATCHES_PER_CLOUD,
    POINTS_PER_BATCH,
};

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub id: String,
    pub params: PlanformParams,
    pub section: CstSection,
    pub cloud: SurfaceCloud,
    pub holdout: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub case_id: String,
    /// Index into [`Corpus::geometries`].
    pub geometry: usize,
    pub flight: FlightCondition,
    pub fields: FieldQuad,
    pub integrated: IntegratedCoefficients,
}

/// Geometries and the cases run on them. Clouds are stored once per
/// geometry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub geometries: Vec<Geometry>,
    pub cases: Vec<Case>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub n_geometries: usize,
    /// The last `n_holdout` sampled geometries are tagged as test.
    pub n_holdout: usize,
    pub conditions_per_geometry: usize,
    pub n_chord: usize,
    pub n_span: usize,
    pub seed: u64,
    pub section: CstSection,
    pub oracle: OracleConstants,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_geometries: 200,
            n_holdout: 20,
            conditions_per_geometry: 9,
            n_chord: 32,
            n_span: 11,
            seed: 0,
            section: CstSection::default(),
            oracle: OracleConstants::default(),
        }
    }
}

impl CorpusConfig {
    /// Canonical text used for the config hash.
    pub fn describe(&self) -> String {
        format!(
            "corpus n_geometries={} n_holdout={} conditions={} n_chord={} n_span={} seed={} section={:?} oracle={:?}",
            self.n_geometries,
            self.n_holdout,
            self.conditions_per_geometry,
            self.n_chord,
            self.n_span,
            self.seed,
            self.section,
            self.oracle
        )
    }
}

pub fn geometry_id(i: usize) -> String {
    format!("g{i:04}")
}

/// LHS-sampled planforms over the design bounds, each sampled into a
/// mirrored surface cloud.
pub fn sample_geometries(
    n: usize,
    seed: u64,
    section: &CstSection,
    n_chord: usize,
    n_span: usize,
) -> Result<Vec<Geometry>> {
    let rows = lhs_sample(n, &PARAM_BOUNDS, seed)?;
    rows.par_iter()
        .enumerate()
        .map(|(i, r)| {
            let params = PlanformParams::from_array(r.as_slice().try_into().expect("nine columns"));
            let id = geometry_id(i);
            let cloud = sample_surface(&params, section, n_chord, n_span, true)?.with_id(&id);
            Ok(Geometry {
                id,
                params,
                section: section.clone(),
                cloud,
                holdout: false,
            })
        })
        .collect()
}

/// Flight conditions for geometry `index`, LHS over the flight bounds.
pub fn sample_conditions(n: usize, seed: u64, index: usize) -> Result<Vec<FlightCondition>> {
    let s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64 + 1);
    Ok(lhs_sample(n, &FLIGHT_BOUNDS, s)?
        .into_iter()
        .map(|r| FlightCondition::from_array([r[0], r[1], r[2], r[3]]))
        .collect())
}

/// Evaluates the oracle and integrates it for one geometry and condition.
pub fn synthesize_case(
    geometry: &Geometry,
    index: usize,
    case_no: usize,
    flight: FlightCondition,
    oracle: &OracleConstants,
    seed: u64,
) -> Result<Case> {
    let case_seed = seed ^ ((index as u64) << 20) ^ case_no as u64;
    let fields = synthetic_field_oracle_with(&geometry.cloud, &flight, &geometry.params, case_seed, oracle)?;
    let integrated = integrate(&geometry.cloud, &fields, flight.alpha, &Reference::default())?;
    Ok(Case {
        case_id: format!("{}_c{case_no}", geometry.id),
        geometry: index,
        flight,
        fields,
        integrated,
    })
}

impl Corpus {
    pub fn synthetic(cfg: &CorpusConfig) -> Result<Self> {
        if cfg.n_holdout >= cfg.n_geometries {
            return Err(Error::domain("held-out geometries must leave some for training"));
        }
        let mut geometries = sample_geometries(cfg.n_geometries, cfg.seed, &cfg.section, cfg.n_chord, cfg.n_span)?;
        let first_test = cfg.n_geometries - cfg.n_holdout;
        for g in &mut geometries[first_test..] {
            g.holdout = true;
        }
        let mut corpus = Corpus {
            geometries,
            cases: Vec::new(),
        };
        corpus.add_conditions(cfg.conditions_per_geometry, cfg.seed, &cfg.oracle)?;
        Ok(corpus)
    }

    /// Adds `n` oracle cases per geometry.
    pub fn add_conditions(&mut self, n: usize, seed: u64, oracle: &OracleConstants) -> Result<()> {
        let geos = &self.geometries;
        let new: Vec<Vec<Case>> = geos
            .par_iter()
            .enumerate()
            .map(|(gi, g)| {
                sample_conditions(n, seed, gi)?
                    .into_iter()
                    .enumerate()
                    .map(|(ci, fc)| synthesize_case(g, gi, ci, fc, oracle, seed))
                    .collect()
            })
            .collect::<Result<_>>()?;
        self.cases.extend(new.into_iter().flatten());
        Ok(())
    }

    pub fn geometry_of(&self, case: &Case) -> &Geometry {
        &self.geometries[case.geometry]
    }

    pub fn manifest(&self, config_hash: Option<String>) -> Manifest {
        Manifest {
            config_hash,
            entries: self
                .cases
                .iter()
                .map(|c| {
                    let g = self.geometry_of(c);
                    ManifestEntry {
                        case_id: c.case_id.clone(),
                        geometry_id: g.id.clone(),
                        params: g.params,
                        flight: Some(c.flight),
                        integrated: Some([c.integrated.cl, c.integrated.cd, c.integrated.cmy]),
                        holdout: g.holdout,
                    }
                })
                .collect(),
        }
    }

    pub fn split(&self, ratio: f64, seed: u64) -> Result<DatasetSplit> {
        let entries: Vec<_> = self.manifest(None).entries.iter().map(ManifestEntry::split_entry).collect();
        split_by_geometry(&entries, ratio, seed)
    }

    /// Case indices for a list of case ids, in list order.
    pub fn case_indices(&self, ids: &[String]) -> Result<Vec<usize>> {
        let by_id: HashMap<&str, usize> = self.cases.iter().enumerate().map(|(i, c)| (c.case_id.as_str(), i)).collect();
        ids.iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::format(format!("unknown case `{id}`")))
            })
            .collect()
    }

    /// Distinct geometry indices of the given cases, in first-seen order.
    pub fn geometry_indices(&self, case_idx: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.geometries.len()];
        let mut out = Vec::new();
        for &i in case_idx {
            let g = self.cases[i].geometry;
            if !seen[g] {
                seen[g] = true;
                out.push(g);
            }
        }
        out
    }

    /// Reference quantities the stored coefficients of `case` were integrated with.
    pub fn reference(&self, case: &Case) -> Reference {
        Reference {
            a_ref: case.integrated.a_ref,
            c_ref: case.integrated.c_ref,
            ..Default::default()
        }
    }

    /// PointNet training samples, `batches` subsamples of `k` points each.
    pub fn pointnet_samples(&self, geometries: &[usize], k: usize, batches: usize, seed: u64) -> Result<Vec<GeometrySample>> {
        geometries
            .par_iter()
            .map(|&g| {
                let g = &self.geometries[g];
                GeometrySample::new(&g.cloud, &g.params, k, batches, seed)
            })
            .collect()
    }

    /// FiLM samples for the given cases; trunk inputs are built once per
    /// geometry.
    pub fn film_samples(&self, case_idx: &[usize]) -> Result<Vec<FilmSample>> {
        let mut inputs: HashMap<usize, Arc<Matrix>> = HashMap::new();
        for g in self.geometry_indices(case_idx) {
            let c = &self.geometries[g].cloud;
            inputs.insert(g, Arc::new(trunk_inputs(&c.points, &c.normals)?));
        }
        case_idx
            .iter()
            .map(|&i| {
                let c = &self.cases[i];
                FilmSample::new(&c.case_id, inputs[&c.geometry].clone(), &c.fields, self.geometry_of(c).params, c.flight)
            })
            .collect()
    }

    pub fn record(&self, case: &Case) -> CaseRecord {
        let g = self.geometry_of(case);
        CaseRecord {
            case_id: case.case_id.clone(),
            geometry_id: g.id.clone(),
            params: g.params,
            section: g.section.clone(),
            flight: Some(case.flight),
            cloud: g.cloud.clone(),
            fields: Some(case.fields.clone()),
            integrated: Some(case.integrated),
            a_ref: case.integrated.a_ref,
            c_ref: case.integrated.c_ref,
            holdout: g.holdout,
            config_hash: None,
        }
    }

    /// Writes `manifest.csv` and `cases/<case_id>.bwbc`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, config_hash: &str) -> Result<()> {
        let dir = dir.as_ref();
        let cases = dir.join("cases");
        std::fs::create_dir_all(&cases).map_err(|e| Error::io(&cases, e))?;
        self.cases
            .par_iter()
            .map(|c| {
                let mut r = self.record(c);
                r.config_hash = Some(config_hash.to_string());
                write_native(&r, cases.join(format!("{}.{CASE_EXTENSION}", c.case_id)))
            })
            .collect::<Result<()>>()?;
        write_manifest(dir.join("manifest.csv"), &self.manifest(Some(config_hash.to_string())))
    }

    /// Reads a dataset directory written by [`Corpus::write_dir`] (or any
    /// directory with a manifest and case files). Cases without fields are
    /// skipped.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<(Self, Option<String>)> {
        let dir = dir.as_ref();
        let manifest = read_manifest(dir.join("manifest.csv"))?;
        let records: Vec<CaseRecord> = manifest
            .entries
            .par_iter()
            .map(|e| read_native(dir.join("cases").join(format!("{}.{CASE_EXTENSION}", e.case_id))))
            .collect::<Result<_>>()?;
        let mut corpus = Corpus::default();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (r, e) in records.into_iter().zip(&manifest.entries) {
            let (Some(fields), Some(flight)) = (r.fields, r.flight) else {
                continue;
            };
            let gi = match index.get(&r.geometry_id) {
                Some(&gi) => gi,
                None => {
                    corpus.geometries.push(Geometry {
                        id: r.geometry_id.clone(),
                        params: r.params,
                        section: r.section,
                        cloud: r.cloud,
                        holdout: r.holdout || e.holdout,
                    });
                    index.insert(r.geometry_id.clone(), corpus.geometries.len() - 1);
                    corpus.geometries.len() - 1
                }
            };
            let integrated = match r.integrated {
                Some(i) => i,
                None => integrate(
                    &corpus.geometries[gi].cloud,
                    &fields,
                    flight.alpha,
                    &Reference {
                        a_ref: r.a_ref,
                        c_ref: r.c_ref,
                        ..Default::default()
                    },
                )?,
            };
            corpus.cases.push(Case {
                case_id: r.case_id,
                geometry: gi,
                flight,
                fields,
                integrated,
            });
        }
        Ok((corpus, manifest.config_hash))
    }
}

/// Writes geometry shells (clouds without fields) as `manifest.csv` and
/// `cases/<geometry_id>.bwbc`.
pub fn write_geometry_dir(geometries: &[Geometry], dir: impl AsRef<Path>, config_hash: &str) -> Result<()> {
    let dir = dir.as_ref();
    let cases = dir.join("cases");
    std::fs::create_dir_all(&cases).map_err(|e| Error::io(&cases, e))?;
    geometries
        .par_iter()
        .map(|g| {
            let mut r = CaseRecord::shell(&g.id, g.params, g.section.clone(), g.cloud.clone());
            r.holdout = g.holdout;
            r.config_hash = Some(config_hash.to_string());
            write_native(&r, cases.join(format!("{}.{CASE_EXTENSION}", g.id)))
        })
        .collect::<Result<()>>()?;
    let manifest = Manifest {
        config_hash: Some(config_hash.to_string()),
        entries: geometries
            .iter()
            .map(|g| ManifestEntry {
                case_id: g.id.clone(),
                geometry_id: g.id.clone(),
                params: g.params,
                flight: None,
                integrated: None,
                holdout: g.holdout,
            })
            .collect(),
    };
    write_manifest(dir.join("manifest.csv"), &manifest)
}

/// Reads a directory written by [`write_geometry_dir`]; one geometry per
/// distinct geometry id.
pub fn read_geometry_dir(dir: impl AsRef<Path>) -> Result<(Vec<Geometry>, Option<String>)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir.join("manifest.csv"))?;
    let mut seen = std::collections::HashSet::new();
    let entries: Vec<&ManifestEntry> = manifest.entries.iter().filter(|e| seen.insert(e.geometry_id.clone())).collect();
    let geometries = entries
        .par_iter()
        .map(|e| {
            let r = read_native(dir.join("cases").join(format!("{}.{CASE_EXTENSION}", e.case_id)))?;
            Ok(Geometry {
                id: r.geometry_id,
                params: r.params,
                section: r.section,
                cloud: r.cloud,
                holdout: r.holdout || e.holdout,
            })
        })
        .collect::<Result<_>>()?;
    Ok((geometries, manifest.config_hash))
}

/// Case indices of a geometry-disjoint split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Corpus {
    pub fn split_indices(&self, ratio: f64, seed: u64) -> Result<CaseSplit> {
        let s = self.split(ratio, seed)?;
        Ok(CaseSplit {
            train: self.case_indices(&s.train)?,
            val: self.case_indices(&s.val)?,
            test: self.case_indices(&s.test)?,
        })
    }
}

/// Trains PointNet on the geometries behind `split.train`, validating on
/// those behind `split.val`.
pub fn train_pointnet_on(corpus: &Corpus, split: &CaseSplit, cfg: &PointNetConfig) -> Result<(PointNetModel, TrainingLog)> {
    let samples = |cases: &[usize]| {
        corpus.pointnet_samples(&corpus.geometry_indices(cases), POINTS_PER_BATCH, BATCHES_PER_CLOUD, cfg.seed)
    };
    train_pointnet(&samples(&split.train)?, &samples(&split.val)?, cfg)
}

/// Planform parameters used to condition FiLM for each case: the stored
/// ground truth, or the ensembled PointNet prediction for the case's
/// geometry.
pub fn conditioning_params(
    corpus: &Corpus,
    cases: &[usize],
    mode: CondMode,
    pointnet: Option<&PointNetModel>,
    seed: u64,
) -> Result<Vec<PlanformParams>> {
    let geoms = corpus.geometry_indices(cases);
    let params: Vec<PlanformParams> = match mode {
        CondMode::GroundTruth => geoms.iter().map(|&g| corpus.geometries[g].params).collect(),
        CondMode::Predicted => {
            let pn = pointnet.ok_or_else(|| Error::Validation("predicted conditioning needs a PointNet checkpoint".into()))?;
            geoms
                .par_iter()
                .map(|&g| Ok(predict_params_ensembled(pn, &corpus.geometries[g].cloud, seed)?.mean))
                .collect::<Result<_>>()?
        }
    };
    let by_geom: HashMap<usize, PlanformParams> = geoms.into_iter().zip(params).collect();
    Ok(cases.iter().map(|&i| by_geom[&corpus.cases[i].geometry]).collect())
}

/// Trains FiLM on `split.train` with the given conditioning mode.
pub fn train_film_on(
    corpus: &Corpus,
    split: &CaseSplit,
    mode: CondMode,
    pointnet: Option<&PointNetModel>,
    cfg: &FilmConfig,
) -> Result<(FilmModel, TrainingLog)> {
    let train = corpus.film_samples(&split.train)?;
    let val = corpus.film_samples(&split.val)?;
    let tc = conditioning_params(corpus, &split.train, mode, pointnet, cfg.seed)?;
    let vc = conditioning_params(corpus, &split.val, mode, pointnet, cfg.seed)?;
    train_film(&train, &tc, &val, &vc, cfg)
}

/// Per-parameter R² of ensembled PointNet predictions over geometries.
pub fn evaluate_pointnet(corpus: &Corpus, geometries: &[usize], model: &PointNetModel, seed: u64) -> Result<Vec<(String, Option<f64>)>> {
    let preds: Vec<[f64; 9]> = geometries
        .par_iter()
        .map(|&g| Ok(predict_params_ensembled(model, &corpus.geometries[g].cloud, seed)?.mean.to_array()))
        .collect::<Result<_>>()?;
    param_r2(corpus, geometries, &preds)
}

fn param_r2(corpus: &Corpus, geometries: &[usize], preds: &[[f64; 9]]) -> Result<Vec<(String, Option<f64>)>> {
    PARAM_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let p: Vec<f64> = preds.iter().map(|v| v[j]).collect();
            let t: Vec<f64> = geometries.iter().map(|&g| corpus.geometries[g].params.to_array()[j]).collect();
            Ok((name.to_string(), r2(&p, &t)?))
        })
        .collect()
}

/// Predicted fields for each case, from FiLM conditioned on `params`.
pub fn predict_film_fields(corpus: &Corpus, cases: &[usize], film: &FilmModel, params: &[PlanformParams]) -> Result<Vec<FieldQuad>> {
    cases
        .iter()
        .zip(params)
        .map(|(&i, p)| {
            let c = &corpus.cases[i];
            film.predict_fields(&corpus.geometry_of(c).cloud, &film.condition(p, &c.flight))
        })
        .collect()
}

/// Field metrics per predicted channel and integrated-coefficient
/// correlation for predicted fields.
pub fn field_report(corpus: &Corpus, cases: &[usize], fields: &[FieldQuad]) -> Result<MetricReport> {
    let mut acc: Vec<ChannelAccumulator> = CHANNELS.iter().map(|_| ChannelAccumulator::new()).collect();
    let mut rows = Vec::with_capacity(cases.len());
    for (&i, f) in cases.iter().zip(fields) {
        let c = &corpus.cases[i];
        acc[0].push_case(&f.cp, &c.fields.cp)?;
        acc[1].push_case(&f.cfx, &c.fields.cfx)?;
        acc[2].push_case(&f.cfz, &c.fields.cfz)?;
        let pred = integrate(&corpus.geometry_of(c).cloud, f, c.flight.alpha, &corpus.reference(c))?;
        rows.push(ScatterRow {
            case_id: c.case_id.clone(),
            truth: c.integrated,
            pred,
        });
    }
    Ok(MetricReport {
        cases: cases.len(),
        channels: CHANNELS
            .iter()
            .zip(&acc)
            .map(|(n, a)| Ok((n.to_string(), a.finish()?)))
            .collect::<Result<_>>()?,
        integrated: if rows.len() >= 3 { Some(integrated_correlation(rows)?) } else { None },
        ..Default::default()
    })
}

/// What [`evaluate`] scores.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    /// True parameters and fields stand in for predictions.
    Identity,
    PointNet(&'a PointNetModel),
    Film {
        film: &'a FilmModel,
        mode: CondMode,
        pointnet: Option<&'a PointNetModel>,
    },
}

/// Scores a predictor on the given test cases.
pub fn evaluate(corpus: &Corpus, cases: &[usize], predictor: Predictor<'_>, seed: u64, label: &str, config_hash: &str) -> Result<MetricReport> {
    let geoms = corpus.geometry_indices(cases);
    let mut report = match predictor {
        Predictor::Identity => {
            let fields: Vec<FieldQuad> = cases.iter().map(|&i| corpus.cases[i].fields.clone()).collect();
            let mut r = field_report(corpus, cases, &fields)?;
            let truth: Vec<[f64; 9]> = geoms.iter().map(|&g| corpus.geometries[g].params.to_array()).collect();
            r.param_r2 = param_r2(corpus, &geoms, &truth)?;
            r
        }
        Predictor::PointNet(pn) => MetricReport {
            cases: cases.len(),
            param_r2: evaluate_pointnet(corpus, &geoms, pn, seed)?,
            ..Default::default()
        },
        Predictor::Film { film, mode, pointnet } => {
            let params = conditioning_params(corpus, cases, mode, pointnet, seed)?;
            let fields = predict_film_fields(corpus, cases, film, &params)?;
            field_report(corpus, cases, &fields)?
        }
    };
    report.label = label.to_string();
    report.config_hash = config_hash.to_string();
    Ok(report)
}
