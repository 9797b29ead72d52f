//! The `bwb` command-line tool.
//!
//! ```text
//! bwb geom      --sample 200 --seed 0 --holdout 20 --out geoms
//! bwb synth     --geometries geoms --conditions 9 --out data
//! bwb train     --model pointnet --data data --out pointnet.ckpt
//! bwb train     --model film --cond predicted --pointnet pointnet.ckpt --data data --out film.ckpt
//! bwb eval      --data data --pointnet pointnet.ckpt --film film.ckpt --report report
//! bwb integrate --case data/cases/g0000_c0.bwbc
//! bwb export    --input data/cases/g0000_c0.bwbc --output g0000_c0.vtk
//! ```
//!
//! Every file written embeds the hash of the command's configuration.
//! Failures print one line, `error: <kind>: <message>`, and exit with 2
//! (validation), 3 (format), 4 (training) or 5 (internal).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::aero::{integrate, IntegratedCoefficients, Reference};
use crate::dataset::{
    read_native, read_vtk_surface, write_native, write_vtk_surface, CaseRecord, OracleConstants, VtkArrayNames,
    VtkOptions, CASE_EXTENSION,
};
use crate::error::{Error, Result};
use crate::film::{predict_case, CondMode, FilmConfig, FilmModel};
use crate::geometry::{parse_geometry_config, sample_surface, CstSection, PlanformParams};
use crate::nn::{ModelState, TrainingLog};
use crate::pipeline::{
    config_hash, evaluate, read_geometry_dir, sample_geometries, train_film_on, train_pointnet_on, write_geometry_dir,
    Corpus, Geometry, Predictor,
};
use crate::pointnet::{predict_params_ensembled, PointNetConfig, PointNetModel};

#[derive(Debug, Parser)]
#[command(name = "bwb", version, about = "Blended-wing-body surrogate pipeline")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate geometries from a parameter file or by LHS sampling.
    Geom(GeomArgs),
    /// Sample flight conditions and synthesize oracle fields.
    Synth(SynthArgs),
    /// Train PointNet or FiLM.
    Train(TrainArgs),
    /// Score checkpoints on a dataset.
    Eval(EvalArgs),
    /// Integrate the fields of one case file.
    Integrate(IntegrateArgs),
    /// Convert between native and VTK, optionally with predicted fields.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GeomArgs {
    /// Key-value parameter file.
    #[arg(long, conflicts_with = "sample")]
    pub params: Option<PathBuf>,
    /// Number of LHS samples over the design bounds.
    #[arg(long, required_unless_present = "params")]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tag the last K sampled geometries as held out.
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
    #[arg(long, default_value_t = 32)]
    pub n_chord: usize,
    #[arg(long, default_value_t = 11)]
    pub n_span: usize,
    /// Accept parameters outside the design bounds.
    #[arg(long)]
    pub no_validate: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory written by `geom`.
    #[arg(long)]
    pub geometries: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub conditions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Amplitude of seeded uniform noise added to `Cp`.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, env = "BWB_DATA_DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Pointnet,
    Film,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CondArg {
    GroundTruth,
    Predicted,
}

impl From<CondArg> for CondMode {
    fn from(c: CondArg) -> Self {
        match c {
            CondArg::GroundTruth => CondMode::GroundTruth,
            CondArg::Predicted => CondMode::Predicted,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, env = "BWB_DATA_DIR")]
    pub data: PathBuf,
    /// Checkpoint path; the log goes next to it as `<out>.log.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = CondArg::GroundTruth)]
    pub cond: CondArg,
    /// PointNet checkpoint, required for `--cond predicted`.
    #[arg(long)]
    pub pointnet: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Geometries (PointNet) or cases (FiLM) per step.
    #[arg(long)]
    pub batch: Option<usize>,
    /// FiLM points drawn per case per step.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training fraction of the non-held-out geometries.
    #[arg(long, default_value_t = 0.9)]
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    Test,
    Val,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, env = "BWB_DATA_DIR")]
    pub data: PathBuf,
    #[arg(long)]
    pub pointnet: Option<PathBuf>,
    #[arg(long)]
    pub film: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CondArg::Predicted)]
    pub cond: CondArg,
    /// Score the ground truth against itself.
    #[arg(long, conflicts_with_all = ["pointnet", "film"])]
    pub identity: bool,
    #[arg(long, value_enum, default_value_t = Subset::Test)]
    pub subset: Subset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9)]
    pub ratio: f64,
    /// Output directory for `report.txt` and `scatter.csv`.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub case: PathBuf,
    /// Also write the coefficients here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// `.bwbc` or `.vtk` input.
    #[arg(long)]
    pub input: PathBuf,
    /// `.bwbc` or `.vtk` output.
    #[arg(long)]
    pub output: PathBuf,
    /// Replace the fields with FiLM predictions.
    #[arg(long)]
    pub film: Option<PathBuf>,
    /// PointNet checkpoint for predicted conditioning.
    #[arg(long)]
    pub pointnet: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let hash = config_hash(&format!("{:?}", cli.command));
    match &cli.command {
        Command::Geom(a) => cmd_geom(a, &hash),
        Command::Synth(a) => cmd_synth(a, &hash),
        Command::Train(a) => cmd_train(a, &hash),
        Command::Eval(a) => cmd_eval(a, &hash),
        Command::Integrate(a) => cmd_integrate(a, &hash),
        Command::Export(a) => cmd_export(a, &hash),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_geom(a: &GeomArgs, hash: &str) -> Result<String> {
    let geoms = match (&a.params, a.sample) {
        (Some(path), _) => {
            let (params, section) = parse_geometry_config(&read_text(path)?)?;
            if !a.no_validate {
                params.validate()?;
            }
            let id = path
                .file_stem()
                .map_or_else(|| "g0000".to_string(), |s| s.to_string_lossy().into_owned());
            let cloud = sample_surface(&params, &section, a.n_chord, a.n_span, true)?.with_id(&id);
            vec![Geometry {
                id,
                params,
                section,
                cloud,
                holdout: false,
            }]
        }
        (None, Some(n)) => {
            if a.holdout > n {
                return Err(Error::Validation(format!("--holdout {} exceeds --sample {n}", a.holdout)));
            }
            let mut g = sample_geometries(n, a.seed, &CstSection::default(), a.n_chord, a.n_span)?;
            for x in &mut g[n - a.holdout..] {
                x.holdout = true;
            }
            g
        }
        (None, None) => return Err(Error::Validation("pass --params or --sample".into())),
    };
    write_geometry_dir(&geoms, &a.out, hash)?;
    Ok(format!("config_hash: {hash}\ngeometries: {}\nout: {}\n", geoms.len(), a.out.display()))
}

pub fn cmd_synth(a: &SynthArgs, hash: &str) -> Result<String> {
    let (geometries, _) = read_geometry_dir(&a.geometries)?;
    let mut corpus = Corpus {
        geometries,
        cases: Vec::new(),
    };
    let oracle = OracleConstants {
        noise: a.noise,
        ..Default::default()
    };
    corpus.add_conditions(a.conditions, a.seed, &oracle)?;
    corpus.write_dir(&a.out, hash)?;
    Ok(format!(
        "config_hash: {hash}\ngeometries: {}\ncases: {}\nout: {}\n",
        corpus.geometries.len(),
        corpus.cases.len(),
        a.out.display()
    ))
}

fn load_pointnet(path: &Path) -> Result<PointNetModel> {
    PointNetModel::from_state(&ModelState::load(path)?)
}

fn load_film(path: &Path) -> Result<FilmModel> {
    FilmModel::from_state(&ModelState::load(path)?)
}

fn log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log.csv");
    PathBuf::from(s)
}

pub fn cmd_train(a: &TrainArgs, hash: &str) -> Result<String> {
    let (corpus, _) = Corpus::read_dir(&a.data)?;
    let split = corpus.split_indices(a.ratio, a.seed)?;
    let (mut state, log): (ModelState, TrainingLog) = match a.model {
        ModelKind::Pointnet => {
            let d = PointNetConfig::default();
            let cfg = PointNetConfig {
                epochs: a.epochs.unwrap_or(d.epochs),
                batch_geometries: a.batch.unwrap_or(d.batch_geometries),
                lr0: a.lr.unwrap_or(d.lr0),
                decay: a.decay.unwrap_or(d.decay),
                weight_decay: a.weight_decay.unwrap_or(d.weight_decay),
                seed: a.seed,
                ..d
            };
            let (m, log) = train_pointnet_on(&corpus, &split, &cfg)?;
            (m.to_state(), log)
        }
        ModelKind::Film => {
            let pn = a.pointnet.as_deref().map(load_pointnet).transpose()?;
            if a.cond == CondArg::Predicted && pn.is_none() {
                return Err(Error::Validation("--cond predicted needs --pointnet".into()));
            }
            let d = FilmConfig::default();
            let cfg = FilmConfig {
                epochs: a.epochs.unwrap_or(d.epochs),
                cases_per_batch: a.batch.unwrap_or(d.cases_per_batch),
                points_per_case: a.points.unwrap_or(d.points_per_case),
                lr0: a.lr.unwrap_or(d.lr0),
                decay: a.decay.unwrap_or(d.decay),
                weight_decay: a.weight_decay.unwrap_or(d.weight_decay),
                seed: a.seed,
                ..d
            };
            let (m, log) = train_film_on(&corpus, &split, a.cond.into(), pn.as_ref(), &cfg)?;
            let mut st = m.to_state();
            st.set_meta("cond_mode", CondMode::from(a.cond).name());
            (st, log)
        }
    };
    state.set_meta("config_hash", hash);
    state.set_meta("best_epoch", log.best_epoch);
    state.save(&a.out)?;
    let lp = log_path(&a.out);
    write_text(&lp, &log.to_csv(hash))?;
    Ok(format!(
        "config_hash: {hash}\nbest_epoch: {}\nbest_val_mse: {}\ncheckpoint: {}\nlog: {}\n",
        log.best_epoch,
        log.best_val(),
        a.out.display(),
        lp.display()
    ))
}

pub fn cmd_eval(a: &EvalArgs, hash: &str) -> Result<String> {
    let (corpus, _) = Corpus::read_dir(&a.data)?;
    let cases = match a.subset {
        Subset::All => (0..corpus.cases.len()).collect(),
        Subset::Test => corpus.split_indices(a.ratio, a.seed)?.test,
        Subset::Val => corpus.split_indices(a.ratio, a.seed)?.val,
    };
    if cases.is_empty() {
        return Err(Error::Validation(format!("no cases in the {:?} subset", a.subset).to_lowercase()));
    }
    let pn = a.pointnet.as_deref().map(load_pointnet).transpose()?;
    let film = a.film.as_deref().map(load_film).transpose()?;
    let mut report = if a.identity {
        evaluate(&corpus, &cases, Predictor::Identity, a.seed, "identity", hash)?
    } else {
        match (&pn, &film) {
            (_, Some(f)) => {
                let mode = CondMode::from(a.cond);
                if mode == CondMode::Predicted && pn.is_none() {
                    return Err(Error::Validation("--cond predicted needs --pointnet".into()));
                }
                let label = format!("film_{}", mode.name());
                evaluate(&corpus, &cases, Predictor::Film { film: f, mode, pointnet: pn.as_ref() }, a.seed, &label, hash)?
            }
            (Some(p), None) => evaluate(&corpus, &cases, Predictor::PointNet(p), a.seed, "pointnet", hash)?,
            (None, None) => return Err(Error::Validation("pass --pointnet, --film or --identity".into())),
        }
    };
    if let (Some(p), Some(_)) = (&pn, &film) {
        let geoms = corpus.geometry_indices(&cases);
        report.param_r2 = crate::pipeline::evaluate_pointnet(&corpus, &geoms, p, a.seed)?;
    }
    let text = report.to_text();
    write_text(&a.report.join("report.txt"), &text)?;
    if let Some(i) = &report.integrated {
        write_text(&a.report.join("scatter.csv"), &i.scatter_csv(hash))?;
    }
    Ok(text)
}

fn coefficients_text(ic: &IntegratedCoefficients, hash: &str, case_id: &str) -> String {
    format!("config_hash: {hash}\ncase_id: {case_id}\ncl: {}\ncd: {}\ncmy: {}\n", ic.cl, ic.cd, ic.cmy)
}

pub fn cmd_integrate(a: &IntegrateArgs, hash: &str) -> Result<String> {
    let r = read_case(&a.case)?;
    let fields = r.require_fields()?;
    let flight = r.require_flight()?;
    let reference = Reference {
        a_ref: r.a_ref,
        c_ref: r.c_ref,
        ..Default::default()
    };
    let ic = integrate(&r.cloud, fields, flight.alpha, &reference)?;
    let text = coefficients_text(&ic, hash, &r.case_id);
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    Ok(text)
}

fn is_vtk(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("vtk"))
}

/// Native files carry everything; VTK files carry a cloud and fields only,
/// so their record has placeholder parameters and no flight condition.
fn read_case(path: &Path) -> Result<CaseRecord> {
    if is_vtk(path) {
        let (cloud, fields) = read_vtk_surface(path, &VtkOptions::default())?;
        let id = cloud.geometry_id.clone();
        let mut r = CaseRecord::shell(&id, PlanformParams::midpoint(), CstSection::default(), cloud);
        r.fields = Some(fields);
        Ok(r)
    } else {
        read_native(path)
    }
}

pub fn cmd_export(a: &ExportArgs, hash: &str) -> Result<String> {
    let mut r = read_case(&a.input)?;
    let truth = r.fields.clone();
    if let Some(fp) = &a.film {
        let film = load_film(fp)?;
        let flight = *r.require_flight()?;
        let reference = Reference {
            a_ref: r.a_ref,
            c_ref: r.c_ref,
            ..Default::default()
        };
        let (fields, ic) = match &a.pointnet {
            Some(pp) => predict_case(&load_pointnet(pp)?, &film, &r.cloud, &flight, &reference, a.seed)?,
            None if is_vtk(&a.input) => {
                return Err(Error::Validation("VTK input has no planform parameters; pass --pointnet".into()))
            }
            None => {
                let f = film.predict_fields(&r.cloud, &film.condition(&r.params, &flight))?;
                let ic = integrate(&r.cloud, &f, flight.alpha, &reference)?;
                (f, ic)
            }
        };
        r.fields = Some(fields);
        r.integrated = Some(ic);
    }
    r.config_hash = Some(hash.to_string());
    if is_vtk(&a.output) {
        let fields = r.require_fields()?.clone();
        let mut cloud = r.cloud.clone();
        cloud.geometry_id = format!("{} config_hash={hash}", r.case_id);
        let extra: Vec<(String, Vec<f64>)> = match (&a.film, &truth) {
            (Some(_), Some(t)) => vec![
                ("Cp_true".into(), t.cp.clone()),
                ("Cfx_true".into(), t.cfx.clone()),
                ("Cfz_true".into(), t.cfz.clone()),
            ],
            _ => Vec::new(),
        };
        let extra: Vec<(&str, &[f64])> = extra.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        write_vtk_surface(&a.output, &cloud, &fields, &VtkArrayNames::default(), &extra)?;
    } else {
        if a.output.extension().is_none_or(|e| e != CASE_EXTENSION) {
            return Err(Error::Validation(format!(
                "output must end in .vtk or .{CASE_EXTENSION}: {}",
                a.output.display()
            )));
        }
        write_native(&r, &a.output)?;
    }
    let mut out = format!("config_hash: {hash}\npoints: {}\noutput: {}\n", r.cloud.len(), a.output.display());
    if let Some(ic) = &r.integrated {
        out.push_str(&format!("cl: {}\ncd: {}\ncmy: {}\n", ic.cl, ic.cd, ic.cmy));
    }
    if let (Some(pp), None) = (&a.pointnet, &a.film) {
        let p = predict_params_ensembled(&load_pointnet(pp)?, &r.cloud, a.seed)?;
        out.push_str(&format!("predicted_params: {:?}\n", p.mean.to_array()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        let ok = |args: &[&str]| Cli::try_parse_from(std::iter::once("bwb").chain(args.iter().copied())).unwrap();
        ok(&["geom", "--sample", "5", "--seed", "7", "--out", "g"]);
        ok(&["geom", "--params", "p.cfg", "--out", "g"]);
        ok(&["synth", "--geometries", "g", "--out", "d"]);
        ok(&["train", "--model", "film", "--cond", "predicted", "--pointnet", "p", "--data", "d", "--out", "f"]);
        ok(&["eval", "--data", "d", "--identity", "--report", "r"]);
        ok(&["--threads", "2", "integrate", "--case", "c.bwbc"]);
        ok(&["export", "--input", "a.bwbc", "--output", "a.vtk"]);
        assert!(Cli::try_parse_from(["bwb", "geom", "--out", "g"]).is_err());
        assert!(Cli::try_parse_from(["bwb", "train", "--model", "tree", "--data", "d", "--out", "o"]).is_err());
    }

    #[test]
    fn hash_ignores_thread_count() {
        let a = Cli::try_parse_from(["bwb", "--threads", "1", "integrate", "--case", "x"]).unwrap();
        let b = Cli::try_parse_from(["bwb", "integrate", "--case", "x"]).unwrap();
        assert_eq!(
            config_hash(&format!("{:?}", a.command)),
            config_hash(&format!("{:?}", b.command))
        );
    }
}
