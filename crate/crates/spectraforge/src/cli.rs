use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use spectraforge_core::classify::{run_experiment, ExperimentConfig};
use spectraforge_core::preprocess::DatasetProfile;
use spectraforge_core::seqae::{encode_dataset, train_first_stage, train_second_stage, BundleConfig};
use spectraforge_core::synth::{reconstruct, synthesize, CovarianceConfig, RidgePolicy};
use spectraforge_core::toygen::generate;
use spectraforge_core::{Dataset, Rng};

use crate::checkpoint::{load_bundle, load_latents, load_model, save_bundle, save_latents, save_model, save_stats};
use crate::config::{DatasetSource, PipelineConfig};
use crate::error::{require, AppError, Result};
use crate::manifest::{load_dataset, read_json, save_dataset, write_json};
use crate::pipeline::{self, ReportFile};
use crate::report::{render_csv, render_table};

#[derive(Debug, Parser)]
#[command(name = "spectraforge", version, about = "Latent-space resampling of 2D spectra")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a toy dataset as SPB files plus a manifest.
    GenToy(GenToyArgs),
    /// Structure, split and scale a dataset.
    Preprocess(PreprocessArgs),
    /// Train one stage of the sequential autoencoder bundle.
    TrainAe(TrainAeArgs),
    /// Encode records into latent matrices.
    Encode(EncodeArgs),
    /// Sample synthetic records from per-label latent statistics.
    Synth(SynthArgs),
    /// Pass records through the bundle and back.
    Reconstruct(ReconstructArgs),
    /// Run the repeated hold-out classification experiment.
    Classify(ClassifyArgs),
    /// Render a report as a table and optionally CSV.
    Report(ReportArgs),
    /// Run every step from a single config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GenToyArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed stored in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    First,
    Second,
}

#[derive(Debug, Args)]
pub struct TrainAeArgs {
    #[arg(long, value_enum)]
    pub role: Role,
    /// Bundle settings (JSON); defaults apply to absent fields.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Bundle directory; `first/` is written by the first role and read by
    /// the second.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub latents: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Fixed starting ridge; the relative policy is used when absent.
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub shrinkage: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub synthetic: PathBuf,
    #[arg(long)]
    pub reconstructed: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    pub holdout_k: usize,
    #[arg(long, default_value_t = 0.9)]
    pub variance: f64,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `out_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenToy(a) => gen_toy(&a),
        Command::Preprocess(a) => preprocess(&a),
        Command::TrainAe(a) => train_ae(&a),
        Command::Encode(a) => encode(&a),
        Command::Synth(a) => synth(&a),
        Command::Reconstruct(a) => reconstruct_cmd(&a),
        Command::Classify(a) => classify(&a),
        Command::Report(a) => report(&a),
        Command::Pipeline(a) => run_pipeline(&a),
    }
}

fn gen_toy(a: &GenToyArgs) -> Result<()> {
    if let Some(p) = &a.spec {
        require(p)?;
    }
    let mut spec = PipelineConfig::load_toy_spec(a.spec.as_deref())?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let ds = generate(&spec)?;
    let path = save_dataset(&ds, &a.out, "manifest.json", "records")?;
    println!("{} records -> {}", ds.len(), path.display());
    Ok(())
}

fn load_profile(path: Option<&Path>) -> Result<DatasetProfile> {
    match path {
        Some(p) => read_json(p),
        None => Ok(DatasetProfile::default()),
    }
}

/// Writes `all.json`, `train.json`, `val.json` and `scaling.json` under `out`.
fn write_prepared(p: &pipeline::Prepared, out: &Path) -> Result<()> {
    save_dataset(&p.all, out, "all.json", "all")?;
    save_dataset(&p.train, out, "train.json", "train")?;
    save_dataset(&p.val, out, "val.json", "val")?;
    write_json(&out.join("scaling.json"), &p.scaling)
}

fn preprocess(a: &PreprocessArgs) -> Result<()> {
    if let Some(p) = &a.profile {
        require(p)?;
    }
    let raw = load_dataset(&a.manifest)?;
    let profile = load_profile(a.profile.as_deref())?;
    let prepared = pipeline::prepare(&raw, &profile, a.val_fraction, a.seed)?;
    write_prepared(&prepared, &a.out)?;
    println!(
        "{} train / {} val records, {:?} each -> {}",
        prepared.train.len(),
        prepared.val.len(),
        prepared.all.dims().unwrap_or((0, 0)),
        a.out.display()
    );
    Ok(())
}

fn load_optional(path: Option<&Path>, like: &Dataset) -> Result<Dataset> {
    match path {
        Some(p) => load_dataset(p),
        None => Ok(Dataset::empty(like.labels().clone())),
    }
}

fn train_ae(a: &TrainAeArgs) -> Result<()> {
    let cfg: BundleConfig = read_json(&a.config)?;
    let train = load_dataset(&a.train)?;
    let val = load_optional(a.val.as_deref(), &train)?;
    match a.role {
        Role::First => {
            let (model, report) = train_first_stage(&train, &val, &cfg)?;
            save_model(&a.out.join("first"), &model)?;
            write_json(&a.out.join("first_report.json"), &report)?;
            println!("first stage: best val {:?} at epoch {}", report.best_val(), report.history.best_epoch);
        }
        Role::Second => {
            let first = load_model(&a.out.join("first"))?;
            let (bundle, report) = train_second_stage(&train, &val, &first, &cfg)?;
            save_bundle(&a.out, &bundle)?;
            write_json(&a.out.join("second_report.json"), &report)?;
            println!("second stage: best val {:?} at epoch {}", report.best_val(), report.history.best_epoch);
        }
    }
    Ok(())
}

fn encode(a: &EncodeArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let ds = load_dataset(&a.manifest)?;
    let latents = encode_dataset(&ds, &bundle)?;
    save_latents(&a.out, &latents)?;
    println!("{} latents of {}x{} -> {}", latents.len(), bundle.d(), bundle.d(), a.out.display());
    Ok(())
}

fn covariance(ridge: Option<f64>, shrinkage: f64) -> CovarianceConfig {
    CovarianceConfig {
        ridge: ridge.map_or_else(RidgePolicy::default, |value| RidgePolicy::Fixed { value }),
        shrinkage,
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let latents = load_latents(&a.latents)?;
    let cov = covariance(a.ridge, a.shrinkage);
    let s = synthesize(&latents, &bundle, a.multiplier, &cov, &Rng::new(a.seed))?;
    save_dataset(&s.dataset, &a.out, "manifest.json", "records")?;
    save_stats(&a.out.join("stats"), &s.stats)?;
    println!("{} synthetic records -> {}", s.dataset.len(), a.out.display());
    Ok(())
}

fn reconstruct_cmd(a: &ReconstructArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let ds = load_dataset(&a.manifest)?;
    let rec = reconstruct(&ds, &bundle)?;
    save_dataset(&rec, &a.out, "manifest.json", "records")?;
    println!("{} reconstructed records -> {}", rec.len(), a.out.display());
    Ok(())
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let original = load_dataset(&a.original)?;
    let synthetic = load_dataset(&a.synthetic)?;
    let reconstructed = a.reconstructed.as_deref().map(load_dataset).transpose()?;
    let mut cfg = ExperimentConfig {
        runs: a.runs,
        holdout_k: a.holdout_k,
        seeds: a.seeds.clone(),
        variance_target: a.variance,
        ..ExperimentConfig::default()
    };
    cfg.forest.n_trees = a.trees;
    let out = run_experiment(&original, &synthetic, reconstructed.as_ref(), &cfg)?;
    let file = ReportFile::from_outcome(&out);
    write_json(&a.report, &file)?;
    print!("{}", render_table(&file.reports));
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let file: ReportFile = read_json(&a.input)?;
    print!("{}", render_table(&file.reports));
    if let Some(csv) = &a.csv {
        std::fs::write(csv, render_csv(&file.reports)).map_err(|e| AppError::io(csv, e))?;
    }
    Ok(())
}

/// Runs every stage and writes each stage's artifacts under the output
/// directory, in the same layouts the individual subcommands use.
pub fn pipeline_to_dir(cfg: &PipelineConfig, out: &Path) -> Result<ReportFile> {
    let raw = match &cfg.dataset {
        DatasetSource::Toy { spec } => {
            let ds = generate(&PipelineConfig::load_toy_spec(spec.as_deref())?)?;
            save_dataset(&ds, &out.join("raw"), "manifest.json", "records")?;
            ds
        }
        DatasetSource::Manifest { path } => load_dataset(path)?,
    };
    let profile = cfg.load_profile()?;
    let prepared = pipeline::prepare(&raw, &profile, cfg.val_fraction, cfg.split_seed)?;
    write_prepared(&prepared, &out.join("prepared"))?;
    let trained = pipeline::train(&prepared, &cfg.bundle)?;
    let bundle_dir = out.join("bundle");
    save_bundle(&bundle_dir, &trained.bundle)?;
    write_json(&bundle_dir.join("first_report.json"), &trained.first)?;
    write_json(&bundle_dir.join("second_report.json"), &trained.second)?;
    let aug = pipeline::augment(&prepared.all, &trained.bundle, &cfg.synth)?;
    save_latents(&out.join("latents"), &aug.latents)?;
    save_dataset(&aug.synthesis.dataset, &out.join("synth"), "manifest.json", "records")?;
    save_stats(&out.join("synth").join("stats"), &aug.synthesis.stats)?;
    save_dataset(&aug.reconstructed, &out.join("reconstructed"), "manifest.json", "records")?;
    let outcome = pipeline::classify(&prepared.all, &aug, &cfg.classify)?;
    let file = ReportFile::from_outcome(&outcome);
    write_json(&out.join("report.json"), &file)?;
    std::fs::write(out.join("report.csv"), render_csv(&file.reports)).map_err(|e| AppError::io(out, e))?;
    Ok(file)
}

fn run_pipeline(a: &PipelineArgs) -> Result<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let file = pipeline_to_dir(&cfg, &out)?;
    print!("{}", render_table(&file.reports));
    println!("report -> {}", out.join("report.json").display());
    Ok(())
}

