//! Command-line front end: atlas building, parcellation, evaluation and
//! synthetic scene generation.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use swmparc::atlas::{build_atlas, AtlasModel, ThresholdSource};
use swmparc::config::RunConfig;
use swmparc::evaluation::{evaluate, EvaluationBundle, EvaluationReport};
use swmparc::exec;
use swmparc::io::{
    apply_affine, read_affine, read_atlas, read_bundle_dir, read_result, read_tck, read_truth,
    write_atlas, write_json, write_result, write_tck, write_truth, GroundTruth, ResultSummary,
};
use swmparc::parcellation::{parcellate, ParcellationResult};
use swmparc::streamline::{resample, Bundle, ResampledStreamline, Streamline};
use swmparc::synth::{generate_scene, SceneSpec};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

/// Malformed input detected by the front end itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "swmparc",
    version,
    about = "Atlas-based superficial white matter parcellation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all available). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an atlas from a directory of per-bundle track files.
    BuildAtlas {
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Label the streamlines of a subject tractogram with atlas bundles.
    Parcellate {
        #[arg(long)]
        atlas: PathBuf,
        #[arg(long)]
        subject: PathBuf,
        /// 4x4 affine applied to the subject before anything else.
        #[arg(long)]
        affine: Option<PathBuf>,
        /// Ground-truth labels; adds an evaluation to the summary.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a result directory against ground-truth labels.
    Evaluate {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Report file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Atlas used for the run; enables adjacency, coverage and overlap.
        #[arg(long)]
        atlas: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic scene: bundles, atlas, subject and labels.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Process exit code for a failed run: 2 for malformed input, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<swmparc::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.workers = common.workers;
    cfg.validate()?;
    Ok(cfg)
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(input_error(format!(
            "{what} {} is not a directory",
            path.display()
        )));
    }
    Ok(())
}

fn resample_all(raw: &[Streamline], k: usize, source: &Path) -> Result<Vec<ResampledStreamline>> {
    raw.iter()
        .enumerate()
        .map(|(i, s)| {
            resample(s, k).with_context(|| format!("{}: streamline {i}", source.display()))
        })
        .collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildAtlas {
            bundles,
            out,
            common,
        } => {
            let cfg = load_config(&common)?;
            exec::with_workers(cfg.workers, || cmd_build_atlas(&bundles, &out, &cfg))
        }
        Command::Parcellate {
            atlas,
            subject,
            affine,
            truth,
            out,
            common,
        } => {
            let cfg = load_config(&common)?;
            exec::with_workers(cfg.workers, || {
                cmd_parcellate(
                    &atlas,
                    &subject,
                    affine.as_deref(),
                    truth.as_deref(),
                    &out,
                    &cfg,
                )
            })
        }
        Command::Evaluate {
            result,
            truth,
            out,
            atlas,
            common,
        } => {
            let cfg = common
                .config
                .as_ref()
                .map(|_| load_config(&common))
                .transpose()?;
            exec::with_workers(common.workers, || {
                cmd_evaluate(&result, &truth, &out, atlas.as_deref(), cfg.as_ref())
            })
        }
        Command::Synth { spec, out, common } => {
            let cfg = load_config(&common)?;
            exec::with_workers(cfg.workers, || cmd_synth(&spec, &out, &cfg))
        }
    }
}

fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_json(&dir.join(RUN_CONFIG_FILE), cfg)?;
    Ok(())
}

fn print_fit_report(atlas: &AtlasModel) {
    for b in &atlas.bundles {
        eprintln!(
            "bundle {} ({} streamlines)",
            b.id(),
            b.stats.streamline_count
        );
        for (feature, interval) in b.thresholds().iter() {
            let fit = &b.stats.fits[feature];
            let how = match (interval.source, &fit.selected) {
                (ThresholdSource::Fitted, Some(sel)) => sel.family().name().to_string(),
                _ => "empirical".to_string(),
            };
            eprintln!(
                "  {:<18} n={:<4} {:<10} [{:.4}, {:.4}]",
                feature.name(),
                fit.sample_count,
                how,
                interval.low,
                interval.high
            );
        }
    }
}

/// Builds an atlas from raw bundles and writes it with its config.
pub fn build_and_write_atlas(
    raw: &[(String, Vec<Streamline>)],
    out: &Path,
    cfg: &RunConfig,
) -> Result<AtlasModel> {
    let bundles = raw
        .iter()
        .map(|(id, s)| {
            Bundle::from_raw(id.clone(), s, cfg.resample_k)
                .with_context(|| format!("bundle '{id}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    let atlas = build_atlas(bundles, &cfg.atlas_options())?;
    write_atlas(&atlas, out)?;
    write_config(out, cfg)?;
    Ok(atlas)
}

fn cmd_build_atlas(bundles: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    require_dir(bundles, "bundle directory")?;
    let raw = read_bundle_dir(bundles)?;
    eprintln!("building atlas from {} bundles", raw.len());
    let atlas = build_and_write_atlas(&raw, out, cfg)?;
    print_fit_report(&atlas);
    eprintln!("atlas written to {}", out.display());
    Ok(())
}

fn evaluation_bundles<'a>(
    result: &'a ParcellationResult,
    atlas: Option<&'a AtlasModel>,
) -> Vec<EvaluationBundle<'a>> {
    result
        .bundles
        .iter()
        .map(|b| EvaluationBundle {
            bundle_id: &b.bundle_id,
            accepted: &b.accepted,
            extracted: &b.accepted_streamlines,
            model: atlas
                .and_then(|a| a.bundle(&b.bundle_id))
                .map(|m| m.bundle.streamlines()),
        })
        .collect()
}

fn cmd_parcellate(
    atlas_dir: &Path,
    subject: &Path,
    affine: Option<&Path>,
    truth: Option<&Path>,
    out: &Path,
    cfg: &RunConfig,
) -> Result<()> {
    require_dir(atlas_dir, "atlas")?;
    let atlas = read_atlas(atlas_dir)?;
    if atlas.resample_k != cfg.resample_k {
        return Err(input_error(format!(
            "atlas uses {} points per streamline but the config asks for {}",
            atlas.resample_k, cfg.resample_k
        )));
    }
    let mut raw = read_tck(subject)?;
    if let Some(path) = affine {
        raw = apply_affine(&read_affine(path)?, &raw)?;
    }
    let truth = truth.map(read_truth).transpose()?;
    eprintln!(
        "parcellating {} streamlines with {} atlas bundles",
        raw.len(),
        atlas.bundles.len()
    );
    let subject_rs = resample_all(&raw, cfg.resample_k, subject)?;
    let result = parcellate(&atlas, &subject_rs, &cfg.parcellation_options())?;
    let evaluation = match &truth {
        Some(t) => Some(evaluate(
            &evaluation_bundles(&result, Some(&atlas)),
            t,
            result.subject_count,
            cfg.ba_threshold_mm,
            &cfg.pbe_cutoffs,
        )?),
        None => None,
    };
    let summary = ResultSummary::new(&result, cfg, evaluation);
    write_result(&result, &summary, out)?;
    write_config(out, cfg)?;
    let recognized = result
        .bundles
        .iter()
        .filter(|b| !b.accepted.is_empty())
        .count();
    eprintln!(
        "{recognized}/{} bundles recognized; result written to {}",
        result.bundles.len(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(
    result_dir: &Path,
    truth: &Path,
    out: &Path,
    atlas_dir: Option<&Path>,
    cfg: Option<&RunConfig>,
) -> Result<()> {
    require_dir(result_dir, "result")?;
    let result = read_result(result_dir)?;
    let truth = read_truth(truth)?;
    let atlas = atlas_dir.map(read_atlas).transpose()?;
    let cfg = cfg.unwrap_or(&result.summary.config);
    let bundles: Vec<EvaluationBundle> = result
        .summary
        .bundles
        .iter()
        .zip(&result.streamlines)
        .map(|(b, s)| EvaluationBundle {
            bundle_id: &b.bundle_id,
            accepted: &b.accepted,
            extracted: s,
            model: atlas
                .as_ref()
                .and_then(|a| a.bundle(&b.bundle_id))
                .map(|m| m.bundle.streamlines()),
        })
        .collect();
    let report: EvaluationReport = evaluate(
        &bundles,
        &truth,
        result.summary.subject_count,
        cfg.ba_threshold_mm,
        &cfg.pbe_cutoffs,
    )?;
    write_json(out, &report)?;
    let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    eprintln!(
        "mean sensitivity {} precision {} jaccard {}; report written to {}",
        show(report.mean.sensitivity),
        show(report.mean.precision),
        show(report.mean.jaccard),
        out.display()
    );
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| swmparc::Error::Io {
        path: spec_path.to_path_buf(),
        source: e,
    })?;
    let mut spec: SceneSpec = serde_json::from_str(&text).map_err(|e| swmparc::Error::Json {
        path: spec_path.to_path_buf(),
        source: e,
    })?;
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    let scene = generate_scene(&spec)?;
    let bundles_dir = out.join("bundles");
    std::fs::create_dir_all(&bundles_dir)
        .with_context(|| format!("creating {}", bundles_dir.display()))?;
    for (id, s) in &scene.atlas_bundles {
        write_tck(bundles_dir.join(format!("{id}.tck")), s)?;
    }
    write_tck(out.join("subject.tck"), &scene.subject)?;
    write_truth(
        &GroundTruth::from_labels(&scene.truth),
        out.join("truth.json"),
    )?;
    write_json(&out.join("scene_spec.json"), &spec)?;
    // Build from the files just written so the atlas matches a later
    // build-atlas run on the same directory.
    let raw = read_bundle_dir(&bundles_dir)?;
    build_and_write_atlas(&raw, &out.join("atlas"), cfg)?;
    write_config(out, cfg)?;
    eprintln!(
        "scene with {} bundles and {} subject streamlines written to {}",
        scene.atlas_bundles.len(),
        scene.subject.len(),
        out.display()
    );
    Ok(())
}
