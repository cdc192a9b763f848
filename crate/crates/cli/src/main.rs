//! `affect`: synthesize corpora, extract features, train the native
//! backends, classify clips, and evaluate results.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use affect_cascade::audio::{read_wav, NormStats};
use affect_cascade::cascade::{
    read_predictions_csv, write_predictions_csv, AffectLabel, Components, Stage1Label,
};
use affect_cascade::config::RunConfig;
use affect_cascade::error::Error as CoreError;
use affect_cascade::infer::LinearModel;
use affect_cascade::manifest::read_manifest;
use affect_cascade::metrics::{
    confusion_matrix, per_participant_report, run_crossval, summarize, transitions_csv,
    CrossvalOptions,
};
use affect_cascade::synth::{gen_corpus, CorpusSpec};
use affect_cascade::train::{predict_manifest, train_backends};
use affect_cascade::vision::marker::{MarkerDetector, MarkerEmbedder};
use affect_cascade::vision::{read_pgm, FaceEmbedder, FaceGallery};
use affect_cascade::Scalar;

#[derive(Parser)]
#[command(name = "affect", version, about = "Two-stage audio-visual affect classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// `--config FILE` plus repeatable `--set key=value` overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus.
    Synth {
        /// Corpus spec file (key=value); defaults used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
        /// Override a single spec key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Convert WAV files to AFMEL1 log-Mel spectrogram files.
    Spectrogram {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for .afmel files.
        #[arg(long)]
        out: PathBuf,
        /// Input WAV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Build an AFGAL1 gallery from labeled face crops.
    Gallery {
        /// Directory with one subdirectory of PGM crops per identity.
        #[arg(long)]
        crops: PathBuf,
        /// Output gallery file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train stage-1 and stage-2 native backends from a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Gallery file; defaults to gallery.afgal beside the manifest.
        #[arg(long)]
        gallery: Option<PathBuf>,
        /// Output directory for model files.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Classify every clip in a manifest, writing a predictions CSV.
    Predict {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding stage1.afmdl, stage2.afmdl, stats.afnrm.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        gallery: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for independent clips.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compute metrics from a predictions CSV.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Optional directory for metric and table files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Grouped cross-validation: train and evaluate fold by fold.
    Crossval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        gallery: Option<PathBuf>,
        /// Output directory for the report files.
        #[arg(long)]
        out: PathBuf,
        /// Number of folds (= participant groups after merging).
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Participant merges, e.g. `p5+p6,p1+p2`.
        #[arg(long)]
        merge: Option<String>,
        /// Worker threads for independent folds.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { spec, out, sets } => cmd_synth(spec.as_deref(), &out, &sets),
        Command::Spectrogram { config, out, inputs } => cmd_spectrogram(&config, &out, &inputs),
        Command::Gallery { crops, out } => cmd_gallery(&crops, &out),
        Command::Train { manifest, gallery, out, config } => {
            cmd_train(&manifest, gallery.as_deref(), &out, &config)
        }
        Command::Predict { manifest, models, gallery, out, workers, config } => {
            cmd_predict(&manifest, &models, gallery.as_deref(), &out, workers, &config)
        }
        Command::Evaluate { predictions, out, config } => {
            cmd_evaluate(&predictions, out.as_deref(), &config)
        }
        Command::Crossval { manifest, gallery, out, folds, merge, workers, config } => {
            cmd_crossval(&manifest, gallery.as_deref(), &out, folds, merge.as_deref(), workers, &config)
        }
    }
}

fn load_run_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    for assignment in &args.sets {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {assignment}")))?;
        cfg.set(key.trim(), value.trim()).map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn usage(e: CoreError) -> CliError {
    CliError::Usage(e.to_string())
}

fn default_gallery_path(manifest: &Path, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::new::<Path>)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| {
            manifest
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("gallery.afgal")
        })
}

fn cmd_synth(spec_path: Option<&Path>, out: &Path, sets: &[String]) -> Result<(), CliError> {
    let mut spec = match spec_path {
        Some(p) => CorpusSpec::from_file(p).map_err(usage)?,
        None => CorpusSpec::default(),
    };
    for assignment in sets {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {assignment}")))?;
        spec.set(key.trim(), value.trim()).map_err(usage)?;
    }
    spec.validate().map_err(usage)?;

    let manifest = gen_corpus::<Scalar>(&spec, out)?;
    fs::write(out.join("effective_spec.cfg"), spec.to_text())?;
    let n = spec.clips_negative + spec.clips_neutral + spec.clips_positive;
    println!("wrote {n} clips, manifest at {}", manifest.display());
    Ok(())
}

fn cmd_spectrogram(config: &ConfigArgs, out: &Path, inputs: &[PathBuf]) -> Result<(), CliError> {
    let cfg = load_run_config(config)?;
    let cascade_cfg = cfg.cascade_config();
    fs::create_dir_all(out)?;
    let mut written = 0usize;
    for input in inputs {
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage(format!("cannot derive a name from {}", input.display())))?;
        let audio = read_wav::<Scalar>(input)?;
        let spectrograms =
            affect_cascade::cascade::extract_logmels(stem, &audio, &cascade_cfg)?;
        for (i, lm) in spectrograms.iter().enumerate() {
            lm.save(&out.join(format!("{stem}_seg{i:03}.afmel")))?;
            written += 1;
        }
    }
    println!("wrote {written} spectrograms to {}", out.display());
    Ok(())
}

fn cmd_gallery(crops: &Path, out: &Path) -> Result<(), CliError> {
    let embedder = MarkerEmbedder;
    // Threshold here only satisfies construction; matching uses run config.
    let mut gallery: FaceGallery<Scalar> = FaceGallery::new(0.4)?;
    let mut identities: Vec<PathBuf> = fs::read_dir(crops)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    identities.sort();
    for identity_dir in &identities {
        let identity = identity_dir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Data(format!("bad identity directory {}", identity_dir.display())))?;
        let mut files: Vec<PathBuf> = fs::read_dir(identity_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
            .collect();
        files.sort();
        for file in &files {
            let crop = read_pgm::<Scalar>(file)?;
            let embedding = embedder.embed(&crop)?;
            gallery.push(identity, embedding)?;
        }
    }
    if gallery.is_empty() {
        return Err(CliError::Data(format!(
            "no identity subdirectories with PGM crops under {}",
            crops.display()
        )));
    }
    gallery.save(out)?;
    println!("wrote gallery with {} entries to {}", gallery.len(), out.display());
    Ok(())
}

fn cmd_train(
    manifest: &Path,
    gallery: Option<&Path>,
    out: &Path,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let cfg = load_run_config(config)?;
    let entries = read_manifest(manifest)?;
    let gallery_path = default_gallery_path(manifest, gallery);
    let gallery: FaceGallery<Scalar> = FaceGallery::load(&gallery_path, cfg.gallery_threshold)?;

    let backends = train_backends(&entries, &gallery, &cfg)?;
    fs::create_dir_all(out)?;
    backends.ser.save(&out.join("stage1.afmdl"))?;
    backends.fer.save(&out.join("stage2.afmdl"))?;
    backends.stats.save(&out.join("stats.afnrm"))?;
    fs::write(out.join("effective.cfg"), cfg.to_text())?;
    println!(
        "trained on {} clips; models in {}",
        entries.len(),
        out.display()
    );
    Ok(())
}

fn load_components(
    models: &Path,
    gallery: FaceGallery<Scalar>,
    cfg: &RunConfig,
) -> Result<Components<Scalar>, CliError> {
    let ser = LinearModel::<Scalar>::load(&models.join("stage1.afmdl"))?;
    let fer = LinearModel::<Scalar>::load(&models.join("stage2.afmdl"))?;
    let stats = NormStats::load(&models.join("stats.afnrm"))?;
    Ok(Components {
        ser: Arc::new(ser),
        fer: Arc::new(fer),
        stats,
        gallery: Arc::new(gallery),
        detector_factory: Arc::new(|| Box::new(MarkerDetector)),
        embedder_factory: Arc::new(|| Box::new(MarkerEmbedder)),
        config: cfg.cascade_config(),
    })
}

fn cmd_predict(
    manifest: &Path,
    models: &Path,
    gallery: Option<&Path>,
    out: &Path,
    workers: usize,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let cfg = load_run_config(config)?;
    let entries = read_manifest(manifest)?;
    let gallery_path = default_gallery_path(manifest, gallery);
    let gallery: FaceGallery<Scalar> = FaceGallery::load(&gallery_path, cfg.gallery_threshold)?;
    let components = load_components(models, gallery, &cfg)?;

    let (rows, _scores, warnings) = predict_manifest(&entries, &components, &cfg, workers);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if rows.is_empty() {
        return Err(CliError::Data("no clip could be classified".into()));
    }
    fs::write(out, write_predictions_csv(&rows))?;
    let cfg_echo = out.with_extension("effective.cfg");
    fs::write(&cfg_echo, cfg.to_text())?;
    println!(
        "classified {} of {} clips; predictions at {}",
        rows.len(),
        entries.len(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(
    predictions: &Path,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let cfg = load_run_config(config)?;
    let text = fs::read_to_string(predictions)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", predictions.display())))?;
    let rows = read_predictions_csv(&text)?;

    let order: Vec<&str> = AffectLabel::ALL.iter().map(|l| l.as_str()).collect();
    let pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.true_label.as_str(), r.pred_label.as_str()))
        .collect();
    let cm = confusion_matrix(&pairs, &order)?;
    let report = summarize(&cm, cfg.f1_average)?;

    let stage1_pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.true_label.stage1().as_str(), r.pred_label.stage1().as_str()))
        .collect();
    let stage1_order = vec![Stage1Label::Negative.as_str(), Stage1Label::NonNegative.as_str()];
    let stage1_cm = confusion_matrix(&stage1_pairs, &stage1_order)?;
    let stage1 = summarize(&stage1_cm, cfg.f1_average)?;

    let transitions: Vec<(&str, &str, &str)> = rows
        .iter()
        .map(|r| (r.participant_id.as_str(), r.true_label.short(), r.pred_label.short()))
        .collect();
    let participant_rows = per_participant_report(&transitions);

    let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    println!("clips evaluated: {}", rows.len());
    println!("overall accuracy: {:.2}%", report.accuracy * 100.0);
    println!("overall f1: {:.4}", report.f1);
    for (label, recall) in &report.per_class_recall {
        println!("recall[{label}]: {}", fmt_opt(*recall));
    }
    println!("confusion matrix (rows true, cols predicted):");
    print!("{}", cm.to_text_grid());
    println!("stage 1 accuracy: {:.2}%", stage1.accuracy * 100.0);
    for (label, recall) in &stage1.per_class_recall {
        println!("stage 1 recall[{label}]: {}", fmt_opt(*recall));
    }
    println!("stage 1 g-mean: {}", fmt_opt(stage1.g_mean));

    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut summary = String::new();
        summary.push_str(&format!("clips={}\n", rows.len()));
        summary.push_str(&format!("accuracy={:.6}\n", report.accuracy));
        summary.push_str(&format!("f1={:.6}\n", report.f1));
        for (label, recall) in &report.per_class_recall {
            summary.push_str(&format!(
                "recall_{label}={}\n",
                recall.map_or("undefined".into(), |r| format!("{r:.6}"))
            ));
        }
        summary.push_str(&format!("stage1_accuracy={:.6}\n", stage1.accuracy));
        summary.push_str(&format!("stage1_g_mean={}\n", fmt_opt(stage1.g_mean)));
        fs::write(dir.join("metrics.txt"), summary)?;
        fs::write(
            dir.join("confusion.txt"),
            format!("{}\n{}", cm.to_text_grid(), stage1_cm.to_text_grid()),
        )?;
        fs::write(dir.join("per_participant.csv"), transitions_csv(&participant_rows))?;
        println!("report files written to {}", dir.display());
    }
    Ok(())
}

fn parse_merge(merge: Option<&str>) -> Result<Vec<BTreeSet<String>>, CliError> {
    let Some(text) = merge else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for group in text.split(',') {
        let members: BTreeSet<String> = group
            .split('+')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if members.len() < 2 {
            return Err(CliError::Usage(format!(
                "merge group '{group}' needs at least two participants joined with '+'"
            )));
        }
        out.push(members);
    }
    Ok(out)
}

fn cmd_crossval(
    manifest: &Path,
    gallery: Option<&Path>,
    out: &Path,
    folds: usize,
    merge: Option<&str>,
    workers: usize,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let cfg = load_run_config(config)?;
    let entries = read_manifest(manifest)?;
    let gallery_path = default_gallery_path(manifest, gallery);
    let opts = CrossvalOptions {
        k: folds,
        merge: parse_merge(merge)?,
        workers,
    };
    let report = run_crossval::<Scalar>(&entries, &cfg, &gallery_path, &opts)?;

    fs::create_dir_all(out)?;
    fs::write(out.join("summary.txt"), report.summary_text())?;
    fs::write(out.join("pooled_metrics.csv"), report.pooled_metrics_csv())?;
    fs::write(out.join("per_fold.csv"), report.per_fold_csv())?;
    fs::write(
        out.join("per_participant.csv"),
        transitions_csv(&report.per_participant),
    )?;
    let mut grids = String::from("overall (3 classes):\n");
    grids.push_str(&report.pooled_confusion.to_text_grid());
    grids.push_str("\nstage 1 (negative vs non-negative):\n");
    grids.push_str(&report.stage1_confusion.to_text_grid());
    if let Some(cm) = &report.stage2_confusion {
        grids.push_str("\nstage 2 (neutral vs positive, clips that reached it):\n");
        grids.push_str(&cm.to_text_grid());
    }
    fs::write(out.join("confusion.txt"), grids)?;
    let all_rows: Vec<_> = report.folds.iter().flat_map(|f| f.rows.clone()).collect();
    fs::write(out.join("predictions.csv"), write_predictions_csv(&all_rows))?;
    fs::write(out.join("effective.cfg"), cfg.to_text())?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "pooled accuracy: {:.2}% over {} clips; report in {}",
        report.pooled_metrics.accuracy * 100.0,
        report.pooled_confusion.total(),
        out.display()
    );
    Ok(())
}
