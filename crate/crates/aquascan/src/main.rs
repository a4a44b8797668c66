use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aquascan::commands::{self, AugmentOptions, AugmentSpec, RunOptions};
use aquascan::config::{ClassifierKind, PipelineConfig};
use aquascan::manifest::{split_directory, Manifest, Split};
use aquascan::synthetic::{write_dataset, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use aquascan::{AppError, Result};
use aquascan_core::augment::{parse_ops, AugmentOp};
use aquascan_core::features::FEATURE_COUNT;
use aquascan_core::pipeline::EnhanceOrder;
use aquascan_core::segment::ClusterFeatures;
use aquascan_core::svm::KernelSpec;
use aquascan_core::Label;
use clap::{Args, Parser, Subcommand};

/// Fish freshness classification from photographs.
#[derive(Parser, Debug)]
#[command(name = "aquascan", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stratified train/test split of IMAGE_DIR/{fresh,infected} into a manifest.
    Split {
        image_dir: PathBuf,
        /// Manifest CSV to write.
        #[arg(short, long, default_value = "manifest.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.868)]
        ratio: f64,
        /// Per-class ratio override, e.g. `fresh=0.82`. Repeatable.
        #[arg(long = "class-ratio", value_parser = parse_class_ratio)]
        class_ratio: Vec<(Label, f64)>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Writes augmented copies of manifest images and an expanded manifest.
    Augment {
        manifest: PathBuf,
        /// Comma-separated ops: fliph, flipv, rot:90, trans:DX:DY, zoom:F.
        #[arg(long, value_parser = parse_op_list)]
        ops: OpList,
        #[arg(short, long)]
        out: PathBuf,
        /// Total training images after expansion.
        #[arg(long)]
        target_total: Option<usize>,
        /// Also expand the test split.
        #[arg(long)]
        augment_test: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Extracts features from the training split and fits a classifier.
    Train {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Scores a split with a trained model and writes metric reports.
    Evaluate {
        manifest: PathBuf,
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        debug_stages: Option<PathBuf>,
    },
    /// Classifies a single image.
    Predict {
        image: PathBuf,
        #[arg(short, long)]
        model: PathBuf,
        /// Writes the k-means label map with the lesion cluster in red.
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Trains every classifier and compares them on the test split.
    Report {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generates a synthetic fish dataset under OUT/{fresh,infected}.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 150)]
        fresh: usize,
        #[arg(long, default_value_t = 150)]
        infected: usize,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_HEIGHT)]
        height: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Clone, Debug)]
struct OpList(Vec<AugmentOp>);

#[derive(Args, Debug)]
struct RunArgs {
    /// Training-time augmentation ops, applied in memory.
    #[arg(long, value_parser = parse_op_list)]
    augment: Option<OpList>,
    /// Total training images after in-memory augmentation.
    #[arg(long, requires = "augment")]
    augment_total: Option<usize>,
    /// Directory for per-image stage dumps.
    #[arg(long)]
    debug_stages: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            augment: self.augment.as_ref().map(|ops| AugmentSpec { ops: ops.0.clone(), target_total: self.augment_total }),
            debug_stages: self.debug_stages.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    clahe_clip: Option<f64>,
    #[arg(long)]
    clahe_alpha: Option<f64>,
    /// Tile grid as COLSxROWS, e.g. 8x8.
    #[arg(long, value_parser = parse_tiles)]
    clahe_tiles: Option<(usize, usize)>,
    #[arg(long)]
    clahe_bins: Option<usize>,
    /// before, after or off.
    #[arg(long, value_parser = parse_enhance_order)]
    enhance_order: Option<EnhanceOrder>,
    #[arg(long)]
    segment_k: Option<usize>,
    #[arg(long)]
    segment_max_iter: Option<usize>,
    #[arg(long)]
    segment_tol: Option<f64>,
    /// chroma (a*, b*) or full (L*, a*, b*).
    #[arg(long, value_parser = parse_cluster_features)]
    segment_features: Option<ClusterFeatures>,
    #[arg(long)]
    glcm_levels: Option<usize>,
    #[arg(long)]
    glcm_distance: Option<usize>,
    /// svm, decision_tree, logistic_regression or naive_bayes.
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// linear, poly, rbf or sigmoid.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    coef0: Option<f64>,
    /// Soft-margin penalty C.
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    svm_tol: Option<f64>,
    #[arg(long)]
    max_passes: Option<usize>,
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    no_standardize: bool,
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            c.set_seed(s);
        }
        let e = &mut c.extraction;
        set(&mut e.width, self.width);
        set(&mut e.height, self.height);
        set(&mut e.clahe.clip_limit, self.clahe_clip);
        set(&mut e.clahe.alpha, self.clahe_alpha);
        if let Some((tx, ty)) = self.clahe_tiles {
            e.clahe.tiles_x = tx;
            e.clahe.tiles_y = ty;
        }
        set(&mut e.clahe.bins, self.clahe_bins);
        set(&mut e.enhance_order, self.enhance_order);
        set(&mut e.segment.k, self.segment_k);
        set(&mut e.segment.max_iter, self.segment_max_iter);
        set(&mut e.segment.tol, self.segment_tol);
        set(&mut e.segment.features, self.segment_features);
        set(&mut e.glcm_levels, self.glcm_levels);
        set(&mut e.glcm_distance, self.glcm_distance);
        set(&mut c.classifier, self.classifier);
        if let Some(name) = &self.kernel {
            c.svm.kernel = self.kernel_spec(name)?;
        } else if self.degree.is_some() || self.gamma.is_some() || self.coef0.is_some() {
            return Err(AppError::Usage("--degree, --gamma and --coef0 need --kernel".into()));
        }
        set(&mut c.svm.c, self.c);
        set(&mut c.svm.tol, self.svm_tol);
        set(&mut c.svm.max_passes, self.max_passes);
        set(&mut c.baseline.max_depth, self.tree_depth);
        set(&mut c.baseline.learning_rate, self.lr);
        set(&mut c.baseline.epochs, self.epochs);
        if self.no_standardize {
            c.svm.standardize = false;
            c.baseline.standardize = false;
        }
        c.validate()?;
        Ok(c)
    }

    fn kernel_spec(&self, name: &str) -> Result<KernelSpec> {
        let gamma = self.gamma.unwrap_or(1.0 / FEATURE_COUNT as f64);
        Ok(match name.to_ascii_lowercase().as_str() {
            "linear" => KernelSpec::Linear,
            "poly" | "polynomial" => {
                KernelSpec::Polynomial { degree: self.degree.unwrap_or(3), gamma, coef0: self.coef0.unwrap_or(1.0) }
            }
            "rbf" | "gaussian" => KernelSpec::Gaussian { gamma },
            "sigmoid" => KernelSpec::Sigmoid { gamma, coef0: self.coef0.unwrap_or(0.0) },
            other => return Err(AppError::Usage(format!("unknown kernel {other:?}"))),
        })
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_op_list(s: &str) -> std::result::Result<OpList, String> {
    let ops = parse_ops(s).map_err(|e| e.to_string())?;
    if ops.is_empty() {
        return Err("empty op list".into());
    }
    Ok(OpList(ops))
}

fn parse_class_ratio(s: &str) -> std::result::Result<(Label, f64), String> {
    let (label, ratio) = s.split_once('=').ok_or("expected LABEL=RATIO")?;
    let label = label.parse::<Label>().map_err(|e| e.to_string())?;
    let ratio = ratio.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((label, ratio))
}

fn parse_tiles(s: &str) -> std::result::Result<(usize, usize), String> {
    let (x, y) = s.split_once(['x', 'X']).ok_or("expected COLSxROWS")?;
    Ok((x.parse().map_err(|_| "bad tile count")?, y.parse().map_err(|_| "bad tile count")?))
}

fn parse_enhance_order(s: &str) -> std::result::Result<EnhanceOrder, String> {
    match s {
        "before" | "before_conversion" => Ok(EnhanceOrder::BeforeConversion),
        "after" | "after_conversion" => Ok(EnhanceOrder::AfterConversion),
        "off" | "disabled" | "none" => Ok(EnhanceOrder::Disabled),
        _ => Err(format!("unknown enhance order {s:?}")),
    }
}

fn parse_cluster_features(s: &str) -> std::result::Result<ClusterFeatures, String> {
    match s {
        "chroma" | "ab" => Ok(ClusterFeatures::Chroma),
        "full" | "lab" => Ok(ClusterFeatures::Full),
        _ => Err(format!("unknown cluster features {s:?}")),
    }
}

fn print_rejects(rejects: &[commands::Reject]) {
    if !rejects.is_empty() {
        eprintln!("{} image(s) rejected, see rejects.txt", rejects.len());
    }
}

/// Returns the process exit status on success paths (0, or 3 when the
/// solver ran out of budget).
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Split { image_dir, out, ratio, class_ratio, seed } => {
            let overrides: BTreeMap<Label, f64> = class_ratio.into_iter().collect();
            let m = split_directory(&image_dir, ratio, &overrides, seed)?;
            m.write(&out)?;
            for split in [Split::Train, Split::Test] {
                println!(
                    "{split}: {} fresh, {} infected",
                    m.count(split, Label::Fresh),
                    m.count(split, Label::Infected)
                );
            }
        }
        Command::Augment { manifest, ops, out, target_total, augment_test, seed } => {
            let m = Manifest::read(&manifest)?;
            let options = AugmentOptions { target_total, seed, augment_test };
            let expanded = commands::cmd_augment(&m, &ops.0, &options, &out)?;
            println!("{} entries written to {}", expanded.entries.len(), out.join("manifest.csv").display());
        }
        Command::Train { manifest, out, config, run } => {
            let m = Manifest::read(&manifest)?;
            let t = commands::cmd_train(&m, &config.build()?, &run.options(), &out)?;
            print_rejects(&t.rejects);
            println!("trained {} on {} images: {}", t.model.classifier.kind(), t.n_rows, t.model_path.display());
            if !t.converged {
                eprintln!("warning: SMO stopped at the sweep budget before meeting the tolerance");
                return Ok(3);
            }
        }
        Command::Evaluate { manifest, model, out, split, debug_stages } => {
            let m = Manifest::read(&manifest)?;
            let options = RunOptions { augment: None, debug_stages };
            let e = commands::cmd_evaluate(&m, &model, split, &options, &out)?;
            print_rejects(&e.rejects);
            let r = &e.evaluation.report;
            println!("accuracy {:.2}%  precision {:.2}%  recall {:.2}%  f1 {:.2}%", r.accuracy, r.precision, r.recall, r.f1);
            if let Some(roc) = &e.evaluation.roc {
                println!("auc {:.4}", roc.auc);
            }
        }
        Command::Predict { image, model, preview } => {
            let p = commands::cmd_predict(&image, &model, preview.as_deref())?;
            println!("{}\t{}", p.scored.label, p.scored.score);
        }
        Command::Report { manifest, out, config, run } => {
            let m = Manifest::read(&manifest)?;
            commands::cmd_report(&m, &config.build()?, &run.options(), &out)?;
            let text = std::fs::read_to_string(out.join("comparison.txt"))
                .map_err(|e| AppError::io(&out.join("comparison.txt"), e))?;
            print!("{text}");
        }
        Command::Synth { out, fresh, infected, width, height, seed } => {
            let paths = write_dataset(&out, fresh, infected, seed, width, height)?;
            println!("{} images written under {}", paths.len(), Path::new(&out).display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
