//! The subcommands as library functions. Every command reads its inputs,
//! writes only under its output directory, and returns a summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aquascan_core::augment::{apply_augment, plan_expansion, AugmentOp};
use aquascan_core::baselines::train_baseline;
use aquascan_core::features::FeatureVector;
use aquascan_core::metrics::{
    averaged_auc, binary_one_vs_rest, confusion, metric_report, roc_curve, AveragedAuc, ConfusionMatrix, MetricReport,
    MetricsError, RocCurve,
};
use aquascan_core::pipeline::{extract, Extraction, ExtractionConfig};
use aquascan_core::svm::train_svm;
use aquascan_core::Label;
use rayon::prelude::*;

use crate::config::{ClassifierKind, PipelineConfig};
use crate::error::{AppError, Result};
use crate::imageio::{load_image, render_segmentation, save_gray, save_image};
use crate::manifest::{Manifest, ManifestEntry, Split};
use crate::model::{ModelFile, Scored, TrainedClassifier};
use crate::report;
use crate::table::features_to_csv;
use crate::write_file;

/// Augmentation applied to the training split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentSpec {
    pub ops: Vec<AugmentOp>,
    /// Total training images after expansion; `None` applies every op to
    /// every image.
    pub target_total: Option<usize>,
}

/// One image to run through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub path: String,
    pub label: Label,
    pub op: Option<AugmentOp>,
}

impl Job {
    pub fn name(&self) -> String {
        match &self.op {
            Some(op) => format!("{}#{}", self.path, op),
            None => self.path.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractedSet {
    /// Index into the job list and the features of that job.
    pub rows: Vec<(usize, FeatureVector)>,
    pub rejects: Vec<Reject>,
}

fn file_stem(path: &str) -> String {
    Path::new(path).file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn dump_stages(dir: &Path, index: usize, job: &Job, e: &Extraction) -> Result<()> {
    let mut base = format!("{index:05}_{}", file_stem(&job.path));
    if let Some(op) = &job.op {
        base.push_str("__");
        base.push_str(&op.slug());
    }
    save_image(&e.resized, &dir.join(format!("{base}_1_resized.png")))?;
    save_image(&e.enhanced, &dir.join(format!("{base}_2_enhanced.png")))?;
    save_gray(&e.gray, &dir.join(format!("{base}_3_gray.png")))?;
    save_image(&render_segmentation(&e.segmentation), &dir.join(format!("{base}_4_segments.png")))?;
    let mask = e.segmentation.mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mask = aquascan_core::raster::GrayImage::new(e.segmentation.width, e.segmentation.height, mask)?;
    save_gray(&mask, &dir.join(format!("{base}_5_mask.png")))
}

fn run_job(index: usize, job: &Job, config: &ExtractionConfig, debug: Option<&Path>) -> Result<FeatureVector> {
    let mut image = load_image(Path::new(&job.path))?;
    if let Some(op) = &job.op {
        image = apply_augment(&image, op)?;
    }
    let e = extract(&image, config)?;
    if let Some(dir) = debug {
        dump_stages(dir, index, job, &e)?;
    }
    Ok(e.features)
}

/// Runs the pipeline over `jobs` in parallel; results keep job order.
pub fn extract_jobs(jobs: &[Job], config: &ExtractionConfig, debug: Option<&Path>) -> ExtractedSet {
    let results: Vec<Result<FeatureVector>> =
        jobs.par_iter().enumerate().map(|(i, job)| run_job(i, job, config, debug)).collect();
    let mut set = ExtractedSet::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(f) => set.rows.push((i, f)),
            Err(e) => {
                log::warn!("rejected {}: {e}", jobs[i].name());
                set.rejects.push(Reject { name: jobs[i].name(), reason: e.to_string() });
            }
        }
    }
    set
}

/// Jobs for one split, with training-time augmentation if requested.
pub fn split_jobs(manifest: &Manifest, split: Split, augment: Option<&AugmentSpec>, seed: u64) -> Result<Vec<Job>> {
    let entries: Vec<&ManifestEntry> = manifest.split(split).collect();
    let plan = match augment {
        Some(spec) if !spec.ops.is_empty() => plan_expansion(entries.len(), spec.ops.len(), spec.target_total, seed)?,
        _ => vec![Vec::new(); entries.len()],
    };
    let mut jobs = Vec::new();
    for (e, ops) in entries.iter().zip(plan) {
        jobs.push(Job { path: e.path.clone(), label: e.label, op: None });
        for k in ops {
            jobs.push(Job { path: e.path.clone(), label: e.label, op: Some(augment.unwrap().ops[k]) });
        }
    }
    Ok(jobs)
}

fn rejects_text(rejects: &[Reject]) -> String {
    let mut s = String::new();
    for r in rejects {
        writeln!(s, "{}\t{}", r.name, r.reason).unwrap();
    }
    s
}

/// Trains the configured classifier on feature rows.
pub fn train_classifier(
    rows: &[FeatureVector],
    labels: &[Label],
    config: &PipelineConfig,
) -> Result<(TrainedClassifier, bool)> {
    let x: Vec<&[f64]> = rows.iter().map(|f| f.values().as_slice()).collect();
    match config.classifier.baseline() {
        None => {
            let t = train_svm(&x, labels, &config.svm)?;
            log::info!("SMO finished after {} sweeps (converged: {})", t.sweeps, t.converged);
            Ok((TrainedClassifier::Svm(t.model), t.converged))
        }
        Some(kind) => {
            let t = train_baseline(kind, &x, labels, &config.baseline)?;
            Ok((TrainedClassifier::Baseline(t.model), true))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub model_path: PathBuf,
    pub n_rows: usize,
    pub rejects: Vec<Reject>,
    pub converged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub augment: Option<AugmentSpec>,
    pub debug_stages: Option<PathBuf>,
}

fn feature_rows(jobs: &[Job], set: &ExtractedSet) -> Vec<(FeatureVector, Label)> {
    set.rows.iter().map(|&(i, f)| (f, jobs[i].label)).collect()
}

/// Writes `model.json`, `train_features.csv` and `rejects.txt` to `out`.
pub fn cmd_train(manifest: &Manifest, config: &PipelineConfig, options: &RunOptions, out: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    manifest.require_both_labels(Split::Train)?;
    let jobs = split_jobs(manifest, Split::Train, options.augment.as_ref(), config.seed)?;
    log::info!("extracting features from {} training images", jobs.len());
    let set = extract_jobs(&jobs, &config.extraction, options.debug_stages.as_deref());
    write_file(&out.join("rejects.txt"), rejects_text(&set.rejects).as_bytes())?;
    if set.rows.is_empty() {
        return Err(AppError::AllImagesRejected { split: Split::Train });
    }
    let rows = feature_rows(&jobs, &set);
    write_file(&out.join("train_features.csv"), &features_to_csv(&rows))?;
    let (x, y): (Vec<FeatureVector>, Vec<Label>) = rows.into_iter().unzip();
    let (classifier, converged) = train_classifier(&x, &y, config)?;
    let model = ModelFile::new(*config, classifier);
    let model_path = out.join("model.json");
    model.write(&model_path)?;
    Ok(TrainOutcome { model, model_path, n_rows: x.len(), rejects: set.rejects, converged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub report: MetricReport,
    /// `None` when the evaluated examples hold a single class.
    pub roc: Option<RocCurve>,
    pub averaged: Option<AveragedAuc>,
}

/// Metrics for predictions against actual labels, infected positive.
pub fn evaluate_scores(actual: &[Label], scored: &[Scored]) -> Result<Evaluation> {
    let predicted: Vec<Label> = scored.iter().map(|s| s.label).collect();
    let cm = confusion(actual, &predicted, Label::Infected)?;
    let report = metric_report(&cm)?;
    let scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
    let unit: Vec<f64> = scored.iter().map(|s| s.unit_score).collect();
    let (roc, averaged) = match roc_curve(&scores, actual, Label::Infected) {
        Ok(roc) => (Some(roc), Some(averaged_auc(&binary_one_vs_rest(&unit, actual, Label::Infected))?)),
        Err(MetricsError::SingleClass) => {
            log::warn!("evaluation set holds a single class; ROC analysis skipped");
            (None, None)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Evaluation { confusion: cm, report, roc, averaged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub evaluation: Evaluation,
    pub rejects: Vec<Reject>,
}

/// Writes metrics, confusion matrix, ROC points, AUCs and per-image
/// predictions for `split` to `out`.
pub fn cmd_evaluate(
    manifest: &Manifest,
    model_path: &Path,
    split: Split,
    options: &RunOptions,
    out: &Path,
) -> Result<EvaluateOutcome> {
    let model = ModelFile::read(model_path)?;
    let config = model.config;
    let jobs = split_jobs(manifest, split, options.augment.as_ref(), config.seed)?;
    if jobs.is_empty() {
        return Err(AppError::Usage(format!("manifest has no {split} entries")));
    }
    let set = extract_jobs(&jobs, &config.extraction, options.debug_stages.as_deref());
    write_file(&out.join("rejects.txt"), rejects_text(&set.rejects).as_bytes())?;
    if set.rows.is_empty() {
        return Err(AppError::AllImagesRejected { split });
    }
    let rows = feature_rows(&jobs, &set);
    write_file(&out.join(format!("{split}_features.csv")), &features_to_csv(&rows))?;

    let scored: Vec<Scored> =
        rows.iter().map(|(f, _)| model.classifier.score(f.values())).collect::<Result<_>>()?;
    let actual: Vec<Label> = rows.iter().map(|(_, l)| *l).collect();
    let evaluation = evaluate_scores(&actual, &scored)?;

    let mut predictions = String::from("path,label,predicted,score\n");
    for ((i, _), s) in set.rows.iter().zip(&scored) {
        let name = jobs[*i].name();
        let quoted = if name.contains([',', '"']) { format!("\"{}\"", name.replace('"', "\"\"")) } else { name };
        writeln!(predictions, "{quoted},{},{},{}", jobs[*i].label, s.label, s.score).unwrap();
    }
    write_file(&out.join("predictions.csv"), predictions.as_bytes())?;
    write_evaluation(&evaluation, out)?;
    Ok(EvaluateOutcome { evaluation, rejects: set.rejects })
}

fn write_evaluation(ev: &Evaluation, out: &Path) -> Result<()> {
    write_file(&out.join("metrics.csv"), report::metrics_csv(&ev.report).as_bytes())?;
    write_file(&out.join("confusion.txt"), report::confusion_text(&ev.confusion, Label::Infected).as_bytes())?;
    match (&ev.roc, &ev.averaged) {
        (Some(roc), Some(avg)) => {
            write_file(&out.join("roc.csv"), report::roc_csv(roc).as_bytes())?;
            write_file(&out.join("auc.csv"), report::auc_csv(roc, avg).as_bytes())?;
            write_file(&out.join("summary.txt"), report::summary_text(&ev.report, &ev.confusion, avg).as_bytes())?;
        }
        _ => write_file(&out.join("auc.csv"), b"measure,value\nauc,undefined\n")?,
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scored: Scored,
    pub extraction: Extraction,
}

/// Classifies one image; optionally writes the k-means label map.
pub fn cmd_predict(image: &Path, model_path: &Path, preview: Option<&Path>) -> Result<Prediction> {
    let model = ModelFile::read(model_path)?;
    let rgb = load_image(image)?;
    let extraction = extract(&rgb, &model.config.extraction)?;
    let scored = model.classifier.score(extraction.features.values())?;
    if let Some(p) = preview {
        save_image(&render_segmentation(&extraction.segmentation), p)?;
    }
    Ok(Prediction { scored, extraction })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub classifier: ClassifierKind,
    pub evaluation: Evaluation,
}

/// Trains all four classifiers on the training split and evaluates each on
/// the test split. Writes `comparison.csv` and `comparison.txt`.
pub fn cmd_report(
    manifest: &Manifest,
    config: &PipelineConfig,
    options: &RunOptions,
    out: &Path,
) -> Result<Vec<ComparisonRow>> {
    config.validate()?;
    manifest.require_both_labels(Split::Train)?;
    let train_jobs = split_jobs(manifest, Split::Train, options.augment.as_ref(), config.seed)?;
    let test_jobs = split_jobs(manifest, Split::Test, None, config.seed)?;
    let train = extract_jobs(&train_jobs, &config.extraction, options.debug_stages.as_deref());
    let test = extract_jobs(&test_jobs, &config.extraction, None);
    let mut rejects = train.rejects.clone();
    rejects.extend(test.rejects.iter().cloned());
    write_file(&out.join("rejects.txt"), rejects_text(&rejects).as_bytes())?;
    if train.rows.is_empty() {
        return Err(AppError::AllImagesRejected { split: Split::Train });
    }
    if test.rows.is_empty() {
        return Err(AppError::AllImagesRejected { split: Split::Test });
    }
    let (x, y): (Vec<FeatureVector>, Vec<Label>) = feature_rows(&train_jobs, &train).into_iter().unzip();
    let test_rows = feature_rows(&test_jobs, &test);
    let actual: Vec<Label> = test_rows.iter().map(|(_, l)| *l).collect();

    let mut rows = Vec::new();
    for kind in ClassifierKind::ALL {
        let cfg = PipelineConfig { classifier: kind, ..*config };
        let (classifier, _) = train_classifier(&x, &y, &cfg)?;
        let scored: Vec<Scored> =
            test_rows.iter().map(|(f, _)| classifier.score(f.values())).collect::<Result<_>>()?;
        rows.push(ComparisonRow { classifier: kind, evaluation: evaluate_scores(&actual, &scored)? });
    }

    let mut csv = String::from("classifier");
    for name in MetricReport::NAMES {
        write!(csv, ",{name}").unwrap();
    }
    csv.push_str(",auc,micro_auc,macro_auc\n");
    let mut text = String::new();
    writeln!(text, "{:<20} {:>9} {:>9} {:>9} {:>11} {:>9} {:>7}", "classifier", "accuracy", "precision", "recall", "specificity", "f1", "auc")
        .unwrap();
    for row in &rows {
        let r = &row.evaluation.report;
        write!(csv, "{}", row.classifier).unwrap();
        for v in r.values() {
            write!(csv, ",{v}").unwrap();
        }
        let auc = |v: Option<f64>| v.map_or("undefined".to_string(), |a| a.to_string());
        let ev = &row.evaluation;
        writeln!(
            csv,
            ",{},{},{}",
            auc(ev.roc.as_ref().map(|r| r.auc)),
            auc(ev.averaged.as_ref().map(|a| a.micro)),
            auc(ev.averaged.as_ref().map(|a| a.macro_))
        )
        .unwrap();
        writeln!(
            text,
            "{:<20} {:>9.2} {:>9.2} {:>9.2} {:>11.2} {:>9.2} {:>7}",
            row.classifier.as_str(),
            r.accuracy,
            r.precision,
            r.recall,
            r.specificity,
            r.f1,
            ev.roc.as_ref().map_or("-".into(), |r| format!("{:.4}", r.auc))
        )
        .unwrap();
    }
    write_file(&out.join("comparison.csv"), csv.as_bytes())?;
    write_file(&out.join("comparison.txt"), text.as_bytes())?;
    Ok(rows)
}

#[derive(Debug, Clone, Default)]
pub struct AugmentOptions {
    pub target_total: Option<usize>,
    pub seed: u64,
    /// Also expand the test split (every op on every test image).
    pub augment_test: bool,
}

/// Writes augmented copies under `out/images/` and returns the expanded
/// manifest (also written to `out/manifest.csv`). Original entries are
/// kept unchanged and in order; new entries follow their source.
pub fn cmd_augment(manifest: &Manifest, ops: &[AugmentOp], options: &AugmentOptions, out: &Path) -> Result<Manifest> {
    if ops.is_empty() {
        return Err(AppError::Usage("no augmentation operations given".into()));
    }
    let train_idx: Vec<usize> = (0..manifest.entries.len()).filter(|&i| manifest.entries[i].split == Split::Train).collect();
    let train_plan = plan_expansion(train_idx.len(), ops.len(), options.target_total, options.seed)?;
    let mut plan = vec![Vec::new(); manifest.entries.len()];
    for (&i, p) in train_idx.iter().zip(train_plan) {
        plan[i] = p;
    }
    if options.augment_test {
        for (i, e) in manifest.entries.iter().enumerate() {
            if e.split == Split::Test {
                plan[i] = (0..ops.len()).collect();
            }
        }
    }
    let mut tasks = Vec::new();
    for (i, ks) in plan.iter().enumerate() {
        for &k in ks {
            let e = &manifest.entries[i];
            let name = format!("{i:05}_{}__{}.png", file_stem(&e.path), ops[k].slug());
            let path = out.join("images").join(e.label.as_str()).join(name);
            tasks.push((i, k, path));
        }
    }
    tasks
        .par_iter()
        .map(|(i, k, path)| {
            let img = load_image(Path::new(&manifest.entries[*i].path))?;
            save_image(&apply_augment(&img, &ops[*k])?, path)
        })
        .collect::<Result<Vec<()>>>()?;

    let mut entries = Vec::with_capacity(manifest.entries.len() + tasks.len());
    let mut t = 0;
    for (i, e) in manifest.entries.iter().enumerate() {
        entries.push(e.clone());
        while t < tasks.len() && tasks[t].0 == i {
            entries.push(ManifestEntry { path: tasks[t].2.to_string_lossy().into_owned(), label: e.label, split: e.split });
            t += 1;
        }
    }
    let expanded = Manifest::new(entries);
    expanded.write(&out.join("manifest.csv"))?;
    Ok(expanded)
}
