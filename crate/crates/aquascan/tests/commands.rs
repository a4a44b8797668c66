use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use aquascan::commands::{cmd_augment, cmd_evaluate, cmd_predict, cmd_report, cmd_train, AugmentOptions, AugmentSpec, RunOptions};
use aquascan::config::{ClassifierKind, PipelineConfig};
use aquascan::manifest::{Manifest, ManifestEntry, Split};
use aquascan::model::{ModelFile, TrainedClassifier};
use aquascan::synthetic::{image_seed, synth_fish, write_dataset};
use aquascan::table::read_features_csv;
use aquascan::{imageio, AppError};
use aquascan_core::augment::AugmentOp;
use aquascan_core::Label;

const W: usize = 120;
const H: usize = 50;

fn config() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.extraction.width = W;
    c.extraction.height = H;
    c
}

/// Ten images per class; the first eight of each go to training.
fn fixture(root: &Path) -> Manifest {
    let paths = write_dataset(&root.join("data"), 10, 10, 7, W, H).unwrap();
    let entries = paths
        .iter()
        .map(|p| {
            let label = if p.to_string_lossy().contains("infected") { Label::Infected } else { Label::Fresh };
            let index: usize = p.file_stem().unwrap().to_string_lossy()[5..].parse().unwrap();
            ManifestEntry {
                path: p.to_string_lossy().into_owned(),
                label,
                split: if index < 8 { Split::Train } else { Split::Test },
            }
        })
        .collect();
    Manifest::new(entries)
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn train_writes_model_and_feature_table() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let out = dir.path().join("run");
    let t = cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
    assert!(t.converged);
    assert_eq!(t.n_rows, 16);
    assert!(out.join("model.json").is_file());
    let text = String::from_utf8(read(&out.join("train_features.csv"))).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() - 1 <= 20);
    assert!(lines.iter().all(|l| l.split(',').count() == 11));
    assert_eq!(
        lines[0],
        "mean,std_dev,variance,kurtosis,skewness,contrast,correlation,energy,entropy,homogeneity,label"
    );
    assert_eq!(read_features_csv(&out.join("train_features.csv")).unwrap().len(), 16);
    assert_eq!(read(&out.join("rejects.txt")), b"");
}

#[test]
fn corrupt_image_is_rejected_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture(dir.path());
    let bad = dir.path().join("data/fresh/broken.png");
    fs::write(&bad, b"\x89PNG\r\n\x1a\nnot really").unwrap();
    m.entries.push(ManifestEntry { path: bad.to_string_lossy().into_owned(), label: Label::Fresh, split: Split::Train });
    let out = dir.path().join("run");
    let t = cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
    assert_eq!(t.n_rows, 16);
    assert_eq!(t.rejects.len(), 1);
    let log = String::from_utf8(read(&out.join("rejects.txt"))).unwrap();
    assert!(log.contains("broken.png"));
}

#[test]
fn all_rejected_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    for (i, label) in [Label::Fresh, Label::Infected].into_iter().enumerate() {
        let p = dir.path().join(format!("{i}.png"));
        fs::write(&p, b"junk").unwrap();
        entries.push(ManifestEntry { path: p.to_string_lossy().into_owned(), label, split: Split::Train });
    }
    let err = cmd_train(&Manifest::new(entries), &config(), &RunOptions::default(), &dir.path().join("o")).unwrap_err();
    assert!(matches!(err, AppError::AllImagesRejected { split: Split::Train }));
}

#[test]
fn train_and_evaluate_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
        cmd_evaluate(&m, &out.join("model.json"), Split::Test, &RunOptions::default(), &out.join("eval")).unwrap();
        outputs.push(out);
    }
    for file in ["model.json", "train_features.csv", "eval/metrics.csv", "eval/roc.csv", "eval/auc.csv", "eval/predictions.csv", "eval/confusion.txt", "eval/summary.txt"] {
        assert_eq!(read(&outputs[0].join(file)), read(&outputs[1].join(file)), "{file}");
    }
}

#[test]
fn evaluation_on_training_split_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let out = dir.path().join("run");
    cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
    let e = cmd_evaluate(&m, &out.join("model.json"), Split::Train, &RunOptions::default(), &out.join("eval")).unwrap();
    assert_eq!(e.evaluation.report.accuracy, 100.0);
    assert_eq!(e.evaluation.confusion.total(), 16);
    assert!(out.join("eval/train_features.csv").is_file());
}

#[test]
fn predict_separates_lesion_and_clean_fish() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let out = dir.path().join("run");
    cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
    let model = out.join("model.json");
    for (label, i) in [(Label::Infected, 500), (Label::Fresh, 500), (Label::Infected, 501), (Label::Fresh, 501)] {
        let path = dir.path().join(format!("{label}_{i}.png"));
        imageio::save_image(&synth_fish(label, image_seed(7, label, i), W, H), &path).unwrap();
        let preview = dir.path().join(format!("preview_{label}_{i}.png"));
        let p = cmd_predict(&path, &model, Some(&preview)).unwrap();
        assert_eq!(p.scored.label, label);
        match label {
            Label::Infected => assert!(p.scored.score > 0.0),
            Label::Fresh => assert!(p.scored.score < 0.0),
        }
        assert_eq!(imageio::load_image(&preview).unwrap().width(), W);
    }
    let missing = dir.path().join("nope/model.json");
    let err = cmd_predict(&dir.path().join("Infected_500.png"), &missing, None).unwrap_err();
    assert!(err.to_string().contains("nope/model.json"));
}

#[test]
fn model_version_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let out = dir.path().join("run");
    cmd_train(&m, &config(), &RunOptions::default(), &out).unwrap();
    let path = out.join("model.json");
    let text = String::from_utf8(read(&path)).unwrap();
    let loaded = ModelFile::read(&path).unwrap();
    assert_eq!(loaded.to_json(), text);
    assert!(matches!(loaded.classifier, TrainedClassifier::Svm(_)));
    fs::write(&path, text.replacen("\"version\": 1", "\"version\": 99", 1)).unwrap();
    let err = cmd_evaluate(&m, &path, Split::Test, &RunOptions::default(), &out.join("e")).unwrap_err();
    assert!(matches!(err, AppError::ModelVersionMismatch { .. }));
}

#[test]
fn baseline_classifiers_train_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let c = PipelineConfig { classifier: ClassifierKind::NaiveBayes, ..config() };
    let out = dir.path().join("nb");
    cmd_train(&m, &c, &RunOptions::default(), &out).unwrap();
    assert_eq!(ModelFile::read(&out.join("model.json")).unwrap().classifier.kind(), ClassifierKind::NaiveBayes);
    let rows = cmd_report(&m, &config(), &RunOptions::default(), &dir.path().join("rep")).unwrap();
    assert_eq!(rows.len(), 4);
    let csv = String::from_utf8(read(&dir.path().join("rep/comparison.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("classifier,accuracy,"));
}

#[test]
fn in_memory_augmentation_expands_training_rows() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let spec = AugmentSpec { ops: vec![AugmentOp::FlipH, "rot:180".parse().unwrap()], target_total: Some(40) };
    let opts = RunOptions { augment: Some(spec), debug_stages: Some(dir.path().join("stages")) };
    let t = cmd_train(&m, &config(), &opts, &dir.path().join("run")).unwrap();
    assert_eq!(t.n_rows, 40);
    let dumped = fs::read_dir(dir.path().join("stages")).unwrap().count();
    assert_eq!(dumped, 40 * 5);
}

#[test]
fn augment_command_writes_images_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture(dir.path());
    let before = m.to_csv();
    let ops: Vec<AugmentOp> = aquascan_core::augment::parse_ops("fliph,trans:5:-3,zoom:1.25").unwrap();
    let out = dir.path().join("aug");
    let opts = AugmentOptions { target_total: None, seed: 1, augment_test: false };
    let expanded = cmd_augment(&m, &ops, &opts, &out).unwrap();
    assert_eq!(m.to_csv(), before);
    assert_eq!(expanded.count(Split::Train, Label::Fresh), 32);
    assert_eq!(expanded.count(Split::Test, Label::Fresh), 2);
    assert_eq!(Manifest::read(&out.join("manifest.csv")).unwrap(), expanded);
    let new: Vec<PathBuf> = expanded.entries.iter().filter(|e| e.path.contains("__")).map(|e| PathBuf::from(&e.path)).collect();
    assert_eq!(new.len(), 48);
    assert!(new.iter().all(|p| p.starts_with(&out) && p.is_file()));
    let slugs: Vec<String> = ops.iter().map(|o| format!("__{}.png", o.slug())).collect();
    assert!(new.iter().all(|p| slugs.iter().any(|s| p.to_string_lossy().ends_with(s.as_str()))));

    let with_test = AugmentOptions { target_total: Some(20), seed: 1, augment_test: true };
    let e2 = cmd_augment(&m, &ops, &with_test, &dir.path().join("aug2")).unwrap();
    assert_eq!(e2.split(Split::Train).count(), 20);
    assert_eq!(e2.split(Split::Test).count(), 16);
}

fn bin(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aquascan")).args(args).current_dir(cwd).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(bin(&["synth", "data", "--fresh", "6", "--infected", "6", "--width", "120", "--height", "50"], d).0, 0);
    let (code, stdout, _) = bin(&["split", "data", "--ratio", "0.5", "-o", "m.csv"], d);
    assert_eq!(code, 0);
    assert!(stdout.contains("train: 3 fresh, 3 infected"));
    let (code, _, err) = bin(&["train", "m.csv", "-o", "run", "--width", "120", "--height", "50", "--kernel", "rbf"], d);
    assert_eq!(code, 0, "{err}");
    let (code, stdout, _) = bin(&["predict", "data/infected/fish_0000.png", "-m", "run/model.json"], d);
    assert_eq!(code, 0);
    let (label, score) = stdout.trim_end().split_once('\t').unwrap();
    assert!(label == "fresh" || label == "infected");
    assert_eq!(score.parse::<f64>().unwrap() >= 0.0, label == "infected");
    assert_eq!(bin(&["evaluate", "m.csv", "-m", "run/model.json", "-o", "eval"], d).0, 0);
    assert!(d.join("eval/roc.csv").is_file());

    assert_eq!(bin(&["train"], d).0, 1);
    assert_eq!(bin(&["train", "m.csv", "-o", "x", "--kernel", "cubic"], d).0, 1);
    assert_eq!(bin(&["split", "data", "--ratio", "1.0", "-o", "x.csv"], d).0, 2);
    let (code, _, err) = bin(&["predict", "data/fresh/fish_0000.png", "-m", "missing.json"], d);
    assert_eq!(code, 2);
    assert!(err.contains("missing.json"));
    assert_eq!(bin(&["--help"], d).0, 0);
    let (code, _, err) = bin(&["train", "m.csv", "-o", "run2", "--width", "120", "--height", "50", "--max-passes", "1", "--svm-tol", "1e-12"], d);
    assert_eq!(code, 3, "{err}");
    assert!(d.join("run2/model.json").is_file());
}
