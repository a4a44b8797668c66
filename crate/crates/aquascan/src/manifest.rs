//! Dataset manifests: CSV files with header `path,label,split`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aquascan_core::Label;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected `train` or `test`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { entries }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split, label: Label) -> usize {
        self.split(split).filter(|e| e.label == label).count()
    }

    /// Rejects duplicate paths.
    pub fn validate(&self, source: &Path) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert(e.path.as_str()) {
                return Err(AppError::BadManifest {
                    path: source.to_path_buf(),
                    line: i as u64 + 2,
                    reason: format!("duplicate path {}", e.path),
                });
            }
        }
        Ok(())
    }

    /// Fails unless the split holds at least one image of each label.
    pub fn require_both_labels(&self, split: Split) -> Result<()> {
        for label in Label::ALL {
            if self.count(split, label) == 0 {
                return Err(AppError::EmptyClass { label, split });
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e).expect("writing to memory cannot fail");
        }
        w.into_inner().expect("writing to memory cannot fail")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_file(path, &self.to_csv())
    }

    pub fn from_csv(bytes: &[u8], source: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = r.headers().map_err(|e| AppError::Csv { path: source.to_path_buf(), source: e })?;
        if headers.iter().collect::<Vec<_>>() != ["path", "label", "split"] {
            return Err(AppError::BadManifest {
                path: source.to_path_buf(),
                line: 1,
                reason: "header must be `path,label,split`".into(),
            });
        }
        let mut entries = Vec::new();
        for row in r.records() {
            let row = row.map_err(|e| AppError::Csv { path: source.to_path_buf(), source: e })?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |reason: String| AppError::BadManifest { path: source.to_path_buf(), line, reason };
            if row.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", row.len())));
            }
            let label = row[1].parse::<Label>().map_err(|e| bad(e.to_string()))?;
            let split = row[2].parse::<Split>().map_err(bad)?;
            if row[0].is_empty() {
                return Err(bad("empty path".into()));
            }
            entries.push(ManifestEntry { path: row[0].to_string(), label, split });
        }
        let m = Manifest { entries };
        m.validate(source)?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
        Self::from_csv(&bytes, path)
    }
}

/// Number of training items out of `n` at `ratio`, rounded half up.
pub fn train_count(n: usize, ratio: f64) -> usize {
    ((n as f64 * ratio + 0.5).floor() as usize).min(n)
}

/// Regular, non-hidden files directly inside `dir`, sorted by name.
fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| AppError::io(dir, e))? {
        let entry = entry.map_err(|e| AppError::io(dir, e))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        let is_file = entry.file_type().map_err(|e| AppError::io(&entry.path(), e))?.is_file();
        if is_file && !hidden {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

/// Stratified split of `image_dir/fresh` and `image_dir/infected`.
///
/// Each class is shuffled with a generator seeded from `seed` and its first
/// `round(n * ratio)` files go to training. `class_ratios` overrides the
/// ratio for individual classes. Both splits must receive every class.
pub fn split_directory(
    image_dir: &Path,
    ratio: f64,
    class_ratios: &BTreeMap<Label, f64>,
    seed: u64,
) -> Result<Manifest> {
    for r in std::iter::once(&ratio).chain(class_ratios.values()) {
        if !(0.0..=1.0).contains(r) {
            return Err(AppError::Usage(format!("split ratio {r} must lie in [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for label in Label::ALL {
        let dir = image_dir.join(label.as_str());
        if !dir.is_dir() {
            return Err(AppError::MissingLabelDir { path: dir });
        }
        let mut files = list_files(&dir)?;
        let n_train = train_count(files.len(), *class_ratios.get(&label).unwrap_or(&ratio));
        if n_train == 0 {
            return Err(AppError::EmptyClass { label, split: Split::Train });
        }
        if n_train == files.len() {
            return Err(AppError::EmptyClass { label, split: Split::Test });
        }
        files.shuffle(&mut rng);
        let mut labeled: Vec<ManifestEntry> = files
            .iter()
            .enumerate()
            .map(|(i, p)| ManifestEntry {
                path: p.to_string_lossy().into_owned(),
                label,
                split: if i < n_train { Split::Train } else { Split::Test },
            })
            .collect();
        labeled.sort_by(|a, b| a.split.cmp(&b.split).then_with(|| a.path.cmp(&b.path)));
        entries.extend(labeled);
    }
    Ok(Manifest { entries })
}
