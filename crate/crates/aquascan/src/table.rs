//! Feature CSV: the ten features in fixed order followed by the label.

use std::path::Path;

use aquascan_core::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use aquascan_core::Label;

use crate::error::{AppError, Result};

pub fn features_to_csv(rows: &[(FeatureVector, Label)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    w.write_record(&header).expect("in-memory write");
    for (f, label) in rows {
        let mut rec: Vec<String> = f.values().iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn read_features_csv(path: &Path) -> Result<Vec<(FeatureVector, Label)>> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| AppError::Csv { path: path.to_path_buf(), source: e })?;
        let bad = |reason: String| AppError::corrupt(path, reason);
        if rec.len() != FEATURE_COUNT + 1 {
            return Err(bad(format!("expected {} columns, got {}", FEATURE_COUNT + 1, rec.len())));
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (k, v) in values.iter_mut().enumerate() {
            *v = rec[k].parse().map_err(|_| bad(format!("bad number `{}`", &rec[k])))?;
        }
        let label = rec[FEATURE_COUNT].parse::<Label>().map_err(|e| bad(e.to_string()))?;
        rows.push((FeatureVector::new(values).map_err(|e| bad(e.to_string()))?, label));
    }
    Ok(rows)
}
