//! Text and CSV renderings of evaluation results.

use std::fmt::Write;

use aquascan_core::metrics::{AveragedAuc, ConfusionMatrix, MetricReport, RocCurve};
use aquascan_core::Label;

pub fn metrics_csv(report: &MetricReport) -> String {
    let mut s = String::from("metric,value,defined\n");
    for (i, (name, v)) in MetricReport::NAMES.iter().zip(report.values()).enumerate() {
        writeln!(s, "{name},{v},{}", !report.is_undefined(i)).unwrap();
    }
    s
}

pub fn confusion_text(cm: &ConfusionMatrix, positive: Label) -> String {
    let negative = positive.other();
    let mut s = String::new();
    writeln!(s, "positive class: {positive}").unwrap();
    writeln!(s, "{:<18}{:>20}{:>20}", "", format!("predicted {positive}"), format!("predicted {negative}")).unwrap();
    writeln!(s, "{:<18}{:>20}{:>20}", format!("actual {positive}"), cm.tp, cm.fn_).unwrap();
    writeln!(s, "{:<18}{:>20}{:>20}", format!("actual {negative}"), cm.fp, cm.tn).unwrap();
    writeln!(s, "tp={} tn={} fp={} fn={} total={}", cm.tp, cm.tn, cm.fp, cm.fn_, cm.total()).unwrap();
    s
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr).unwrap();
    }
    s
}

pub fn auc_csv(roc: &RocCurve, averaged: &AveragedAuc) -> String {
    let mut s = String::from("measure,value\n");
    writeln!(s, "auc,{}", roc.auc).unwrap();
    writeln!(s, "micro_auc,{}", averaged.micro).unwrap();
    writeln!(s, "macro_auc,{}", averaged.macro_).unwrap();
    for (label, auc) in &averaged.per_class {
        writeln!(s, "auc_{label},{auc}").unwrap();
    }
    s
}

/// Human-readable summary of the headline numbers.
pub fn summary_text(report: &MetricReport, cm: &ConfusionMatrix, averaged: &AveragedAuc) -> String {
    let mut s = String::new();
    for (i, (name, v)) in MetricReport::NAMES.iter().zip(report.values()).enumerate() {
        let note = if report.is_undefined(i) { " (undefined)" } else { "" };
        writeln!(s, "{name:<12} {v:>7.2}%{note}").unwrap();
    }
    writeln!(s, "micro AUC    {:>7.4}", averaged.micro).unwrap();
    writeln!(s, "macro AUC    {:>7.4}", averaged.macro_).unwrap();
    writeln!(s, "examples     {:>7}", cm.total()).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use aquascan_core::metrics::metric_report;

    #[test]
    fn confusion_layout() {
        let text = confusion_text(&ConfusionMatrix::new(19, 13, 2, 1), Label::Infected);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "positive class: infected");
        assert!(lines[2].starts_with("actual infected") && lines[2].trim_end().ends_with('1'));
        assert!(lines[3].starts_with("actual fresh") && lines[3].trim_end().ends_with("13"));
        assert_eq!(lines[4], "tp=19 tn=13 fp=2 fn=1 total=35");
    }

    #[test]
    fn metric_rows() {
        let r = metric_report(&ConfusionMatrix::new(0, 3, 0, 0)).unwrap();
        let csv = metrics_csv(&r);
        assert!(csv.contains("\naccuracy,100,true\n"));
        assert!(csv.contains("\nprecision,0,false\n"));
        assert_eq!(csv.lines().count(), 9);
    }
}
