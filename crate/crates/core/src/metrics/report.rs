//! Per-class evaluation reports and their text / JSON rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::clear::Evaluator;
use super::sweep::{integral_metrics, recall_sweep, SweepEntry};
use super::{ClearScore, Criterion, GroundTruthSet, HypothesisSet};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::SequenceBundle;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub criterion: Criterion,
    pub num_gt: usize,
    pub samota: f64,
    pub amota: f64,
    pub amotp: f64,
    /// Reachable sweep entry with the highest MOTA; `None` when the system
    /// never reaches the first recall target.
    pub best: Option<SweepEntry>,
    /// All hypotheses kept.
    pub full: ClearScore,
    pub sweep: Vec<SweepEntry>,
}

impl ClassReport {
    /// The operating point reported in the MOTA / MOTP / IDS / FRAG columns.
    pub fn operating_point(&self) -> &ClearScore {
        self.best.as_ref().map_or(&self.full, |e| &e.score)
    }
}

/// Unweighted mean over evaluated classes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Aggregate {
    pub samota: f64,
    pub amota: f64,
    pub amotp: f64,
    pub mota: f64,
    pub motp: f64,
    pub ids: f64,
    pub frag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub criterion: Criterion,
    pub recall_steps: usize,
    pub classes: Vec<ClassReport>,
    pub aggregate: Option<Aggregate>,
    /// Requested classes without ground truth.
    pub skipped: Vec<String>,
}

impl MetricsReport {
    /// Fixed-width table, metric values as percentages.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} ({} recall steps)",
            self.criterion.label(),
            self.recall_steps
        );
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}",
            "Class", "sAMOTA", "AMOTA", "AMOTP", "MOTA", "MOTP", "IDS", "FRAG"
        );
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        for c in &self.classes {
            let op = c.operating_point();
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}",
                c.class,
                pct(c.samota),
                pct(c.amota),
                pct(c.amotp),
                pct(op.mota),
                pct(op.motp),
                op.ids,
                op.frag
            );
        }
        if let Some(a) = &self.aggregate {
            if self.classes.len() > 1 {
                let _ = writeln!(
                    s,
                    "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6.1} {:>6.1}",
                    "Mean",
                    pct(a.samota),
                    pct(a.amota),
                    pct(a.amotp),
                    pct(a.mota),
                    pct(a.motp),
                    a.ids,
                    a.frag
                );
            }
        }
        for c in &self.skipped {
            let _ = writeln!(s, "{c}: skipped (no ground truth)");
        }
        s
    }
}

pub fn evaluate_class(
    gt: &GroundTruthSet,
    hyp: &HypothesisSet,
    class: &str,
    criterion: Criterion,
    steps: usize,
    exec: Execution,
) -> Result<ClassReport> {
    let ev = Evaluator::new(gt, hyp, criterion, exec)?;
    let full = ev.score_at(None)?;
    let sweep = recall_sweep(&ev, steps)?;
    let integrals = integral_metrics(&sweep, steps)?;
    let best = sweep
        .iter()
        .filter(|e| e.reachable)
        // first maximum: highest threshold among ties
        .fold(None::<&SweepEntry>, |acc, e| match acc {
            Some(b) if b.score.mota >= e.score.mota => Some(b),
            _ => Some(e),
        })
        .copied();
    Ok(ClassReport {
        class: class.to_string(),
        criterion,
        num_gt: ev.num_gt(),
        samota: integrals.samota,
        amota: integrals.amota,
        amotp: integrals.amotp,
        best,
        full,
        sweep,
    })
}

/// Evaluates every class in `classes`. Classes with no ground-truth objects
/// are reported in `skipped`; if none remain the result is an error.
pub fn evaluate(
    gt: &[SequenceBundle],
    hyp: &[SequenceBundle],
    classes: &[String],
    criterion: Criterion,
    steps: usize,
    neighbors: &BTreeMap<String, Vec<String>>,
    exec: Execution,
) -> Result<MetricsReport> {
    criterion.validate()?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for class in classes {
        let nb = neighbors.get(class).map(Vec::as_slice).unwrap_or(&[]);
        let g = GroundTruthSet::from_bundles(gt, class, nb)?;
        if g.num_gt() == 0 {
            log::warn!("class {class}: no ground-truth objects, skipped");
            skipped.push(class.clone());
            continue;
        }
        let h = HypothesisSet::from_bundles(hyp, class)?;
        reports.push(evaluate_class(&g, &h, class, criterion, steps, exec)?);
    }
    if reports.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no ground-truth objects for any of: {}",
            classes.join(", ")
        )));
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&ClassReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let aggregate = Aggregate {
        samota: mean(&|c| c.samota),
        amota: mean(&|c| c.amota),
        amotp: mean(&|c| c.amotp),
        mota: mean(&|c| c.operating_point().mota),
        motp: mean(&|c| c.operating_point().motp),
        ids: mean(&|c| c.operating_point().ids as f64),
        frag: mean(&|c| c.operating_point().frag as f64),
    };
    Ok(MetricsReport {
        criterion,
        recall_steps: steps,
        classes: reports,
        aggregate: Some(aggregate),
        skipped,
    })
}
