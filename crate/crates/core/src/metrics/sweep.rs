//! Recall sweep and the integral metrics AMOTA, AMOTP and sAMOTA.
//!
//! For each target recall `r ∈ {1/L, …, 1}` the sweep picks the highest
//! trajectory-confidence threshold whose kept hypotheses reach recall ≥ r
//! and evaluates CLEAR metrics there. Recall only grows as the threshold
//! drops (the matcher maximizes matches per frame), so each target is found
//! by binary search over the distinct confidences. Targets beyond the
//! system's maximum recall contribute zero to every integral.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::clear::{smota_r, Evaluator};
use super::ClearScore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// `i / L`.
    pub target_recall: f64,
    /// Confidence threshold evaluated (`None` when there are no hypotheses).
    pub threshold: Option<f64>,
    /// Whether some threshold reaches the target recall.
    pub reachable: bool,
    /// CLEAR metrics at `threshold`; for unreachable targets this is the
    /// lowest threshold (all hypotheses kept).
    pub score: ClearScore,
    /// Integrand values: zero when unreachable.
    pub mota_r: f64,
    pub smota_r: f64,
    pub motp_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegralMetrics {
    pub samota: f64,
    pub amota: f64,
    pub amotp: f64,
}

/// Memoized `score_at` over confidence indices.
struct Scores<'a> {
    ev: &'a Evaluator,
    cache: Mutex<HashMap<usize, ClearScore>>,
}

impl Scores<'_> {
    /// Score keeping the top `k + 1` distinct confidences.
    fn at(&self, k: usize) -> Result<ClearScore> {
        if let Some(s) = self.cache.lock().unwrap().get(&k) {
            return Ok(*s);
        }
        let s = self.ev.score_at(Some(self.ev.confidences()[k]))?;
        self.cache.lock().unwrap().insert(k, s);
        Ok(s)
    }
}

/// `recall(tp) >= i / steps`, evaluated exactly in integers.
fn reaches(tp: usize, num_gt: usize, i: usize, steps: usize) -> bool {
    tp as u128 * steps as u128 >= i as u128 * num_gt as u128
}

pub fn recall_sweep(ev: &Evaluator, steps: usize) -> Result<Vec<SweepEntry>> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "recall sweep needs at least one step".into(),
        ));
    }
    let n = ev.num_gt();
    let scores = Scores {
        ev,
        cache: Mutex::new(HashMap::new()),
    };
    let confs = ev.confidences();
    let full = if confs.is_empty() {
        ev.score_at(None)?
    } else {
        scores.at(confs.len() - 1)?
    };

    let mut entries = Vec::with_capacity(steps);
    // lower bound for the search: targets are increasing, so is the answer
    let mut lo = 0usize;
    for i in 1..=steps {
        let r = i as f64 / steps as f64;
        if !reaches(full.tp, n, i, steps) {
            entries.push(SweepEntry {
                target_recall: r,
                threshold: full.threshold,
                reachable: false,
                score: full,
                mota_r: 0.0,
                smota_r: 0.0,
                motp_r: 0.0,
            });
            continue;
        }
        let mut hi = confs.len() - 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if reaches(scores.at(mid)?.tp, n, i, steps) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let s = scores.at(lo)?;
        entries.push(SweepEntry {
            target_recall: r,
            threshold: s.threshold,
            reachable: true,
            score: s,
            mota_r: s.mota,
            smota_r: smota_r(s.fp, s.fn_, s.ids, r, n)?,
            motp_r: s.motp,
        });
    }
    Ok(entries)
}

/// Unweighted means of the sweep integrands.
pub fn integral_metrics(entries: &[SweepEntry], steps: usize) -> Result<IntegralMetrics> {
    if entries.len() != steps || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected {steps} sweep entries, got {}",
            entries.len()
        )));
    }
    let l = steps as f64;
    Ok(IntegralMetrics {
        samota: entries.iter().map(|e| e.smota_r).sum::<f64>() / l,
        amota: entries.iter().map(|e| e.mota_r).sum::<f64>() / l,
        amotp: entries.iter().map(|e| e.motp_r).sum::<f64>() / l,
    })
}
