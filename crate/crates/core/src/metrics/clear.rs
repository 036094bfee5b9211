//! CLEAR metrics (MOTA, MOTP, IDS, FRAG, ...) over whole sequence sets.

use std::collections::HashMap;

use super::matching::solve_frame;
use super::{ClearScore, Criterion, GroundTruthSet, HypothesisSet};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// `1 − (FP + FN + IDS) / num_gt`.
pub fn mota(fp: usize, fn_: usize, ids: usize, num_gt: usize) -> Result<f64> {
    if num_gt == 0 {
        return Err(Error::UndefinedMetric("MOTA needs num_gt > 0".into()));
    }
    Ok(1.0 - (fp + fn_ + ids) as f64 / num_gt as f64)
}

/// Recall-scaled MOTA at recall `r`:
/// `1 − (FP + FN + IDS − (1 − r)·num_gt) / (r·num_gt)`, clamped to `[0, 1]`.
pub fn smota_r(fp: usize, fn_: usize, ids: usize, r: f64, num_gt: usize) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "recall must lie in (0, 1], got {r}"
        )));
    }
    if num_gt == 0 {
        return Err(Error::InvalidArgument("num_gt must be positive".into()));
    }
    let n = num_gt as f64;
    let errors = (fp + fn_ + ids) as f64;
    let value = 1.0 - (errors - (1.0 - r) * n) / (r * n);
    Ok(value.clamp(0.0, 1.0))
}

struct PreparedFrame {
    gt_ids: Vec<u64>,
    hyp_ids: Vec<u64>,
    /// Trajectory confidence of each hypothesis.
    hyp_conf: Vec<f64>,
    /// Row-major gt × hyp; `None` where the criterion fails.
    affinity: Vec<Option<f64>>,
    /// Hypothesis overlaps an ignore region.
    hyp_ignored: Vec<bool>,
}

struct PreparedSequence {
    frames: Vec<PreparedFrame>,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
    ids: usize,
    frag: usize,
    affinity_sum: f64,
}

impl Counts {
    fn add(mut self, o: Counts) -> Counts {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.ids += o.ids;
        self.frag += o.frag;
        self.affinity_sum += o.affinity_sum;
        self
    }
}

impl PreparedSequence {
    fn evaluate(&self, min_conf: Option<f64>) -> Counts {
        let mut c = Counts::default();
        let mut last_match: HashMap<u64, u64> = HashMap::new();
        let mut timeline: HashMap<u64, Vec<bool>> = HashMap::new();
        for f in &self.frames {
            let keep: Vec<usize> = (0..f.hyp_ids.len())
                .filter(|&j| min_conf.is_none_or(|t| f.hyp_conf[j] >= t))
                .collect();
            let n_hyp = f.hyp_ids.len();
            let pairs = solve_frame(
                f.gt_ids.len(),
                keep.len(),
                |i, k| f.affinity[i * n_hyp + keep[k]],
                |i, k| last_match.get(&f.gt_ids[i]) == Some(&f.hyp_ids[keep[k]]),
            );
            let mut gt_tracked = vec![false; f.gt_ids.len()];
            let mut hyp_used = vec![false; keep.len()];
            for p in &pairs {
                let gid = f.gt_ids[p.gt_index];
                let hid = f.hyp_ids[keep[p.hyp_index]];
                if let Some(prev) = last_match.insert(gid, hid) {
                    if prev != hid {
                        c.ids += 1;
                    }
                }
                gt_tracked[p.gt_index] = true;
                hyp_used[p.hyp_index] = true;
                c.affinity_sum += p.affinity;
            }
            c.tp += pairs.len();
            c.fn_ += f.gt_ids.len() - pairs.len();
            c.fp += hyp_used
                .iter()
                .zip(&keep)
                .filter(|(used, &j)| !**used && !f.hyp_ignored[j])
                .count();
            for (i, &gid) in f.gt_ids.iter().enumerate() {
                timeline.entry(gid).or_default().push(gt_tracked[i]);
            }
        }
        c.frag = timeline.values().map(|t| fragmentations(t)).sum();
        c
    }
}

/// Interruptions tracked → untracked that are later tracked again.
fn fragmentations(tracked: &[bool]) -> usize {
    let Some(last) = tracked.iter().rposition(|&t| t) else {
        return 0;
    };
    tracked[..last].windows(2).filter(|w| w[0] && !w[1]).count()
}

/// Prepared evaluation of one hypothesis set against one ground-truth set
/// under one criterion. Affinities are computed once; each operating point
/// only reruns the matching.
pub struct Evaluator {
    criterion: Criterion,
    sequences: Vec<PreparedSequence>,
    num_gt: usize,
    /// Distinct trajectory confidences, descending.
    confidences: Vec<f64>,
    exec: Execution,
}

impl Evaluator {
    pub fn new(
        gt: &GroundTruthSet,
        hyp: &HypothesisSet,
        criterion: Criterion,
        exec: Execution,
    ) -> Result<Self> {
        criterion.validate()?;
        let conf = hyp.trajectory_confidences();
        let mut confidences: Vec<f64> = conf.values().copied().collect();
        confidences.sort_by(|a, b| b.total_cmp(a));
        confidences.dedup();

        let sequences = exec.map(&gt.sequences, |gs| {
            let hs = hyp.sequences.iter().find(|h| h.name == gs.name);
            let n_frames = gs.frames.len().max(hs.map(|h| h.frames.len()).unwrap_or(0));
            let frames = (0..n_frames)
                .map(|f| {
                    let gf = gs.frames.get(f);
                    let hf = hs.and_then(|h| h.frames.get(f));
                    let gt_objs = gf.map(|g| g.objects.as_slice()).unwrap_or(&[]);
                    let hyp_objs = hf.map(|h| h.as_slice()).unwrap_or(&[]);
                    let ignore = gf.map(|g| g.ignore.as_slice()).unwrap_or(&[]);
                    PreparedFrame {
                        gt_ids: gt_objs.iter().map(|g| g.track_id).collect(),
                        hyp_ids: hyp_objs.iter().map(|h| h.track_id).collect(),
                        hyp_conf: hyp_objs
                            .iter()
                            .map(|h| conf[&(gs.name.clone(), h.track_id)])
                            .collect(),
                        affinity: gt_objs
                            .iter()
                            .flat_map(|g| {
                                hyp_objs
                                    .iter()
                                    .map(move |h| criterion.affinity(&g.bbox, &h.bbox))
                            })
                            .collect(),
                        hyp_ignored: hyp_objs
                            .iter()
                            .map(|h| {
                                ignore
                                    .iter()
                                    .any(|b| criterion.affinity(b, &h.bbox).is_some())
                            })
                            .collect(),
                    }
                })
                .collect();
            PreparedSequence { frames }
        });
        Ok(Self {
            criterion,
            sequences,
            num_gt: gt.num_gt(),
            confidences,
            exec,
        })
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn num_gt(&self) -> usize {
        self.num_gt
    }

    /// Distinct trajectory confidences, highest first.
    pub fn confidences(&self) -> &[f64] {
        &self.confidences
    }

    /// CLEAR metrics keeping trajectories with confidence ≥ `min_conf`
    /// (everything when `None`).
    pub fn score_at(&self, min_conf: Option<f64>) -> Result<ClearScore> {
        if self.num_gt == 0 {
            return Err(Error::UndefinedMetric(
                "no ground-truth objects (num_gt = 0)".into(),
            ));
        }
        let c = self
            .exec
            .map(&self.sequences, |s| s.evaluate(min_conf))
            .into_iter()
            .fold(Counts::default(), Counts::add);
        let n = self.num_gt;
        let recall = c.tp as f64 / n as f64;
        let precision = if c.tp + c.fp > 0 {
            c.tp as f64 / (c.tp + c.fp) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Ok(ClearScore {
            threshold: min_conf,
            num_gt: n,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            ids: c.ids,
            frag: c.frag,
            recall,
            precision,
            f1,
            mota: mota(c.fp, c.fn_, c.ids, n)?,
            motp: if c.tp > 0 {
                c.affinity_sum / c.tp as f64
            } else {
                0.0
            },
            smota: if recall > 0.0 {
                smota_r(c.fp, c.fn_, c.ids, recall, n)?
            } else {
                0.0
            },
        })
    }
}

/// CLEAR metrics with every hypothesis kept.
pub fn clear_metrics(
    gt: &GroundTruthSet,
    hyp: &HypothesisSet,
    criterion: Criterion,
) -> Result<ClearScore> {
    Evaluator::new(gt, hyp, criterion, Execution::Sequential)?.score_at(None)
}
