//! 3D MOT evaluation.
//!
//! Hypotheses are matched to ground truth per frame directly in 3D (IoU or
//! center distance). CLEAR metrics are computed at confidence thresholds
//! picked along a recall sweep, and the sweep is integrated into AMOTA,
//! AMOTP and the scaled sAMOTA.

mod clear;
mod curves;
mod matching;
mod report;
mod sweep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use clear::{clear_metrics, mota, smota_r, Evaluator};
pub use curves::{curves_csv, curves_svg, CurveMetric, CURVE_HEADER};
pub use matching::{match_frame, FrameMatch, FramePair};
pub use report::{evaluate, evaluate_class, Aggregate, ClassReport, MetricsReport};
pub use sweep::{integral_metrics, recall_sweep, IntegralMetrics, SweepEntry};

use crate::error::{Error, Result};
use crate::geometry::{center_distance, iou_3d, Box3D, DistanceMetric};
use crate::io::SequenceBundle;

/// Matching criterion for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// A pair matches when 3D IoU ≥ threshold.
    Iou(f64),
    /// A pair matches when planar center distance ≤ threshold (meters).
    Distance(f64),
}

impl Criterion {
    /// Match affinity in `[0, 1]` (IoU, or `1 − d/threshold`), or `None`
    /// when the pair fails the criterion.
    pub fn affinity(&self, gt: &Box3D, hyp: &Box3D) -> Option<f64> {
        match *self {
            Criterion::Iou(t) => {
                let iou = iou_3d(gt, hyp);
                (iou > 0.0 && iou >= t).then_some(iou)
            }
            Criterion::Distance(t) => {
                let d = center_distance(gt, hyp, DistanceMetric::Planar);
                (d <= t).then(|| 1.0 - d / t)
            }
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            Criterion::Iou(t) | Criterion::Distance(t) => t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Criterion::Iou(t) if !(0.0..=1.0).contains(&t) => Err(Error::Config(format!(
                "IoU threshold must lie in [0, 1], got {t}"
            ))),
            Criterion::Distance(t) if !(t > 0.0 && t.is_finite()) => Err(Error::Config(format!(
                "distance threshold must be positive, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Criterion::Iou(t) => format!("IoU_thres={t}"),
            Criterion::Distance(t) => format!("Dist_thres={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub track_id: u64,
    pub class: String,
    pub bbox: Box3D,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtFrame {
    pub objects: Vec<GtObject>,
    /// Regions where unmatched hypotheses are not counted as false
    /// positives (neighboring classes).
    pub ignore: Vec<Box3D>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtSequence {
    pub name: String,
    pub frames: Vec<GtFrame>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    pub sequences: Vec<GtSequence>,
}

impl GroundTruthSet {
    /// Total ground-truth object instances over all frames.
    pub fn num_gt(&self) -> usize {
        self.sequences
            .iter()
            .flat_map(|s| s.frames.iter())
            .map(|f| f.objects.len())
            .sum()
    }

    /// Ground truth of `class` from label bundles; objects of `neighbors`
    /// become ignore regions.
    pub fn from_bundles(
        bundles: &[SequenceBundle],
        class: &str,
        neighbors: &[String],
    ) -> Result<Self> {
        let mut sequences = Vec::with_capacity(bundles.len());
        for b in bundles {
            let mut frames = Vec::with_capacity(b.frames.len());
            for (f, frame) in b.frames.iter().enumerate() {
                let mut gf = GtFrame::default();
                for d in &frame.objects {
                    if d.class == class {
                        let track_id = d.track_id.ok_or_else(|| Error::Parse {
                            line: 0,
                            message: format!(
                                "ground truth object in sequence {} frame {f} has no track id",
                                b.id
                            ),
                        })?;
                        gf.objects.push(GtObject {
                            track_id,
                            class: d.class.clone(),
                            bbox: d.bbox,
                        });
                    } else if neighbors.iter().any(|n| n == &d.class) {
                        gf.ignore.push(d.bbox);
                    }
                }
                frames.push(gf);
            }
            sequences.push(GtSequence {
                name: b.id.clone(),
                frames,
            });
        }
        Ok(Self { sequences })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypObject {
    pub track_id: u64,
    pub class: String,
    pub bbox: Box3D,
    /// Per-frame score; the trajectory confidence is the mean over frames.
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypSequence {
    pub name: String,
    pub frames: Vec<Vec<HypObject>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypothesisSet {
    pub sequences: Vec<HypSequence>,
}

impl HypothesisSet {
    pub fn from_bundles(bundles: &[SequenceBundle], class: &str) -> Result<Self> {
        let mut sequences = Vec::with_capacity(bundles.len());
        for b in bundles {
            let mut frames = Vec::with_capacity(b.frames.len());
            for (f, frame) in b.frames.iter().enumerate() {
                let mut objs = Vec::new();
                for d in frame.objects.iter().filter(|d| d.class == class) {
                    let track_id = d.track_id.ok_or_else(|| Error::Parse {
                        line: 0,
                        message: format!(
                            "hypothesis in sequence {} frame {f} has no track id",
                            b.id
                        ),
                    })?;
                    objs.push(HypObject {
                        track_id,
                        class: d.class.clone(),
                        bbox: d.bbox,
                        score: d.score,
                    });
                }
                frames.push(objs);
            }
            sequences.push(HypSequence {
                name: b.id.clone(),
                frames,
            });
        }
        Ok(Self { sequences })
    }

    /// Mean frame score of every trajectory, keyed by (sequence name,
    /// track id).
    pub fn trajectory_confidences(&self) -> BTreeMap<(String, u64), f64> {
        let mut acc: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
        for s in &self.sequences {
            for h in s.frames.iter().flatten() {
                let e = acc.entry((s.name.clone(), h.track_id)).or_insert((0.0, 0));
                e.0 += h.score;
                e.1 += 1;
            }
        }
        acc.into_iter()
            .map(|(k, (sum, n))| (k, sum / n as f64))
            .collect()
    }
}

/// CLEAR metrics at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClearScore {
    /// Minimum trajectory confidence kept; `None` keeps everything.
    pub threshold: Option<f64>,
    pub num_gt: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ids: usize,
    pub frag: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub mota: f64,
    pub motp: f64,
    /// sMOTA at the achieved recall, clamped to `[0, 1]`.
    pub smota: f64,
}
