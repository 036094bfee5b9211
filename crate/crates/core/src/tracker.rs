//! Per-frame tracking pipeline with birth/death memory.
//!
//! Each [`Tracker`] follows one object class. A frame runs predict →
//! associate → update → lifecycle exactly once. New detections start
//! `Tentative` trajectories that are confirmed after `bir_min` consecutive
//! matches (the initiating detection counts); a miss kills a tentative
//! trajectory at once, while a confirmed one survives up to `age_max`
//! consecutive misses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment::{associate, build_affinity_with, AffinityMode};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Box3D, DistanceMetric};
use crate::io::Detection3D;
use crate::kalman::{KalmanConfig, KalmanFilter, TrackState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub affinity: AffinityMode,
    /// Only used in distance mode.
    pub distance_metric: DistanceMetric,
    /// Minimum IoU (IoU mode) or maximum center distance in meters
    /// (distance mode) for an association to stand.
    pub gate: f64,
    /// Consecutive matches needed to confirm a trajectory (also called
    /// F_min).
    pub bir_min: u32,
    /// Consecutive misses a confirmed trajectory survives (also called
    /// Age_min).
    pub age_max: u32,
    /// Emit predicted boxes for confirmed trajectories that missed.
    pub output_coasting: bool,
    /// Emit tentative trajectories during the first `bir_min - 1` frames.
    pub startup_emit: bool,
    pub filter: KalmanConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            affinity: AffinityMode::Iou,
            distance_metric: DistanceMetric::Planar,
            gate: 0.01,
            bir_min: 3,
            age_max: 2,
            output_coasting: false,
            startup_emit: true,
            filter: KalmanConfig::default(),
        }
    }
}

impl TrackerConfig {
    /// Tuned defaults for the KITTI categories; anything else gets the Car
    /// settings.
    pub fn for_class(class: &str) -> Self {
        match class {
            "Pedestrian" => Self {
                affinity: AffinityMode::NegDistance,
                gate: 1.0,
                ..Self::default()
            },
            "Cyclist" => Self {
                affinity: AffinityMode::NegDistance,
                gate: 6.0,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }

    /// Distance association with a 10 m gate, used for every nuScenes class.
    pub fn nuscenes() -> Self {
        Self {
            affinity: AffinityMode::NegDistance,
            gate: 10.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bir_min < 1 {
            return Err(Error::Config("bir_min must be >= 1".into()));
        }
        if self.age_max < 1 {
            return Err(Error::Config("age_max must be >= 1".into()));
        }
        if !self.gate.is_finite() {
            return Err(Error::Config(format!(
                "gate must be finite, got {}",
                self.gate
            )));
        }
        match self.affinity {
            AffinityMode::Iou if !(0.0..=1.0).contains(&self.gate) => Err(Error::Config(format!(
                "IoU gate must lie in [0, 1], got {}",
                self.gate
            ))),
            AffinityMode::NegDistance if self.gate <= 0.0 => Err(Error::Config(format!(
                "distance gate must be positive, got {}",
                self.gate
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub frame: u32,
    pub bbox: Box3D,
    pub score: f64,
    /// `false` when the box is a prediction (no detection that frame).
    pub matched: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub id: u64,
    pub class: String,
    pub state: TrackState,
    /// Score of the latest matched detection.
    pub score: f64,
    /// Consecutive matched frames.
    pub hits: u32,
    pub time_since_update: u32,
    /// Frames alive, including the birth frame.
    pub age: u32,
    pub history: Vec<HistoryRecord>,
    pub status: TrackStatus,
}

impl Trajectory {
    pub fn bbox(&self) -> Box3D {
        self.state.to_box()
    }
}

/// One row of tracker output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub frame: u32,
    pub id: u64,
    pub class: String,
    pub bbox: Box3D,
    pub score: f64,
    pub status: TrackStatus,
    pub coasting: bool,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    filter: KalmanFilter,
    class: String,
    active: Vec<Trajectory>,
    finished: Vec<Trajectory>,
    next_id: u64,
    last_frame: Option<u32>,
    frames_seen: u32,
}

impl Tracker {
    pub fn new(class: impl Into<String>, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            filter: KalmanFilter::new(config.filter)?,
            config,
            class: class.into(),
            active: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            last_frame: None,
            frames_seen: 0,
        })
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live (tentative or confirmed) trajectories, ordered by id.
    pub fn active(&self) -> &[Trajectory] {
        &self.active
    }

    /// Trajectories that died so far, in order of death.
    pub fn finished(&self) -> &[Trajectory] {
        &self.finished
    }

    /// Number of ids handed out.
    pub fn ids_issued(&self) -> u64 {
        self.next_id - 1
    }

    /// Ends the sequence: returns every trajectory (dead ones first, then
    /// live ones by id) and resets the tracker.
    pub fn finish(&mut self) -> Vec<Trajectory> {
        let mut all = std::mem::take(&mut self.finished);
        all.append(&mut self.active);
        self.last_frame = None;
        self.frames_seen = 0;
        all
    }

    /// Processes one frame. Frame indices must strictly increase; skipped
    /// frames are stepped through with no detections and their output
    /// dropped.
    pub fn step(&mut self, frame: u32, detections: &[Detection3D]) -> Result<Vec<TrackOutput>> {
        if let Some(d) = detections.iter().find(|d| d.class != self.class) {
            return Err(Error::Usage(format!(
                "tracker for class {} received a {} detection",
                self.class, d.class
            )));
        }
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Usage(format!(
                    "frame {frame} is not after previous frame {last}"
                )));
            }
            for gap in last + 1..frame {
                self.advance(gap, &[])?;
            }
        }
        self.advance(frame, detections)
    }

    fn advance(&mut self, frame: u32, detections: &[Detection3D]) -> Result<Vec<TrackOutput>> {
        self.last_frame = Some(frame);
        self.frames_seen += 1;

        for t in &mut self.active {
            t.state = self.filter.predict(&t.state);
            t.age += 1;
        }

        let predicted: Vec<Box3D> = self.active.iter().map(Trajectory::bbox).collect();
        let observed: Vec<Box3D> = detections.iter().map(|d| d.bbox).collect();
        let affinity = build_affinity_with(
            Execution::Sequential,
            &predicted,
            &observed,
            self.config.affinity,
            self.config.distance_metric,
        );
        let assoc = associate(&affinity, self.config.gate)?;

        for &(ti, di) in &assoc.matches {
            let det = &detections[di];
            let t = &mut self.active[ti];
            t.state = self.filter.update(&t.state, &det.bbox)?;
            t.hits += 1;
            t.time_since_update = 0;
            t.score = det.score;
        }
        for &ti in &assoc.unmatched_trajectories {
            let t = &mut self.active[ti];
            t.time_since_update += 1;
            t.hits = 0;
        }
        for &di in &assoc.unmatched_detections {
            let det = &detections[di];
            self.active.push(Trajectory {
                id: self.next_id,
                class: self.class.clone(),
                state: self.filter.init_state(&det.bbox),
                score: det.score,
                hits: 1,
                time_since_update: 0,
                age: 1,
                history: Vec::new(),
                status: TrackStatus::Tentative,
            });
            self.next_id += 1;
        }

        let (bir_min, age_max) = (self.config.bir_min, self.config.age_max);
        let startup = self.config.startup_emit && self.frames_seen < bir_min;
        let mut outputs = Vec::new();
        for t in &mut self.active {
            match t.status {
                TrackStatus::Tentative if t.time_since_update > 0 => t.status = TrackStatus::Dead,
                TrackStatus::Tentative if t.hits >= bir_min => t.status = TrackStatus::Confirmed,
                TrackStatus::Confirmed if t.time_since_update > age_max => {
                    t.status = TrackStatus::Dead
                }
                _ => {}
            }
            if t.status == TrackStatus::Dead {
                continue;
            }
            let matched = t.time_since_update == 0;
            let bbox = t.bbox();
            t.history.push(HistoryRecord {
                frame,
                bbox,
                score: t.score,
                matched,
            });
            let emit = if matched {
                t.status == TrackStatus::Confirmed || startup
            } else {
                self.config.output_coasting && t.status == TrackStatus::Confirmed
            };
            if emit {
                outputs.push(TrackOutput {
                    frame,
                    id: t.id,
                    class: t.class.clone(),
                    bbox,
                    score: t.score,
                    status: t.status,
                    coasting: !matched,
                });
            }
        }

        let (dead, alive): (Vec<_>, Vec<_>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|t| t.status == TrackStatus::Dead);
        self.active = alive;
        self.finished.extend(dead);
        outputs.sort_by_key(|o| o.id);
        Ok(outputs)
    }
}

/// Tracks one class through a sequence given as per-frame detection lists
/// (index = frame number).
pub fn run_sequence(
    class: &str,
    frames: &[Vec<Detection3D>],
    config: &TrackerConfig,
) -> Result<Vec<TrackOutput>> {
    let mut tracker = Tracker::new(class, config.clone())?;
    let mut out = Vec::new();
    for (f, dets) in frames.iter().enumerate() {
        out.extend(tracker.step(f as u32, dets)?);
    }
    Ok(out)
}

/// Tracks every class in `classes` independently (in parallel through
/// `exec`) and merges the results. Ids are made unique across classes by
/// offsetting each class by the ids issued to the classes before it.
pub fn run_sequence_classes(
    exec: Execution,
    frames: &[Vec<Detection3D>],
    classes: &[String],
    configs: &BTreeMap<String, TrackerConfig>,
) -> Result<Vec<TrackOutput>> {
    let per_class = exec.try_map(classes, |class| -> Result<(Vec<TrackOutput>, u64)> {
        let config = configs
            .get(class)
            .cloned()
            .unwrap_or_else(|| TrackerConfig::for_class(class));
        let mut tracker = Tracker::new(class.clone(), config)?;
        let mut out = Vec::new();
        for (f, dets) in frames.iter().enumerate() {
            let mine: Vec<Detection3D> =
                dets.iter().filter(|d| &d.class == class).cloned().collect();
            out.extend(tracker.step(f as u32, &mine)?);
        }
        Ok((out, tracker.ids_issued()))
    })?;
    let mut merged = Vec::new();
    let mut offset = 0;
    for (outputs, issued) in per_class {
        merged.extend(outputs.into_iter().map(|mut o| {
            o.id += offset;
            o
        }));
        offset += issued;
    }
    merged.sort_by_key(|o| (o.frame, o.id));
    Ok(merged)
}
