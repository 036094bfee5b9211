//! JSON run configuration.
//!
//! Tracker settings resolve in layers: per-class defaults, then the global
//! `tracker` block, then `class_overrides[class]`, then command-line flags.
//!
//! ```json
//! {
//!   "classes": ["Car", "Pedestrian", "Cyclist"],
//!   "tracker": { "bir_min": 3, "age_max": 2 },
//!   "class_overrides": { "Pedestrian": { "affinity": "neg_distance", "gate": 1.0 } },
//!   "evaluation": { "criterion": "iou", "iou_thres": [0.25, 0.5, 0.7], "recall_steps": 40 }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::AffinityMode;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::DistanceMetric;
use crate::metrics::Criterion;
use crate::tracker::TrackerConfig;

/// Partial [`TrackerConfig`]; unset fields keep the layer below.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerOverrides {
    pub affinity: Option<AffinityMode>,
    pub distance_metric: Option<DistanceMetric>,
    pub gate: Option<f64>,
    pub bir_min: Option<u32>,
    pub age_max: Option<u32>,
    pub output_coasting: Option<bool>,
    pub startup_emit: Option<bool>,
    pub angular_velocity: Option<bool>,
    pub orientation_correction: Option<bool>,
    pub initial_observed_var: Option<f64>,
    pub initial_velocity_var: Option<f64>,
    pub process_observed_var: Option<f64>,
    pub process_velocity_var: Option<f64>,
    pub measurement_var: Option<f64>,
}

impl TrackerOverrides {
    pub fn apply(&self, c: &mut TrackerConfig) {
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$($target).+ = v; })*
            };
        }
        set!(
            affinity => affinity,
            distance_metric => distance_metric,
            gate => gate,
            bir_min => bir_min,
            age_max => age_max,
            output_coasting => output_coasting,
            startup_emit => startup_emit,
            angular_velocity => filter.angular_velocity,
            orientation_correction => filter.orientation_correction,
            initial_observed_var => filter.initial_observed_var,
            initial_velocity_var => filter.initial_velocity_var,
            process_observed_var => filter.process_observed_var,
            process_velocity_var => filter.process_velocity_var,
            measurement_var => filter.measurement_var,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    #[default]
    Iou,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub criterion: CriterionKind,
    /// One evaluation per threshold in IoU mode.
    pub iou_thres: Vec<f64>,
    /// Center-distance threshold (meters) in distance mode.
    pub dist_thres: f64,
    pub recall_steps: usize,
    /// Classes whose ground truth is ignored (neither TP nor FP) when
    /// evaluating the key class.
    pub neighbor_classes: BTreeMap<String, Vec<String>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let mut neighbor_classes = BTreeMap::new();
        neighbor_classes.insert("Car".to_string(), vec!["Van".to_string()]);
        neighbor_classes.insert("Pedestrian".to_string(), vec!["Person_sitting".to_string()]);
        Self {
            criterion: CriterionKind::Iou,
            iou_thres: vec![0.25],
            dist_thres: 2.0,
            recall_steps: 40,
            neighbor_classes,
        }
    }
}

impl EvalConfig {
    pub fn criteria(&self) -> Vec<Criterion> {
        match self.criterion {
            CriterionKind::Iou => self.iou_thres.iter().map(|&t| Criterion::Iou(t)).collect(),
            CriterionKind::Distance => vec![Criterion::Distance(self.dist_thres)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.recall_steps == 0 {
            return Err(Error::Config("recall_steps must be >= 1".into()));
        }
        for c in self.criteria() {
            c.validate()?;
        }
        if self.criteria().is_empty() {
            return Err(Error::Config("no evaluation criterion configured".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub classes: Vec<String>,
    pub tracker: TrackerOverrides,
    pub class_overrides: BTreeMap<String, TrackerOverrides>,
    pub evaluation: EvalConfig,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classes: vec!["Car".into(), "Pedestrian".into(), "Cyclist".into()],
            tracker: TrackerOverrides::default(),
            class_overrides: BTreeMap::new(),
            evaluation: EvalConfig::default(),
            execution: Execution::Parallel,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fully resolved tracker settings for `class`, with `cli` applied last.
    pub fn tracker_config(&self, class: &str, cli: &TrackerOverrides) -> Result<TrackerConfig> {
        let mut c = TrackerConfig::for_class(class);
        self.tracker.apply(&mut c);
        if let Some(o) = self.class_overrides.get(class) {
            o.apply(&mut c);
        }
        cli.apply(&mut c);
        c.validate()?;
        Ok(c)
    }
}
