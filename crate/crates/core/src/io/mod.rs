//! Reading detections and labels, writing tracking results, run
//! configuration.
//!
//! Two on-disk shapes are supported: the KITTI tracking label format
//! (camera frame, converted on the way in and out) and plain CSV in the
//! canonical frame.

mod config;
mod csv_format;
mod kitti;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{CriterionKind, EvalConfig, RunConfig, TrackerOverrides};
pub use csv_format::{
    parse_detections_csv, parse_results_csv, write_results_csv, DETECTION_COLUMNS, RESULT_COLUMNS,
};
pub use kitti::{
    canonical_to_kitti, kitti_to_canonical, parse_kitti_labels, write_kitti_rows,
    write_results_kitti, KittiPose,
};

use crate::error::{Error, Result};
use crate::geometry::Box3D;

/// Fields carried through from a KITTI row that the tracker does not use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KittiExtras {
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox2d: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection3D {
    pub frame: u32,
    pub class: String,
    pub bbox: Box3D,
    pub score: f64,
    /// Present for ground truth and tracker output, absent for raw
    /// detections.
    pub track_id: Option<u64>,
    pub extras: Option<KittiExtras>,
}

impl Detection3D {
    pub fn new(frame: u32, class: impl Into<String>, bbox: Box3D, score: f64) -> Self {
        Self {
            frame,
            class: class.into(),
            bbox,
            score,
            track_id: None,
            extras: None,
        }
    }

    pub fn with_track_id(mut self, id: u64) -> Self {
        self.track_id = Some(id);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    pub objects: Vec<Detection3D>,
    /// KITTI `DontCare` regions.
    pub dont_care: Vec<Detection3D>,
}

/// One sequence; `frames[i]` holds frame `i`, with empty frames filling
/// any gaps in the input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceBundle {
    pub id: String,
    pub frames: Vec<Frame>,
}

impl SequenceBundle {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            frames: Vec::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn object_count(&self) -> usize {
        self.frames.iter().map(|f| f.objects.len()).sum()
    }

    /// Per-frame detection lists, as fed to the tracker.
    pub fn detections_per_frame(&self) -> Vec<Vec<Detection3D>> {
        self.frames.iter().map(|f| f.objects.clone()).collect()
    }

    /// Sorted distinct class labels (excluding `DontCare`).
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self
            .frames
            .iter()
            .flat_map(|f| f.objects.iter().map(|d| d.class.clone()))
            .collect();
        c.sort();
        c.dedup();
        c
    }

    /// Places `det` into its frame, growing the frame list as needed.
    pub(crate) fn insert(&mut self, det: Detection3D, dont_care: bool) {
        let f = det.frame as usize;
        if self.frames.len() <= f {
            self.frames.resize_with(f + 1, Frame::default);
        }
        let frame = &mut self.frames[f];
        if dont_care {
            frame.dont_care.push(det);
        } else {
            frame.objects.push(det);
        }
    }

    /// Rejects two objects sharing a track id within one frame.
    pub(crate) fn check_unique_ids(&self) -> Result<()> {
        for (f, frame) in self.frames.iter().enumerate() {
            let mut ids: Vec<u64> = frame.objects.iter().filter_map(|d| d.track_id).collect();
            ids.sort_unstable();
            if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("track id {} appears twice in frame {f}", w[0]),
                });
            }
        }
        Ok(())
    }
}

/// Input file flavors recognized by extension and header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Kitti,
    DetectionCsv,
    ResultCsv,
}

/// Loads one sequence file; the sequence id is the file stem.
pub fn load_sequence(path: &Path) -> Result<(SequenceBundle, InputFormat)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (mut bundle, format) = if is_csv {
        let header = text.lines().next().unwrap_or("");
        if header.split(',').any(|c| c.trim() == "id") {
            (parse_results_csv(&text)?, InputFormat::ResultCsv)
        } else {
            (parse_detections_csv(&text)?, InputFormat::DetectionCsv)
        }
    } else {
        (parse_kitti_labels(&text)?, InputFormat::Kitti)
    };
    bundle.id = id;
    Ok((bundle, format))
}

/// Sequence files in `path` (a single file, or a directory of `.txt` /
/// `.csv` files), sorted by name.
pub fn sequence_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        let ext = p
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if p.is_file() && matches!(ext.as_deref(), Some("txt") | Some("csv")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_sequences(path: &Path) -> Result<Vec<SequenceBundle>> {
    sequence_files(path)?
        .iter()
        .map(|p| load_sequence(p).map(|(b, _)| b))
        .collect()
}
