//! KITTI tracking labels:
//!
//! ```text
//! frame track_id type truncated occluded alpha x1 y1 x2 y2 h w l x y z rotation_y [score]
//! ```
//!
//! KITTI poses live in the camera frame (x right, y down, z forward) with
//! the location at the bottom-center of the box and `rotation_y` about the
//! camera y axis. The canonical frame maps camera z → x, −x → y, −y → z and
//! moves the origin to the geometric center.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use super::{Detection3D, KittiExtras, SequenceBundle};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Box3D};
use crate::tracker::TrackOutput;

const DONT_CARE: &str = "DontCare";

/// Camera-frame pose fields of a KITTI row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KittiPose {
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rotation_y: f64,
}

pub fn kitti_to_canonical(p: &KittiPose) -> Box3D {
    Box3D::new(
        p.z,
        -p.x,
        -p.y + 0.5 * p.h,
        -p.rotation_y - FRAC_PI_2,
        p.l,
        p.w,
        p.h,
    )
}

pub fn canonical_to_kitti(b: &Box3D) -> KittiPose {
    KittiPose {
        h: b.height,
        w: b.width,
        l: b.length,
        x: -b.cy,
        y: 0.5 * b.height - b.cz,
        z: b.cx,
        rotation_y: wrap_angle(-b.yaw - FRAC_PI_2),
    }
}

fn field<T: std::str::FromStr>(tok: &str, name: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value `{tok}`"),
    })
}

/// Parses a KITTI tracking label (or result) file. Rows with track id −1
/// get no track id; a missing score column means score 1.0.
pub fn parse_kitti_labels(text: &str) -> Result<SequenceBundle> {
    let mut bundle = SequenceBundle::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 17 && toks.len() != 18 {
            return Err(Error::Parse {
                line,
                message: format!("expected 17 or 18 fields, found {}", toks.len()),
            });
        }
        let frame: u32 = field(toks[0], "frame", line)?;
        let track: i64 = field(toks[1], "track_id", line)?;
        let class = toks[2].to_string();
        let truncated: f64 = field(toks[3], "truncated", line)?;
        let occluded: i32 = field(toks[4], "occluded", line)?;
        // alpha, x1, y1, x2, y2, h, w, l, x, y, z, rotation_y
        let mut num = [0.0f64; 12];
        for (slot, tok) in num.iter_mut().zip(&toks[5..17]) {
            *slot = field(tok, "numeric", line)?;
        }
        let score = if toks.len() == 18 {
            field(toks[17], "score", line)?
        } else {
            1.0
        };
        if let Some(bad) = num
            .iter()
            .chain([truncated, score].iter())
            .find(|v| !v.is_finite())
        {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {bad}"),
            });
        }
        let pose = KittiPose {
            h: num[5],
            w: num[6],
            l: num[7],
            x: num[8],
            y: num[9],
            z: num[10],
            rotation_y: num[11],
        };
        let det = Detection3D {
            frame,
            class: class.clone(),
            bbox: kitti_to_canonical(&pose),
            score,
            track_id: (track >= 0).then_some(track as u64),
            extras: Some(KittiExtras {
                truncated,
                occluded,
                alpha: num[0],
                bbox2d: [num[1], num[2], num[3], num[4]],
            }),
        };
        bundle.insert(det, class == DONT_CARE);
    }
    bundle.check_unique_ids()?;
    Ok(bundle)
}

/// Writes detections (ground truth, hypotheses) as KITTI rows in frame
/// order, score column included.
pub fn write_kitti_rows(bundle: &SequenceBundle) -> String {
    let mut out = String::new();
    for frame in &bundle.frames {
        for d in frame.objects.iter().chain(frame.dont_care.iter()) {
            let id = d.track_id.map(|i| i as i64).unwrap_or(-1);
            push_row(
                &mut out,
                d.frame,
                id,
                &d.class,
                &d.bbox,
                d.score,
                d.extras.as_ref(),
            );
        }
    }
    out
}

/// Tracker output as KITTI rows, ordered by frame then id. 2D fields are
/// written as KITTI's unknown markers (alpha −10, zero box).
pub fn write_results_kitti(outputs: &[TrackOutput]) -> String {
    let mut rows: Vec<&TrackOutput> = outputs.iter().collect();
    rows.sort_by_key(|o| (o.frame, o.id));
    let mut out = String::new();
    for o in rows {
        push_row(
            &mut out,
            o.frame,
            o.id as i64,
            &o.class,
            &o.bbox,
            o.score,
            None,
        );
    }
    out
}

fn push_row(
    out: &mut String,
    frame: u32,
    id: i64,
    class: &str,
    bbox: &Box3D,
    score: f64,
    extras: Option<&KittiExtras>,
) {
    let e = extras.copied().unwrap_or(KittiExtras {
        truncated: 0.0,
        occluded: 0,
        alpha: -10.0,
        bbox2d: [0.0; 4],
    });
    let p = canonical_to_kitti(bbox);
    let _ = writeln!(
        out,
        "{frame} {id} {class} {} {} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
        e.truncated,
        e.occluded,
        e.alpha,
        e.bbox2d[0],
        e.bbox2d[1],
        e.bbox2d[2],
        e.bbox2d[3],
        p.h,
        p.w,
        p.l,
        p.x,
        p.y,
        p.z,
        p.rotation_y,
        score
    );
}
