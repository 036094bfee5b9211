//! CSV in the canonical frame.
//!
//! Detections: `frame,class,x,y,z,yaw,l,w,h,score`.
//! Results:    `frame,id,class,x,y,z,yaw,l,w,h,score`.
//!
//! Columns may come in any order. Floats are written in shortest
//! round-trip form, so write → parse is exact.

use std::fmt::Write as _;

use super::{Detection3D, SequenceBundle};
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::tracker::TrackOutput;

pub const DETECTION_COLUMNS: [&str; 10] = [
    "frame", "class", "x", "y", "z", "yaw", "l", "w", "h", "score",
];
pub const RESULT_COLUMNS: [&str; 11] = [
    "frame", "id", "class", "x", "y", "z", "yaw", "l", "w", "h", "score",
];

pub fn parse_detections_csv(text: &str) -> Result<SequenceBundle> {
    parse_table(text, false)
}

pub fn parse_results_csv(text: &str) -> Result<SequenceBundle> {
    parse_table(text, true)
}

fn parse_table(text: &str, with_id: bool) -> Result<SequenceBundle> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let required: &[&str] = if with_id {
        &RESULT_COLUMNS
    } else {
        &DETECTION_COLUMNS
    };
    let mut index = Vec::with_capacity(required.len());
    for name in required {
        match headers.iter().position(|h| h == *name) {
            Some(i) => index.push(i),
            None => return Err(Error::Schema((*name).to_string())),
        }
    }
    let col = |name: &str| index[required.iter().position(|c| *c == name).unwrap()];
    let (c_frame, c_class, c_score) = (col("frame"), col("class"), col("score"));
    let pose_cols = ["x", "y", "z", "yaw", "l", "w", "h"].map(col);
    let c_id = with_id.then(|| col("id"));

    let mut bundle = SequenceBundle::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("");
        let float = |i: usize| -> Result<f64> {
            let tok = get(i);
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    message: format!("bad numeric value `{tok}` in column `{}`", &headers[i]),
                }),
            }
        };
        let frame: u32 = get(c_frame).parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad frame `{}`", get(c_frame)),
        })?;
        let [x, y, z, yaw, l, w, h] = [
            float(pose_cols[0])?,
            float(pose_cols[1])?,
            float(pose_cols[2])?,
            float(pose_cols[3])?,
            float(pose_cols[4])?,
            float(pose_cols[5])?,
            float(pose_cols[6])?,
        ];
        let mut det = Detection3D::new(
            frame,
            get(c_class),
            Box3D::new(x, y, z, yaw, l, w, h),
            float(c_score)?,
        );
        if let Some(ci) = c_id {
            let id: u64 = get(ci).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad id `{}`", get(ci)),
            })?;
            det.track_id = Some(id);
        }
        bundle.insert(det, false);
    }
    bundle.check_unique_ids()?;
    Ok(bundle)
}

/// Tracker output as result CSV, header included, ordered by frame then id.
pub fn write_results_csv(outputs: &[TrackOutput]) -> String {
    let mut rows: Vec<&TrackOutput> = outputs.iter().collect();
    rows.sort_by_key(|o| (o.frame, o.id));
    let mut out = RESULT_COLUMNS.join(",");
    out.push('\n');
    for o in rows {
        let b = &o.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            o.frame, o.id, o.class, b.cx, b.cy, b.cz, b.yaw, b.length, b.width, b.height, o.score
        );
    }
    out
}
