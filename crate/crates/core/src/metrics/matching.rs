//! Per-frame ground-truth ↔ hypothesis matching.
//!
//! Among pairs passing the criterion the matcher picks, in priority order:
//! the most matches, then the most continued correspondences (a ground
//! truth keeping the hypothesis id it was last matched to), then the largest
//! total affinity. The three tiers are folded into one Hungarian solve with
//! weights large enough that a lower tier can never outvote a higher one.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::Criterion;
use crate::assignment::hungarian;
use crate::geometry::Box3D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    pub gt_index: usize,
    pub hyp_index: usize,
    pub affinity: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMatch {
    pub pairs: Vec<FramePair>,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
}

/// Solves one frame. `affinity(i, j)` is `None` for pairs failing the
/// criterion; `continues(i, j)` says whether pairing ground truth `i` with
/// hypothesis `j` keeps its previous correspondence.
pub(crate) fn solve_frame(
    n_gt: usize,
    n_hyp: usize,
    affinity: impl Fn(usize, usize) -> Option<f64>,
    continues: impl Fn(usize, usize) -> bool,
) -> Vec<FramePair> {
    if n_gt == 0 || n_hyp == 0 {
        return Vec::new();
    }
    // restrict to rows / columns that have at least one candidate
    let mut rows = Vec::new();
    let mut col_live = vec![false; n_hyp];
    for i in 0..n_gt {
        let mut any = false;
        for (j, live) in col_live.iter_mut().enumerate() {
            if affinity(i, j).is_some() {
                any = true;
                *live = true;
            }
        }
        if any {
            rows.push(i);
        }
    }
    let cols: Vec<usize> = (0..n_hyp).filter(|&j| col_live[j]).collect();
    if rows.is_empty() {
        return Vec::new();
    }

    let k = rows.len().min(cols.len()) as f64;
    let w_cont = k + 1.0;
    let w_match = k * (w_cont + 1.0) + 1.0;
    let cost = DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        let (i, j) = (rows[r], cols[c]);
        match affinity(i, j) {
            Some(a) => {
                let cont = if continues(i, j) { w_cont } else { 0.0 };
                -(w_match + cont + a)
            }
            None => 0.0,
        }
    });
    let assignment = hungarian(&cost).expect("matching costs are finite");
    assignment
        .into_iter()
        .filter_map(|(r, c)| {
            let (i, j) = (rows[r], cols[c]);
            affinity(i, j).map(|a| FramePair {
                gt_index: i,
                hyp_index: j,
                affinity: a,
            })
        })
        .collect()
}

/// Matches one frame of one class. `previous` maps ground-truth ids to the
/// hypothesis id they were last matched to; it is read, not updated.
pub fn match_frame(
    gt: &[(u64, Box3D)],
    hyp: &[(u64, Box3D)],
    criterion: &Criterion,
    previous: &HashMap<u64, u64>,
) -> FrameMatch {
    let aff: Vec<Option<f64>> = gt
        .iter()
        .flat_map(|(_, g)| hyp.iter().map(move |(_, h)| criterion.affinity(g, h)))
        .collect();
    let n_hyp = hyp.len();
    let pairs = solve_frame(
        gt.len(),
        n_hyp,
        |i, j| aff[i * n_hyp + j],
        |i, j| previous.get(&gt[i].0) == Some(&hyp[j].0),
    );
    let ids = pairs
        .iter()
        .filter(|p| matches!(previous.get(&gt[p.gt_index].0), Some(&h) if h != hyp[p.hyp_index].0))
        .count();
    FrameMatch {
        fp: hyp.len() - pairs.len(),
        fn_: gt.len() - pairs.len(),
        ids,
        pairs,
    }
}
