//! Affinity matrices, the Hungarian solver and gated association.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{center_distance, iou_3d, Box3D, DistanceMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffinityMode {
    /// 3D IoU, higher is better.
    #[default]
    Iou,
    /// Negated center distance in meters.
    NegDistance,
}

/// `rows` predicted trajectories × `cols` detections.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub mode: AffinityMode,
    pub values: DMatrix<f64>,
}

impl AffinityMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Whether `value` survives `gate`: minimum IoU in IoU mode, maximum
    /// distance in distance mode.
    pub fn passes_gate(&self, value: f64, gate: f64) -> bool {
        match self.mode {
            AffinityMode::Iou => value >= gate,
            AffinityMode::NegDistance => -value <= gate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssociationResult {
    /// `(trajectory index, detection index)`, sorted by trajectory index.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_trajectories: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Builds the affinity matrix with planar center distance.
pub fn build_affinity(
    trajectories: &[Box3D],
    detections: &[Box3D],
    mode: AffinityMode,
) -> AffinityMatrix {
    build_affinity_with(
        Execution::Sequential,
        trajectories,
        detections,
        mode,
        DistanceMetric::Planar,
    )
}

/// Builds the affinity matrix, computing rows through `exec`.
pub fn build_affinity_with(
    exec: Execution,
    trajectories: &[Box3D],
    detections: &[Box3D],
    mode: AffinityMode,
    metric: DistanceMetric,
) -> AffinityMatrix {
    let rows: Vec<Vec<f64>> = exec.map(trajectories, |t| {
        detections
            .iter()
            .map(|d| match mode {
                AffinityMode::Iou => iou_3d(t, d),
                AffinityMode::NegDistance => -center_distance(t, d, metric),
            })
            .collect()
    });
    let values = DMatrix::from_fn(trajectories.len(), detections.len(), |i, j| rows[i][j]);
    AffinityMatrix { mode, values }
}

/// Minimum-cost assignment of `min(rows, cols)` pairs.
///
/// Rectangular inputs are padded to square with a constant larger than any
/// entry. Among equal-cost optima the lexicographically smallest row→column
/// assignment is returned. Pairs are sorted by row.
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Vec<(usize, usize)>> {
    let (rows, cols) = cost.shape();
    if let Some(bad) = cost.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cost matrix contains non-finite entry {bad}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let n = rows.max(cols);
    let max = cost.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = cost.iter().cloned().fold(f64::INFINITY, f64::min);
    let pad = max + (max - min).abs() + 1.0;
    let a = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            cost[(i, j)]
        } else {
            pad
        }
    };

    // Shortest augmenting path with potentials, 1-based with a sentinel
    // column 0. Keeps u[i] + v[j] <= a(i, j) with equality on the matching.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    // 0-based views
    let mut col_owner: Vec<usize> = (1..=n).map(|j| owner[j] - 1).collect();
    let mut row_col = vec![0usize; n];
    for (j, &i) in col_owner.iter().enumerate() {
        row_col[i] = j;
    }

    // Equality subgraph: every perfect matching in it is optimal.
    let scale = max.abs().max(min.abs()).max(pad.abs()).max(1.0);
    let tol = 1e-10 * scale;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| (a(i, j) - u[i + 1] - v[j + 1]).abs() <= tol)
                .collect()
        })
        .collect();
    lexicographic_min(&tight, &mut row_col, &mut col_owner);

    Ok((0..rows)
        .filter_map(|i| (row_col[i] < cols).then_some((i, row_col[i])))
        .collect())
}

/// Rewrites a perfect matching of the bipartite graph `adj` into the
/// lexicographically smallest one (by row order, column index).
fn lexicographic_min(adj: &[Vec<usize>], row_col: &mut [usize], col_owner: &mut [usize]) {
    let n = row_col.len();
    let mut fixed = vec![false; n];
    for i in 0..n {
        for &c in &adj[i] {
            if c >= row_col[i] {
                break;
            }
            if fixed[c] {
                continue;
            }
            // Give c to row i; the displaced row must reach the column i frees.
            let displaced = col_owner[c];
            let freed = row_col[i];
            let mut visited = vec![false; n];
            visited[c] = true;
            let mut scratch_rc = row_col.to_vec();
            let mut scratch_co = col_owner.to_vec();
            if augment(
                displaced,
                freed,
                adj,
                &fixed,
                &mut visited,
                &mut scratch_rc,
                &mut scratch_co,
            ) {
                scratch_rc[i] = c;
                scratch_co[c] = i;
                row_col.copy_from_slice(&scratch_rc);
                col_owner.copy_from_slice(&scratch_co);
                break;
            }
        }
        fixed[row_col[i]] = true;
    }
}

fn augment(
    row: usize,
    target: usize,
    adj: &[Vec<usize>],
    fixed: &[bool],
    visited: &mut [bool],
    row_col: &mut [usize],
    col_owner: &mut [usize],
) -> bool {
    for &c in &adj[row] {
        if fixed[c] || visited[c] {
            continue;
        }
        visited[c] = true;
        if c == target
            || augment(
                col_owner[c],
                target,
                adj,
                fixed,
                visited,
                row_col,
                col_owner,
            )
        {
            row_col[row] = c;
            col_owner[c] = row;
            return true;
        }
    }
    false
}

/// Solves the assignment on `-affinity`, then demotes pairs failing `gate`
/// to unmatched on both sides.
pub fn associate(affinity: &AffinityMatrix, gate: f64) -> Result<AssociationResult> {
    let (rows, cols) = (affinity.rows(), affinity.cols());
    let cost = -affinity.values.clone();
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut matches = Vec::new();
    for (i, j) in hungarian(&cost)? {
        if affinity.passes_gate(affinity.values[(i, j)], gate) {
            row_used[i] = true;
            col_used[j] = true;
            matches.push((i, j));
        }
    }
    Ok(AssociationResult {
        matches,
        unmatched_trajectories: (0..rows).filter(|&i| !row_used[i]).collect(),
        unmatched_detections: (0..cols).filter(|&j| !col_used[j]).collect(),
    })
}
