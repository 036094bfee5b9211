//! Independent reference implementations used by the integration and
//! acceptance tests. None of them share code paths with the library's
//! optimized routines.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::OnceLock;

use mot3d::Box3D;
use nalgebra::DMatrix;
use rand::Rng;

/// Per frame: ground truth and hypotheses as (track id, box).
pub type LabeledFrames = Vec<(Vec<(u64, Box3D)>, Vec<(u64, Box3D)>)>;
type Pairs = Vec<(usize, usize)>;
type Visit<'a> = &'a mut dyn FnMut(&[(usize, usize)]);

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// The first 10^6 points of the 3D Halton sequence (bases 2, 3, 5).
pub fn halton_points() -> &'static [[f64; 3]] {
    static POINTS: OnceLock<Vec<[f64; 3]>> = OnceLock::new();
    POINTS.get_or_init(|| {
        (1..=1_000_000u64)
            .map(|i| {
                [
                    radical_inverse(i, 2),
                    radical_inverse(i, 3),
                    radical_inverse(i, 5),
                ]
            })
            .collect()
    })
}

fn contains(b: &Box3D, p: [f64; 3]) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let dx = p[0] - b.cx;
    let dy = p[1] - b.cy;
    // rotate into the box frame
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= b.length / 2.0 && ly.abs() <= b.width / 2.0 && (p[2] - b.cz).abs() <= b.height / 2.0
}

fn aabb(b: &Box3D) -> ([f64; 3], [f64; 3]) {
    let (s, c) = b.yaw.sin_cos();
    let hx = (c * b.length).abs() / 2.0 + (s * b.width).abs() / 2.0;
    let hy = (s * b.length).abs() / 2.0 + (c * b.width).abs() / 2.0;
    (
        [b.cx - hx, b.cy - hy, b.cz - b.height / 2.0],
        [b.cx + hx, b.cy + hy, b.cz + b.height / 2.0],
    )
}

/// Quasi Monte Carlo 3D IoU: the intersection volume is estimated by point
/// membership over the overlap of the two axis-aligned bounds, the union
/// from the exact box volumes.
pub fn monte_carlo_iou(a: &Box3D, b: &Box3D) -> f64 {
    let (alo, ahi) = aabb(a);
    let (blo, bhi) = aabb(b);
    let mut lo = [0.0; 3];
    let mut ext = [0.0; 3];
    for k in 0..3 {
        lo[k] = alo[k].max(blo[k]);
        ext[k] = ahi[k].min(bhi[k]) - lo[k];
        if ext[k] <= 0.0 {
            return 0.0;
        }
    }
    let pts = halton_points();
    let hits = pts
        .iter()
        .filter(|u| {
            let p = [
                lo[0] + u[0] * ext[0],
                lo[1] + u[1] * ext[1],
                lo[2] + u[2] * ext[2],
            ];
            contains(a, p) && contains(b, p)
        })
        .count();
    let inter = hits as f64 / pts.len() as f64 * ext[0] * ext[1] * ext[2];
    let va = a.length * a.width * a.height;
    let vb = b.length * b.width * b.height;
    inter / (va + vb - inter)
}

/// A random box pair that overlaps often.
pub fn random_box_pair(rng: &mut impl Rng) -> (Box3D, Box3D) {
    let mut one = |x: f64, y: f64, z: f64| {
        Box3D::new(
            x + rng.random_range(-1.5..1.5),
            y + rng.random_range(-1.5..1.5),
            z + rng.random_range(-0.5..0.5),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.random_range(0.5..5.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..2.5),
        )
    };
    let a = one(0.0, 0.0, 0.0);
    let b = one(a.cx, a.cy, a.cz);
    (a, b)
}

/// Minimum total cost over every injective row → column assignment (or
/// column → row when the matrix is tall).
pub fn brute_force_min_cost(cost: &DMatrix<f64>) -> f64 {
    let (n, m) = cost.shape();
    if n == 0 || m == 0 {
        return 0.0;
    }
    if n > m {
        return brute_force_min_cost(&cost.transpose());
    }
    fn go(cost: &DMatrix<f64>, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.nrows() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.ncols() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[(row, j)], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; m], 0.0, &mut best);
    best
}

/// Per-sequence CLEAR counts from exhaustive enumeration of every partial
/// matching per frame: maximum matches first, then most kept
/// correspondences, then largest affinity sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
}

pub fn exhaustive_clear(
    frames: &LabeledFrames,
    affinity: impl Fn(&Box3D, &Box3D) -> Option<f64>,
) -> OracleCounts {
    let mut c = OracleCounts::default();
    let mut last: HashMap<u64, u64> = HashMap::new();
    for (gt, hyp) in frames {
        let mut best: Option<((usize, usize, f64), Pairs)> = None;
        let mut current = Vec::new();
        enumerate(
            gt.len(),
            hyp.len(),
            0,
            &mut vec![false; hyp.len()],
            &mut current,
            &mut |pairs| {
                let mut ok = true;
                let mut cont = 0;
                let mut sum = 0.0;
                for &(i, j) in pairs {
                    match affinity(&gt[i].1, &hyp[j].1) {
                        Some(a) => sum += a,
                        None => ok = false,
                    }
                    if last.get(&gt[i].0) == Some(&hyp[j].0) {
                        cont += 1;
                    }
                }
                if !ok {
                    return;
                }
                let key = (pairs.len(), cont, sum);
                let better = match &best {
                    None => true,
                    Some((b, _)) => {
                        (key.0, key.1) > (b.0, b.1)
                            || ((key.0, key.1) == (b.0, b.1) && key.2 > b.2 + 1e-12)
                    }
                };
                if better {
                    best = Some((key, pairs.to_vec()));
                }
            },
        );
        let pairs = best.map(|b| b.1).unwrap_or_default();
        for &(i, j) in &pairs {
            if let Some(&prev) = last.get(&gt[i].0) {
                if prev != hyp[j].0 {
                    c.ids += 1;
                }
            }
            last.insert(gt[i].0, hyp[j].0);
        }
        c.tp += pairs.len();
        c.fn_ += gt.len() - pairs.len();
        c.fp += hyp.len() - pairs.len();
    }
    c
}

fn enumerate(
    n_gt: usize,
    n_hyp: usize,
    i: usize,
    used: &mut Vec<bool>,
    current: &mut Pairs,
    visit: Visit<'_>,
) {
    if i == n_gt {
        visit(current);
        return;
    }
    // gt i unmatched
    enumerate(n_gt, n_hyp, i + 1, used, current, visit);
    for j in 0..n_hyp {
        if !used[j] {
            used[j] = true;
            current.push((i, j));
            enumerate(n_gt, n_hyp, i + 1, used, current, visit);
            current.pop();
            used[j] = false;
        }
    }
}

/// Random ground truth plus a noisy tracker output: jittered copies of the
/// ground truth with dropouts, id switches, clutter and per-trajectory
/// scores.
pub fn random_instance(
    rng: &mut impl Rng,
    sequences: usize,
    frames: usize,
    objects: usize,
) -> (
    mot3d::metrics::GroundTruthSet,
    mot3d::metrics::HypothesisSet,
) {
    use mot3d::metrics::*;
    let mut gt = GroundTruthSet::default();
    let mut hyp = HypothesisSet::default();
    for s in 0..sequences {
        let name = format!("{s:04}");
        let mut gs = GtSequence {
            name: name.clone(),
            frames: vec![GtFrame::default(); frames],
        };
        let mut hs = HypSequence {
            name: name.clone(),
            frames: vec![Vec::new(); frames],
        };
        let mut next_hyp = 1000u64;
        let mut score_of: HashMap<u64, f64> = HashMap::new();
        let mut score = |id: u64, rng: &mut dyn rand::RngCore| -> f64 {
            *score_of
                .entry(id)
                .or_insert_with(|| rng.random_range(0.05..1.0))
        };
        for o in 0..objects {
            let x0 = rng.random_range(-6.0..6.0);
            let y0 = rng.random_range(-6.0..6.0);
            let (vx, vy) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let start = rng.random_range(0..frames);
            let end = rng.random_range(start..frames) + 1;
            let mut hid = next_hyp;
            next_hyp += 1;
            for f in start..end {
                let t = (f - start) as f64;
                let b = Box3D::new(x0 + vx * t, y0 + vy * t, 0.0, 0.3, 3.0, 1.6, 1.5);
                gs.frames[f].objects.push(GtObject {
                    track_id: o as u64,
                    class: "Car".into(),
                    bbox: b,
                });
                if rng.random_bool(0.15) {
                    continue;
                }
                if rng.random_bool(0.1) {
                    hid = next_hyp;
                    next_hyp += 1;
                }
                let jitter = Box3D::new(
                    b.cx + rng.random_range(-0.6..0.6),
                    b.cy + rng.random_range(-0.6..0.6),
                    rng.random_range(-0.2..0.2),
                    b.yaw + rng.random_range(-0.2..0.2),
                    b.length,
                    b.width,
                    b.height,
                );
                let sc = score(hid, rng);
                hs.frames[f].push(HypObject {
                    track_id: hid,
                    class: "Car".into(),
                    bbox: jitter,
                    score: sc,
                });
            }
        }
        for f in 0..frames {
            if rng.random_bool(0.3) {
                let id = next_hyp;
                next_hyp += 1;
                let b = Box3D::new(
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-8.0..8.0),
                    0.0,
                    0.0,
                    3.0,
                    1.6,
                    1.5,
                );
                let sc = score(id, rng);
                hs.frames[f].push(HypObject {
                    track_id: id,
                    class: "Car".into(),
                    bbox: b,
                    score: sc,
                });
            }
        }
        gt.sequences.push(gs);
        hyp.sequences.push(hs);
    }
    (gt, hyp)
}
