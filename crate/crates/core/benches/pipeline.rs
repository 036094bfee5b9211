use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion as Bench};
use mot3d::assignment::{build_affinity_with, AffinityMode};
use mot3d::cli::bench_frames;
use mot3d::geometry::DistanceMetric;
use mot3d::io::Detection3D;
use mot3d::metrics::{
    recall_sweep, Criterion, Evaluator, GroundTruthSet, GtFrame, GtObject, GtSequence, HypObject,
    HypSequence, HypothesisSet,
};
use mot3d::tracker::TrackerConfig;
use mot3d::{Box3D, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn random_box(rng: &mut impl Rng) -> Box3D {
    Box3D::new(
        rng.random_range(-40.0..40.0),
        rng.random_range(-40.0..40.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-3.1..3.1),
        rng.random_range(3.0..5.0),
        rng.random_range(1.5..2.0),
        rng.random_range(1.4..1.8),
    )
}

fn affinity(c: &mut Bench) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tracks: Vec<Box3D> = (0..64).map(|_| random_box(&mut rng)).collect();
    let dets: Vec<Box3D> = (0..64).map(|_| random_box(&mut rng)).collect();
    let mut g = c.benchmark_group("affinity_64x64");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                build_affinity_with(
                    exec,
                    black_box(&tracks),
                    black_box(&dets),
                    AffinityMode::Iou,
                    DistanceMetric::Planar,
                )
            })
        });
    }
    g.finish();
}

/// Straight-line objects per sequence, with a jittered and occasionally
/// dropped copy as the hypothesis.
fn eval_data(sequences: usize, frames: usize, objects: usize) -> (GroundTruthSet, HypothesisSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut gt = GroundTruthSet::default();
    let mut hyp = HypothesisSet::default();
    for s in 0..sequences {
        let name = format!("{s:04}");
        let mut gs = GtSequence {
            name: name.clone(),
            frames: vec![GtFrame::default(); frames],
        };
        let mut hs = HypSequence {
            name,
            frames: vec![Vec::new(); frames],
        };
        for o in 0..objects {
            let (x, y) = (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
            let score = rng.random_range(0.1..1.0);
            for (f, frame) in gs.frames.iter_mut().enumerate() {
                let b = Box3D::new(x + 0.5 * f as f64, y, 0.0, 0.0, 4.0, 1.8, 1.5);
                frame.objects.push(GtObject {
                    track_id: o as u64,
                    class: "Car".into(),
                    bbox: b,
                });
                if rng.random_bool(0.1) {
                    continue;
                }
                let j = Box3D::new(
                    b.cx + rng.random_range(-0.4..0.4),
                    b.cy,
                    0.0,
                    0.0,
                    4.0,
                    1.8,
                    1.5,
                );
                hs.frames[f].push(HypObject {
                    track_id: o as u64,
                    class: "Car".into(),
                    bbox: j,
                    score,
                });
            }
        }
        gt.sequences.push(gs);
        hyp.sequences.push(hs);
    }
    (gt, hyp)
}

fn evaluation(c: &mut Bench) {
    let (gt, hyp) = eval_data(8, 100, 15);
    let mut g = c.benchmark_group("evaluate_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                let ev = Evaluator::new(&gt, &hyp, Criterion::Iou(0.25), exec).unwrap();
                recall_sweep(&ev, 40).unwrap()
            })
        });
    }
    g.finish();
}

fn tracking(c: &mut Bench) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sequences: Vec<Vec<Vec<Detection3D>>> = (0..8)
        .map(|_| {
            let starts: Vec<f64> = (0..20).map(|_| rng.random_range(-30.0..30.0)).collect();
            (0..200u32)
                .map(|f| {
                    starts
                        .iter()
                        .enumerate()
                        .map(|(k, &x)| {
                            let b = Box3D::new(
                                x + 0.3 * f as f64,
                                6.0 * k as f64,
                                0.0,
                                0.0,
                                4.0,
                                1.8,
                                1.5,
                            );
                            Detection3D::new(f, "Car", b, 0.9)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let classes = vec!["Car".to_string()];
    let configs: BTreeMap<String, TrackerConfig> =
        [("Car".to_string(), TrackerConfig::default())].into();
    let mut g = c.benchmark_group("track_8_sequences");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| bench_frames(&sequences, &classes, &configs, exec, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, affinity, evaluation, tracking);
criterion_main!(benches);
