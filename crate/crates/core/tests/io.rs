use std::collections::BTreeMap;
use std::f64::consts::PI;

use mot3d::io::{
    canonical_to_kitti, kitti_to_canonical, load_sequence, load_sequences, parse_detections_csv,
    parse_kitti_labels, parse_results_csv, write_kitti_rows, write_results_csv, InputFormat,
    KittiPose,
};
use mot3d::tracker::{TrackOutput, TrackStatus};
use mot3d::{Box3D, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURE: &str = include_str!("fixtures/kitti_20.txt");

#[test]
fn kitti_fixture_round_trips_byte_equal() {
    let bundle = parse_kitti_labels(FIXTURE).unwrap();
    assert_eq!(bundle.object_count(), 17);
    assert_eq!(
        bundle
            .frames
            .iter()
            .map(|f| f.dont_care.len())
            .sum::<usize>(),
        3
    );
    assert_eq!(write_kitti_rows(&bundle), FIXTURE);
}

#[test]
fn kitti_missing_score_defaults_to_one() {
    let row = "0 3 Car 0 1 -1.79 296.7 161.7 455.2 292.3 1.5 1.8 4.4 -4.5 0.0 13.4 -2.1";
    let b = parse_kitti_labels(row).unwrap();
    assert_eq!(b.frames[0].objects[0].score, 1.0);
    assert_eq!(b.frames[0].objects[0].track_id, Some(3));
}

#[test]
fn kitti_errors_carry_line_numbers() {
    let text = format!("{}\n0 1 Car 0 0 x", FIXTURE.lines().next().unwrap());
    match parse_kitti_labels(&text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let bad = FIXTURE.lines().next().unwrap().replace("19.055686", "nan");
    assert!(matches!(
        parse_kitti_labels(&bad),
        Err(Error::Parse { line: 1, .. })
    ));
}

proptest! {
    #[test]
    fn kitti_conversion_is_a_bijection(
        h in 0.1..4.0f64, w in 0.1..4.0f64, l in 0.1..10.0f64,
        x in -80.0..80.0f64, y in -5.0..5.0f64, z in -10.0..100.0f64,
        ry in -PI + 1e-6..PI,
    ) {
        let p = KittiPose { h, w, l, x, y, z, rotation_y: ry };
        let q = canonical_to_kitti(&kitti_to_canonical(&p));
        for (a, b) in [(p.h, q.h), (p.w, q.w), (p.l, q.l), (p.x, q.x), (p.y, q.y), (p.z, q.z), (p.rotation_y, q.rotation_y)] {
            prop_assert!((a - b).abs() < 1e-9, "{p:?} -> {q:?}");
        }
    }

    #[test]
    fn kitti_parser_is_total(text in "[0-9a-zA-Z .\\-\n]{0,300}") {
        let _ = parse_kitti_labels(&text);
    }

    #[test]
    fn csv_parsers_are_total(text in "[0-9a-z,.\\-\n]{0,300}") {
        let _ = parse_detections_csv(&text);
        let _ = parse_results_csv(&text);
    }

    #[test]
    fn mutated_fixture_never_panics(line in 0..20usize, tok in 0..18usize, garbage in "[a-z0-9.\\-]{0,6}") {
        let text: Vec<String> = FIXTURE
            .lines()
            .enumerate()
            .map(|(i, l)| {
                if i != line {
                    return l.to_string();
                }
                let mut t: Vec<&str> = l.split(' ').collect();
                if tok < t.len() {
                    t[tok] = &garbage;
                }
                t.join(" ")
            })
            .collect();
        let _ = parse_kitti_labels(&text.join("\n"));
    }
}

#[test]
fn detection_csv_fuzz_matches_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let classes = ["Car", "Pedestrian", "Cyclist"];
    let mut text = String::from("frame,class,x,y,z,yaw,l,w,h,score\n");
    let mut expected: BTreeMap<(u32, String), usize> = BTreeMap::new();
    for _ in 0..1000 {
        let f: u32 = rng.random_range(0..50);
        let c = classes[rng.random_range(0..3)];
        *expected.entry((f, c.to_string())).or_default() += 1;
        text.push_str(&format!(
            "{f},{c},{},{},{},{},{},{},{},{}\n",
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.5..5.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..2.5),
            rng.random_range(0.0..1.0),
        ));
    }
    let bundle = parse_detections_csv(&text).unwrap();
    assert_eq!(bundle.object_count(), 1000);
    let mut got: BTreeMap<(u32, String), usize> = BTreeMap::new();
    for (f, frame) in bundle.frames.iter().enumerate() {
        for d in &frame.objects {
            assert_eq!(d.frame as usize, f);
            *got.entry((d.frame, d.class.clone())).or_default() += 1;
        }
    }
    assert_eq!(got, expected);
}

#[test]
fn csv_columns_in_any_order_and_schema_errors() {
    let b =
        parse_detections_csv("score,frame,class,h,w,l,yaw,z,y,x\n0.5,2,Car,1.5,1.8,4,0.1,0,2,3\n")
            .unwrap();
    let d = &b.frames[2].objects[0];
    assert_eq!(
        (d.bbox.cx, d.bbox.cy, d.bbox.length, d.score),
        (3.0, 2.0, 4.0, 0.5)
    );
    match parse_detections_csv("frame,class,x,y,z,yaw,l,w,h\n") {
        Err(Error::Schema(col)) => assert_eq!(col, "score"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn result_csv_round_trips_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let outputs: Vec<TrackOutput> = (0..50)
        .map(|i| TrackOutput {
            frame: i / 5,
            id: (i % 5) as u64 + 1,
            class: "Car".into(),
            bbox: Box3D::new(
                rng.random_range(-9.0..9.0),
                rng.random_range(-9.0..9.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0),
                4.0,
                1.8,
                1.5,
            ),
            score: rng.random_range(0.0..1.0),
            status: TrackStatus::Confirmed,
            coasting: false,
        })
        .collect();
    let b = parse_results_csv(&write_results_csv(&outputs)).unwrap();
    for o in &outputs {
        let d = b.frames[o.frame as usize]
            .objects
            .iter()
            .find(|d| d.track_id == Some(o.id))
            .unwrap();
        assert_eq!((d.bbox, d.score), (o.bbox, o.score));
    }
}

#[test]
fn load_dispatches_on_extension_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let kitti = dir.path().join("0001.txt");
    let det = dir.path().join("0002.csv");
    let res = dir.path().join("0003.csv");
    std::fs::write(&kitti, FIXTURE).unwrap();
    std::fs::write(
        &det,
        "frame,class,x,y,z,yaw,l,w,h,score\n0,Car,1,2,0,0,4,2,1.5,0.9\n",
    )
    .unwrap();
    std::fs::write(
        &res,
        "frame,id,class,x,y,z,yaw,l,w,h,score\n0,7,Car,1,2,0,0,4,2,1.5,0.9\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
    assert_eq!(load_sequence(&kitti).unwrap().1, InputFormat::Kitti);
    assert_eq!(load_sequence(&det).unwrap().1, InputFormat::DetectionCsv);
    let (b, f) = load_sequence(&res).unwrap();
    assert_eq!((f, b.id.as_str()), (InputFormat::ResultCsv, "0003"));
    assert_eq!(b.frames[0].objects[0].track_id, Some(7));
    let all = load_sequences(dir.path()).unwrap();
    assert_eq!(
        all.iter().map(|b| b.id.as_str()).collect::<Vec<_>>(),
        ["0001", "0002", "0003"]
    );
}
