#![allow(dead_code)]

use handover_core::feature::{
    BodyKeypoints, BoundingBox, FeatureRecord, HeadPose, Keypoint, NUM_KEYPOINTS,
};
use proptest::collection::vec;
use proptest::prelude::*;

/// Quarter-pixel coordinates: sums and differences stay exact in f64.
pub fn coord() -> impl Strategy<Value = f64> {
    (-8192i32..8192).prop_map(|q| f64::from(q) / 4.0)
}

/// Integer-pixel shift.
pub fn shift() -> impl Strategy<Value = (f64, f64)> {
    (-2000i32..2000, -2000i32..2000).prop_map(|(dx, dy)| (f64::from(dx), f64::from(dy)))
}

pub fn bbox() -> impl Strategy<Value = BoundingBox> {
    (coord(), coord(), 1i32..2000, 1i32..2000, 0.0..=1.0f64).prop_map(|(x, y, w, h, s)| {
        BoundingBox::new(x, y, x + f64::from(w) / 4.0, y + f64::from(h) / 4.0, s).unwrap()
    })
}

pub fn keypoints() -> impl Strategy<Value = BodyKeypoints> {
    vec((coord(), coord(), 0.0..=1.0f64), NUM_KEYPOINTS).prop_map(|pts| {
        let pts: Vec<Keypoint> = pts
            .into_iter()
            .map(|(x, y, c)| Keypoint::new(x, y, c))
            .collect();
        BodyKeypoints::from_slice(&pts).unwrap()
    })
}

pub fn head_pose() -> impl Strategy<Value = HeadPose> {
    (-180.0..=180.0f64, -90.0..=90.0f64, -90.0..=90.0f64)
        .prop_map(|(y, p, r)| HeadPose::new(y, p, r).unwrap())
}

pub fn record() -> impl Strategy<Value = FeatureRecord> {
    (
        "[a-z0-9_]{1,24}",
        "[a-z0-9_]{1,12}",
        proptest::option::of(0u8..=1),
        vec(bbox(), 0..5),
        keypoints(),
        proptest::option::of(head_pose()),
    )
        .prop_map(
            |(frame_id, source_video, label, objects, keypoints, head_pose)| FeatureRecord {
                frame_id,
                source_video,
                label,
                objects,
                keypoints,
                head_pose,
            },
        )
}

/// Labeled records with unique frame ids spread over a few videos.
pub fn labeled_records(max: usize) -> impl Strategy<Value = Vec<FeatureRecord>> {
    vec((record(), 0u8..=1, 0usize..6), 1..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (mut r, label, video))| {
                r.frame_id = format!("frame_{i:05}");
                r.source_video = format!("video_{video}");
                r.label = Some(label);
                r
            })
            .collect()
    })
}
