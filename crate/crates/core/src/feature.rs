//! Detector-output domain types and the two feature-vector encodings.
//!
//! A [`FeatureRecord`] holds what the upstream detectors saw in one frame. It
//! is turned into a fixed-length [`FeatureVector`] in one of two layouts:
//!
//! - [`Layout::Absolute`] (29 values): target box centroid/width/height, the
//!   11 upper-body keypoints in image pixels, head yaw/pitch/roll.
//! - [`Layout::Relative`] (26 values): object presence bit, the 11 upper-body
//!   keypoints as offsets from the target box centroid, head yaw/pitch/roll.
//!
//! Missing detections are written as [`SENTINEL`] into the angle slots.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder written into the angle slots when the value is unavailable.
pub const SENTINEL: f64 = -999.0;

pub const NUM_KEYPOINTS: usize = 17;
pub const NUM_UPPER_BODY: usize = 11;

/// COCO keypoint names, in storage order.
pub const COCO_KEYPOINT_NAMES: [&str; NUM_KEYPOINTS] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

pub mod coco {
    pub const NOSE: usize = 0;
    pub const LEFT_EYE: usize = 1;
    pub const RIGHT_EYE: usize = 2;
    pub const LEFT_EAR: usize = 3;
    pub const RIGHT_EAR: usize = 4;
    pub const LEFT_SHOULDER: usize = 5;
    pub const RIGHT_SHOULDER: usize = 6;
    pub const LEFT_ELBOW: usize = 7;
    pub const RIGHT_ELBOW: usize = 8;
    pub const LEFT_WRIST: usize = 9;
    pub const RIGHT_WRIST: usize = 10;
    pub const LEFT_HIP: usize = 11;
    pub const RIGHT_HIP: usize = 12;
    pub const LEFT_KNEE: usize = 13;
    pub const RIGHT_KNEE: usize = 14;
    pub const LEFT_ANKLE: usize = 15;
    pub const RIGHT_ANKLE: usize = 16;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Absolute,
    Relative,
}

impl Layout {
    pub const ALL: [Layout; 2] = [Layout::Absolute, Layout::Relative];

    /// Number of values in a vector of this layout.
    #[allow(clippy::len_without_is_empty)]
    pub const fn len(self) -> usize {
        match self {
            Layout::Absolute => 29,
            Layout::Relative => 26,
        }
    }

    /// Slot range holding the 22 keypoint coordinates.
    pub const fn keypoint_slots(self) -> Range<usize> {
        match self {
            Layout::Absolute => 4..26,
            Layout::Relative => 1..23,
        }
    }

    /// Slot range holding yaw, pitch and roll.
    pub const fn angle_slots(self) -> Range<usize> {
        match self {
            Layout::Absolute => 26..29,
            Layout::Relative => 23..26,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Absolute => "absolute",
            Layout::Relative => "relative",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Layout::Absolute),
            "relative" => Ok(Layout::Relative),
            other => Err(Error::Config(format!(
                "unknown layout {other:?} (expected absolute or relative)"
            ))),
        }
    }
}

/// Axis-aligned detection box in image pixels (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub score: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, score: f64) -> Result<Self> {
        let bbox = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
            score,
        };
        bbox.check()
            .map_err(|reason| Error::validation("<bbox>", reason))?;
        Ok(bbox)
    }

    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max, self.score];
        if coords.iter().any(|v| !v.is_finite()) {
            return Err("bounding box has a non-finite value".into());
        }
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(format!(
                "bounding box ({}, {})-({}, {}) is empty or inverted",
                self.x_min, self.y_min, self.x_max, self.y_max
            ));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("bounding box score {} outside [0, 1]", self.score));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BoundingBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
            score: self.score,
        }
    }
}

/// One detected keypoint. Serialized as `[x, y, confidence]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub const fn new(x: f64, y: f64, confidence: f64) -> Self {
        Keypoint { x, y, confidence }
    }
}

impl From<[f64; 3]> for Keypoint {
    fn from([x, y, confidence]: [f64; 3]) -> Self {
        Keypoint { x, y, confidence }
    }
}

impl From<Keypoint> for [f64; 3] {
    fn from(kp: Keypoint) -> Self {
        [kp.x, kp.y, kp.confidence]
    }
}

/// The 17 COCO body keypoints of one person.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BodyKeypoints([Keypoint; NUM_KEYPOINTS]);

impl BodyKeypoints {
    pub fn new(points: [Keypoint; NUM_KEYPOINTS]) -> Result<Self> {
        let kp = BodyKeypoints(points);
        kp.check()
            .map_err(|reason| Error::validation("<keypoints>", reason))?;
        Ok(kp)
    }

    /// Builds from a slice, rejecting anything but exactly 17 points.
    pub fn from_slice(points: &[Keypoint]) -> Result<Self> {
        let arr: [Keypoint; NUM_KEYPOINTS] = points.try_into().map_err(|_| {
            Error::validation(
                "<keypoints>",
                format!("expected {NUM_KEYPOINTS} keypoints, found {}", points.len()),
            )
        })?;
        Self::new(arr)
    }

    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        for (i, kp) in self.0.iter().enumerate() {
            if !(kp.x.is_finite() && kp.y.is_finite()) {
                return Err(format!("keypoint {i} has a non-finite coordinate"));
            }
            if !(0.0..=1.0).contains(&kp.confidence) {
                return Err(format!(
                    "keypoint {i} confidence {} outside [0, 1]",
                    kp.confidence
                ));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[Keypoint; NUM_KEYPOINTS] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Keypoint {
        self.0[index]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BodyKeypoints(
            self.0
                .map(|kp| Keypoint::new(kp.x + dx, kp.y + dy, kp.confidence)),
        )
    }
}

/// Head orientation in degrees, camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl HeadPose {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        let pose = HeadPose { yaw, pitch, roll };
        pose.check()
            .map_err(|reason| Error::validation("<head_pose>", reason))?;
        Ok(pose)
    }

    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        if !(-180.0..=180.0).contains(&self.yaw) {
            return Err(format!("yaw {} outside [-180, 180]", self.yaw));
        }
        if !(-90.0..=90.0).contains(&self.pitch) {
            return Err(format!("pitch {} outside [-90, 90]", self.pitch));
        }
        if !(-90.0..=90.0).contains(&self.roll) {
            return Err(format!("roll {} outside [-90, 90]", self.roll));
        }
        Ok(())
    }
}

/// One frame's detector outputs plus an optional ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRecord {
    pub frame_id: String,
    pub source_video: String,
    pub label: Option<u8>,
    pub objects: Vec<BoundingBox>,
    pub keypoints: BodyKeypoints,
    pub head_pose: Option<HeadPose>,
}

impl FeatureRecord {
    /// Checks every type invariant, naming the frame on failure.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::validation(self.frame_id.clone(), reason);
        if let Some(label) = self.label {
            if label > 1 {
                return Err(fail(format!("label {label} is not 0 or 1")));
            }
        }
        for (i, bbox) in self.objects.iter().enumerate() {
            bbox.check()
                .map_err(|r| fail(format!("objects[{i}]: {r}")))?;
        }
        self.keypoints.check().map_err(&fail)?;
        if let Some(pose) = &self.head_pose {
            pose.check().map_err(|r| fail(format!("head_pose: {r}")))?;
        }
        Ok(())
    }

    pub fn target_object(&self) -> Option<&BoundingBox> {
        select_target_object(&self.objects)
    }

    /// Shifts every keypoint and box corner; label and head pose untouched.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        FeatureRecord {
            frame_id: self.frame_id.clone(),
            source_video: self.source_video.clone(),
            label: self.label,
            objects: self.objects.iter().map(|b| b.translated(dx, dy)).collect(),
            keypoints: self.keypoints.translated(dx, dy),
            head_pose: self.head_pose,
        }
    }
}

/// A fixed-length numeric input for the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    layout: Layout,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Shape(format!(
                "{layout} vector needs {} values, got {}",
                layout.len(),
                values.len()
            )));
        }
        Ok(FeatureVector { layout, values })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Picks the detection with the largest box area; the earliest wins a tie.
pub fn select_target_object(objects: &[BoundingBox]) -> Option<&BoundingBox> {
    let mut best: Option<&BoundingBox> = None;
    for bbox in objects {
        match best {
            Some(b) if bbox.area() <= b.area() => {}
            _ => best = Some(bbox),
        }
    }
    best
}

/// COCO points 0..=10 (head, shoulders, elbows, wrists) as `(x, y)`.
pub fn upper_body_keypoints(kp: &BodyKeypoints) -> [(f64, f64); NUM_UPPER_BODY] {
    std::array::from_fn(|i| {
        let p = kp.get(i);
        (p.x, p.y)
    })
}

fn push_angles(values: &mut Vec<f64>, pose: Option<&HeadPose>) {
    match pose {
        Some(p) => values.extend([p.yaw, p.pitch, p.roll]),
        None => values.extend([SENTINEL; 3]),
    }
}

pub fn encode_absolute(record: &FeatureRecord) -> FeatureVector {
    let mut values = Vec::with_capacity(Layout::Absolute.len());
    match record.target_object() {
        Some(bbox) => {
            let (cx, cy) = bbox.centroid();
            values.extend([cx, cy, bbox.width(), bbox.height()]);
        }
        None => values.extend([0.0; 4]),
    }
    for (x, y) in upper_body_keypoints(&record.keypoints) {
        values.extend([x, y]);
    }
    push_angles(&mut values, record.head_pose.as_ref());
    FeatureVector {
        layout: Layout::Absolute,
        values,
    }
}

pub fn encode_relative(record: &FeatureRecord) -> FeatureVector {
    let mut values = Vec::with_capacity(Layout::Relative.len());
    match record.target_object() {
        Some(bbox) => {
            let (cx, cy) = bbox.centroid();
            values.push(1.0);
            for (x, y) in upper_body_keypoints(&record.keypoints) {
                values.extend([x - cx, y - cy]);
            }
            push_angles(&mut values, record.head_pose.as_ref());
        }
        None => {
            values.push(0.0);
            values.extend([0.0; 2 * NUM_UPPER_BODY]);
            values.extend([SENTINEL; 3]);
        }
    }
    FeatureVector {
        layout: Layout::Relative,
        values,
    }
}

pub fn encode(record: &FeatureRecord, layout: Layout) -> FeatureVector {
    match layout {
        Layout::Absolute => encode_absolute(record),
        Layout::Relative => encode_relative(record),
    }
}

/// Per-slot z-score statistics fitted on a training set.
///
/// Sentinel values in the angle slots are excluded from the fit and pass
/// through [`NormStats::apply`] unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub layout: Layout,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or(Error::Empty("normalization fit set"))?;
        let layout = first.layout();
        let n_slots = layout.len();
        let angles = layout.angle_slots();
        let mut mean = vec![0.0; n_slots];
        let mut std = vec![1.0; n_slots];
        for slot in 0..n_slots {
            let mut count = 0usize;
            let mut sum = 0.0;
            for v in vectors {
                if v.layout() != layout {
                    return Err(Error::LayoutMismatch {
                        expected: layout,
                        found: v.layout(),
                    });
                }
                let x = v.values[slot];
                if angles.contains(&slot) && x == SENTINEL {
                    continue;
                }
                count += 1;
                sum += x;
            }
            if count == 0 {
                continue;
            }
            let m = sum / count as f64;
            let var = vectors
                .iter()
                .map(|v| v.values[slot])
                .filter(|&x| !(angles.contains(&slot) && x == SENTINEL))
                .map(|x| (x - m) * (x - m))
                .sum::<f64>()
                / count as f64;
            mean[slot] = m;
            if var > 0.0 {
                std[slot] = var.sqrt();
            }
        }
        Ok(NormStats { layout, mean, std })
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.layout() != self.layout {
            return Err(Error::LayoutMismatch {
                expected: self.layout,
                found: v.layout(),
            });
        }
        let angles = self.layout.angle_slots();
        let values = v
            .values
            .iter()
            .enumerate()
            .map(|(slot, &x)| {
                if angles.contains(&slot) && x == SENTINEL {
                    x
                } else {
                    (x - self.mean[slot]) / self.std[slot]
                }
            })
            .collect();
        Ok(FeatureVector {
            layout: self.layout,
            values,
        })
    }
}
