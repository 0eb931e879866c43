//! Labeled synthetic scenes for desk-scale experiments.
//!
//! Each scene is one person drawn with a planar stick-figure model: a torso
//! anchor between the shoulders, a head whose features follow the yaw, and
//! two-link arms. Labels come from the generative rule, computed on the clean
//! geometry before pixel noise is added:
//!
//! - positive: an arm is extended (near-straight elbow, not hanging down),
//!   the object centroid is within `near_factor` body scales of that wrist,
//!   and the head faces the camera;
//! - negative, one of: no object; object farther than `far_factor` body
//!   scales from both wrists; object at the wrist but head turned away.
//!
//! A fraction of scenes put the person near an image corner.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feature::{
    coco, BodyKeypoints, BoundingBox, FeatureRecord, HeadPose, Keypoint, NUM_KEYPOINTS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub image_width: f64,
    pub image_height: f64,
    pub n_records: usize,
    pub positive_fraction: f64,
    pub noise_sigma: f64,
    pub corner_fraction: f64,
    pub seed: u64,
    /// Records are spread over this many pseudo-videos, one subject each.
    pub n_videos: usize,
    pub rules: SceneRules,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            image_width: 640.0,
            image_height: 480.0,
            n_records: 2000,
            positive_fraction: 0.5,
            noise_sigma: 3.0,
            corner_fraction: 0.2,
            seed: 7,
            n_videos: 25,
            rules: SceneRules::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if self.n_records == 0 || self.n_videos == 0 {
            return Err(Error::Config(
                "record and video counts must be positive".into(),
            ));
        }
        if !unit(self.positive_fraction) || !unit(self.corner_fraction) {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Thresholds of the labeling rule. Distances are in body scales, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneRules {
    pub near_factor: f64,
    pub far_factor: f64,
    pub facing_yaw: f64,
    pub facing_pitch: f64,
    pub away_yaw: f64,
    pub max_extended_bend: f64,
    pub max_extended_drop: f64,
}

impl Default for SceneRules {
    fn default() -> Self {
        SceneRules {
            near_factor: 0.5,
            far_factor: 2.0,
            facing_yaw: 30.0,
            facing_pitch: 20.0,
            away_yaw: 60.0,
            max_extended_bend: 25.0,
            max_extended_drop: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Handover,
    NoObject,
    ObjectNotInHand,
    LookingAway,
}

impl SceneKind {
    pub fn label(self) -> u8 {
        u8::from(self == SceneKind::Handover)
    }
}

/// One generated scene with the ground truth used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// As emitted, with pixel noise.
    pub record: FeatureRecord,
    /// Same scene before noise.
    pub clean: FeatureRecord,
    pub body_scale: f64,
    pub kind: SceneKind,
    pub corner: bool,
}

#[derive(Debug, Clone, Copy)]
enum ArmPose {
    Extended,
    Hanging,
    Bent,
}

struct Arm {
    elbow: (f64, f64),
    wrist: (f64, f64),
}

/// Emitted coordinates are multiples of this many pixels. A dyadic grid keeps
/// integer shifts and centroid subtraction exact in `f64`.
pub const COORD_GRID: f64 = 1.0 / 256.0;

fn snap(v: f64) -> f64 {
    (v / COORD_GRID).round() * COORD_GRID
}

const UPPER_ARM: f64 = 0.6;
const FOREARM: f64 = 0.55;

fn deg(v: f64) -> f64 {
    v * PI / 180.0
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Two-link arm. `raise` is the upper-arm angle below horizontal-outward;
/// `bend` folds the forearm upward.
fn place_arm(shoulder: (f64, f64), outward: f64, scale: f64, raise: f64, bend: f64) -> Arm {
    let (r, b) = (deg(raise), deg(raise - bend));
    let elbow = (
        shoulder.0 + outward * UPPER_ARM * scale * r.cos(),
        shoulder.1 + UPPER_ARM * scale * r.sin(),
    );
    let wrist = (
        elbow.0 + outward * FOREARM * scale * b.cos(),
        elbow.1 + FOREARM * scale * b.sin(),
    );
    Arm { elbow, wrist }
}

fn sample_arm(
    rng: &mut ChaCha8Rng,
    pose: ArmPose,
    shoulder: (f64, f64),
    outward: f64,
    scale: f64,
) -> Arm {
    let (raise, bend) = match pose {
        ArmPose::Extended => (rng.random_range(-20.0..50.0), rng.random_range(0.0..20.0)),
        ArmPose::Hanging => (rng.random_range(75.0..100.0), rng.random_range(0.0..20.0)),
        ArmPose::Bent => (rng.random_range(60.0..100.0), rng.random_range(60.0..130.0)),
    };
    place_arm(shoulder, outward, scale, raise, bend)
}

fn idle_pose(rng: &mut ChaCha8Rng) -> ArmPose {
    match rng.random_range(0..3) {
        0 => ArmPose::Extended,
        1 => ArmPose::Hanging,
        _ => ArmPose::Bent,
    }
}

fn object_at(rng: &mut ChaCha8Rng, center: (f64, f64), scale: f64) -> BoundingBox {
    let w = rng.random_range(0.25..0.5) * scale;
    let h = rng.random_range(0.25..0.5) * scale;
    BoundingBox {
        x_min: center.0 - w / 2.0,
        y_min: center.1 - h / 2.0,
        x_max: center.0 + w / 2.0,
        y_max: center.1 + h / 2.0,
        score: rng.random_range(0.6..1.0),
    }
}

fn near(rng: &mut ChaCha8Rng, point: (f64, f64), radius: f64) -> (f64, f64) {
    let angle = rng.random_range(0.0..2.0 * PI);
    let r = rng.random_range(0.0..radius);
    (point.0 + r * angle.cos(), point.1 + r * angle.sin())
}

struct Generator<'a> {
    cfg: &'a SceneConfig,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn anchor(&mut self, scale: f64, corner: bool) -> (f64, f64) {
        let (w, h) = (self.cfg.image_width, self.cfg.image_height);
        let rng = &mut self.rng;
        if corner {
            let left = rng.random_bool(0.5);
            let top = rng.random_bool(0.5);
            let dx = 0.6 * scale + rng.random_range(0.0..0.1) * w;
            let x = if left { dx } else { w - dx };
            let y = if top {
                0.7 * scale + rng.random_range(0.0..0.1) * h
            } else {
                h - 0.2 * h + rng.random_range(0.0..0.1) * h
            };
            (x, y)
        } else {
            (
                rng.random_range(0.3..0.7) * w,
                rng.random_range(0.35..0.6) * h,
            )
        }
    }

    fn scene(&mut self, index: usize, video: usize, scale: f64) -> Scene {
        let rules = self.cfg.rules;
        let positive = self.rng.random_bool(self.cfg.positive_fraction);
        let kind = if positive {
            SceneKind::Handover
        } else {
            match self.rng.random_range(0..3) {
                0 => SceneKind::NoObject,
                1 => SceneKind::ObjectNotInHand,
                _ => SceneKind::LookingAway,
            }
        };
        let corner = self.rng.random_bool(self.cfg.corner_fraction);
        let (ax, ay) = self.anchor(scale, corner);

        // subject's left appears on the image right when facing the camera
        let left_shoulder = (ax + 0.5 * scale, ay);
        let right_shoulder = (ax - 0.5 * scale, ay);
        let active_left = self.rng.random_bool(0.5);

        let (yaw, pitch) = match kind {
            SceneKind::Handover => (
                self.rng.random_range(-rules.facing_yaw..=rules.facing_yaw),
                self.rng
                    .random_range(-rules.facing_pitch..=rules.facing_pitch),
            ),
            SceneKind::LookingAway => {
                let mag = self.rng.random_range(rules.away_yaw + 5.0..=110.0);
                let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (
                    sign * mag,
                    self.rng
                        .random_range(-rules.facing_pitch..=rules.facing_pitch),
                )
            }
            SceneKind::NoObject | SceneKind::ObjectNotInHand => (
                self.rng.random_range(-45.0..=45.0),
                self.rng.random_range(-25.0..=25.0),
            ),
        };
        let roll = self.rng.random_range(-10.0..=10.0);

        let (active_pose, other_pose) = match kind {
            SceneKind::Handover => (
                ArmPose::Extended,
                if self.rng.random_bool(0.5) {
                    ArmPose::Hanging
                } else {
                    ArmPose::Bent
                },
            ),
            SceneKind::LookingAway => (
                if self.rng.random_bool(0.5) {
                    ArmPose::Extended
                } else {
                    ArmPose::Bent
                },
                idle_pose(&mut self.rng),
            ),
            SceneKind::NoObject | SceneKind::ObjectNotInHand => {
                (idle_pose(&mut self.rng), idle_pose(&mut self.rng))
            }
        };
        let (left_pose, right_pose) = if active_left {
            (active_pose, other_pose)
        } else {
            (other_pose, active_pose)
        };
        let left = sample_arm(&mut self.rng, left_pose, left_shoulder, 1.0, scale);
        let right = sample_arm(&mut self.rng, right_pose, right_shoulder, -1.0, scale);
        let active_wrist = if active_left { left.wrist } else { right.wrist };

        let objects = match kind {
            SceneKind::NoObject => vec![],
            SceneKind::Handover | SceneKind::LookingAway => {
                let c = near(&mut self.rng, active_wrist, 0.7 * rules.near_factor * scale);
                vec![object_at(&mut self.rng, c, scale)]
            }
            SceneKind::ObjectNotInHand => {
                let min_gap = 1.25 * rules.far_factor * scale;
                let (w, h) = (self.cfg.image_width, self.cfg.image_height);
                let mut center = None;
                for _ in 0..200 {
                    let c = (self.rng.random_range(0.0..w), self.rng.random_range(0.0..h));
                    if dist(c, left.wrist) > min_gap && dist(c, right.wrist) > min_gap {
                        center = Some(c);
                        break;
                    }
                }
                let c = center.unwrap_or_else(|| {
                    let dir = if ax < w / 2.0 { 1.0 } else { -1.0 };
                    (ax + dir * 3.5 * rules.far_factor * scale, ay)
                });
                vec![object_at(&mut self.rng, c, scale)]
            }
        };

        let yaw_r = deg(yaw);
        let face_dx = 0.2 * scale * yaw_r.sin();
        let face_dy = -0.15 * scale * deg(pitch).sin();
        let eye_dx = 0.09 * scale * yaw_r.cos();
        let nose = (ax + face_dx, ay - 0.55 * scale + face_dy);
        let mut pts = [(0.0, 0.0); NUM_KEYPOINTS];
        pts[coco::NOSE] = nose;
        pts[coco::LEFT_EYE] = (nose.0 + eye_dx, nose.1 - 0.08 * scale);
        pts[coco::RIGHT_EYE] = (nose.0 - eye_dx, nose.1 - 0.08 * scale);
        pts[coco::LEFT_EAR] = (ax + 0.18 * scale + 0.5 * face_dx, ay - 0.58 * scale);
        pts[coco::RIGHT_EAR] = (ax - 0.18 * scale + 0.5 * face_dx, ay - 0.58 * scale);
        pts[coco::LEFT_SHOULDER] = left_shoulder;
        pts[coco::RIGHT_SHOULDER] = right_shoulder;
        pts[coco::LEFT_ELBOW] = left.elbow;
        pts[coco::RIGHT_ELBOW] = right.elbow;
        pts[coco::LEFT_WRIST] = left.wrist;
        pts[coco::RIGHT_WRIST] = right.wrist;
        pts[coco::LEFT_HIP] = (ax + 0.3 * scale, ay + 1.5 * scale);
        pts[coco::RIGHT_HIP] = (ax - 0.3 * scale, ay + 1.5 * scale);
        pts[coco::LEFT_KNEE] = (ax + 0.3 * scale, ay + 2.3 * scale);
        pts[coco::RIGHT_KNEE] = (ax - 0.3 * scale, ay + 2.3 * scale);
        pts[coco::LEFT_ANKLE] = (ax + 0.3 * scale, ay + 3.1 * scale);
        pts[coco::RIGHT_ANKLE] = (ax - 0.3 * scale, ay + 3.1 * scale);
        let confidences: [f64; NUM_KEYPOINTS] =
            std::array::from_fn(|_| self.rng.random_range(0.7..=1.0));
        let keypoints: [Keypoint; NUM_KEYPOINTS] =
            std::array::from_fn(|i| Keypoint::new(pts[i].0, pts[i].1, confidences[i]));

        let video_name = format!("synthetic_video_{video:02}");
        let clean = FeatureRecord {
            frame_id: format!("{video_name}_frame_{index:05}"),
            source_video: video_name,
            label: Some(kind.label()),
            objects,
            keypoints: BodyKeypoints::new(keypoints).expect("generated keypoints are valid"),
            head_pose: Some(
                HeadPose::new(yaw, pitch, roll).expect("generated angles are in range"),
            ),
        };
        let record = self.add_noise(&clean);
        Scene {
            record,
            clean,
            body_scale: scale,
            kind,
            corner,
        }
    }

    /// Adds pixel noise and snaps every coordinate to the [`COORD_GRID`].
    fn add_noise(&mut self, clean: &FeatureRecord) -> FeatureRecord {
        let normal = Normal::new(0.0, self.cfg.noise_sigma).expect("sigma validated");
        let rng = &mut self.rng;
        let mut jitter = |v: f64| snap(v + normal.sample(rng));
        let keypoints = clean
            .keypoints
            .points()
            .map(|kp| Keypoint::new(jitter(kp.x), jitter(kp.y), kp.confidence));
        let objects = clean
            .objects
            .iter()
            .map(|b| {
                let x_min = jitter(b.x_min);
                let y_min = jitter(b.y_min);
                let x_max = jitter(b.x_max).max(x_min + 1.0);
                let y_max = jitter(b.y_max).max(y_min + 1.0);
                BoundingBox {
                    x_min,
                    y_min,
                    x_max,
                    y_max,
                    score: b.score,
                }
            })
            .collect();
        FeatureRecord {
            keypoints: BodyKeypoints::new(keypoints).expect("noisy keypoints are finite"),
            objects,
            ..clean.clone()
        }
    }
}

/// Generates scenes together with their clean geometry and generating mode.
pub fn generate_scenes(cfg: &SceneConfig) -> Result<Vec<Scene>> {
    cfg.validate()?;
    let mut gen = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let n_videos = cfg.n_videos.min(cfg.n_records);
    let scales: Vec<f64> = (0..n_videos)
        .map(|_| gen.rng.random_range(60.0..110.0))
        .collect();
    Ok((0..cfg.n_records)
        .map(|i| {
            let video = i * n_videos / cfg.n_records;
            gen.scene(i, video, scales[video])
        })
        .collect())
}

pub fn generate(cfg: &SceneConfig) -> Result<Dataset> {
    let records = generate_scenes(cfg)?
        .into_iter()
        .map(|s| s.record)
        .collect();
    Dataset::new(records)
}

/// Shifts every keypoint and box corner of every record by `(dx, dy)`.
pub fn translate_all(ds: &Dataset, dx: f64, dy: f64) -> Dataset {
    ds.translated(dx, dy)
}

fn angle_between(u: (f64, f64), v: (f64, f64)) -> f64 {
    let dot = u.0 * v.0 + u.1 * v.1;
    let norm = (u.0.hypot(u.1)) * (v.0.hypot(v.1));
    (dot / norm).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Re-derives the handover label from a record's geometry.
///
/// Applied to a scene's clean record this reproduces the generator's label
/// exactly. `slack_px` widens the near-wrist test for noisy input.
pub fn rule_label(
    record: &FeatureRecord,
    body_scale: f64,
    rules: &SceneRules,
    slack_px: f64,
) -> u8 {
    let Some(target) = record.target_object() else {
        return 0;
    };
    let Some(pose) = record.head_pose else {
        return 0;
    };
    if pose.yaw.abs() > rules.facing_yaw || pose.pitch.abs() > rules.facing_pitch {
        return 0;
    }
    let centroid = target.centroid();
    let kp = &record.keypoints;
    let xy = |i: usize| (kp.get(i).x, kp.get(i).y);
    let arms = [
        (coco::LEFT_SHOULDER, coco::LEFT_ELBOW, coco::LEFT_WRIST),
        (coco::RIGHT_SHOULDER, coco::RIGHT_ELBOW, coco::RIGHT_WRIST),
    ];
    let offered = arms.iter().any(|&(s, e, w)| {
        let (s, e, w) = (xy(s), xy(e), xy(w));
        let upper = (e.0 - s.0, e.1 - s.1);
        let fore = (w.0 - e.0, w.1 - e.1);
        let bend = angle_between(upper, fore);
        let drop = (upper.1 / upper.0.hypot(upper.1))
            .clamp(-1.0, 1.0)
            .asin()
            .to_degrees();
        let extended = bend <= rules.max_extended_bend && drop <= rules.max_extended_drop;
        extended && dist(centroid, w) <= rules.near_factor * body_scale + slack_px
    });
    u8::from(offered)
}
