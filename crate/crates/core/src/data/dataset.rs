use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{encode, FeatureRecord, FeatureVector, Layout};

// RNG streams, so balance and split draw independent sequences from one seed.
const BALANCE_STREAM: u64 = 2;
const SPLIT_STREAM: u64 = 3;

/// Granularity of the train/test partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Individual frames are shuffled and cut.
    Frame,
    /// Whole source videos go to one side.
    Video,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Frame => "frame",
            SplitMode::Video => "video",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(SplitMode::Frame),
            "video" => Ok(SplitMode::Video),
            other => Err(Error::Config(format!(
                "unknown split mode {other:?} (expected frame or video)"
            ))),
        }
    }
}

/// Labeled records with unique frame ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<FeatureRecord>,
}

impl Dataset {
    pub fn new(records: Vec<FeatureRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if r.label.is_none() {
                return Err(Error::validation(r.frame_id.clone(), "record has no label"));
            }
            if !seen.insert(r.frame_id.as_str()) {
                return Err(Error::validation(r.frame_id.clone(), "duplicate frame_id"));
            }
        }
        Ok(Dataset { records })
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FeatureRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.records.iter().filter(|r| r.label == Some(1)).count();
        (pos, self.records.len() - pos)
    }

    /// Encodes every record; pairs each vector with its label.
    pub fn encode(&self, layout: Layout) -> Vec<(FeatureVector, u8)> {
        self.records
            .iter()
            .map(|r| {
                (
                    encode(r, layout),
                    r.label.expect("dataset records are labeled"),
                )
            })
            .collect()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Dataset {
        Dataset {
            records: self.records.iter().map(|r| r.translated(dx, dy)).collect(),
        }
    }

    fn subset(&self, indices: impl IntoIterator<Item = usize>) -> Dataset {
        Dataset {
            records: indices
                .into_iter()
                .map(|i| self.records[i].clone())
                .collect(),
        }
    }
}

/// Subsamples the majority class down to the minority count.
///
/// Kept records stay in their original order.
pub fn balance(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let (positives, negatives) = ds.class_counts();
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    if positives == negatives {
        return Ok(ds.clone());
    }
    let majority_label = u8::from(positives > negatives);
    let majority: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.records[i].label == Some(majority_label))
        .collect();
    let keep_count = positives.min(negatives);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BALANCE_STREAM);
    let mut keep = vec![false; ds.len()];
    for pick in index::sample(&mut rng, majority.len(), keep_count) {
        keep[majority[pick]] = true;
    }
    for (i, r) in ds.records.iter().enumerate() {
        if r.label != Some(majority_label) {
            keep[i] = true;
        }
    }
    Ok(ds.subset((0..ds.len()).filter(|&i| keep[i])))
}

/// Seeded train/test partition. Frame mode puts `floor(ratio * N)` records in
/// train; video mode adds whole videos to train until it holds at least
/// `ratio * N` frames.
pub fn split(ds: &Dataset, ratio: f64, seed: u64, mode: SplitMode) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio {ratio} must lie in (0, 1)"
        )));
    }
    if ds.is_empty() {
        return Err(Error::Empty("dataset to split"));
    }
    let n = ds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    match mode {
        SplitMode::Frame => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let n_train = (ratio * n as f64).floor() as usize;
            let (train, test) = order.split_at(n_train);
            Ok((
                ds.subset(train.iter().copied()),
                ds.subset(test.iter().copied()),
            ))
        }
        SplitMode::Video => {
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut by_video: HashMap<&str, usize> = HashMap::new();
            for (i, r) in ds.records.iter().enumerate() {
                let g = *by_video.entry(r.source_video.as_str()).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(i);
            }
            groups.shuffle(&mut rng);
            let target = ratio * n as f64;
            let mut train = Vec::new();
            let mut test = Vec::new();
            for group in groups {
                if (train.len() as f64) < target {
                    train.extend(group);
                } else {
                    test.extend(group);
                }
            }
            Ok((ds.subset(train), ds.subset(test)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{BodyKeypoints, Keypoint};

    fn rec(id: usize, label: u8, video: &str) -> FeatureRecord {
        FeatureRecord {
            frame_id: format!("f{id}"),
            source_video: video.to_string(),
            label: Some(label),
            objects: vec![],
            keypoints: BodyKeypoints::new([Keypoint::new(id as f64, 0.0, 1.0); 17]).unwrap(),
            head_pose: None,
        }
    }

    fn dataset(pos: usize, neg: usize) -> Dataset {
        let recs = (0..pos + neg)
            .map(|i| rec(i, u8::from(i < pos), &format!("v{}", i % 7)))
            .collect();
        Dataset::new(recs).unwrap()
    }

    fn ids(ds: &Dataset) -> Vec<&str> {
        ds.records().iter().map(|r| r.frame_id.as_str()).collect()
    }

    #[test]
    fn dataset_rejects_unlabeled_and_duplicates() {
        let mut r = rec(0, 1, "v");
        r.label = None;
        assert!(Dataset::new(vec![r]).is_err());
        assert!(Dataset::new(vec![rec(0, 1, "v"), rec(0, 0, "v")]).is_err());
    }

    #[test]
    fn balance_subsamples_majority() {
        let ds = dataset(100, 40);
        let b = balance(&ds, 3).unwrap();
        assert_eq!(b.class_counts(), (40, 40));
        // every negative survives
        let kept: HashSet<_> = ids(&b).into_iter().collect();
        for r in ds.records().iter().filter(|r| r.label == Some(0)) {
            assert!(kept.contains(r.frame_id.as_str()));
        }
        assert_eq!(ids(&balance(&ds, 3).unwrap()), ids(&b));
        assert_ne!(ids(&balance(&ds, 4).unwrap()), ids(&b));
    }

    #[test]
    fn balanced_input_unchanged() {
        let ds = dataset(50, 50);
        assert_eq!(balance(&ds, 1).unwrap(), ds);
    }

    #[test]
    fn balance_needs_both_classes() {
        let ds = dataset(10, 0);
        assert!(matches!(balance(&ds, 1), Err(Error::SingleClass { .. })));
    }

    #[test]
    fn frame_split_sizes() {
        let ds = dataset(1253, 1253);
        let (train, test) = split(&ds, 0.8, 7, SplitMode::Frame).unwrap();
        assert_eq!((train.len(), test.len()), (2004, 502));
        let (train2, _) = split(&ds, 0.8, 7, SplitMode::Frame).unwrap();
        assert_eq!(train, train2);
    }

    #[test]
    fn video_split_keeps_videos_whole() {
        let ds = dataset(60, 60);
        let (train, test) = split(&ds, 0.8, 5, SplitMode::Video).unwrap();
        let train_videos: HashSet<_> = train.records().iter().map(|r| &r.source_video).collect();
        assert!(test
            .records()
            .iter()
            .all(|r| !train_videos.contains(&r.source_video)));
        assert_eq!(train.len() + test.len(), 120);
        assert!(train.len() as f64 >= 0.8 * 120.0);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let ds = dataset(5, 5);
        for r in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                split(&ds, r, 1, SplitMode::Frame),
                Err(Error::Config(_))
            ));
        }
    }
}
