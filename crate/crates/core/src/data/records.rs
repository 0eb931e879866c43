//! Feature-record files: a UTF-8 JSON array, one object per frame.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::feature::{BodyKeypoints, BoundingBox, FeatureRecord, HeadPose, Keypoint};

/// Wire form with every field optional, so absent fields surface as
/// validation errors that name the field rather than as parse errors.
#[derive(Deserialize)]
struct RawRecord {
    frame_id: Option<String>,
    source_video: Option<String>,
    #[serde(default)]
    label: Option<i64>,
    objects: Option<Vec<BoundingBox>>,
    keypoints: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    head_pose: Option<HeadPose>,
}

impl RawRecord {
    fn into_record(self, index: usize) -> Result<FeatureRecord> {
        let frame_id = self.frame_id.ok_or_else(|| {
            Error::validation(format!("<record {index}>"), "missing field \"frame_id\"")
        })?;
        let missing =
            |field: &str| Error::validation(frame_id.clone(), format!("missing field \"{field}\""));
        let source_video = self.source_video.ok_or_else(|| missing("source_video"))?;
        let objects = self.objects.ok_or_else(|| missing("objects"))?;
        let raw_kp = self.keypoints.ok_or_else(|| missing("keypoints"))?;
        let mut points = Vec::with_capacity(raw_kp.len());
        for (i, triple) in raw_kp.iter().enumerate() {
            match triple.as_slice() {
                &[x, y, c] => points.push(Keypoint::new(x, y, c)),
                other => {
                    return Err(Error::validation(
                        frame_id,
                        format!(
                            "keypoints[{i}] has {} entries, expected [x, y, confidence]",
                            other.len()
                        ),
                    ))
                }
            }
        }
        let keypoints = BodyKeypoints::from_slice(&points).map_err(|e| match e {
            Error::Validation { reason, .. } => Error::validation(frame_id.clone(), reason),
            other => other,
        })?;
        let label = match self.label {
            None => None,
            Some(l @ (0 | 1)) => Some(l as u8),
            Some(other) => {
                return Err(Error::validation(
                    frame_id,
                    format!("label {other} is not 0 or 1"),
                ))
            }
        };
        let record = FeatureRecord {
            frame_id,
            source_video,
            label,
            objects,
            keypoints,
            head_pose: self.head_pose,
        };
        record.validate()?;
        Ok(record)
    }
}

/// Parses and validates a record file's contents, preserving order.
pub fn parse_records(text: &str) -> Result<Vec<FeatureRecord>> {
    let raw: Vec<RawRecord> = serde_json::from_str(text).map_err(Error::from_json)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.into_record(i))
        .collect()
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}

/// Renders records as a JSON array with one record per line.
pub fn records_to_string(records: &[FeatureRecord]) -> Result<String> {
    if records.is_empty() {
        return Ok("[]\n".to_string());
    }
    let mut out = String::from("[\n");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        out.push_str(&serde_json::to_string(r).map_err(Error::from_json)?);
    }
    out.push_str("\n]\n");
    Ok(out)
}

pub fn save_records(records: &[FeatureRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = records_to_string(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::SENTINEL;

    fn kp_json(n: usize) -> String {
        let pts: Vec<String> = (0..n).map(|i| format!("[{}.5,{},0.9]", i, 2 * i)).collect();
        format!("[{}]", pts.join(","))
    }

    fn record_json(id: &str, label: &str, n_kp: usize) -> String {
        format!(
            r#"{{"frame_id":"{id}","source_video":"v1","label":{label},"objects":[{{"x_min":1,"y_min":2,"x_max":11,"y_max":22,"score":0.7}}],"keypoints":{},"head_pose":{{"yaw":3,"pitch":-4,"roll":0.5}}}}"#,
            kp_json(n_kp)
        )
    }

    #[test]
    fn keeps_order() {
        let text = format!(
            "[{},{},{}]",
            record_json("c", "1", 17),
            record_json("a", "0", 17),
            record_json("b", "null", 17)
        );
        let recs = parse_records(&text).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.frame_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(recs[0].label, Some(1));
        assert_eq!(recs[2].label, None);
        assert_eq!(recs[0].keypoints.get(3), Keypoint::new(3.5, 6.0, 0.9));
        assert_eq!(recs[0].head_pose.unwrap().pitch, -4.0);
    }

    #[test]
    fn empty_array_is_fine() {
        assert!(parse_records("[]").unwrap().is_empty());
        assert!(parse_records(" [ ]\n").unwrap().is_empty());
    }

    #[test]
    fn missing_keypoints_names_the_field() {
        let text =
            r#"[{"frame_id":"f9","source_video":"v","label":1,"objects":[],"head_pose":null}]"#;
        match parse_records(text) {
            Err(Error::Validation { frame_id, reason }) => {
                assert_eq!(frame_id, "f9");
                assert!(reason.contains("keypoints"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sixteen_keypoints_names_frame() {
        let text = format!("[{}]", record_json("short", "1", 16));
        match parse_records(&text) {
            Err(Error::Validation { frame_id, reason }) => {
                assert_eq!(frame_id, "short");
                assert!(reason.contains("16"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = "[\n{\"frame_id\": \"x\",\n  oops}\n]";
        match parse_records(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_label_and_bad_box_rejected() {
        let text = format!("[{}]", record_json("l", "2", 17));
        assert!(matches!(
            parse_records(&text),
            Err(Error::Validation { .. })
        ));
        let text =
            format!("[{}]", record_json("b", "1", 17)).replace("\"x_max\":11", "\"x_max\":0");
        match parse_records(&text) {
            Err(Error::Validation { frame_id, reason }) => {
                assert_eq!(frame_id, "b");
                assert!(reason.contains("objects[0]"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_then_parse_is_identity() {
        let text = format!(
            "[{},{}]",
            record_json("a", "1", 17),
            record_json("b", "null", 17)
        );
        let mut recs = parse_records(&text).unwrap();
        recs[1].head_pose = None;
        recs[1].objects.clear();
        let again = parse_records(&records_to_string(&recs).unwrap()).unwrap();
        assert_eq!(recs, again);
        // sentinel is an encoding concept, never written into records
        assert!(!records_to_string(&recs)
            .unwrap()
            .contains(&SENTINEL.to_string()));
    }
}
