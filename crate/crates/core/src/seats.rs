//! Binding detections to students through a static seat map, and the
//! per-student tally.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::roi::BehaviorVerdict;
use crate::{iou, BBox, ClassLabel, Error, Result};

/// Minimum IoU between a verdict box and a seat region for assignment.
pub const MIN_SEAT_IOU: f32 = 0.1;
/// Maximum IoU allowed between two seat regions.
pub const MAX_SEAT_OVERLAP: f32 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatEntry {
    pub region: BBox,
    pub student_id: String,
    pub contact: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeatMap {
    entries: Vec<SeatEntry>,
}

impl SeatMap {
    /// Rejects duplicate student ids and regions overlapping by more than
    /// 10% IoU.
    pub fn new(entries: Vec<SeatEntry>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for e in &entries {
            if !ids.insert(e.student_id.as_str()) {
                return Err(Error::SeatMap(format!("duplicate student id {:?}", e.student_id)));
            }
        }
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                if iou(&a.region, &b.region) > MAX_SEAT_OVERLAP {
                    return Err(Error::SeatMap(format!(
                        "seats {:?} and {:?} overlap",
                        a.student_id, b.student_id
                    )));
                }
            }
        }
        Ok(SeatMap { entries })
    }

    pub fn entries(&self) -> &[SeatEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Index of the seat with the highest IoU against `bbox`, if that IoU is at
/// least [`MIN_SEAT_IOU`]. Ties go to the lowest seat index.
pub fn assign_to_seat(bbox: &BBox, map: &SeatMap) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for (i, e) in map.entries.iter().enumerate() {
        let v = iou(bbox, &e.region);
        if v >= MIN_SEAT_IOU && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Flagged,
    Clear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentOutcome {
    pub student_id: String,
    /// Verdicts assigned to this seat (one per frame the student was seen in).
    pub n_frames: u64,
    /// Assigned verdicts labeled cheating.
    pub n_cheating: u64,
    /// Highest cheating probability among assigned verdicts.
    pub max_prob: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    /// One outcome per seat, in seat-map order.
    pub outcomes: Vec<StudentOutcome>,
    pub unassigned: u64,
    pub unassigned_cheating: u64,
}

/// Tallies verdicts per seat. A student is flagged when at least
/// `flag_count` of their verdicts are cheating.
pub fn aggregate<'a, I>(frames: I, map: &SeatMap, flag_count: u64) -> Aggregation
where
    I: IntoIterator<Item = &'a [BehaviorVerdict]>,
{
    let mut tallies = alloc::vec![(0u64, 0u64, 0.0f64); map.len()];
    let (mut unassigned, mut unassigned_cheating) = (0, 0);
    for verdicts in frames {
        for v in verdicts {
            let cheating = v.label == ClassLabel::Cheating;
            match assign_to_seat(&v.bbox, map) {
                Some(i) => {
                    let t = &mut tallies[i];
                    t.0 += 1;
                    t.1 += cheating as u64;
                    t.2 = t.2.max(v.prob_cheating);
                }
                None => {
                    unassigned += 1;
                    unassigned_cheating += cheating as u64;
                }
            }
        }
    }
    let outcomes = map
        .entries
        .iter()
        .zip(tallies)
        .map(|(e, (n_frames, n_cheating, max_prob))| StudentOutcome {
            student_id: e.student_id.clone(),
            n_frames,
            n_cheating,
            max_prob,
            decision: if n_cheating >= flag_count.max(1) { Decision::Flagged } else { Decision::Clear },
        })
        .collect();
    Aggregation { outcomes, unassigned, unassigned_cheating }
}
