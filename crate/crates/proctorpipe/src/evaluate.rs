//! Pairs ground-truth boxes with predicted verdicts so the per-ROI
//! classification report can be computed from pipeline output.

use std::collections::BTreeMap;

use proctorpipe_core::dataset::HarmonizedRecord;
use proctorpipe_core::metrics::{classification_report, ConfusionCounts, EvalPair, MetricsReport};
use proctorpipe_core::{iou, ClassLabel};
use serde::Serialize;

use crate::formats::VerdictLine;
use crate::Result;

/// Minimum IoU for a predicted box to count as the same person.
pub const MATCH_IOU: f32 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchStats {
    pub matched: u64,
    /// Truth boxes with no prediction; scored as predicted not_cheating.
    pub unmatched_truth: u64,
    /// Predictions with no truth box; not scored.
    pub unmatched_pred: u64,
    /// Truth frames absent from the predictions file.
    pub missing_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub report: MetricsReport,
    pub matching: MatchStats,
}

/// Greedy one-to-one matching inside each frame, highest IoU first
/// (ties by truth order, then prediction order).
pub fn pair_predictions(truth: &[HarmonizedRecord], preds: &[VerdictLine]) -> (Vec<EvalPair>, MatchStats) {
    let mut by_frame: BTreeMap<&str, Vec<&HarmonizedRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in truth {
        let e = by_frame.entry(r.image_path.as_str()).or_default();
        if e.is_empty() {
            order.push(r.image_path.as_str());
        }
        e.push(r);
    }
    let pred_by_frame: BTreeMap<&str, &VerdictLine> = preds.iter().map(|l| (l.frame_id.as_str(), l)).collect();

    let mut stats = MatchStats::default();
    let mut pairs = Vec::new();
    for frame in order {
        let gts = &by_frame[frame];
        let verdicts = match pred_by_frame.get(frame) {
            Some(l) => l.verdicts.as_slice(),
            None => {
                stats.missing_frames += 1;
                &[]
            }
        };
        let mut candidates = Vec::new();
        for (ti, t) in gts.iter().enumerate() {
            for (pi, p) in verdicts.iter().enumerate() {
                let o = iou(&t.bbox, &p.bbox);
                if o >= MATCH_IOU {
                    candidates.push((o, ti, pi));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut truth_hit = vec![None; gts.len()];
        let mut pred_used = vec![false; verdicts.len()];
        for (_, ti, pi) in candidates {
            if truth_hit[ti].is_none() && !pred_used[pi] {
                truth_hit[ti] = Some(pi);
                pred_used[pi] = true;
            }
        }
        for (t, hit) in gts.iter().zip(&truth_hit) {
            let predicted = match hit {
                Some(pi) => {
                    stats.matched += 1;
                    verdicts[*pi].label
                }
                None => {
                    stats.unmatched_truth += 1;
                    ClassLabel::NotCheating
                }
            };
            pairs.push(EvalPair { truth: t.label, predicted, frame_id: frame.to_string() });
        }
        stats.unmatched_pred += pred_used.iter().filter(|u| !**u).count() as u64;
    }
    let truth_frames: std::collections::HashSet<&str> = by_frame.keys().copied().collect();
    stats.unmatched_pred += preds
        .iter()
        .filter(|l| !truth_frames.contains(l.frame_id.as_str()))
        .map(|l| l.verdicts.len() as u64)
        .sum::<u64>();
    (pairs, stats)
}

pub fn evaluate(truth: &[HarmonizedRecord], preds: &[VerdictLine]) -> Result<EvalOutput> {
    let (pairs, matching) = pair_predictions(truth, preds);
    Ok(EvalOutput { report: classification_report(&pairs)?, matching })
}

/// 2x2 matrix, rows = truth, columns = predicted, cheating as positive.
pub fn confusion_csv(c: &ConfusionCounts) -> String {
    format!(
        "truth\\predicted,not_cheating,cheating\nnot_cheating,{},{}\ncheating,{},{}\n",
        c.true_neg, c.false_pos, c.false_neg, c.true_pos
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proctorpipe_core::roi::BehaviorVerdict;
    use proctorpipe_core::BBox;

    fn rec(img: &str, b: [f32; 4], label: ClassLabel) -> HarmonizedRecord {
        HarmonizedRecord {
            image_path: img.to_string(),
            bbox: BBox::new(b[0], b[1], b[2], b[3]).unwrap(),
            label,
            source_name: "s".to_string(),
        }
    }

    fn verdict(b: [f32; 4], cheating: bool) -> BehaviorVerdict {
        let logits = if cheating { [0.0, 2.0] } else { [2.0, 0.0] };
        BehaviorVerdict::from_logits(&logits, BBox::new(b[0], b[1], b[2], b[3]).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn matches_by_iou_and_scores_misses_as_not_cheating() {
        use ClassLabel::*;
        let truth = vec![
            rec("a.png", [0.0, 0.0, 10.0, 10.0], Cheating),
            rec("a.png", [20.0, 0.0, 30.0, 10.0], NotCheating),
            rec("a.png", [50.0, 50.0, 60.0, 60.0], Cheating),
            rec("b.png", [0.0, 0.0, 10.0, 10.0], NotCheating),
        ];
        let preds = vec![VerdictLine {
            frame_id: "a.png".into(),
            verdicts: vec![
                verdict([21.0, 0.0, 31.0, 10.0], true),
                verdict([0.0, 0.0, 10.0, 9.0], true),
                verdict([80.0, 80.0, 90.0, 90.0], true),
            ],
            annotated: None,
        }];
        let (pairs, stats) = pair_predictions(&truth, &preds);
        let got: Vec<_> = pairs.iter().map(|p| (p.truth, p.predicted)).collect();
        assert_eq!(
            got,
            vec![(Cheating, Cheating), (NotCheating, Cheating), (Cheating, NotCheating), (NotCheating, NotCheating)]
        );
        assert_eq!(stats, MatchStats { matched: 2, unmatched_truth: 2, unmatched_pred: 1, missing_frames: 1 });
    }

    #[test]
    fn higher_iou_wins_contested_truth() {
        let truth = vec![rec("a", [0.0, 0.0, 10.0, 10.0], ClassLabel::Cheating)];
        let preds = vec![VerdictLine {
            frame_id: "a".into(),
            verdicts: vec![verdict([0.0, 0.0, 10.0, 8.0], false), verdict([0.0, 0.0, 10.0, 10.0], true)],
            annotated: None,
        }];
        let (pairs, stats) = pair_predictions(&truth, &preds);
        assert_eq!(pairs[0].predicted, ClassLabel::Cheating);
        assert_eq!(stats.unmatched_pred, 1);
    }

    #[test]
    fn csv_layout() {
        let c = ConfusionCounts::new(1672, 4905, 152, 166);
        assert_eq!(
            confusion_csv(&c),
            "truth\\predicted,not_cheating,cheating\nnot_cheating,4905,152\ncheating,166,1672\n"
        );
    }
}
