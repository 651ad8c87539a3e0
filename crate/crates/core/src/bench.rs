//! Per-stage latency bookkeeping and summary statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Wall-clock milliseconds spent in each stage of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub detect_ms: f64,
    pub preprocess_ms: f64,
    pub classify_ms: f64,
    pub total_ms: f64,
}

impl StageTimings {
    /// The total may exceed the stage sum (bookkeeping between stages) but
    /// may undershoot it by at most half a millisecond.
    pub fn is_consistent(&self) -> bool {
        self.total_ms >= self.detect_ms + self.preprocess_ms + self.classify_ms - 0.5
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageMeans {
    pub detect_ms: f64,
    pub preprocess_ms: f64,
    pub classify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Frames measured.
    pub n_samples: usize,
    /// Mean total time per frame.
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub per_stage_means: StageMeans,
    /// Person crops classified across all frames.
    pub n_rois: usize,
    /// Total time divided by crops; `None` when no crop was classified.
    pub mean_ms_per_roi: Option<f64>,
}

/// Linear interpolation between order statistics at rank `q * (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BenchReport {
    pub fn from_timings(samples: &[StageTimings], n_rois: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let n = samples.len() as f64;
        let mut totals: Vec<f64> = samples.iter().map(|s| s.total_ms).collect();
        let sum: f64 = totals.iter().sum();
        totals.sort_by(f64::total_cmp);
        let mean = |f: fn(&StageTimings) -> f64| samples.iter().map(f).sum::<f64>() / n;
        Ok(BenchReport {
            n_samples: samples.len(),
            mean_ms: sum / n,
            p50_ms: percentile(&totals, 0.5),
            p95_ms: percentile(&totals, 0.95),
            min_ms: totals[0],
            max_ms: totals[totals.len() - 1],
            per_stage_means: StageMeans {
                detect_ms: mean(|s| s.detect_ms),
                preprocess_ms: mean(|s| s.preprocess_ms),
                classify_ms: mean(|s| s.classify_ms),
            },
            n_rois,
            mean_ms_per_roi: (n_rois > 0).then(|| sum / n_rois as f64),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(ms: f64) -> StageTimings {
        StageTimings { total_ms: ms, ..Default::default() }
    }

    #[test]
    fn injected_timings() {
        let r = BenchReport::from_timings(&[total(4.0), total(1.0), total(3.0), total(2.0)], 8).unwrap();
        assert_eq!(r.n_samples, 4);
        assert_eq!(r.mean_ms, 2.5);
        assert_eq!(r.p50_ms, 2.5);
        assert!((r.p95_ms - 3.85).abs() < 1e-12);
        assert_eq!((r.min_ms, r.max_ms), (1.0, 4.0));
        assert_eq!(r.mean_ms_per_roi, Some(1.25));
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(BenchReport::from_timings(&[], 0), Err(Error::EmptySamples));
        let r = BenchReport::from_timings(&[total(3.0)], 0).unwrap();
        assert_eq!((r.p50_ms, r.p95_ms, r.mean_ms_per_roi), (3.0, 3.0, None));
    }

    #[test]
    fn consistency_slack() {
        let t = StageTimings { detect_ms: 1.0, preprocess_ms: 1.0, classify_ms: 1.0, total_ms: 2.6 };
        assert!(t.is_consistent());
        assert!(!StageTimings { total_ms: 2.4, ..t }.is_consistent());
    }

    proptest! {
        #[test]
        fn mean_and_percentiles_are_bounded(xs in proptest::collection::vec(0.0f64..1000.0, 1..100)) {
            let samples: Vec<StageTimings> = xs.iter().map(|&x| total(x)).collect();
            let r = BenchReport::from_timings(&samples, 0).unwrap();
            let exact = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((r.mean_ms - exact).abs() <= 1e-9 * exact.abs().max(1.0));
            prop_assert!(r.min_ms <= r.mean_ms + 1e-9 && r.mean_ms <= r.max_ms + 1e-9);
            prop_assert!(r.min_ms <= r.p50_ms && r.p50_ms <= r.p95_ms && r.p95_ms <= r.max_ms);
        }
    }
}
