//! Shared configuration: built-in defaults, overlaid by a JSON file, overlaid
//! by command-line flags.

use std::path::{Path, PathBuf};

use proctorpipe_core::dataset::DEFAULT_SEED;
use proctorpipe_core::detection::DetectorConfig;
use proctorpipe_core::roi::NormalizationSpec;
use serde::{Deserialize, Serialize};

use crate::formats::read_json;
use crate::pipeline::{ClassifyConfig, PipelineConfig};
use crate::Result;

/// Names a default config file when `--config` is absent.
pub const CONFIG_ENV: &str = "PROCTORPIPE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppConfig {
    pub detector_path: Option<PathBuf>,
    pub classifier_path: Option<PathBuf>,
    pub conf_threshold: f32,
    pub iou_threshold: f32,
    pub cls_threshold: f64,
    pub det_size: u32,
    pub norm_mean: [f32; 3],
    pub norm_std: [f32; 3],
    pub roi_expand: f32,
    pub seed: u64,
    pub jobs: usize,
    pub flag_count: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        let det = DetectorConfig::default();
        let cls = ClassifyConfig::default();
        AppConfig {
            detector_path: None,
            classifier_path: None,
            conf_threshold: det.conf_threshold,
            iou_threshold: det.iou_threshold,
            cls_threshold: cls.threshold,
            det_size: det.input_size,
            norm_mean: cls.norm.mean,
            norm_std: cls.norm.std,
            roi_expand: cls.roi_expand,
            seed: DEFAULT_SEED,
            jobs: 1,
            flag_count: 1,
        }
    }
}

/// Any subset of [`AppConfig`]; both the file and the flags produce one.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub detector_path: Option<PathBuf>,
    pub classifier_path: Option<PathBuf>,
    pub conf_threshold: Option<f32>,
    pub iou_threshold: Option<f32>,
    pub cls_threshold: Option<f64>,
    pub det_size: Option<u32>,
    pub norm_mean: Option<[f32; 3]>,
    pub norm_std: Option<[f32; 3]>,
    pub roi_expand: Option<f32>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub flag_count: Option<u64>,
}

impl AppConfig {
    pub fn apply(&mut self, layer: &ConfigLayer) {
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &layer.$f { self.$f = v.clone(); })*};
        }
        take!(conf_threshold, iou_threshold, cls_threshold, det_size, norm_mean, norm_std, roi_expand, seed, jobs, flag_count);
        if layer.detector_path.is_some() {
            self.detector_path = layer.detector_path.clone();
        }
        if layer.classifier_path.is_some() {
            self.classifier_path = layer.classifier_path.clone();
        }
    }

    /// Defaults, then the file at `file` (or the one named by
    /// `PROCTORPIPE_CONFIG`), then `flags`.
    pub fn resolve(file: Option<&Path>, flags: &ConfigLayer) -> Result<Self> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = AppConfig::default();
        if let Some(path) = file.map(Path::to_path_buf).or(env_path) {
            cfg.apply(&read_json::<ConfigLayer>(&path)?);
        }
        cfg.apply(flags);
        Ok(cfg)
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            detector: DetectorConfig {
                conf_threshold: self.conf_threshold,
                iou_threshold: self.iou_threshold,
                input_size: self.det_size,
                ..DetectorConfig::default()
            },
            classify: ClassifyConfig {
                threshold: self.cls_threshold,
                norm: NormalizationSpec::new(self.norm_mean, self.norm_std)?,
                roi_expand: self.roi_expand,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = AppConfig::default();
        assert_eq!(c.conf_threshold, 0.25);
        assert_eq!(c.iou_threshold, 0.45);
        assert_eq!(c.cls_threshold, 0.5);
        assert_eq!(c.seed, 2024);
        assert_eq!(c.det_size, 640);
        assert_eq!(c.jobs, 1);
        assert_eq!(c.flag_count, 1);
        c.pipeline().unwrap();
    }

    #[test]
    fn layers_override_per_field() {
        let mut c = AppConfig::default();
        c.apply(&ConfigLayer { seed: Some(7), conf_threshold: Some(0.4), ..Default::default() });
        c.apply(&ConfigLayer { seed: Some(9), ..Default::default() });
        assert_eq!(c.seed, 9);
        assert_eq!(c.conf_threshold, 0.4);
        assert_eq!(c.iou_threshold, 0.45);
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("app.json");
        std::fs::write(&path, r#"{"det_size": 320, "jobs": 3, "detector_path": "d.onnx"}"#).unwrap();
        let flags = ConfigLayer { jobs: Some(5), ..Default::default() };
        let c = AppConfig::resolve(Some(&path), &flags).unwrap();
        assert_eq!(c.det_size, 320);
        assert_eq!(c.jobs, 5);
        assert_eq!(c.detector_path, Some(PathBuf::from("d.onnx")));
        assert_eq!(c.cls_threshold, 0.5);
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("app.json");
        std::fs::write(&path, r#"{"det_sz": 320}"#).unwrap();
        assert!(AppConfig::resolve(Some(&path), &ConfigLayer::default()).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let c = AppConfig { norm_std: [0.0, 1.0, 1.0], ..AppConfig::default() };
        assert!(c.pipeline().is_err());
        let c = AppConfig { conf_threshold: 1.5, ..AppConfig::default() };
        assert!(c.pipeline().is_err());
    }
}
