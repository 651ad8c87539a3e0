//! Multi-source ingestion of normalized-center box annotations.
//!
//! A source root holds `classes.txt` (one raw label per line, line number =
//! class index) and either `labels/` + `images/` directly or one such pair
//! under each split directory (`train/`, `valid/`, ...). Label files are
//! `class_id cx cy w h` per line, one file per image, matched by stem.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use proctorpipe_core::dataset::{validate_bbox, HarmonizedRecord, ValidationWarning};
use proctorpipe_core::label::map_label;
use proctorpipe_core::ClassLabel;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::formats::IMAGE_EXTENSIONS;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDescriptor {
    pub root: PathBuf,
    pub name: String,
}

impl SourceDescriptor {
    /// Names the source after its directory.
    pub fn from_root(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        let name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| root.display().to_string());
        SourceDescriptor { root, name }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WarningCounts {
    pub clamped: u64,
    pub invalid_bbox: u64,
    pub unknown_label: u64,
    pub malformed_line: u64,
    pub missing_image: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SourceStats {
    pub annotations: u64,
    /// Valid records per class, before duplicate removal.
    pub per_class: BTreeMap<String, u64>,
    pub warnings: WarningCounts,
    pub duplicates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnreadableSource {
    pub source: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub per_source: BTreeMap<String, SourceStats>,
    pub warnings: WarningCounts,
    /// Final record counts per class.
    pub per_class: BTreeMap<String, u64>,
    pub duplicates_removed: u64,
    pub duplicates_by_class: BTreeMap<String, u64>,
    pub unreadable: Vec<UnreadableSource>,
    pub total_records: u64,
}

impl WarningCounts {
    fn add(&mut self, o: &WarningCounts) {
        self.clamped += o.clamped;
        self.invalid_bbox += o.invalid_bbox;
        self.unknown_label += o.unknown_label;
        self.malformed_line += o.malformed_line;
        self.missing_image += o.missing_image;
    }
}

fn read_classes(root: &Path) -> Result<Vec<String>> {
    let path = root.join("classes.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::UnreadableSource {
        path: root.to_path_buf(),
        reason: format!("classes.txt: {e}"),
    })?;
    Ok(text.lines().map(|l| l.trim().to_string()).collect())
}

/// `(labels dir, images dir)` pairs under `root`.
fn label_dirs(root: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    if root.join("labels").is_dir() {
        return Ok(vec![(root.join("labels"), root.join("images"))]);
    }
    let mut pairs = Vec::new();
    let entries = std::fs::read_dir(root).map_err(|e| Error::UnreadableSource { path: root.to_path_buf(), reason: e.to_string() })?;
    let mut subdirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for d in subdirs {
        if d.join("labels").is_dir() {
            pairs.push((d.join("labels"), d.join("images")));
        }
    }
    if pairs.is_empty() {
        return Err(Error::UnreadableSource { path: root.to_path_buf(), reason: "no labels/ directory".to_string() });
    }
    Ok(pairs)
}

fn find_image(images: &Path, stem: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS
        .iter()
        .flat_map(|e| [e.to_string(), e.to_ascii_uppercase()])
        .map(|e| images.join(format!("{stem}.{e}")))
        .find(|p| p.is_file())
}

struct Candidate {
    record: HarmonizedRecord,
    key: (String, [u32; 4], ClassLabel),
}

fn ingest_source(src: &SourceDescriptor, stats: &mut SourceStats) -> Result<Vec<Candidate>> {
    let classes = read_classes(&src.root)?;
    let mut out = Vec::new();
    for (labels, images) in label_dirs(&src.root)? {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&labels)
            .map_err(|e| Error::UnreadableSource { path: labels.clone(), reason: e.to_string() })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        files.sort();
        for label_file in files {
            let text = std::fs::read_to_string(&label_file).map_err(|e| Error::io(&label_file, e))?;
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            if lines.is_empty() {
                continue;
            }
            stats.annotations += lines.len() as u64;
            let stem = label_file.file_stem().unwrap_or_default().to_string_lossy();
            let Some(image_path) = find_image(&images, &stem) else {
                stats.warnings.missing_image += lines.len() as u64;
                continue;
            };
            let bytes = std::fs::read(&image_path).map_err(|e| Error::io(&image_path, e))?;
            let hash = hex::encode(Sha256::digest(&bytes));
            let (w, h) = image::ImageReader::new(std::io::Cursor::new(&bytes))
                .with_guessed_format()
                .map_err(|e| Error::io(&image_path, e))?
                .into_dimensions()
                .map_err(|source| Error::Image { path: image_path.clone(), source })?;

            for line in lines {
                let fields: Vec<&str> = line.split_whitespace().collect();
                let parsed = (fields.len() == 5)
                    .then(|| {
                        let id = fields[0].parse::<usize>().ok()?;
                        let mut v = [0f32; 4];
                        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                            *slot = f.parse().ok()?;
                        }
                        Some((id, v))
                    })
                    .flatten();
                let Some((class_id, norm)) = parsed else {
                    stats.warnings.malformed_line += 1;
                    continue;
                };
                let Some(label) = classes.get(class_id).and_then(|raw| map_label(raw).ok()) else {
                    stats.warnings.unknown_label += 1;
                    continue;
                };
                let check = validate_bbox(norm, w, h);
                match check.warning() {
                    Some(ValidationWarning::InvalidBbox) => {
                        stats.warnings.invalid_bbox += 1;
                        continue;
                    }
                    Some(ValidationWarning::Clamped) => stats.warnings.clamped += 1,
                    None => {}
                }
                let bbox = check.bbox().expect("valid or clamped");
                *stats.per_class.entry(label.name().to_string()).or_default() += 1;
                out.push(Candidate {
                    key: (hash.clone(), bbox.corners().map(f32::to_bits), label),
                    record: HarmonizedRecord {
                        image_path: image_path.display().to_string(),
                        bbox,
                        label,
                        source_name: src.name.clone(),
                    },
                });
            }
        }
    }
    Ok(out)
}

/// Loads, maps, validates and deduplicates every source. A source that
/// cannot be read is reported and skipped; the others still load.
pub fn harmonize(sources: &[SourceDescriptor]) -> (Vec<HarmonizedRecord>, IngestReport) {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for src in sources {
        let mut stats = SourceStats::default();
        match ingest_source(src, &mut stats) {
            Ok(candidates) => {
                for c in candidates {
                    let label = c.record.label.name().to_string();
                    if seen.insert(c.key) {
                        records.push(c.record);
                    } else {
                        stats.duplicates += 1;
                        report.duplicates_removed += 1;
                        *report.duplicates_by_class.entry(label).or_default() += 1;
                    }
                }
            }
            Err(e) => report.unreadable.push(UnreadableSource { source: src.name.clone(), reason: e.to_string() }),
        }
        report.warnings.add(&stats.warnings);
        report.per_source.insert(src.name.clone(), stats);
    }
    for r in &records {
        *report.per_class.entry(r.label.name().to_string()).or_default() += 1;
    }
    report.total_records = records.len() as u64;
    (records, report)
}
