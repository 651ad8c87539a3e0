//! On-disk formats: images, JSON-lines manifests and verdicts, seat maps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use proctorpipe_core::dataset::HarmonizedRecord;
use proctorpipe_core::roi::BehaviorVerdict;
use proctorpipe_core::seats::{SeatEntry, SeatMap};
use proctorpipe_core::{BBox, ClassLabel, ImageBuffer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::pipeline::{FrameResult, FrameSource};
use crate::{Error, Result};

pub const IMAGE_EXTENSIONS: [&str; 4] = ["jpg", "jpeg", "png", "bmp"];

pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(ImageBuffer::new(w, h, rgb.into_raw())?)
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.width(), img.height(), img.data().to_vec())
        .expect("ImageBuffer invariants match RgbImage");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::Json { path: path.to_path_buf(), line: i + 1, source })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|source| Error::Json { path: path.to_path_buf(), line: 0, source })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), line: 0, source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| Error::Json { path: path.to_path_buf(), line: 0, source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One annotated person box in a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_path: String,
    pub x1: f32,
    pub y1: f32,
    pub x2: f32,
    pub y2: f32,
    pub label_id: u8,
    pub label_name: String,
    pub source: String,
}

impl From<&HarmonizedRecord> for ManifestRow {
    fn from(r: &HarmonizedRecord) -> Self {
        let [x1, y1, x2, y2] = r.bbox.corners();
        ManifestRow {
            image_path: r.image_path.clone(),
            x1,
            y1,
            x2,
            y2,
            label_id: r.label.id(),
            label_name: r.label.name().to_string(),
            source: r.source_name.clone(),
        }
    }
}

impl TryFrom<ManifestRow> for HarmonizedRecord {
    type Error = Error;

    fn try_from(row: ManifestRow) -> Result<Self> {
        let label = ClassLabel::from_id(row.label_id)?;
        if label.name() != row.label_name {
            return Err(proctorpipe_core::Error::UnknownLabel(row.label_name).into());
        }
        Ok(HarmonizedRecord {
            image_path: row.image_path,
            bbox: BBox::new(row.x1, row.y1, row.x2, row.y2)?,
            label,
            source_name: row.source,
        })
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<HarmonizedRecord>> {
    read_jsonl::<ManifestRow>(path)?.into_iter().map(HarmonizedRecord::try_from).collect()
}

pub fn write_manifest(path: &Path, records: &[HarmonizedRecord]) -> Result<()> {
    write_jsonl(path, records.iter().map(ManifestRow::from))
}

/// One line of `verdicts.jsonl`. Timings are kept out of this file so that
/// identical runs produce identical bytes; they go to `timings.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictLine {
    pub frame_id: String,
    pub verdicts: Vec<BehaviorVerdict>,
    /// Path of the annotated PNG, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotated: Option<String>,
}

impl VerdictLine {
    pub fn from_result(r: &FrameResult, annotated: Option<String>) -> Self {
        VerdictLine { frame_id: r.frame_id.clone(), verdicts: r.verdicts.clone(), annotated }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeatRow {
    x1: f32,
    y1: f32,
    x2: f32,
    y2: f32,
    student_id: String,
    contact: String,
}

pub fn read_seat_map(path: &Path) -> Result<SeatMap> {
    let rows: Vec<SeatRow> = read_json(path)?;
    let entries = rows
        .into_iter()
        .map(|r| {
            Ok(SeatEntry { region: BBox::new(r.x1, r.y1, r.x2, r.y2)?, student_id: r.student_id, contact: r.contact })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeatMap::new(entries)?)
}

pub fn write_seat_map(path: &Path, map: &SeatMap) -> Result<()> {
    let rows: Vec<SeatRow> = map
        .entries()
        .iter()
        .map(|e| {
            let [x1, y1, x2, y2] = e.region.corners();
            SeatRow { x1, y1, x2, y2, student_id: e.student_id.clone(), contact: e.contact.clone() }
        })
        .collect();
    write_json(path, &rows)
}

/// Expands `--input`: a single image, a directory of images (sorted by
/// name), or a JSON-lines manifest whose distinct image paths are taken in
/// order of first appearance. Relative manifest paths resolve against the
/// manifest's directory; frame ids keep the path as written.
pub fn resolve_inputs(input: &Path) -> Result<Vec<FrameSource>> {
    if input.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| Error::io(input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image_path(p))
            .collect();
        paths.sort();
        return Ok(paths
            .into_iter()
            .map(|p| FrameSource { frame_id: p.display().to_string(), path: p })
            .collect());
    }
    if !input.exists() {
        return Err(Error::io(input, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    if is_image_path(input) {
        return Ok(vec![FrameSource { frame_id: input.display().to_string(), path: input.to_path_buf() }]);
    }
    let rows: Vec<ManifestRow> = read_jsonl(input)?;
    let base = input.parent().unwrap_or(Path::new(""));
    let mut seen = std::collections::HashSet::new();
    Ok(rows
        .into_iter()
        .filter(|r| seen.insert(r.image_path.clone()))
        .map(|r| FrameSource { path: base.join(&r.image_path), frame_id: r.image_path })
        .collect())
}
