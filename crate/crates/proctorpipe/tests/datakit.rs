mod common;

use std::path::Path;

use common::*;
use proctorpipe::datakit::{harmonize, SourceDescriptor};
use proctorpipe::formats::save_png;
use proctorpipe_core::ClassLabel;

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

fn image(path: &Path, w: u32, h: u32, seed: u32) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    if path.extension().is_some_and(|e| e == "png") {
        save_png(&bright_frame(w, h, seed), path).unwrap();
    } else {
        let img = bright_frame(w, h, seed);
        image::RgbImage::from_raw(w, h, img.data().to_vec()).unwrap().save(path).unwrap();
    }
}

/// Flat layout: classes.txt, images/, labels/.
fn flat_source(root: &Path, classes: &str, items: &[(&str, u32, &str)]) {
    write(&root.join("classes.txt"), classes);
    for (stem, seed, labels) in items {
        image(&root.join("images").join(format!("{stem}.png")), 100, 100, *seed);
        write(&root.join("labels").join(format!("{stem}.txt")), labels);
    }
}

#[test]
fn cross_source_duplicate_removed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    flat_source(&a, "normal\nMobile\n", &[("x", 1, "0 0.5 0.5 0.2 0.2\n1 0.2 0.2 0.1 0.1\n"), ("y", 2, "0 0.5 0.5 0.4 0.4\n")]);
    // Same pixels as a/x under another name and label index order; the
    // first line duplicates a/x's first record exactly.
    flat_source(&b, "Normal\ncheating\n", &[("copy", 1, "0 0.5 0.5 0.2 0.2\n"), ("z", 3, "1 0.5 0.5 0.3 0.3\n0 0.1 0.1 0.1 0.1\n")]);
    let (records, report) = harmonize(&[SourceDescriptor::from_root(&a), SourceDescriptor::from_root(&b)]);
    assert_eq!(records.len(), 5);
    assert_eq!(report.duplicates_removed, 1);
    assert_eq!(report.duplicates_by_class.get("not_cheating"), Some(&1));
    assert_eq!(report.per_source["b"].duplicates, 1);
    assert_eq!(report.per_class.get("not_cheating"), Some(&3));
    assert_eq!(report.per_class.get("cheating"), Some(&2));
    // class conservation: per-source valid counts minus duplicates
    let summed: u64 = report.per_source.values().flat_map(|s| s.per_class.values()).sum();
    assert_eq!(summed - report.duplicates_removed, report.total_records);
    let first = &records[0];
    assert_eq!(first.bbox.corners(), [40.0, 40.0, 60.0, 60.0]);
    assert_eq!(first.label, ClassLabel::NotCheating);
    assert_eq!(first.source_name, "a");
}

#[test]
fn unknown_label_excluded_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("phones");
    flat_source(&root, "telephone\nperson\n", &[("p", 4, "0 0.5 0.5 0.2 0.2\n1 0.5 0.5 0.2 0.2\n")]);
    let (records, report) = harmonize(&[SourceDescriptor::from_root(&root)]);
    assert_eq!(records.len(), 1);
    assert_eq!(report.warnings.unknown_label, 1);
    assert_eq!(records[0].label, ClassLabel::NotCheating);
}

#[test]
fn warnings_by_type() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("s");
    flat_source(
        &root,
        "cheating\n",
        &[("w", 5, "0 0.99 0.5 0.1 0.1\n0 0.5 0.5 0 0.2\n0 0.5 0.5\nzero 0.5 0.5 0.1 0.1\n7 0.5 0.5 0.1 0.1\n")],
    );
    write(&root.join("labels").join("orphan.txt"), "0 0.5 0.5 0.1 0.1\n0 0.4 0.4 0.1 0.1\n");
    let (records, report) = harmonize(&[SourceDescriptor::from_root(&root)]);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].bbox.corners(), [94.0, 45.0, 100.0, 55.0]);
    let w = &report.warnings;
    assert_eq!((w.clamped, w.invalid_bbox, w.malformed_line, w.unknown_label, w.missing_image), (1, 1, 2, 1, 2));
    assert_eq!(report.per_source["s"].annotations, 7);
}

#[test]
fn split_directories_layout() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("roboflow");
    write(&root.join("classes.txt"), "Not Cheating\ncheating-paper\n");
    for (split, seed) in [("train", 1), ("valid", 2), ("test", 3)] {
        image(&root.join(split).join("images").join("im.jpg"), 64, 48, seed);
        write(&root.join(split).join("labels").join("im.txt"), "1 0.5 0.5 0.5 0.5\n");
    }
    let (records, report) = harmonize(&[SourceDescriptor::from_root(&root)]);
    assert!(report.unreadable.is_empty());
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.label == ClassLabel::Cheating));
}

#[test]
fn unreadable_source_does_not_stop_others() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let good = dir.path().join("good");
    flat_source(&good, "phone\n", &[("g", 9, "0 0.5 0.5 0.2 0.2\n")]);
    let (records, report) = harmonize(&[SourceDescriptor::from_root(&empty), SourceDescriptor::from_root(&good)]);
    assert_eq!(records.len(), 1);
    assert_eq!(report.unreadable.len(), 1);
    assert_eq!(report.unreadable[0].source, "empty");
}
