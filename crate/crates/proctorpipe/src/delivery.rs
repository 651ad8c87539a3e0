//! Private per-student reports. Each message names one student, goes to that
//! student's contact only, and is written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use proctorpipe_core::seats::{Decision, StudentOutcome};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const DEFAULT_SENDER: &str = "Exam Proctoring <proctoring@localhost>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub student_id: String,
    pub to: String,
    pub subject: String,
    /// Complete internet-message text, headers and body.
    pub text: String,
}

/// Where rendered messages go. The default writes files; a mail transport
/// can implement the same interface.
pub trait MessageSink {
    fn deliver(&self, msg: &Message) -> Result<()>;
}

/// Writes `<student_id>.eml` into a directory.
#[derive(Debug, Clone)]
pub struct OutboxSink {
    dir: PathBuf,
}

impl OutboxSink {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        OutboxSink { dir: dir.into() }
    }

    pub fn path_for(&self, student_id: &str) -> PathBuf {
        self.dir.join(format!("{}.eml", file_stem(student_id)))
    }
}

/// File-name-safe stem. Ids that had to be altered get a short hash suffix
/// so two students never share a file.
pub fn file_stem(student_id: &str) -> String {
    let clean: String = student_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if clean == student_id && !clean.is_empty() && !clean.starts_with('.') {
        return clean;
    }
    let digest = hex::encode(&Sha256::digest(student_id.as_bytes())[..4]);
    format!("{}-{digest}", clean.trim_start_matches('.'))
}

impl MessageSink for OutboxSink {
    fn deliver(&self, msg: &Message) -> Result<()> {
        let path = self.path_for(&msg.student_id);
        let tmp = self.dir.join(format!(".{}.tmp", file_stem(&msg.student_id)));
        let written = std::fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(msg.text.as_bytes())?;
                f.sync_all()
            })
            .and_then(|_| std::fs::rename(&tmp, &path));
        written.map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            Error::io(&path, e)
        })
    }
}

fn has_line_break(s: &str) -> bool {
    s.contains(['\r', '\n'])
}

/// Renders one student's outcome. Nothing about any other student is
/// included.
pub fn render_message(outcome: &StudentOutcome, contact: &str, sender: &str, date: DateTime<FixedOffset>) -> Result<Message> {
    if has_line_break(contact) || has_line_break(&outcome.student_id) || has_line_break(sender) || contact.trim().is_empty() {
        return Err(Error::Usage(format!("unusable contact or id for student {:?}", outcome.student_id)));
    }
    let status = match outcome.decision {
        Decision::Flagged => "flagged",
        Decision::Clear => "clear",
    };
    let subject = format!("Exam monitoring result for {}: {status}", outcome.student_id);
    let mut body = format!(
        "Student: {}\n\nDecision: {status}\nFrames observed: {}\nFrames classified as cheating: {}\nHighest cheating probability: {:.2}\n",
        outcome.student_id, outcome.n_frames, outcome.n_cheating, outcome.max_prob
    );
    body.push_str(match outcome.decision {
        Decision::Flagged => "\nYour session has been flagged for review. Exam staff will contact you privately.\n",
        Decision::Clear => "\nNo further action is needed.\n",
    });
    let text = format!(
        "From: {sender}\r\nTo: {contact}\r\nSubject: {subject}\r\nDate: {}\r\nMIME-Version: 1.0\r\nContent-Type: text/plain; charset=utf-8\r\nContent-Transfer-Encoding: 8bit\r\n\r\n{}",
        date.to_rfc2822(),
        body.replace('\n', "\r\n")
    );
    Ok(Message { student_id: outcome.student_id.clone(), to: contact.to_string(), subject, text })
}

#[derive(Debug)]
pub struct DeliveryFailure {
    pub student_id: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct EmitSummary {
    pub written: usize,
    pub failures: Vec<DeliveryFailure>,
}

/// One message per `(outcome, contact)`. Failures are collected per student
/// and do not stop the others.
pub fn emit_reports<'a>(
    outcomes: impl IntoIterator<Item = (&'a StudentOutcome, &'a str)>,
    sink: &dyn MessageSink,
    sender: &str,
    date: DateTime<FixedOffset>,
) -> EmitSummary {
    let mut summary = EmitSummary::default();
    for (outcome, contact) in outcomes {
        match render_message(outcome, contact, sender, date).and_then(|m| sink.deliver(&m)) {
            Ok(()) => summary.written += 1,
            Err(error) => summary.failures.push(DeliveryFailure { student_id: outcome.student_id.clone(), error }),
        }
    }
    summary
}

/// Creates the outbox if needed.
pub fn prepare_outbox(dir: &Path) -> Result<OutboxSink> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(OutboxSink::new(dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(id: &str, n_frames: u64, n_cheating: u64, decision: Decision) -> StudentOutcome {
        StudentOutcome { student_id: id.to_string(), n_frames, n_cheating, max_prob: 0.875, decision }
    }

    fn date() -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339("2024-05-01T09:30:00+00:00").unwrap()
    }

    #[test]
    fn flagged_body_carries_counts() {
        let o = outcome("s001", 3, 2, Decision::Flagged);
        let m = render_message(&o, "s001@example.edu", DEFAULT_SENDER, date()).unwrap();
        assert!(m.text.contains("To: s001@example.edu\r\n"));
        assert!(m.text.contains("Date: Wed, 1 May 2024 09:30:00 +0000\r\n"));
        assert!(m.text.contains("flagged"));
        assert!(m.text.contains("Frames observed: 3"));
        assert!(m.text.contains("Frames classified as cheating: 2"));
        assert!(m.text.contains("0.88"));
    }

    #[test]
    fn header_injection_rejected() {
        let o = outcome("s1", 0, 0, Decision::Clear);
        assert!(render_message(&o, "a@b\r\nBcc: all@b", DEFAULT_SENDER, date()).is_err());
    }

    #[test]
    fn file_stems_stay_distinct() {
        assert_eq!(file_stem("s001"), "s001");
        let a = file_stem("a/b");
        let b = file_stem("a_b");
        assert_ne!(a, b);
        assert!(!a.contains('/'));
        assert!(!file_stem("..").starts_with('.'));
    }

    #[test]
    fn one_file_per_student() {
        let dir = tempfile::tempdir().unwrap();
        let sink = OutboxSink::new(dir.path());
        let outs = [outcome("s1", 2, 1, Decision::Flagged), outcome("s2", 2, 0, Decision::Clear)];
        let contacts = ["s1@x.edu", "s2@x.edu"];
        let summary = emit_reports(outs.iter().zip(contacts), &sink, DEFAULT_SENDER, date());
        assert_eq!(summary.written, 2);
        let mut names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names, ["s1.eml", "s2.eml"]);
        let s1 = std::fs::read_to_string(dir.path().join("s1.eml")).unwrap();
        assert!(!s1.contains("s2"));
    }

    #[test]
    fn unwritable_outbox_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let sink = OutboxSink::new(dir.path().join("missing"));
        let outs = [outcome("s1", 1, 1, Decision::Flagged)];
        let summary = emit_reports(outs.iter().zip(["s1@x.edu"]), &sink, DEFAULT_SENDER, date());
        assert_eq!(summary.written, 0);
        assert_eq!(summary.failures.len(), 1);
        assert!(matches!(summary.failures[0].error, Error::Io { .. }));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
