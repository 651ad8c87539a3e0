//! The binary behavior vocabulary and the global mapping from source labels.

use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary behavior class. The discriminant is the mapped id used by the
/// classifier head (index 0 = not_cheating, index 1 = cheating).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "LabelRepr", into = "LabelRepr")]
pub enum ClassLabel {
    NotCheating = 0,
    Cheating = 1,
}

#[derive(Serialize, Deserialize)]
struct LabelRepr {
    id: u8,
    name: String,
}

impl TryFrom<LabelRepr> for ClassLabel {
    type Error = Error;

    fn try_from(r: LabelRepr) -> Result<Self> {
        let label = ClassLabel::from_id(r.id)?;
        if label.name() != r.name {
            return Err(Error::UnknownLabel(r.name));
        }
        Ok(label)
    }
}

impl From<ClassLabel> for LabelRepr {
    fn from(l: ClassLabel) -> Self {
        LabelRepr { id: l.id(), name: l.name().to_string() }
    }
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::NotCheating, ClassLabel::Cheating];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::NotCheating => "not_cheating",
            ClassLabel::Cheating => "cheating",
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(ClassLabel::NotCheating),
            1 => Ok(ClassLabel::Cheating),
            other => Err(Error::UnknownLabel(alloc::format!("id {other}"))),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "not_cheating" => Ok(ClassLabel::NotCheating),
            "cheating" => Ok(ClassLabel::Cheating),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }

    pub fn other(self) -> Self {
        match self {
            ClassLabel::NotCheating => ClassLabel::Cheating,
            ClassLabel::Cheating => ClassLabel::NotCheating,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Source-dataset spellings that mean cheating.
pub const CHEATING_SOURCE_LABELS: [&str; 5] =
    ["cheating", "Cheating", "Mobile", "phone", "cheating-paper"];

/// Source-dataset spellings that mean normal behavior.
pub const NOT_CHEATING_SOURCE_LABELS: [&str; 9] = [
    "normal",
    "Normal",
    "Hand-Normalmove",
    "Not Cheating",
    "not-cheating",
    "no_cheating",
    "Non-Cheating",
    "non-cheating",
    "person",
];

/// Maps a raw source label onto the binary vocabulary.
///
/// Only surrounding whitespace is ignored. Case is significant: the source
/// spellings are enumerated exactly, so `"CHEATING"` is rejected rather than
/// guessed at.
pub fn map_label(raw: &str) -> Result<ClassLabel> {
    let key = raw.trim();
    if CHEATING_SOURCE_LABELS.contains(&key) {
        Ok(ClassLabel::Cheating)
    } else if NOT_CHEATING_SOURCE_LABELS.contains(&key) {
        Ok(ClassLabel::NotCheating)
    } else {
        Err(Error::UnknownLabel(raw.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(map_label("Mobile"), Ok(ClassLabel::Cheating));
        assert_eq!(map_label("person"), Ok(ClassLabel::NotCheating));
        assert_eq!(map_label("  Not Cheating\t"), Ok(ClassLabel::NotCheating));
        assert!(matches!(map_label("telephone"), Err(Error::UnknownLabel(_))));
        assert!(matches!(map_label("PERSON"), Err(Error::UnknownLabel(_))));
        assert!(matches!(map_label("Not  Cheating"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn vocabulary_is_fourteen_distinct_strings() {
        let mut all: alloc::vec::Vec<&str> = CHEATING_SOURCE_LABELS
            .iter()
            .chain(NOT_CHEATING_SOURCE_LABELS.iter())
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 14);
    }

    #[test]
    fn id_and_name_agree() {
        for l in ClassLabel::ALL {
            assert_eq!(ClassLabel::from_id(l.id()), Ok(l));
            assert_eq!(ClassLabel::from_name(l.name()), Ok(l));
        }
        assert_eq!(ClassLabel::Cheating.id(), 1);
        assert!(ClassLabel::from_id(2).is_err());
        assert!(ClassLabel::try_from(LabelRepr { id: 1, name: "not_cheating".into() }).is_err());
    }
}
