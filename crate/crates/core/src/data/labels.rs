use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIGIT_NAMES: [&str; 10] = [
    "sifr", "wahid", "ithnan", "thalaatha", "arbiya", "khamsa", "sitta", "sabya", "thamaniiya",
    "tisya",
];

/// The 28 letters in dataset order, `alef` = 0 through `yeh` = 27.
pub const LETTER_NAMES: [&str; 28] = [
    "alef", "beh", "teh", "theh", "jeem", "hah", "khah", "dal", "thal", "reh", "zain", "seen",
    "sheen", "sad", "dad", "tah", "zah", "ain", "ghain", "feh", "qaf", "kaf", "lam", "meem",
    "noon", "heh", "waw", "yeh",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Digits,
    Letters,
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Digits => "digits",
            ModelKind::Letters => "letters",
            ModelKind::Custom => "custom",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered class-name table; a class's index is its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub kind: ModelKind,
    pub names: Vec<String>,
}

impl LabelMap {
    pub fn digits() -> Self {
        LabelMap {
            kind: ModelKind::Digits,
            names: DIGIT_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn letters() -> Self {
        LabelMap {
            kind: ModelKind::Letters,
            names: LETTER_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn custom(names: Vec<String>) -> Self {
        LabelMap {
            kind: ModelKind::Custom,
            names,
        }
    }

    /// 10 → digits, 28 → letters.
    pub fn for_head(classes: usize) -> Result<Self> {
        match classes {
            10 => Ok(Self::digits()),
            28 => Ok(Self::letters()),
            other => Err(Error::Label(format!(
                "head size must be 10 (digits) or 28 (letters), got {other}"
            ))),
        }
    }

    pub fn class_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables() {
        let l = LabelMap::letters();
        assert_eq!(l.class_count(), 28);
        assert_eq!(l.name(0), Some("alef"));
        assert_eq!(l.name(27), Some("yeh"));
        let d = LabelMap::digits();
        assert_eq!(d.class_count(), 10);
        assert_eq!(d.name(0), Some("sifr"));
        assert!(LabelMap::for_head(12).is_err());
    }
}
