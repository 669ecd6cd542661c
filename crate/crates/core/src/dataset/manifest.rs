//! Labelled image inventories stored as CSV
//! (`id,path,label,height,width,split`).

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(invalid(format!("unknown split '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: String,
    pub height: u32,
    pub width: u32,
    pub split: Split,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = DatasetManifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(invalid(format!("duplicate id '{}'", e.id)));
            }
            if e.height == 0 || e.width == 0 {
                return Err(invalid(format!("entry '{}' has an empty image size", e.id)));
            }
            if e.label.is_empty() {
                return Err(invalid(format!("entry '{}' has no label", e.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted distinct labels; class indices refer to this order.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| c == label)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        if self.entries.is_empty() {
            w.write_record(["id", "path", "label", "height", "width", "split"])?;
        }
        for e in &self.entries {
            w.serialize(e)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["id", "path", "label", "height", "width", "split"]
        {
            return Err(Error::Format(format!(
                "unexpected manifest header {header:?}"
            )));
        }
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| Error::Format(format!("manifest row: {e}")))?;
        Self::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.display().to_string()));
        }
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

/// Relative entry paths are taken relative to the manifest's directory.
pub fn resolve(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    if entry.path.is_absolute() {
        entry.path.clone()
    } else {
        manifest_path
            .parent()
            .unwrap_or(Path::new("."))
            .join(&entry.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn entry(id: &str, label: &str, h: u32, split: Split) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            path: format!("images/{id}.png").into(),
            label: label.into(),
            height: h,
            width: h,
            split,
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = DatasetManifest::new(vec![
            entry("a", "x", 10, Split::Train),
            entry("b", "y", 20, Split::Test),
        ])
        .unwrap();
        let text = m.to_csv().unwrap();
        assert!(
            text.starts_with("id,path,label,height,width,split\na,images/a.png,x,10,10,train\n")
        );
        assert_eq!(DatasetManifest::from_csv(&text).unwrap(), m);
        assert_eq!(m.classes(), vec!["x", "y"]);
        assert_eq!(
            DatasetManifest::from_csv(&DatasetManifest::default().to_csv().unwrap())
                .unwrap()
                .len(),
            0
        );
    }

    #[test]
    fn rejects_duplicates_and_bad_rows() {
        assert!(DatasetManifest::new(vec![
            entry("a", "x", 1, Split::Train),
            entry("a", "x", 1, Split::Test)
        ])
        .is_err());
        assert!(
            DatasetManifest::from_csv("id,path,label,height,width,split\na,p,x,0,3,train\n")
                .is_err()
        );
        assert!(
            DatasetManifest::from_csv("id,path,label,height,width,split\na,p,x,2,3,val\n").is_err()
        );
        assert!(DatasetManifest::from_csv("id,label\n").is_err());
    }
}
