//! Dataset manifests: a JSON index of event files with labels and splits.
//! Paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use dendronn_core::data::{LabeledSample, SliceBorders};
use serde::{Deserialize, Serialize};

use super::dnev::{EventFile, TimeUnit};
use super::{read_json_file, write_json_file};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnitName {
    Steps,
    Microseconds,
}

impl From<TimeUnitName> for TimeUnit {
    fn from(u: TimeUnitName) -> Self {
        match u {
            TimeUnitName::Steps => TimeUnit::Step,
            TimeUnitName::Microseconds => TimeUnit::Microsecond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub path: String,
    /// Class index, or `null` for null-class samples.
    pub label: Option<usize>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BordersRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&SliceBorders> for BordersRecord {
    fn from(b: &SliceBorders) -> Self {
        Self {
            lower: b.lower().to_vec(),
            upper: b.upper().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub time_unit: TimeUnitName,
    pub channels: u32,
    /// Common sample length, when all samples share one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<u32>,
    pub classes: Vec<String>,
    /// Slicing applied while generating, for reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_borders: Option<BordersRecord>,
    pub samples: Vec<Entry>,
}

/// A manifest plus the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub base: PathBuf,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_file(path, self)
    }

    pub fn load(path: &Path) -> Result<LoadedManifest> {
        let manifest: Manifest = read_json_file(path)?;
        let n = manifest.classes.len();
        if let Some(e) = manifest.samples.iter().find(|e| e.label.is_some_and(|l| l >= n)) {
            return Err(Error::format(
                "manifest",
                format!("{}: label {:?} outside {n} classes", e.path, e.label),
            ));
        }
        Ok(LoadedManifest {
            manifest,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}

impl LoadedManifest {
    pub fn entries(&self, split: Split) -> impl Iterator<Item = &Entry> {
        self.manifest.samples.iter().filter(move |e| e.split == split)
    }

    pub fn path_of(&self, entry: &Entry) -> PathBuf {
        self.base.join(&entry.path)
    }

    fn load_file(&self, entry: &Entry) -> Result<EventFile> {
        let f = EventFile::load(&self.path_of(entry))?;
        let unit: TimeUnit = self.manifest.time_unit.into();
        if f.unit != unit || f.channels != self.manifest.channels {
            return Err(Error::format(
                "manifest",
                format!("{} does not match the declared time unit or channel count", entry.path),
            ));
        }
        Ok(f)
    }

    /// Timestep samples of one split.
    pub fn load_split(&self, split: Split) -> Result<Vec<LabeledSample>> {
        self.entries(split)
            .map(|e| Ok(LabeledSample::new(self.load_file(e)?.into_stream()?, e.label)))
            .collect()
    }

    /// Raw microsecond recordings of one split.
    pub fn load_raw_split(&self, split: Split) -> Result<Vec<(EventFile, Option<usize>)>> {
        self.entries(split).map(|e| Ok((self.load_file(e)?, e.label))).collect()
    }
}
