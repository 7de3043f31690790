//! Frozen-network files.
//!
//! Layout: `DNNW`, `u32 version`, `u32 header_len`, a JSON header, then for
//! every unit its `N_S` origin channels followed by its `N_S - 1` intervals,
//! all `u32`. Spine counts come from the header.

use std::io::{Read, Write};
use std::path::Path;

use dendronn_core::{CoreConfig, FreezeStatus, SequenceSpec};
use serde::{Deserialize, Serialize};

use super::{create, expect_eof, open, read_json_header, read_u32, write_json_header};
use crate::error::{Error, PathContext, Result};

const MAGIC: &[u8; 4] = b"DNNW";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Free,
    TempFrozen,
    PermFrozen,
}

impl From<FreezeStatus> for Status {
    fn from(s: FreezeStatus) -> Self {
        match s {
            FreezeStatus::Free => Status::Free,
            FreezeStatus::TempFrozen => Status::TempFrozen,
            FreezeStatus::PermFrozen => Status::PermFrozen,
        }
    }
}

impl From<Status> for FreezeStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Free => FreezeStatus::Free,
            Status::TempFrozen => FreezeStatus::TempFrozen,
            Status::PermFrozen => FreezeStatus::PermFrozen,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    n_units: usize,
    channels: u32,
    accept_window: u32,
    refractory: bool,
    spines: Vec<usize>,
    status: Vec<Status>,
    /// Class each unit was frozen for, if it came out of rewiring.
    classes: Option<Vec<usize>>,
}

/// A hidden layer with the settings it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub channels: u32,
    pub core: CoreConfig,
    pub units: Vec<SequenceSpec>,
    pub classes: Option<Vec<usize>>,
}

impl NetworkFile {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let header = Header {
            n_units: self.units.len(),
            channels: self.channels,
            accept_window: self.core.accept_window,
            refractory: self.core.refractory,
            spines: self.units.iter().map(SequenceSpec::n_spines).collect(),
            status: self.units.iter().map(|u| u.status.into()).collect(),
            classes: self.classes.clone(),
        };
        write_json_header(w, MAGIC, VERSION, &header)?;
        for u in &self.units {
            for &x in u.origins().iter().chain(u.intervals()) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let h: Header = read_json_header(r, MAGIC, VERSION, "network file")?;
        if h.spines.len() != h.n_units || h.status.len() != h.n_units {
            return Err(Error::format("network file", "per-unit header arrays disagree with n_units"));
        }
        if h.classes.as_ref().is_some_and(|c| c.len() != h.n_units) {
            return Err(Error::format("network file", "class list length differs from n_units"));
        }
        let mut units = Vec::with_capacity(h.n_units);
        for (&n, &status) in h.spines.iter().zip(&h.status) {
            if n < 2 {
                return Err(Error::format("network file", format!("unit with {n} spines")));
            }
            let origins = (0..n).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
            let intervals = (1..n).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
            let spec = SequenceSpec::new(origins, intervals)?.with_status(status.into());
            spec.check_channels(h.channels)?;
            units.push(spec);
        }
        expect_eof(r, "network file")?;
        Ok(Self {
            channels: h.channels,
            core: CoreConfig {
                accept_window: h.accept_window,
                refractory: h.refractory,
            },
            units,
            classes: h.classes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        self.write(&mut w)?;
        w.flush().at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut open(path)?)
    }

    pub fn spine_counts(&self) -> Vec<usize> {
        self.units.iter().map(SequenceSpec::n_spines).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let net = NetworkFile {
            channels: 4,
            core: CoreConfig {
                accept_window: 1,
                refractory: true,
            },
            units: vec![
                SequenceSpec::new(vec![0, 3], vec![7]).unwrap(),
                SequenceSpec::new(vec![1, 1, 2], vec![2, 9]).unwrap().with_status(FreezeStatus::PermFrozen),
            ],
            classes: Some(vec![0, 1]),
        };
        let mut buf = Vec::new();
        net.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DNNW");
        assert_eq!(NetworkFile::read(&mut buf.as_slice()).unwrap(), net);
    }

    #[test]
    fn rejects_out_of_range_origin() {
        let net = NetworkFile {
            channels: 2,
            core: CoreConfig::exact(),
            units: vec![SequenceSpec::new(vec![0, 5], vec![1]).unwrap()],
            classes: None,
        };
        let mut buf = Vec::new();
        net.write(&mut buf).unwrap();
        assert!(NetworkFile::read(&mut buf.as_slice()).is_err());
    }
}
