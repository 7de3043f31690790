//! Event-stream files.
//!
//! Binary layout: magic, `u32 T`, `u32 C`, `u64 n_events`, then `n_events`
//! records of `(u32 t, u32 c)` sorted by `(t, c)`. The magic also declares
//! the time unit: `DNEV` for network timesteps, `DNEU` for raw recordings in
//! microseconds (where `T` is the recording duration).
//!
//! The CSV twin is a `#T=..,C=..` line followed by `t,c` rows.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use dendronn_core::data::RawEvent;
use dendronn_core::{Event, EventStream};

use super::{create, expect_eof, open, read_u32, read_u64, read_u8s};
use crate::error::{Error, PathContext, Result};

pub const MAGIC_STEPS: &[u8; 4] = b"DNEV";
pub const MAGIC_MICROS: &[u8; 4] = b"DNEU";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Step,
    Microsecond,
}

impl TimeUnit {
    fn magic(self) -> &'static [u8; 4] {
        match self {
            TimeUnit::Step => MAGIC_STEPS,
            TimeUnit::Microsecond => MAGIC_MICROS,
        }
    }
}

/// An event file of either time unit.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFile {
    pub unit: TimeUnit,
    pub len: u32,
    pub channels: u32,
    /// Sorted by `(t, c)`, deduplicated.
    pub events: Vec<Event>,
}

impl EventFile {
    pub fn from_stream(stream: &EventStream) -> Self {
        Self {
            unit: TimeUnit::Step,
            len: stream.len(),
            channels: stream.channels(),
            events: stream.events().to_vec(),
        }
    }

    /// Raw recording; events are sorted and duplicates dropped.
    pub fn from_raw(duration_us: u32, channels: u32, raw: &[RawEvent]) -> Result<Self> {
        let mut events = raw
            .iter()
            .map(|e| {
                u32::try_from(e.t_us)
                    .map(|t| Event::new(t, e.channel))
                    .map_err(|_| Error::format("event file", format!("timestamp {} exceeds u32", e.t_us)))
            })
            .collect::<Result<Vec<_>>>()?;
        events.sort_unstable();
        events.dedup();
        let file = Self {
            unit: TimeUnit::Microsecond,
            len: duration_us,
            channels,
            events,
        };
        file.check()?;
        Ok(file)
    }

    pub fn into_stream(self) -> Result<EventStream> {
        if self.unit != TimeUnit::Step {
            return Err(Error::format("event file", "expected timestep units, found microseconds"));
        }
        Ok(EventStream::new(self.len, self.channels, self.events)?)
    }

    pub fn raw_events(&self) -> Vec<RawEvent> {
        self.events
            .iter()
            .map(|e| RawEvent {
                t_us: e.t as u64,
                channel: e.c,
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::format("event file", msg));
        for pair in self.events.windows(2) {
            if pair[0] >= pair[1] {
                return bad(format!("events not strictly sorted at {:?}", pair[1]));
            }
        }
        if let Some(e) = self.events.iter().find(|e| e.t >= self.len || e.c >= self.channels) {
            return bad(format!("event {e:?} outside T={} C={}", self.len, self.channels));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(self.unit.magic())?;
        w.write_all(&self.len.to_le_bytes())?;
        w.write_all(&self.channels.to_le_bytes())?;
        w.write_all(&(self.events.len() as u64).to_le_bytes())?;
        for e in &self.events {
            w.write_all(&e.t.to_le_bytes())?;
            w.write_all(&e.c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let magic: [u8; 4] = read_u8s(r)?;
        let unit = match &magic {
            m if m == MAGIC_STEPS => TimeUnit::Step,
            m if m == MAGIC_MICROS => TimeUnit::Microsecond,
            m => return Err(Error::format("event file", format!("bad magic {:?}", String::from_utf8_lossy(m)))),
        };
        let len = read_u32(r)?;
        let channels = read_u32(r)?;
        let n = read_u64(r)?;
        let mut events = Vec::with_capacity(n.min(1 << 20) as usize);
        for _ in 0..n {
            let t = read_u32(r)?;
            let c = read_u32(r)?;
            events.push(Event::new(t, c));
        }
        expect_eof(r, "event file")?;
        let file = Self {
            unit,
            len,
            channels,
            events,
        };
        file.check()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        self.write(&mut w)?;
        w.flush().at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut open(path)?)
    }
}

pub fn save_stream(path: &Path, stream: &EventStream) -> Result<()> {
    EventFile::from_stream(stream).save(path)
}

pub fn load_stream(path: &Path) -> Result<EventStream> {
    EventFile::load(path)?.into_stream()
}

pub fn write_csv<W: Write>(w: &mut W, stream: &EventStream) -> Result<()> {
    writeln!(w, "#T={},C={}", stream.len(), stream.channels())?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for e in stream.events() {
        csv.serialize((e.t, e.c))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(mut r: R) -> Result<EventStream> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let shape = header
        .trim()
        .strip_prefix('#')
        .and_then(|h| {
            let mut len = None;
            let mut channels = None;
            for part in h.split(',') {
                match part.trim().split_once('=')? {
                    ("T", v) => len = v.parse::<u32>().ok(),
                    ("C", v) => channels = v.parse::<u32>().ok(),
                    _ => return None,
                }
            }
            Some((len?, channels?))
        })
        .ok_or_else(|| Error::format("event csv", format!("bad header line {:?}", header.trim())))?;
    let mut csv = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut events = Vec::new();
    for row in csv.deserialize() {
        let (t, c): (u32, u32) = row?;
        events.push(Event::new(t, c));
    }
    Ok(EventStream::from_unsorted(shape.0, shape.1, events)?)
}
