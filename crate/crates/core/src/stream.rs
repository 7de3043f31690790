//! Binary spatiotemporal samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A single input spike: channel `c` fired during timestep `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub t: u32,
    pub c: u32,
}

impl Event {
    pub const fn new(t: u32, c: u32) -> Self {
        Self { t, c }
    }
}

/// A time-ordered binary event stream of shape `(len, channels)`.
///
/// Events are sorted by `(t, c)` and at most one event exists per cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventStream {
    len: u32,
    channels: u32,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream from events already sorted by `(t, c)`.
    pub fn new(len: u32, channels: u32, events: Vec<Event>) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            if e.t >= len {
                return Err(Error::InvalidStream(format!(
                    "event {i} at t={} outside length {len}",
                    e.t
                )));
            }
            if e.c >= channels {
                return Err(Error::ChannelOutOfRange {
                    channel: e.c as usize,
                    channels: channels as usize,
                });
            }
            if i > 0 && events[i - 1] >= *e {
                return Err(Error::InvalidStream(format!(
                    "events not strictly increasing in (t, c) at index {i}"
                )));
            }
        }
        Ok(Self {
            len,
            channels,
            events,
        })
    }

    /// Sorts and deduplicates `events` before validating bounds.
    pub fn from_unsorted(len: u32, channels: u32, mut events: Vec<Event>) -> Result<Self> {
        events.sort_unstable();
        events.dedup();
        Self::new(len, channels, events)
    }

    pub fn empty(len: u32, channels: u32) -> Self {
        Self {
            len,
            channels,
            events: Vec::new(),
        }
    }

    /// Builds a stream from a dense `len x channels` row-major binary frame.
    pub fn from_dense(len: u32, channels: u32, bits: &[bool]) -> Result<Self> {
        let expected = len as usize * channels as usize;
        if bits.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "dense frame",
                expected,
                actual: bits.len(),
            });
        }
        let events = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Event::new((i / channels as usize) as u32, (i % channels as usize) as u32))
            .collect();
        Ok(Self {
            len,
            channels,
            events,
        })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// One past the time of the last event; zero for an empty stream.
    pub fn content_len(&self) -> u32 {
        self.events.last().map_or(0, |e| e.t + 1)
    }

    /// Returns a copy with a different length, truncating events past it.
    pub fn with_len(&self, len: u32) -> Self {
        let events = self.events.iter().copied().filter(|e| e.t < len).collect();
        Self {
            len,
            channels: self.channels,
            events,
        }
    }

    /// Events of timestep `t` (binary search over the sorted list).
    pub fn events_at(&self, t: u32) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < t);
        let hi = self.events.partition_point(|e| e.t <= t);
        &self.events[lo..hi]
    }

    /// Iterates over every timestep `0..len` with the events of that bin.
    pub fn bins(&self) -> Bins<'_> {
        Bins {
            stream: self,
            t: 0,
            cursor: 0,
        }
    }

    /// Dense frame of timestep `t`, written into `frame` (length `channels`).
    pub fn fill_frame(&self, t: u32, frame: &mut [bool]) {
        frame.iter_mut().for_each(|b| *b = false);
        for e in self.events_at(t) {
            frame[e.c as usize] = true;
        }
    }

    /// Full dense view, row-major `len x channels`.
    pub fn to_dense(&self) -> Vec<bool> {
        let c = self.channels as usize;
        let mut bits = vec![false; self.len as usize * c];
        for e in &self.events {
            bits[e.t as usize * c + e.c as usize] = true;
        }
        bits
    }

    /// Number of events per channel.
    pub fn channel_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.channels as usize];
        for e in &self.events {
            counts[e.c as usize] += 1;
        }
        counts
    }
}

/// Iterator returned by [`EventStream::bins`].
pub struct Bins<'a> {
    stream: &'a EventStream,
    t: u32,
    cursor: usize,
}

impl<'a> Iterator for Bins<'a> {
    type Item = (u32, &'a [Event]);

    fn next(&mut self) -> Option<Self::Item> {
        if self.t >= self.stream.len {
            return None;
        }
        let events = &self.stream.events;
        let start = self.cursor;
        let mut end = start;
        while end < events.len() && events[end].t == self.t {
            end += 1;
        }
        self.cursor = end;
        let t = self.t;
        self.t += 1;
        Some((t, &events[start..end]))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.stream.len - self.t) as usize;
        (left, Some(left))
    }
}
