use alloc::vec::Vec;

use rand::Rng;

use crate::stream::{Event, EventStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Each empty cell fires with probability `level`.
    Insertion,
    /// Each event is dropped with probability `level`.
    Deletion,
    /// Each event moves by a uniform integer offset in `[-level, level]`,
    /// clamped to the stream; events landing on the same cell merge.
    Jitter,
}

/// Returns a noisy copy of `stream`. Negative levels act as zero.
pub fn add_noise<R: Rng + ?Sized>(stream: &EventStream, kind: NoiseKind, level: f64, rng: &mut R) -> EventStream {
    if !(level > 0.0) {
        return stream.clone();
    }
    let (len, channels) = (stream.len(), stream.channels());
    let events: Vec<Event> = match kind {
        NoiseKind::Insertion => {
            let p = level.min(1.0);
            let mut out = Vec::with_capacity(stream.n_events());
            let mut existing = stream.events().iter().peekable();
            for t in 0..len {
                for c in 0..channels {
                    let cell = Event::new(t, c);
                    if existing.peek() == Some(&&cell) {
                        existing.next();
                        out.push(cell);
                    } else if rng.gen_bool(p) {
                        out.push(cell);
                    }
                }
            }
            out
        }
        NoiseKind::Deletion => {
            let p = level.min(1.0);
            stream.events().iter().copied().filter(|_| !rng.gen_bool(p)).collect()
        }
        NoiseKind::Jitter => {
            let k = libm::round(level) as i64;
            let last = len as i64 - 1;
            let mut out: Vec<Event> = stream
                .events()
                .iter()
                .map(|e| {
                    let dt = rng.gen_range(-k..=k);
                    Event::new((e.t as i64 + dt).clamp(0, last) as u32, e.c)
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    };
    EventStream::new(len, channels, events).expect("noise keeps events in bounds")
}
