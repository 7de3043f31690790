use alloc::vec::Vec;

use super::slicing::FrameTensor;
use crate::error::{Error, Result};

/// A raw spike with a timestamp in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawEvent {
    pub t_us: u64,
    pub channel: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShdConfig {
    pub in_channels: u32,
    pub bin_us: u64,
    /// Contiguous input channels summed into one output channel.
    pub group: u32,
    /// An event survives denoising only if another event on its channel
    /// lies within this many microseconds. `None` disables denoising.
    pub denoise_window_us: Option<u64>,
    /// Output length in bins; `None` keeps the last occupied bin.
    pub max_len: Option<u32>,
}

impl Default for ShdConfig {
    fn default() -> Self {
        Self {
            in_channels: 700,
            bin_us: 8_000,
            group: 7,
            denoise_window_us: Some(80_000),
            max_len: None,
        }
    }
}

impl ShdConfig {
    pub fn out_channels(&self) -> u32 {
        self.in_channels.div_ceil(self.group)
    }
}

fn denoise(events: &mut Vec<RawEvent>, window: u64) {
    events.sort_unstable_by_key(|e| (e.channel, e.t_us));
    let keep: Vec<bool> = (0..events.len())
        .map(|i| {
            let e = events[i];
            let near = |j: usize| events[j].channel == e.channel && events[j].t_us.abs_diff(e.t_us) <= window;
            (i > 0 && near(i - 1)) || (i + 1 < events.len() && near(i + 1))
        })
        .collect();
    let mut k = keep.iter();
    events.retain(|_| *k.next().unwrap());
}

/// Denoises, bins and channel-downsamples raw events into an integer frame
/// tensor of shape `(len, in_channels / group)`.
pub fn shd_preprocess(events: &[RawEvent], cfg: &ShdConfig) -> Result<FrameTensor> {
    if cfg.bin_us == 0 || cfg.group == 0 {
        return Err(Error::Config("bin width and channel group must be positive".into()));
    }
    if let Some(e) = events.iter().find(|e| e.channel >= cfg.in_channels) {
        return Err(Error::ChannelOutOfRange {
            channel: e.channel as usize,
            channels: cfg.in_channels as usize,
        });
    }
    let mut kept = events.to_vec();
    if let Some(w) = cfg.denoise_window_us {
        denoise(&mut kept, w);
    }
    let bins = kept.iter().map(|e| e.t_us / cfg.bin_us + 1).max().unwrap_or(0);
    let len = cfg.max_len.unwrap_or(bins.min(u32::MAX as u64) as u32);
    let mut frames = FrameTensor::zeros(len, cfg.out_channels());
    for e in kept {
        let t = e.t_us / cfg.bin_us;
        if t < len as u64 {
            *frames.get_mut(t as u32, e.channel / cfg.group) += 1;
        }
    }
    Ok(frames)
}
