//! Per-channel adjacency lists from input channels to unit spines.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sequence::SequenceSpec;

/// One `<unit, spine>` pair a channel projects to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target {
    pub unit: u32,
    pub spine: u32,
}

/// CSR connectivity: the targets of channel `c` are
/// `conn_list[chan_ptr[c]..chan_ptr[c + 1]]`, ordered by `(unit, spine)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityRouter {
    chan_ptr: Vec<u32>,
    conn_list: Vec<Target>,
}

impl ConnectivityRouter {
    /// Counting-sort construction over all `(unit, spine)` origins.
    pub fn build(units: &[SequenceSpec], channels: u32) -> Result<Self> {
        let c = channels as usize;
        let mut chan_ptr = vec![0u32; c + 1];
        for spec in units {
            for &origin in spec.origins() {
                if origin >= channels {
                    return Err(Error::ChannelOutOfRange {
                        channel: origin as usize,
                        channels: c,
                    });
                }
                chan_ptr[origin as usize + 1] += 1;
            }
        }
        for i in 0..c {
            chan_ptr[i + 1] += chan_ptr[i];
        }
        let mut cursor: Vec<u32> = chan_ptr[..c].to_vec();
        let mut conn_list = vec![Target { unit: 0, spine: 0 }; chan_ptr[c] as usize];
        for (u, spec) in units.iter().enumerate() {
            for (s, &origin) in spec.origins().iter().enumerate() {
                let slot = &mut cursor[origin as usize];
                conn_list[*slot as usize] = Target {
                    unit: u as u32,
                    spine: s as u32,
                };
                *slot += 1;
            }
        }
        Ok(Self {
            chan_ptr,
            conn_list,
        })
    }

    pub fn channels(&self) -> u32 {
        (self.chan_ptr.len() - 1) as u32
    }

    pub fn chan_ptr(&self) -> &[u32] {
        &self.chan_ptr
    }

    pub fn conn_list(&self) -> &[Target] {
        &self.conn_list
    }

    /// Targets of one channel.
    pub fn targets(&self, channel: u32) -> &[Target] {
        let c = channel as usize;
        &self.conn_list[self.chan_ptr[c] as usize..self.chan_ptr[c + 1] as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_unit_one_target_per_channel() {
        let units = vec![SequenceSpec::new(vec![0, 1, 2], vec![1, 1]).unwrap()];
        let r = ConnectivityRouter::build(&units, 4).unwrap();
        assert_eq!(r.chan_ptr(), &[0, 1, 2, 3, 3]);
        assert_eq!(
            r.conn_list(),
            &[
                Target { unit: 0, spine: 0 },
                Target { unit: 0, spine: 1 },
                Target { unit: 0, spine: 2 }
            ]
        );
        assert!(r.targets(3).is_empty());
    }

    #[test]
    fn no_units_gives_empty_router() {
        let r = ConnectivityRouter::build(&[], 5).unwrap();
        assert_eq!(r.chan_ptr(), &[0; 6]);
        assert!(r.conn_list().is_empty());
        assert_eq!(r.channels(), 5);
    }

    #[test]
    fn duplicate_origins_keep_spine_order() {
        let units = vec![
            SequenceSpec::new(vec![1, 0, 1], vec![2, 2]).unwrap(),
            SequenceSpec::new(vec![1, 1], vec![3]).unwrap(),
        ];
        let r = ConnectivityRouter::build(&units, 2).unwrap();
        assert_eq!(r.targets(0), &[Target { unit: 0, spine: 1 }]);
        assert_eq!(
            r.targets(1),
            &[
                Target { unit: 0, spine: 0 },
                Target { unit: 0, spine: 2 },
                Target { unit: 1, spine: 0 },
                Target { unit: 1, spine: 1 }
            ]
        );
    }

    #[test]
    fn origin_out_of_range() {
        let units = vec![SequenceSpec::new(vec![0, 7], vec![1]).unwrap()];
        assert!(matches!(
            ConnectivityRouter::build(&units, 4),
            Err(Error::ChannelOutOfRange { channel: 7, .. })
        ));
    }
}
