use std::collections::BTreeSet;

use dendronn_core::timewheel::{emissions_to_raster, run_sample, ConnectivityRouter, TimeWheelState};
use dendronn_core::unit::{brute_force_match, exact_spike_count, network_infer, unit_run, ChannelBits};
use dendronn_core::{CoreConfig, Event, EventStream, SequenceSpec};
use proptest::prelude::*;

fn spec_strategy(channels: u32, max_spines: usize, max_dt: u32) -> impl Strategy<Value = SequenceSpec> {
    (2..=max_spines).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..channels, n),
            prop::collection::vec(1..=max_dt, n - 1),
        )
            .prop_map(|(o, d)| SequenceSpec::new(o, d).unwrap())
    })
}

fn stream_strategy(len: u32, channels: u32, max_events: usize) -> impl Strategy<Value = EventStream> {
    prop::collection::vec((0..len, 0..channels), 0..max_events).prop_map(move |ev| {
        EventStream::from_unsorted(len, channels, ev.into_iter().map(|(t, c)| Event::new(t, c)).collect()).unwrap()
    })
}

/// Exact matching by enumerating every anchor time: the unit fires at
/// `t0 + span` whenever all of its spikes are present relative to `t0`.
fn enumerate_matches(spec: &SequenceSpec, stream: &EventStream, refractory: bool) -> Vec<u32> {
    let cells: BTreeSet<(u32, u32)> = stream.events().iter().map(|e| (e.t, e.c)).collect();
    let mut offsets = vec![0u32];
    for &d in spec.intervals() {
        offsets.push(offsets.last().unwrap() + d);
    }
    let mut out = Vec::new();
    for t0 in 0..stream.len() {
        let ok = spec
            .origins()
            .iter()
            .zip(&offsets)
            .all(|(&c, &off)| cells.contains(&(t0 + off, c)));
        if ok {
            out.push(t0 + offsets.last().unwrap());
        }
    }
    if refractory {
        out.truncate(1);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn unit_matches_recursive_oracle(
        spec in spec_strategy(3, 5, 6),
        stream in stream_strategy(40, 3, 40),
        window in 0u32..=3,
        refractory: bool,
    ) {
        let cfg = CoreConfig { accept_window: window, refractory };
        prop_assert_eq!(unit_run(&spec, &stream, &cfg).unwrap(), brute_force_match(&spec, &stream, &cfg).unwrap());
    }

    #[test]
    fn exact_unit_matches_enumeration(
        spec in spec_strategy(3, 5, 6),
        stream in stream_strategy(40, 3, 50),
        refractory: bool,
    ) {
        let cfg = CoreConfig { accept_window: 0, refractory };
        prop_assert_eq!(unit_run(&spec, &stream, &cfg).unwrap(), enumerate_matches(&spec, &stream, refractory));
    }

    #[test]
    fn foreign_channels_do_not_change_output(
        spec in spec_strategy(2, 4, 5),
        base in stream_strategy(30, 4, 20),
        extra in prop::collection::vec((0u32..30, 2u32..4), 0..30),
        window in 0u32..=2,
    ) {
        // Origins live on channels 0 and 1; extra events only touch 2 and 3.
        let cfg = CoreConfig::with_window(window);
        let mut events = base.events().to_vec();
        events.extend(extra.into_iter().map(|(t, c)| Event::new(t, c)));
        let noisy = EventStream::from_unsorted(30, 4, events).unwrap();
        prop_assert_eq!(unit_run(&spec, &base, &cfg).unwrap(), unit_run(&spec, &noisy, &cfg).unwrap());
    }

    #[test]
    fn wheel_matches_reference(
        units in prop::collection::vec(spec_strategy(4, 3, 30), 1..6),
        stream in stream_strategy(160, 4, 80),
        refractory: bool,
    ) {
        let cfg = CoreConfig { accept_window: 0, refractory };
        let reference = network_infer(&units, &stream, &cfg).unwrap();
        let router = ConnectivityRouter::build(&units, 4).unwrap();
        let mut state = TimeWheelState::new(&units, 32).unwrap();
        let spikes = run_sample(&router, &mut state, &stream, refractory).unwrap();
        prop_assert_eq!(emissions_to_raster(160, units.len(), &spikes), reference);
    }

    #[test]
    fn router_lists_every_connection_once(
        units in prop::collection::vec(spec_strategy(5, 5, 4), 0..8),
    ) {
        let router = ConnectivityRouter::build(&units, 5).unwrap();
        for c in 0..5u32 {
            let got: Vec<(u32, u32)> = router.targets(c).iter().map(|t| (t.unit, t.spine)).collect();
            let mut expected = Vec::new();
            for (u, s) in units.iter().enumerate() {
                for (k, &o) in s.origins().iter().enumerate() {
                    if o == c {
                        expected.push((u as u32, k as u32));
                    }
                }
            }
            prop_assert_eq!(got, expected);
        }
        let total: usize = units.iter().map(|u| u.n_spines()).sum();
        prop_assert_eq!(router.conn_list().len(), total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn bitset_count_matches_unit(
        spec in spec_strategy(3, 5, 40),
        stream in stream_strategy(300, 3, 200),
        refractory in any::<bool>(),
    ) {
        let cfg = CoreConfig { accept_window: 0, refractory };
        let expected = unit_run(&spec, &stream, &cfg).unwrap().len() as u32;
        prop_assert_eq!(exact_spike_count(&spec, &ChannelBits::new(&stream), refractory), expected);
    }
}
