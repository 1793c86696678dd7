use std::cell::Cell;
use std::io::Write;
use std::sync::{Arc, Mutex};

use nocmap::noc::{AcceptAll, DeliveryEvent, NetEvent, Network, NocConfig, Packet, PacketKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Default)]
struct Sink(Arc<Mutex<Vec<u8>>>);

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn config(router_delay: u32, link_delay: u32) -> NocConfig {
    NocConfig {
        router_delay,
        link_delay,
        ..NocConfig::default()
    }
}

// Buffers deep enough to cover the credit round trip, so a packet streams one
// flit per cycle.
fn streaming(router_delay: u32, link_delay: u32, buffer: usize) -> NocConfig {
    NocConfig {
        vc_buffer_flits: buffer,
        ..config(router_delay, link_delay)
    }
}

fn deliveries(events: &[NetEvent]) -> Vec<DeliveryEvent> {
    events
        .iter()
        .filter_map(|e| match e {
            NetEvent::Delivered(d) => Some(*d),
            _ => None,
        })
        .collect()
}

fn hops(a: usize, b: usize) -> u64 {
    ((a % 4).abs_diff(b % 4) + (a / 4).abs_diff(b / 4)) as u64
}

#[test]
fn zero_load_latency_every_pair() {
    for (r, l, buf) in [(1, 1, 4), (2, 1, 4), (3, 2, 8)] {
        for src in 0..16 {
            for dst in (0..16).filter(|&d| d != src) {
                for flits in [1u32, 2, 4, 7, 22] {
                    let mut net = Network::new(streaming(r, l, buf));
                    let mut ev = Vec::new();
                    net.enqueue_injection(
                        Packet {
                            kind: PacketKind::Response,
                            flit_count: flits,
                            src,
                            dst,
                            payload: 0,
                        },
                        3,
                    );
                    net.drain(&AcceptAll, &mut ev).unwrap();
                    let d = deliveries(&ev);
                    assert_eq!(d.len(), 1);
                    let want = hops(src, dst) * u64::from(r + l) + u64::from(flits - 1);
                    assert_eq!(
                        d[0].tail_arrive_cycle - d[0].head_depart_cycle,
                        want,
                        "r={r} l={l} {src}->{dst} flits={flits}"
                    );
                    assert_eq!(d[0].head_depart_cycle, 3);
                }
            }
        }
    }
}

#[test]
fn zero_load_includes_interface_delay_before_departure() {
    let mut net = Network::new(NocConfig {
        ni_delay: 8,
        ..config(2, 1)
    });
    let mut ev = Vec::new();
    net.enqueue_injection(
        Packet {
            kind: PacketKind::Request,
            flit_count: 1,
            src: 0,
            dst: 15,
            payload: 0,
        },
        10,
    );
    net.drain(&AcceptAll, &mut ev).unwrap();
    let d = deliveries(&ev)[0];
    assert_eq!(d.head_depart_cycle, 18);
    assert_eq!(d.tail_arrive_cycle, 18 + 6 * 3);
}

/// Random traffic for `cycles` cycles with a gate that periodically refuses
/// ejection, checking buffer/credit invariants every cycle. Returns the trace.
fn random_traffic(seed: u64, cycles: u64, check: bool) -> (Vec<u8>, Network, Vec<NetEvent>, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(config(1, 1));
    let sink = Sink::default();
    net.set_trace(Box::new(sink.clone()));
    let clock = Cell::new(0u64);
    let gate = |node: usize, _k: PacketKind| (clock.get() + node as u64) % 5 != 0;
    let mut events = Vec::new();
    let mut sent = 0u64;
    for c in 0..cycles {
        clock.set(c);
        for src in 0..16 {
            if rng.gen_bool(0.02) {
                let dst = rng.gen_range(0..16);
                let kind = [PacketKind::Request, PacketKind::Response, PacketKind::Result][rng.gen_range(0..3)];
                net.enqueue_injection(
                    Packet {
                        kind,
                        flit_count: rng.gen_range(1..=8),
                        src,
                        dst,
                        payload: sent,
                    },
                    c,
                );
                sent += 1;
            }
        }
        net.step(&gate, &mut events);
        if check {
            net.check_invariants().unwrap();
        }
        net.check_progress().unwrap();
    }
    while !net.is_idle() {
        clock.set(net.now());
        net.step(&gate, &mut events);
        if check {
            net.check_invariants().unwrap();
        }
        net.check_progress().unwrap();
    }
    let trace = sink.0.lock().unwrap().clone();
    (trace, net, events, sent)
}

#[test]
fn vc_bound_and_credit_balance_under_random_traffic() {
    let (_, net, events, sent) = random_traffic(7, 100_000, true);
    assert!(sent > 20_000);
    assert_eq!(deliveries(&events).len() as u64, sent);
    assert_eq!(net.injected_flits(), net.ejected_flits());
}

#[test]
fn flit_conservation() {
    for seed in 0..4 {
        let (_, net, events, sent) = random_traffic(seed, 5_000, false);
        let delivered = deliveries(&events);
        assert_eq!(delivered.len() as u64, sent);
        let mut ids: Vec<u64> = delivered.iter().map(|d| d.payload).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len() as u64, sent, "each packet delivered exactly once");
        let flits: u64 = delivered
            .iter()
            .map(|d| u64::from(net.packet(d.packet_id).flit_count))
            .sum();
        let remote: u64 = delivered
            .iter()
            .filter(|d| d.src != d.dst)
            .map(|d| u64::from(net.packet(d.packet_id).flit_count))
            .sum();
        assert!(flits >= remote);
        assert_eq!(net.injected_flits(), net.ejected_flits());
        assert_eq!(net.injected_flits(), remote);
        for d in &delivered {
            assert!(d.tail_arrive_cycle >= d.head_depart_cycle + hops(d.src, d.dst) * 2);
            assert!(d.eject_cycle >= d.tail_arrive_cycle);
        }
    }
}

#[test]
fn repeat_runs_are_byte_identical() {
    let (a, _, ea, _) = random_traffic(11, 20_000, false);
    let (b, _, eb, _) = random_traffic(11, 20_000, false);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(ea, eb);
}
