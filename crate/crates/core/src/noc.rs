//! Cycle-stepped wormhole mesh with virtual channels and credit flow control.
//!
//! Every router has five input ports (local, north, east, south, west), each
//! with `vc_count` FIFOs of `vc_buffer_flits` flits. A flit written into an
//! input buffer at cycle `t` may traverse the switch from `t + router_delay`
//! and lands in the next router's buffer `link_delay` cycles later. Credits
//! return to the upstream port one cycle after a flit leaves a buffer; the
//! credit of a tail flit also releases the downstream VC.
//!
//! Per cycle the network performs, in order: link arrivals, credit arrivals,
//! route computation, VC allocation, switch allocation and traversal
//! (ejection included), then network-interface injection.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::topology::{NodeCoord, NodeId};

pub type PacketId = u64;
pub type Cycle = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    Request,
    Response,
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitKind {
    Head,
    Body,
    Tail,
    HeadTail,
}

impl FlitKind {
    fn for_position(index: u32, count: u32) -> Self {
        match (index == 0, index + 1 == count) {
            (true, true) => FlitKind::HeadTail,
            (true, false) => FlitKind::Head,
            (false, true) => FlitKind::Tail,
            (false, false) => FlitKind::Body,
        }
    }

    pub fn is_head(self) -> bool {
        matches!(self, FlitKind::Head | FlitKind::HeadTail)
    }

    pub fn is_tail(self) -> bool {
        matches!(self, FlitKind::Tail | FlitKind::HeadTail)
    }

    fn label(self) -> &'static str {
        match self {
            FlitKind::Head => "head",
            FlitKind::Body => "body",
            FlitKind::Tail => "tail",
            FlitKind::HeadTail => "headtail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketKind,
    pub flit_count: u32,
    pub src: NodeId,
    pub dst: NodeId,
    /// Opaque tag carried end to end (the task id).
    pub payload: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flit {
    pub packet_id: PacketId,
    pub kind: FlitKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub inject_cycle: Cycle,
    pub seq: u32,
    packet_kind: PacketKind,
    ready: Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryEvent {
    pub packet_id: PacketId,
    pub kind: PacketKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: u64,
    /// Cycle the head flit left the source network interface.
    pub head_depart_cycle: Cycle,
    /// Cycle the tail flit was written into the destination router's input buffer.
    pub tail_arrive_cycle: Cycle,
    /// Cycle the tail flit was handed to the destination network interface.
    pub eject_cycle: Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetEvent {
    /// The tail flit of a packet left its source network interface.
    Departed {
        packet_id: PacketId,
        kind: PacketKind,
        src: NodeId,
        payload: u64,
        cycle: Cycle,
    },
    Delivered(DeliveryEvent),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NocConfig {
    pub width: usize,
    pub height: usize,
    pub vc_count: usize,
    pub vc_buffer_flits: usize,
    pub router_delay: u32,
    pub link_delay: u32,
    /// Cycles a packet spends in the source interface before its head may depart.
    pub ni_delay: u32,
    pub livelock_bound: u64,
}

impl Default for NocConfig {
    fn default() -> Self {
        Self {
            width: 4,
            height: 4,
            vc_count: 4,
            vc_buffer_flits: 4,
            router_delay: 1,
            link_delay: 1,
            ni_delay: 0,
            livelock_bound: 1_000_000,
        }
    }
}

const PORTS: usize = 5;
const LOCAL: usize = 0;
const NORTH: usize = 1;
const EAST: usize = 2;
const SOUTH: usize = 3;
const WEST: usize = 4;

fn opposite(port: usize) -> usize {
    match port {
        NORTH => SOUTH,
        SOUTH => NORTH,
        EAST => WEST,
        WEST => EAST,
        _ => LOCAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VcState {
    Idle,
    Routed { out_port: usize },
    Active { out_port: usize, out_vc: usize },
}

#[derive(Debug, Clone)]
struct InputVc {
    buf: VecDeque<Flit>,
    state: VcState,
}

#[derive(Debug, Clone, Copy)]
struct OutputVc {
    credits: usize,
    busy: bool,
}

#[derive(Debug, Clone, Copy)]
struct LinkFlit {
    arrive: Cycle,
    node: NodeId,
    port: usize,
    vc: usize,
    flit: Flit,
}

#[derive(Debug, Clone, Copy)]
struct Credit {
    arrive: Cycle,
    node: NodeId,
    // output port of `node` the credit belongs to; LOCAL means the node's NI
    port: usize,
    vc: usize,
    frees_vc: bool,
}

#[derive(Debug, Clone)]
struct PendingPacket {
    id: PacketId,
    at_cycle: Cycle,
    next_flit: u32,
    vc: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct PacketRecord {
    packet: Packet,
    head_depart: Option<Cycle>,
    tail_arrive: Option<Cycle>,
}

/// Decides whether a destination accepts the head of a packet this cycle.
pub trait EjectionGate {
    fn accepts(&self, node: NodeId, kind: PacketKind) -> bool;
}

/// Gate that accepts everything.
pub struct AcceptAll;

impl EjectionGate for AcceptAll {
    fn accepts(&self, _node: NodeId, _kind: PacketKind) -> bool {
        true
    }
}

impl<F: Fn(NodeId, PacketKind) -> bool> EjectionGate for F {
    fn accepts(&self, node: NodeId, kind: PacketKind) -> bool {
        self(node, kind)
    }
}

pub struct Network {
    cfg: NocConfig,
    now: Cycle,
    inputs: Vec<InputVc>,
    outputs: Vec<OutputVc>,
    // NI-side view of each router's local input port
    ni_vcs: Vec<OutputVc>,
    ni_queues: Vec<VecDeque<PendingPacket>>,
    sa_vc_ptr: Vec<usize>,
    sa_port_ptr: Vec<usize>,
    va_ptr: Vec<usize>,
    links: VecDeque<LinkFlit>,
    credits: VecDeque<Credit>,
    packets: Vec<PacketRecord>,
    local_deliveries: Vec<PacketId>,
    flits_in_network: usize,
    flits_pending: u64,
    injected_flits: u64,
    ejected_flits: u64,
    last_progress: Cycle,
    trace: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("cfg", &self.cfg)
            .field("now", &self.now)
            .field("flits_in_network", &self.flits_in_network)
            .finish_non_exhaustive()
    }
}

impl Network {
    pub fn new(cfg: NocConfig) -> Self {
        let nodes = cfg.width * cfg.height;
        let vcs = cfg.vc_count;
        let idle_in = InputVc {
            buf: VecDeque::with_capacity(cfg.vc_buffer_flits),
            state: VcState::Idle,
        };
        let free_out = OutputVc {
            credits: cfg.vc_buffer_flits,
            busy: false,
        };
        Self {
            inputs: vec![idle_in; nodes * PORTS * vcs],
            outputs: vec![free_out; nodes * PORTS * vcs],
            ni_vcs: vec![free_out; nodes * vcs],
            ni_queues: vec![VecDeque::new(); nodes],
            sa_vc_ptr: vec![0; nodes * PORTS],
            sa_port_ptr: vec![0; nodes * PORTS],
            va_ptr: vec![0; nodes * PORTS],
            links: VecDeque::new(),
            credits: VecDeque::new(),
            packets: Vec::new(),
            local_deliveries: Vec::new(),
            flits_in_network: 0,
            flits_pending: 0,
            injected_flits: 0,
            ejected_flits: 0,
            last_progress: 0,
            trace: None,
            now: 0,
            cfg,
        }
    }

    pub fn config(&self) -> &NocConfig {
        &self.cfg
    }

    /// Emit one `cycle,node,event,packet_id,flit_kind` line per flit event.
    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) {
        self.trace = Some(sink);
    }

    pub fn now(&self) -> Cycle {
        self.now
    }

    pub fn packet(&self, id: PacketId) -> &Packet {
        &self.packets[id as usize].packet
    }

    pub fn injected_flits(&self) -> u64 {
        self.injected_flits
    }

    pub fn ejected_flits(&self) -> u64 {
        self.ejected_flits
    }

    /// True when no flit is buffered, on a link, or waiting at an interface.
    pub fn is_idle(&self) -> bool {
        self.flits_in_network == 0
            && self.flits_pending == 0
            && self.local_deliveries.is_empty()
            && self.credits.is_empty()
    }

    fn node_count(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    fn coord(&self, id: NodeId) -> NodeCoord {
        NodeCoord::new(id % self.cfg.width, id / self.cfg.width)
    }

    fn in_idx(&self, node: NodeId, port: usize, vc: usize) -> usize {
        (node * PORTS + port) * self.cfg.vc_count + vc
    }

    fn neighbor(&self, node: NodeId, port: usize) -> NodeId {
        match port {
            NORTH => node - self.cfg.width,
            SOUTH => node + self.cfg.width,
            EAST => node + 1,
            WEST => node - 1,
            _ => node,
        }
    }

    fn route(&self, here: NodeId, dst: NodeId) -> usize {
        let (h, d) = (self.coord(here), self.coord(dst));
        if d.x > h.x {
            EAST
        } else if d.x < h.x {
            WEST
        } else if d.y > h.y {
            SOUTH
        } else if d.y < h.y {
            NORTH
        } else {
            LOCAL
        }
    }

    fn trace(&mut self, node: NodeId, event: &str, flit: &Flit) {
        if let Some(out) = self.trace.as_mut() {
            // trace output is best effort
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.now,
                node,
                event,
                flit.packet_id,
                flit.kind.label()
            );
        }
    }

    /// Queue a packet at its source interface; flits leave one per cycle from
    /// `at_cycle` on, as VCs and credits allow.
    pub fn enqueue_injection(&mut self, packet: Packet, at_cycle: Cycle) -> PacketId {
        assert!(packet.flit_count >= 1, "packets carry at least one flit");
        let id = self.packets.len() as PacketId;
        self.packets.push(PacketRecord {
            packet,
            head_depart: None,
            tail_arrive: None,
        });
        let at_cycle = at_cycle.max(self.now);
        if packet.src == packet.dst {
            self.packets[id as usize].head_depart = Some(at_cycle);
            self.packets[id as usize].tail_arrive = Some(at_cycle);
            self.local_deliveries.push(id);
            // keep the pending list ordered by delivery cycle, then id
            let packets = &self.packets;
            self.local_deliveries
                .sort_by_key(|&p| (packets[p as usize].head_depart, p));
            return id;
        }
        self.ni_queues[packet.src].push_back(PendingPacket {
            id,
            at_cycle: at_cycle + Cycle::from(self.cfg.ni_delay),
            next_flit: 0,
            vc: None,
        });
        self.flits_pending += u64::from(packet.flit_count);
        id
    }

    /// Earliest cycle at which something can happen, if the fabric is empty.
    /// Returns `None` when flits or credits are in flight.
    pub fn next_activity(&self) -> Option<Option<Cycle>> {
        if self.flits_in_network > 0 || !self.credits.is_empty() {
            return None;
        }
        let ni = self
            .ni_queues
            .iter()
            .filter_map(|q| q.front().map(|p| p.at_cycle));
        let local = self
            .local_deliveries
            .first()
            .and_then(|&p| self.packets[p as usize].head_depart);
        Some(ni.chain(local).min())
    }

    /// Move the clock forward over cycles in which nothing can happen.
    pub fn skip_to(&mut self, cycle: Cycle) {
        debug_assert!(self.flits_in_network == 0 && self.credits.is_empty());
        if cycle > self.now {
            self.now = cycle;
            self.last_progress = self.last_progress.max(cycle);
        }
    }

    /// Advance one cycle. Events produced during the cycle are appended to `events`.
    pub fn step(&mut self, gate: &dyn EjectionGate, events: &mut Vec<NetEvent>) {
        let now = self.now;
        let vcs = self.cfg.vc_count;
        let cap = self.cfg.vc_buffer_flits;
        let mut progressed = false;

        // local (src == dst) deliveries are instantaneous
        while let Some(&id) = self.local_deliveries.first() {
            let rec = self.packets[id as usize];
            if rec.head_depart.unwrap() > now {
                break;
            }
            self.local_deliveries.remove(0);
            events.push(NetEvent::Departed {
                packet_id: id,
                kind: rec.packet.kind,
                src: rec.packet.src,
                payload: rec.packet.payload,
                cycle: now,
            });
            events.push(NetEvent::Delivered(DeliveryEvent {
                packet_id: id,
                kind: rec.packet.kind,
                src: rec.packet.src,
                dst: rec.packet.dst,
                payload: rec.packet.payload,
                head_depart_cycle: now,
                tail_arrive_cycle: now,
                eject_cycle: now,
            }));
            progressed = true;
        }

        // link traversal completes
        while self.links.front().is_some_and(|l| l.arrive <= now) {
            let l = self.links.pop_front().unwrap();
            let idx = self.in_idx(l.node, l.port, l.vc);
            assert!(
                self.inputs[idx].buf.len() < cap,
                "VC buffer overflow at node {} port {} vc {}",
                l.node,
                l.port,
                l.vc
            );
            self.inputs[idx].buf.push_back(l.flit);
            if l.flit.dst == l.node && l.flit.kind.is_tail() {
                self.packets[l.flit.packet_id as usize].tail_arrive = Some(now);
            }
            self.trace(l.node, "arrive", &l.flit);
            progressed = true;
        }

        // credits
        while self.credits.front().is_some_and(|c| c.arrive <= now) {
            let c = self.credits.pop_front().unwrap();
            let slot = if c.port == LOCAL {
                &mut self.ni_vcs[c.node * vcs + c.vc]
            } else {
                &mut self.outputs[(c.node * PORTS + c.port) * vcs + c.vc]
            };
            slot.credits += 1;
            debug_assert!(slot.credits <= cap);
            if c.frees_vc {
                slot.busy = false;
            }
        }

        for node in 0..self.node_count() {
            self.route_and_allocate_vcs(node);
            progressed |= self.switch_allocate(node, gate, events);
        }

        progressed |= self.inject(events);

        if progressed {
            self.last_progress = now;
        }
        self.now += 1;
    }

    fn route_and_allocate_vcs(&mut self, node: NodeId) {
        let vcs = self.cfg.vc_count;
        // route computation for heads at the front of idle VCs
        for port in 0..PORTS {
            for vc in 0..vcs {
                let idx = self.in_idx(node, port, vc);
                if self.inputs[idx].state != VcState::Idle {
                    continue;
                }
                if let Some(front) = self.inputs[idx].buf.front() {
                    debug_assert!(front.kind.is_head());
                    let out_port = self.route(node, front.dst);
                    self.inputs[idx].state = VcState::Routed { out_port };
                }
            }
        }

        // VC allocation: round-robin over requesting input VCs, first free
        // downstream VC by index
        let slots = PORTS * vcs;
        for out_port in 0..PORTS {
            let ptr_idx = node * PORTS + out_port;
            let start = self.va_ptr[ptr_idx];
            for k in 0..slots {
                let slot = (start + k) % slots;
                let (port, vc) = (slot / vcs, slot % vcs);
                let idx = self.in_idx(node, port, vc);
                if self.inputs[idx].state != (VcState::Routed { out_port }) {
                    continue;
                }
                if out_port == LOCAL {
                    self.inputs[idx].state = VcState::Active { out_port, out_vc: 0 };
                    continue;
                }
                let base = (node * PORTS + out_port) * vcs;
                let Some(out_vc) = (0..vcs).find(|&v| !self.outputs[base + v].busy) else {
                    break;
                };
                self.outputs[base + out_vc].busy = true;
                self.inputs[idx].state = VcState::Active { out_port, out_vc };
                self.va_ptr[ptr_idx] = (slot + 1) % slots;
            }
        }
    }

    fn switch_allocate(
        &mut self,
        node: NodeId,
        gate: &dyn EjectionGate,
        events: &mut Vec<NetEvent>,
    ) -> bool {
        let now = self.now;
        let vcs = self.cfg.vc_count;

        // stage 1: each input port nominates one ready VC
        let mut nominee: [Option<(usize, usize)>; PORTS] = [None; PORTS];
        for port in 0..PORTS {
            let ptr_idx = node * PORTS + port;
            let start = self.sa_vc_ptr[ptr_idx];
            for k in 0..vcs {
                let vc = (start + k) % vcs;
                let input = &self.inputs[self.in_idx(node, port, vc)];
                let VcState::Active { out_port, out_vc } = input.state else {
                    continue;
                };
                let Some(front) = input.buf.front() else {
                    continue;
                };
                if front.ready > now {
                    continue;
                }
                let ok = if out_port == LOCAL {
                    !front.kind.is_head() || gate.accepts(node, front.packet_kind)
                } else {
                    self.outputs[(node * PORTS + out_port) * vcs + out_vc].credits > 0
                };
                if ok {
                    nominee[port] = Some((vc, out_port));
                    break;
                }
            }
        }

        // stage 2: each output port grants one input port
        let mut moved = false;
        for out_port in 0..PORTS {
            let ptr_idx = node * PORTS + out_port;
            let start = self.sa_port_ptr[ptr_idx];
            let winner = (0..PORTS)
                .map(|k| (start + k) % PORTS)
                .find(|&p| matches!(nominee[p], Some((_, o)) if o == out_port));
            let Some(in_port) = winner else {
                continue;
            };
            let (vc, _) = nominee[in_port].unwrap();
            self.sa_port_ptr[ptr_idx] = (in_port + 1) % PORTS;
            self.sa_vc_ptr[node * PORTS + in_port] = (vc + 1) % vcs;
            self.traverse(node, in_port, vc, events);
            moved = true;
        }
        moved
    }

    fn traverse(&mut self, node: NodeId, in_port: usize, vc: usize, events: &mut Vec<NetEvent>) {
        let now = self.now;
        let vcs = self.cfg.vc_count;
        let idx = self.in_idx(node, in_port, vc);
        let VcState::Active { out_port, out_vc } = self.inputs[idx].state else {
            unreachable!("only active VCs traverse the switch");
        };
        let flit = self.inputs[idx].buf.pop_front().unwrap();
        if flit.kind.is_tail() {
            self.inputs[idx].state = VcState::Idle;
        }

        // return a credit to whoever feeds this input VC
        let (up_node, up_port) = if in_port == LOCAL {
            (node, LOCAL)
        } else {
            (self.neighbor(node, in_port), opposite(in_port))
        };
        self.credits.push_back(Credit {
            arrive: now + 1,
            node: up_node,
            port: up_port,
            vc,
            frees_vc: flit.kind.is_tail(),
        });

        if out_port == LOCAL {
            self.flits_in_network -= 1;
            self.ejected_flits += 1;
            self.trace(node, "eject", &flit);
            if flit.kind.is_tail() {
                let rec = self.packets[flit.packet_id as usize];
                events.push(NetEvent::Delivered(DeliveryEvent {
                    packet_id: flit.packet_id,
                    kind: rec.packet.kind,
                    src: rec.packet.src,
                    dst: rec.packet.dst,
                    payload: rec.packet.payload,
                    head_depart_cycle: rec.head_depart.expect("head departed"),
                    tail_arrive_cycle: rec.tail_arrive.expect("tail arrived"),
                    eject_cycle: now,
                }));
            }
            return;
        }

        let out = &mut self.outputs[(node * PORTS + out_port) * vcs + out_vc];
        out.credits -= 1;
        let arrive = now + Cycle::from(self.cfg.link_delay);
        let mut flit = flit;
        flit.ready = arrive + Cycle::from(self.cfg.router_delay);
        self.links.push_back(LinkFlit {
            arrive,
            node: self.neighbor(node, out_port),
            port: opposite(out_port),
            vc: out_vc,
            flit,
        });
    }

    fn inject(&mut self, events: &mut Vec<NetEvent>) -> bool {
        let now = self.now;
        let vcs = self.cfg.vc_count;
        let mut progressed = false;
        for node in 0..self.node_count() {
            let Some(front) = self.ni_queues[node].front_mut() else {
                continue;
            };
            if front.at_cycle > now {
                continue;
            }
            let vc = match front.vc {
                Some(vc) => vc,
                None => {
                    let base = node * vcs;
                    let Some(vc) = (0..vcs).find(|&v| !self.ni_vcs[base + v].busy) else {
                        continue;
                    };
                    self.ni_vcs[base + vc].busy = true;
                    front.vc = Some(vc);
                    vc
                }
            };
            if self.ni_vcs[node * vcs + vc].credits == 0 {
                continue;
            }
            self.ni_vcs[node * vcs + vc].credits -= 1;

            let id = front.id;
            let seq = front.next_flit;
            front.next_flit += 1;
            let rec = &mut self.packets[id as usize];
            let count = rec.packet.flit_count;
            let kind = FlitKind::for_position(seq, count);
            if seq == 0 {
                rec.head_depart = Some(now);
            }
            let flit = Flit {
                packet_id: id,
                kind,
                src: rec.packet.src,
                dst: rec.packet.dst,
                inject_cycle: rec.head_depart.unwrap(),
                seq,
                packet_kind: rec.packet.kind,
                ready: now + Cycle::from(self.cfg.router_delay),
            };
            let packet = rec.packet;
            if kind.is_tail() {
                self.ni_queues[node].pop_front();
                events.push(NetEvent::Departed {
                    packet_id: id,
                    kind: packet.kind,
                    src: packet.src,
                    payload: packet.payload,
                    cycle: now,
                });
            }
            let idx = self.in_idx(node, LOCAL, vc);
            assert!(self.inputs[idx].buf.len() < self.cfg.vc_buffer_flits);
            self.inputs[idx].buf.push_back(flit);
            self.trace(node, "inject", &flit);
            self.flits_pending -= 1;
            self.flits_in_network += 1;
            self.injected_flits += 1;
            progressed = true;
        }
        progressed
    }

    /// Step until nothing is left in flight. Returns the cycle after the last step.
    pub fn drain(&mut self, gate: &dyn EjectionGate, events: &mut Vec<NetEvent>) -> Result<Cycle> {
        while !self.is_idle() {
            if let Some(Some(at)) = self.next_activity() {
                self.skip_to(at);
            }
            self.step(gate, events);
            self.check_progress()?;
        }
        Ok(self.now)
    }

    /// Livelock guard: error out when no flit has moved for `livelock_bound` cycles.
    pub fn check_progress(&self) -> Result<()> {
        let stalled = self.now.saturating_sub(self.last_progress);
        if stalled > self.cfg.livelock_bound && !self.is_idle() {
            return Err(Error::Livelock {
                cycles: stalled,
                last_progress: self.last_progress,
            });
        }
        Ok(())
    }

    /// Buffer and credit bookkeeping check: no VC exceeds its capacity, and for
    /// every VC, upstream credits + in-flight flits + buffered flits + in-flight
    /// credits equal the buffer size.
    pub fn check_invariants(&self) -> Result<()> {
        let vcs = self.cfg.vc_count;
        let cap = self.cfg.vc_buffer_flits;
        for node in 0..self.node_count() {
            for port in 0..PORTS {
                // the router on the far side of this output port
                let (down, down_port) = if port == LOCAL {
                    (node, LOCAL)
                } else {
                    let c = self.coord(node);
                    let exists = match port {
                        NORTH => c.y > 0,
                        SOUTH => c.y + 1 < self.cfg.height,
                        EAST => c.x + 1 < self.cfg.width,
                        _ => c.x > 0,
                    };
                    if !exists {
                        continue;
                    }
                    (self.neighbor(node, port), opposite(port))
                };
                for vc in 0..vcs {
                    let buffered = self.inputs[self.in_idx(down, down_port, vc)].buf.len();
                    if buffered > cap {
                        return Err(Error::Invariant(format!(
                            "node {down} port {down_port} vc {vc} holds {buffered} > {cap} flits"
                        )));
                    }
                    let upstream = if port == LOCAL {
                        self.ni_vcs[node * vcs + vc].credits
                    } else {
                        self.outputs[(node * PORTS + port) * vcs + vc].credits
                    };
                    let on_link = self
                        .links
                        .iter()
                        .filter(|l| l.node == down && l.port == down_port && l.vc == vc)
                        .count();
                    let credits_back = self
                        .credits
                        .iter()
                        .filter(|c| c.node == node && c.port == port && c.vc == vc)
                        .count();
                    if upstream + on_link + buffered + credits_back != cap {
                        return Err(Error::Invariant(format!(
                            "credit mismatch at node {node} port {port} vc {vc}: \
                             {upstream} credits + {on_link} on link + {buffered} buffered \
                             + {credits_back} returning != {cap}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
