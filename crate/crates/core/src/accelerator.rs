//! PE and memory-controller behaviour on top of the network.
//!
//! Each PE works through its task FIFO one task at a time: a one-flit
//! request goes to its home MC, the MC reads the task's data and answers with
//! a multi-flit response, the PE computes, then sends a one-flit result back
//! while issuing the request for its next task in the same cycle.
//!
//! Travel time of a task decomposes as
//! `t_travel = t_req + t_memaccess + t_resp + t_compu` where
//! - `t_req`: request head leaves the PE interface until its tail is in the MC router's buffer,
//! - `t_memaccess`: from there until the response head leaves the MC interface
//!   (ejection wait, MC queueing, access time, interface queueing),
//! - `t_resp`: response head leaves the MC interface until its tail is in the PE router's buffer,
//! - `t_compu`: compute time in NoC cycles.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::mapping::{MappingPlan, SamplingRoute, SamplingWindow, TravelTimeSummary};
use crate::noc::{Cycle, NetEvent, Network, NocConfig, Packet, PacketKind};
use crate::topology::{NodeId, NodeRole, Topology};
use crate::workload::{
    compute_cycles_for_task, memory_delay_for_task, LayerTasks, PacketSpec, TaskId, TaskShape,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelRecord {
    pub task_id: TaskId,
    pub pe_id: NodeId,
    pub t_req: u64,
    pub t_memaccess: u64,
    pub t_resp: u64,
    pub t_compu: u64,
    pub t_travel: u64,
}

impl TravelRecord {
    fn new(task_id: TaskId, pe_id: NodeId, t_req: u64, t_memaccess: u64, t_resp: u64, t_compu: u64) -> Self {
        Self {
            task_id,
            pe_id,
            t_req,
            t_memaccess,
            t_resp,
            t_compu,
            t_travel: t_req + t_memaccess + t_resp + t_compu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRunResult {
    /// PEs in row-major order; the other per-PE vectors follow this order.
    pub pe_ids: Vec<NodeId>,
    pub records: Vec<Vec<TravelRecord>>,
    /// Sum of the travel times of each PE's tasks (result packets excluded).
    pub accumulated: Vec<u64>,
    /// Cycle at which the last result packet reached its memory controller.
    pub makespan: Cycle,
    /// Tasks executed in a sampling phase, if one ran.
    pub sampled_tasks: u64,
    pub plan: MappingPlan,
}

impl LayerRunResult {
    /// Mean end-to-end travel time per PE; `None` for PEs that ran no task.
    pub fn mean_end_to_end(&self) -> Vec<Option<f64>> {
        self.records
            .iter()
            .map(|r| (!r.is_empty()).then(|| accumulate_busy(r) as f64 / r.len() as f64))
            .collect()
    }

    pub fn task_count(&self) -> u64 {
        self.records.iter().map(|r| r.len() as u64).sum()
    }
}

pub fn accumulate_busy(records: &[TravelRecord]) -> u64 {
    records.iter().map(|r| r.t_travel).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PePhase {
    Idle,
    AwaitingResponse,
    Computing,
}

#[derive(Debug, Clone)]
pub struct PeState {
    pub pe_id: NodeId,
    pub home_mc: NodeId,
    pub assigned_tasks: VecDeque<TaskId>,
    pub phase: PePhase,
    pub outstanding_task: Option<TaskId>,
    pub busy_accumulator: u64,
}

#[derive(Debug, Clone, Default)]
pub struct McState {
    pub busy_until: f64,
    /// Accepted requests whose response has not fully left the interface.
    pub outstanding: usize,
}

impl McState {
    /// Serves one request arriving at `now`; returns the cycle its response may
    /// be injected. Occupancy accumulates fractionally, only the injection
    /// instant is rounded up.
    pub fn service(&mut self, data_values: u64, cycles_per_value: f64, now: Cycle) -> Cycle {
        let start = self.busy_until.max(now as f64);
        self.busy_until = start + memory_delay_for_task(data_values, cycles_per_value);
        self.busy_until.ceil() as Cycle
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct InFlightTask {
    pe_pos: usize,
    req_depart: Cycle,
    req_arrive: Cycle,
    resp_depart: Cycle,
    resp_arrive: Cycle,
}

/// One layer executing on one simulated device.
pub struct LayerEngine<'a> {
    topology: &'a Topology,
    cfg: &'a SimConfig,
    shape: TaskShape,
    packets: PacketSpec,
    compute_noc_cycles: u64,
    net: Network,
    pes: Vec<PeState>,
    pe_pos: Vec<Option<usize>>,
    mcs: Vec<McState>,
    compute_done: BinaryHeap<Reverse<(Cycle, usize)>>,
    in_flight: HashMap<TaskId, InFlightTask>,
    records: Vec<Vec<TravelRecord>>,
    last_result: Cycle,
    results_pending: u64,
    events: Vec<NetEvent>,
}

impl<'a> LayerEngine<'a> {
    pub fn new(topology: &'a Topology, cfg: &'a SimConfig, shape: TaskShape) -> Result<Self> {
        cfg.validate()?;
        let tcfg = topology.config();
        let net = Network::new(NocConfig {
            width: tcfg.width,
            height: tcfg.height,
            vc_count: cfg.vc_count,
            vc_buffer_flits: cfg.vc_buffer_flits,
            router_delay: tcfg.router_delay,
            link_delay: tcfg.link_delay,
            ni_delay: tcfg.ni_delay,
            livelock_bound: cfg.livelock_bound,
        });
        let mut pe_pos = vec![None; topology.node_count()];
        let pes = topology
            .pe_ids()
            .iter()
            .enumerate()
            .map(|(i, &pe)| {
                pe_pos[pe] = Some(i);
                PeState {
                    pe_id: pe,
                    home_mc: topology.home_mc(pe).expect("PE has a home MC"),
                    assigned_tasks: VecDeque::new(),
                    phase: PePhase::Idle,
                    outstanding_task: None,
                    busy_accumulator: 0,
                }
            })
            .collect::<Vec<_>>();
        Ok(Self {
            topology,
            cfg,
            shape,
            packets: PacketSpec::for_task(shape, cfg.bytes_per_value, cfg.flit_payload_bytes),
            compute_noc_cycles: compute_cycles_for_task(shape.mac_ops, cfg.macs_per_pe)
                * cfg.clock_ratio(),
            net,
            records: vec![Vec::new(); pes.len()],
            pes,
            pe_pos,
            mcs: vec![McState::default(); topology.node_count()],
            compute_done: BinaryHeap::new(),
            in_flight: HashMap::new(),
            last_result: 0,
            results_pending: 0,
            events: Vec::new(),
        })
    }

    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) {
        self.net.set_trace(sink);
    }

    pub fn now(&self) -> Cycle {
        self.net.now()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn pe_states(&self) -> &[PeState] {
        &self.pes
    }

    pub fn packet_spec(&self) -> PacketSpec {
        self.packets
    }

    pub fn compute_noc_cycles(&self) -> u64 {
        self.compute_noc_cycles
    }

    /// Appends a plan's task lists to the PEs' FIFOs; idle PEs start at once.
    pub fn assign(&mut self, plan: &MappingPlan) -> Result<()> {
        for (pe, tasks) in &plan.assignments {
            if self.topology.role(*pe) == NodeRole::Mc {
                return Err(Error::TaskOnMemoryController(*pe));
            }
            let pos = self.pe_pos[*pe].expect("PE node");
            self.pes[pos].assigned_tasks.extend(tasks.iter().copied());
        }
        let now = self.now();
        for pos in 0..self.pes.len() {
            if self.pes[pos].phase == PePhase::Idle {
                self.issue_next_request(pos, now);
            }
        }
        Ok(())
    }

    fn issue_next_request(&mut self, pos: usize, at: Cycle) {
        let pe = &mut self.pes[pos];
        let Some(task) = pe.assigned_tasks.pop_front() else {
            pe.phase = PePhase::Idle;
            return;
        };
        pe.phase = PePhase::AwaitingResponse;
        pe.outstanding_task = Some(task);
        let (src, dst) = (pe.pe_id, pe.home_mc);
        self.in_flight.insert(
            task,
            InFlightTask {
                pe_pos: pos,
                ..InFlightTask::default()
            },
        );
        self.net.enqueue_injection(
            Packet {
                kind: PacketKind::Request,
                flit_count: self.packets.request_flits,
                src,
                dst,
                payload: task,
            },
            at,
        );
    }

    fn all_pes_idle(&self) -> bool {
        self.compute_done.is_empty()
            && self
                .pes
                .iter()
                .all(|p| p.phase == PePhase::Idle && p.assigned_tasks.is_empty())
    }

    fn finish_compute(&mut self, pos: usize, now: Cycle) {
        let task = self.pes[pos].outstanding_task.take().expect("computing a task");
        let f = self.in_flight.remove(&task).expect("task in flight");
        let record = TravelRecord::new(
            task,
            self.pes[pos].pe_id,
            f.req_arrive - f.req_depart,
            f.resp_depart - f.req_arrive,
            f.resp_arrive - f.resp_depart,
            self.compute_noc_cycles,
        );
        self.pes[pos].busy_accumulator += record.t_travel;
        self.records[pos].push(record);

        // the next request goes out first; the result follows on the same interface
        self.issue_next_request(pos, now);
        let pe = &self.pes[pos];
        self.net.enqueue_injection(
            Packet {
                kind: PacketKind::Result,
                flit_count: self.packets.result_flits,
                src: pe.pe_id,
                dst: pe.home_mc,
                payload: task,
            },
            now,
        );
        self.results_pending += 1;
    }

    fn handle_events(&mut self) {
        let events = std::mem::take(&mut self.events);
        for ev in &events {
            match *ev {
                NetEvent::Departed { kind: PacketKind::Response, src, .. } => {
                    self.mcs[src].outstanding -= 1;
                }
                NetEvent::Departed { .. } => {}
                NetEvent::Delivered(d) => match d.kind {
                    PacketKind::Request => {
                        let f = self.in_flight.get_mut(&d.payload).expect("request for live task");
                        f.req_depart = d.head_depart_cycle;
                        f.req_arrive = d.tail_arrive_cycle;
                        let mc = &mut self.mcs[d.dst];
                        mc.outstanding += 1;
                        let ready =
                            mc.service(self.shape.data_values, self.cfg.cycles_per_value(), d.eject_cycle);
                        self.net.enqueue_injection(
                            Packet {
                                kind: PacketKind::Response,
                                flit_count: self.packets.response_flits,
                                src: d.dst,
                                dst: d.src,
                                payload: d.payload,
                            },
                            ready,
                        );
                    }
                    PacketKind::Response => {
                        let f = self.in_flight.get_mut(&d.payload).expect("response for live task");
                        f.resp_depart = d.head_depart_cycle;
                        f.resp_arrive = d.tail_arrive_cycle;
                        let pos = f.pe_pos;
                        self.pes[pos].phase = PePhase::Computing;
                        self.compute_done
                            .push(Reverse((d.eject_cycle + self.compute_noc_cycles, pos)));
                    }
                    PacketKind::Result => {
                        self.results_pending -= 1;
                        self.last_result = self.last_result.max(d.tail_arrive_cycle);
                    }
                },
            }
        }
        self.events = events;
        self.events.clear();
    }

    /// Runs until every PE has finished its assigned tasks. With `drain`, also
    /// waits for the network to empty (all results delivered).
    pub fn run(&mut self, drain: bool) -> Result<()> {
        let depth = self.cfg.mc_queue_depth.unwrap_or(usize::MAX);
        loop {
            let now = self.now();
            while let Some(&Reverse((t, pos))) = self.compute_done.peek() {
                if t > now {
                    break;
                }
                self.compute_done.pop();
                self.finish_compute(pos, now);
            }
            let pes_done = self.all_pes_idle();
            if pes_done && (!drain || self.net.is_idle()) {
                return Ok(());
            }

            // nothing moving in the fabric: jump to the next interesting cycle
            if let Some(next_net) = self.net.next_activity() {
                let next_timer = self.compute_done.peek().map(|r| r.0 .0);
                match next_net.into_iter().chain(next_timer).min() {
                    Some(t) if t > now => {
                        self.net.skip_to(t);
                        continue;
                    }
                    Some(_) => {}
                    None => {
                        return Err(Error::Invariant(format!(
                            "simulation stalled at cycle {now} with work outstanding"
                        )))
                    }
                }
            }

            let mcs = &self.mcs;
            let gate = |node: NodeId, kind: PacketKind| {
                kind != PacketKind::Request || mcs[node].outstanding < depth
            };
            self.net.step(&gate, &mut self.events);
            self.handle_events();
            self.net.check_progress()?;
        }
    }

    /// Records so far, per PE in row-major order.
    pub fn records(&self) -> &[Vec<TravelRecord>] {
        &self.records
    }

    fn snapshot(&self) -> LayerRunResult {
        LayerRunResult {
            pe_ids: self.topology.pe_ids().to_vec(),
            records: self.records.clone(),
            accumulated: self.pes.iter().map(|p| p.busy_accumulator).collect(),
            makespan: self.last_result,
            sampled_tasks: 0,
            plan: MappingPlan {
                strategy: String::new(),
                assignments: Vec::new(),
            },
        }
    }

    /// Drains the network and returns the layer result under `plan`.
    pub fn finish(mut self, plan: MappingPlan, sampled_tasks: u64) -> Result<LayerRunResult> {
        self.run(true)?;
        if self.results_pending != 0 || !self.in_flight.is_empty() {
            return Err(Error::Invariant("tasks still in flight after drain".into()));
        }
        if self.net.injected_flits() != self.net.ejected_flits() {
            return Err(Error::Invariant(format!(
                "flit conservation: {} injected, {} ejected",
                self.net.injected_flits(),
                self.net.ejected_flits()
            )));
        }
        let mut result = self.snapshot();
        result.plan = plan;
        result.sampled_tasks = sampled_tasks;
        check_result(&result)?;
        Ok(result)
    }
}

fn check_result(result: &LayerRunResult) -> Result<()> {
    for ((pe, tasks), records) in result.plan.assignments.iter().zip(&result.records) {
        if records.len() != tasks.len() {
            return Err(Error::Invariant(format!(
                "PE {pe} ran {} tasks but was assigned {}",
                records.len(),
                tasks.len()
            )));
        }
    }
    for r in result.records.iter().flatten() {
        if r.t_travel != r.t_req + r.t_memaccess + r.t_resp + r.t_compu {
            return Err(Error::Invariant(format!("task {} travel time does not decompose", r.task_id)));
        }
    }
    let max_acc = result.accumulated.iter().copied().max().unwrap_or(0);
    if result.makespan < max_acc {
        return Err(Error::Invariant(format!(
            "makespan {} below accumulated busy time {max_acc}",
            result.makespan
        )));
    }
    Ok(())
}

/// Options that do not affect timing.
#[derive(Default)]
pub struct RunOptions {
    pub trace: Option<Box<dyn Write + Send>>,
}

/// Executes one layer under a fixed plan.
pub fn run_layer(
    topology: &Topology,
    cfg: &SimConfig,
    layer: &LayerTasks,
    plan: &MappingPlan,
    options: RunOptions,
) -> Result<LayerRunResult> {
    plan.validate(topology, layer.count)?;
    if plan.pe_ids() != topology.pe_ids() {
        return Err(Error::PlanMismatch("plan must list every PE in row-major order".into()));
    }
    let mut engine = LayerEngine::new(topology, cfg, layer.shape)?;
    if let Some(trace) = options.trace {
        engine.set_trace(trace);
    }
    engine.assign(plan)?;
    engine.finish(plan.clone(), 0)
}

/// Executes one layer with the sampling-window controller: a row-major window
/// of tasks per PE, then the remaining tasks allocated by the sampled travel
/// times, on the same network without a restart.
pub fn run_layer_with_sampling(
    topology: &Topology,
    cfg: &SimConfig,
    layer: &LayerTasks,
    sampler: SamplingWindow,
    options: RunOptions,
) -> Result<LayerRunResult> {
    let mut engine = LayerEngine::new(topology, cfg, layer.shape)?;
    if let Some(trace) = options.trace {
        engine.set_trace(trace);
    }
    match sampler.phase_one(topology.pe_ids(), layer.count) {
        SamplingRoute::RowMajor(plan) => {
            log::debug!(
                "layer {}: {} tasks below sampling threshold, row-major",
                layer.layer_id,
                layer.count
            );
            engine.assign(&plan)?;
            engine.finish(plan, 0)
        }
        SamplingRoute::Sample(mut plan) => {
            engine.assign(&plan)?;
            engine.run(false)?;
            let summary = TravelTimeSummary::from_run_with(&engine.snapshot(), sampler.aggregation);
            let sampled = summary.task_sampled();
            let rest = sampler.phase_two(&summary, layer.count)?;
            log::info!(
                "layer {}: sampled {} tasks, {} allocated by travel time",
                layer.layer_id,
                sampled,
                rest.total()
            );
            engine.assign(&rest)?;
            plan.extend(&rest);
            plan.validate(topology, layer.count)?;
            engine.finish(plan, sampled)
        }
    }
}
