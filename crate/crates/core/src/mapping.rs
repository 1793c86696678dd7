//! Task allocation strategies.
//!
//! Every strategy except row-major reduces to the same problem: given a
//! per-PE time `w_i`, find integer task counts `c_i` with `c_i * w_i` as equal
//! as possible and `sum c_i` equal to the task total. The real solution is
//! `c_i = total * (1/w_i) / sum_j (1/w_j)`; it is rounded with the largest
//! remainder method, lower PE position first on equal remainders.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::accelerator::LayerRunResult;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::topology::{DistanceClass, NodeId, Topology};
use crate::workload::{compute_cycles_for_task, memory_delay_for_task, PacketSpec, TaskId, TaskShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    RowMajor,
    Distance,
    StaticLatency,
    PostRun,
    Sampling(u64),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::RowMajor => f.write_str("row-major"),
            Strategy::Distance => f.write_str("distance"),
            Strategy::StaticLatency => f.write_str("static-latency"),
            Strategy::PostRun => f.write_str("post-run"),
            Strategy::Sampling(w) => write!(f, "sampling:{w}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "row-major" => Ok(Strategy::RowMajor),
            "distance" => Ok(Strategy::Distance),
            "static-latency" => Ok(Strategy::StaticLatency),
            "post-run" => Ok(Strategy::PostRun),
            other => {
                let window = other
                    .strip_prefix("sampling:")
                    .and_then(|w| w.parse::<u64>().ok())
                    .filter(|&w| w >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown strategy `{other}`")))?;
                Ok(Strategy::Sampling(window))
            }
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered task lists, one per PE, in row-major PE order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingPlan {
    pub strategy: String,
    pub assignments: Vec<(NodeId, Vec<TaskId>)>,
}

impl MappingPlan {
    pub fn counts(&self) -> Vec<u64> {
        self.assignments.iter().map(|(_, t)| t.len() as u64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts().iter().sum()
    }

    pub fn pe_ids(&self) -> Vec<NodeId> {
        self.assignments.iter().map(|(pe, _)| *pe).collect()
    }

    /// Checks that the plan partitions task ids `0..total` over PE nodes only.
    pub fn validate(&self, topology: &Topology, total: u64) -> Result<()> {
        for (pe, _) in &self.assignments {
            if *pe >= topology.node_count() {
                return Err(Error::PlanMismatch(format!("node {pe} is outside the mesh")));
            }
            if topology.role(*pe) != crate::topology::NodeRole::Pe {
                return Err(Error::TaskOnMemoryController(*pe));
            }
        }
        let mut seen = vec![false; total as usize];
        for (_, tasks) in &self.assignments {
            for &t in tasks {
                let slot = seen.get_mut(t as usize).ok_or_else(|| {
                    Error::PlanMismatch(format!("task {t} out of range 0..{total}"))
                })?;
                if std::mem::replace(slot, true) {
                    return Err(Error::PlanMismatch(format!("task {t} assigned twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::PlanMismatch(format!("task {missing} is not assigned")));
        }
        Ok(())
    }

    /// Appends `other`'s lists to this plan's lists, PE by PE.
    pub fn extend(&mut self, other: &MappingPlan) {
        for ((pe, tasks), (other_pe, more)) in self.assignments.iter_mut().zip(&other.assignments) {
            debug_assert_eq!(pe, other_pe);
            tasks.extend_from_slice(more);
        }
    }
}

/// Largest-remainder apportionment of `total` tasks inversely to `weights`.
pub fn solve_inverse_time_allocation(weights: &[BigRational], total: u64) -> Result<Vec<u64>> {
    if let Some(index) = weights.iter().position(|w| !w.is_positive()) {
        return Err(Error::NonPositiveWeight { index });
    }
    if weights.is_empty() {
        return if total == 0 {
            Ok(Vec::new())
        } else {
            Err(Error::Config("cannot allocate tasks to zero PEs".into()))
        };
    }

    // 1/w_i = d_i/n_i. Scaling every inverse by lcm(n) gives integers u_i
    // with the same ratios, so share_i = total * u_i / sum(u).
    let common = weights
        .iter()
        .fold(BigInt::one(), |acc, w| acc.lcm(w.numer()));
    let units: Vec<BigInt> = weights
        .iter()
        .map(|w| w.denom() * (&common / w.numer()))
        .collect();
    let denom: BigInt = units.iter().sum();
    let total_big = BigInt::from(total);

    let mut counts = Vec::with_capacity(units.len());
    let mut remainders = Vec::with_capacity(units.len());
    for u in &units {
        let (q, r) = (&total_big * u).div_rem(&denom);
        counts.push(q.to_u64().expect("share bounded by total"));
        remainders.push(r);
    }
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..units.len()).collect();
    // stable sort keeps lower positions first on equal remainders
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]));
    for &i in order.iter().take((total - assigned) as usize) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Exact rational from a finite, non-negative float.
pub fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Builds a plan from per-PE counts, handing out task ids in contiguous blocks
/// starting at `first_task`.
pub fn plan_from_counts(pe_ids: &[NodeId], counts: &[u64], first_task: TaskId, label: &str) -> MappingPlan {
    let mut next = first_task;
    let assignments = pe_ids
        .iter()
        .zip(counts)
        .map(|(&pe, &c)| {
            let tasks = (next..next + c).collect();
            next += c;
            (pe, tasks)
        })
        .collect();
    MappingPlan {
        strategy: label.to_owned(),
        assignments,
    }
}

/// Even mapping: each mapping iteration hands one task to every PE in row
/// order; the final partial iteration covers the first PEs only.
pub fn map_row_major(pe_ids: &[NodeId], total: u64) -> MappingPlan {
    map_row_major_from(pe_ids, 0, total)
}

fn map_row_major_from(pe_ids: &[NodeId], first_task: TaskId, count: u64) -> MappingPlan {
    let n = pe_ids.len() as u64;
    let mut assignments: Vec<(NodeId, Vec<TaskId>)> =
        pe_ids.iter().map(|&pe| (pe, Vec::new())).collect();
    for i in 0..count {
        assignments[(i % n) as usize].1.push(first_task + i);
    }
    MappingPlan {
        strategy: Strategy::RowMajor.to_string(),
        assignments,
    }
}

pub fn map_distance_based(classes: &[DistanceClass], total: u64) -> Result<MappingPlan> {
    let weights: Vec<BigRational> = classes
        .iter()
        .map(|c| BigRational::from_integer(BigInt::from(c.distance)))
        .collect();
    let counts = solve_inverse_time_allocation(&weights, total)?;
    let pe_ids: Vec<NodeId> = classes.iter().map(|c| c.pe_id).collect();
    Ok(plan_from_counts(&pe_ids, &counts, 0, &Strategy::Distance.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticLatencyParams {
    /// Cycles per hop.
    pub t_link: u64,
    /// Cycles between consecutive flits of one packet.
    pub t_flit: u64,
    /// Fixed per-transfer overhead such as packetization.
    pub t_fixed: u64,
}

impl StaticLatencyParams {
    pub fn for_topology(topology: &Topology) -> Self {
        let cfg = topology.config();
        Self {
            t_link: u64::from(cfg.router_delay + cfg.link_delay),
            t_flit: 1,
            t_fixed: 2,
        }
    }
}

/// Static latency estimate of one task: compute + pure memory access + hop
/// latency + serialization of the response + fixed overhead.
pub fn static_latency(
    t_compu: u64,
    t_memaccess: &BigRational,
    distance: u64,
    flit_num: u64,
    params: &StaticLatencyParams,
) -> BigRational {
    let integral = t_compu
        + distance * params.t_link
        + flit_num.saturating_sub(1) * params.t_flit
        + params.t_fixed;
    t_memaccess + BigRational::from_integer(BigInt::from(integral))
}

pub fn map_static_latency(
    topology: &Topology,
    shape: TaskShape,
    cfg: &SimConfig,
    params: &StaticLatencyParams,
    total: u64,
) -> Result<MappingPlan> {
    let t_compu = compute_cycles_for_task(shape.mac_ops, cfg.macs_per_pe) * cfg.clock_ratio();
    let t_mem = rational(memory_delay_for_task(shape.data_values, cfg.cycles_per_value()));
    let flits = PacketSpec::for_task(shape, cfg.bytes_per_value, cfg.flit_payload_bytes).response_flits;
    let classes = topology.classify_distances();
    let weights: Vec<BigRational> = classes
        .iter()
        .map(|c| static_latency(t_compu, &t_mem, c.distance as u64, u64::from(flits), params))
        .collect();
    let counts = solve_inverse_time_allocation(&weights, total)?;
    Ok(plan_from_counts(
        topology.pe_ids(),
        &counts,
        0,
        &Strategy::StaticLatency.to_string(),
    ))
}

/// How a PE's observed travel times reduce to one representative value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Mean,
    /// The most recent observation only.
    Last,
    Max,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "last" => Ok(Self::Last),
            "max" => Ok(Self::Max),
            other => Err(Error::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

/// Representative travel time per PE.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeSummary {
    pub pe_ids: Vec<NodeId>,
    /// `None` for PEs without observations.
    pub time: Vec<Option<BigRational>>,
    pub samples: Vec<u64>,
}

impl TravelTimeSummary {
    pub fn from_run(run: &LayerRunResult) -> Self {
        Self::from_run_with(run, Aggregation::Mean)
    }

    pub fn from_run_with(run: &LayerRunResult, aggregation: Aggregation) -> Self {
        let mut time = Vec::with_capacity(run.pe_ids.len());
        let mut samples = Vec::with_capacity(run.pe_ids.len());
        for records in &run.records {
            let n = records.len() as u64;
            samples.push(n);
            let t = match aggregation {
                Aggregation::Mean => {
                    let sum: u64 = records.iter().map(|r| r.t_travel).sum();
                    (n > 0).then(|| BigRational::new(sum.into(), n.into()))
                }
                Aggregation::Last => records.last().map(|r| BigRational::from_integer(r.t_travel.into())),
                Aggregation::Max => records
                    .iter()
                    .map(|r| r.t_travel)
                    .max()
                    .map(|m| BigRational::from_integer(m.into())),
            };
            time.push(t.filter(|t| t.is_positive()));
        }
        Self {
            pe_ids: run.pe_ids.clone(),
            time,
            samples,
        }
    }

    pub fn task_sampled(&self) -> u64 {
        self.samples.iter().sum()
    }

    /// Per-PE weights; PEs without observations take the slowest observed time.
    pub fn weights(&self) -> Result<Vec<BigRational>> {
        let slowest = self
            .time
            .iter()
            .flatten()
            .max()
            .cloned()
            .ok_or_else(|| Error::Config("no travel-time observations to map from".into()))?;
        Ok(self
            .time
            .iter()
            .map(|m| m.clone().unwrap_or_else(|| slowest.clone()))
            .collect())
    }
}

/// Post-run mapping: all tasks allocated by the mean travel times of a prior run.
pub fn map_post_run(prior: &LayerRunResult, total: u64) -> Result<MappingPlan> {
    let summary = TravelTimeSummary::from_run(prior);
    let counts = solve_inverse_time_allocation(&summary.weights()?, total)?;
    Ok(plan_from_counts(
        &summary.pe_ids,
        &counts,
        0,
        &Strategy::PostRun.to_string(),
    ))
}

/// Two-phase planner: a row-major sampling window, then the remaining tasks
/// allocated by the sampled travel times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingWindow {
    pub window: u64,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplingRoute {
    /// Too few tasks to sample; plain row-major mapping.
    RowMajor(MappingPlan),
    /// Phase 1 assignment of `window` tasks per PE.
    Sample(MappingPlan),
}

impl SamplingWindow {
    pub fn new(window: u64) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("sampling window must be at least 1".into()));
        }
        Ok(Self {
            window,
            aggregation: Aggregation::Mean,
        })
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    /// Layers with fewer than `2 * PEs * window` tasks are not sampled.
    pub fn threshold(&self, pe_count: usize) -> u64 {
        2 * pe_count as u64 * self.window
    }

    pub fn phase_one(&self, pe_ids: &[NodeId], total: u64) -> SamplingRoute {
        if total < self.threshold(pe_ids.len()) {
            return SamplingRoute::RowMajor(map_row_major(pe_ids, total));
        }
        let mut plan = map_row_major_from(pe_ids, 0, self.window * pe_ids.len() as u64);
        plan.strategy = Strategy::Sampling(self.window).to_string();
        SamplingRoute::Sample(plan)
    }

    /// Allocates tasks `sampled..total` from the phase-1 observations.
    pub fn phase_two(&self, summary: &TravelTimeSummary, total: u64) -> Result<MappingPlan> {
        let sampled = summary.task_sampled();
        let remaining = total - sampled;
        let counts = solve_inverse_time_allocation(&summary.weights()?, remaining)?;
        Ok(plan_from_counts(
            &summary.pe_ids,
            &counts,
            sampled,
            &Strategy::Sampling(self.window).to_string(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologyConfig;
    use proptest::prelude::*;

    fn ints(ws: &[i64]) -> Vec<BigRational> {
        ws.iter().map(|&w| BigRational::from_integer(w.into())).collect()
    }

    #[test]
    fn symmetric_weights_split_evenly() {
        assert_eq!(solve_inverse_time_allocation(&ints(&[7; 4]), 40).unwrap(), vec![10; 4]);
    }

    #[test]
    fn two_to_one_ratio() {
        assert_eq!(solve_inverse_time_allocation(&ints(&[100, 200]), 30).unwrap(), vec![20, 10]);
    }

    #[test]
    fn distance_groups_total_58() {
        let mut ws = vec![1; 6];
        ws.extend([2; 6]);
        ws.extend([3; 2]);
        let mut expected = vec![6; 6];
        expected.extend([3; 6]);
        expected.extend([2; 2]);
        assert_eq!(solve_inverse_time_allocation(&ints(&ws), 58).unwrap(), expected);
    }

    #[test]
    fn ties_go_to_lower_position() {
        assert_eq!(solve_inverse_time_allocation(&ints(&[1, 1, 1]), 2).unwrap(), vec![1, 1, 0]);
    }

    #[test]
    fn rejects_non_positive_weight() {
        let err = solve_inverse_time_allocation(&ints(&[3, 0, 1]), 10).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { index: 1 }));
        let err = solve_inverse_time_allocation(&ints(&[-2]), 10).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { index: 0 }));
    }

    #[test]
    fn row_major_examples() {
        let pes: Vec<NodeId> = (0..14).collect();
        assert_eq!(map_row_major(&pes, 4704).counts(), vec![336; 14]);
        let mut expected = vec![3, 3];
        expected.extend([2; 12]);
        assert_eq!(map_row_major(&pes, 30).counts(), expected);
        assert!(map_row_major(&pes, 0).assignments.iter().all(|(_, t)| t.is_empty()));
        // iteration order: task i on PE i mod N
        let plan = map_row_major(&pes, 30);
        assert_eq!(plan.assignments[1].1, vec![1, 15, 29]);
    }

    #[test]
    fn distance_mapping_on_default_layout() {
        let topo = Topology::new(TopologyConfig::default()).unwrap();
        let classes = topo.classify_distances();
        let plan = map_distance_based(&classes, 58).unwrap();
        for (c, n) in classes.iter().zip(plan.counts()) {
            assert_eq!(n, [0, 6, 3, 2][c.distance], "pe {}", c.pe_id);
        }
        let big = map_distance_based(&classes, 4704).unwrap();
        assert_eq!(big.total(), 4704);
        big.validate(&topo, 4704).unwrap();
        // rational share of a distance-1 PE is 4704 * 3 / 29 = 486.6..
        let d1 = big.counts()[classes.iter().position(|c| c.distance == 1).unwrap()];
        assert!(d1 == 486 || d1 == 487);
    }

    #[test]
    fn all_distance_one_is_even() {
        let classes: Vec<DistanceClass> =
            (0..5).map(|pe| DistanceClass { pe_id: pe, distance: 1 }).collect();
        assert_eq!(map_distance_based(&classes, 50).unwrap().counts(), vec![10; 5]);
    }

    #[test]
    fn static_latency_examples() {
        let params = StaticLatencyParams { t_link: 2, t_flit: 1, t_fixed: 2 };
        let t_mem = BigRational::from_integer(4.into());
        assert_eq!(static_latency(10, &t_mem, 1, 4, &params), BigRational::from_integer(21.into()));
        assert_eq!(static_latency(10, &t_mem, 1, 1, &params), BigRational::from_integer(18.into()));
        let d3 = static_latency(10, &t_mem, 3, 4, &params);
        let d1 = static_latency(10, &t_mem, 1, 4, &params);
        assert_eq!(d3 - d1, BigRational::from_integer(4.into()));
    }

    #[test]
    fn static_latency_mapping_favours_near_pes() {
        let topo = Topology::new(TopologyConfig::default()).unwrap();
        let cfg = SimConfig::default();
        let shape = TaskShape { data_values: 50, mac_ops: 25 };
        let params = StaticLatencyParams::for_topology(&topo);
        let plan = map_static_latency(&topo, shape, &cfg, &params, 4704).unwrap();
        plan.validate(&topo, 4704).unwrap();
        let classes = topo.classify_distances();
        let counts = plan.counts();
        let by_distance = |d: usize| -> Vec<u64> {
            classes.iter().zip(&counts).filter(|(c, _)| c.distance == d).map(|(_, &n)| n).collect()
        };
        let min_d1 = *by_distance(1).iter().min().unwrap();
        let max_d3 = *by_distance(3).iter().max().unwrap();
        assert!(max_d3 < min_d1);
        assert!(by_distance(3).iter().all(|&n| n <= *counts.iter().min().unwrap()));
    }

    #[test]
    fn static_latency_spread_narrows_with_flits() {
        let topo = Topology::new(TopologyConfig::default()).unwrap();
        let params = StaticLatencyParams::for_topology(&topo);
        let spread = |flits: u64| {
            let t_mem = BigRational::from_integer(3.into());
            let near = static_latency(10, &t_mem, 1, flits, &params);
            let far = static_latency(10, &t_mem, 3, flits, &params);
            (far / near).to_f64().unwrap()
        };
        assert!(spread(22) < spread(4));
        assert!(spread(4) < spread(1));
    }

    #[test]
    fn strategy_strings_round_trip() {
        for s in ["row-major", "distance", "static-latency", "post-run", "sampling:10"] {
            assert_eq!(s.parse::<super::Strategy>().unwrap().to_string(), s);
        }
        assert!("sampling:0".parse::<super::Strategy>().is_err());
        assert!("greedy".parse::<super::Strategy>().is_err());
    }

    #[test]
    fn sampling_routes() {
        let pes: Vec<NodeId> = (0..14).collect();
        let sw = SamplingWindow::new(10).unwrap();
        let SamplingRoute::Sample(p1) = sw.phase_one(&pes, 4704) else {
            panic!("C1 is large enough to sample");
        };
        assert_eq!(p1.total(), 140);
        assert_eq!(p1.counts(), vec![10; 14]);
        // phase 1 is a prefix of the row-major order
        let rm = map_row_major(&pes, 4704);
        for ((_, sampled), (_, all)) in p1.assignments.iter().zip(&rm.assignments) {
            assert_eq!(sampled[..], all[..sampled.len()]);
        }
        assert!(matches!(sw.phase_one(&pes, 84), SamplingRoute::RowMajor(_)));
        assert!(SamplingWindow::new(0).is_err());
    }

    #[test]
    fn sampling_phase_two_covers_the_rest() {
        let pes: Vec<NodeId> = vec![0, 1];
        let summary = TravelTimeSummary {
            pe_ids: pes.clone(),
            time: vec![Some(ints(&[60])[0].clone()), Some(ints(&[80])[0].clone())],
            samples: vec![5, 5],
        };
        let sw = SamplingWindow::new(5).unwrap();
        let p2 = sw.phase_two(&summary, 80).unwrap();
        assert_eq!(p2.counts(), vec![40, 30]);
        assert_eq!(p2.assignments[0].1.first(), Some(&10));
        assert_eq!(p2.assignments[1].1.last(), Some(&79));
    }

    #[test]
    fn summary_fills_missing_pes_with_slowest() {
        let summary = TravelTimeSummary {
            pe_ids: vec![0, 1, 2],
            time: vec![Some(ints(&[60])[0].clone()), None, Some(ints(&[90])[0].clone())],
            samples: vec![1, 0, 1],
        };
        assert_eq!(summary.weights().unwrap(), ints(&[60, 90, 90]));
    }

    proptest! {
        #[test]
        fn allocation_sums_and_balances(
            ws in proptest::collection::vec(1u32..500, 1..16),
            total in 0u64..50_000,
        ) {
            let weights: Vec<BigRational> = ws.iter().map(|&w| BigRational::from_integer(w.into())).collect();
            let counts = solve_inverse_time_allocation(&weights, total).unwrap();
            prop_assert_eq!(counts.iter().sum::<u64>(), total);
            let loads: Vec<u64> = counts.iter().zip(&ws).map(|(&c, &w)| c * u64::from(w)).collect();
            let spread = loads.iter().max().unwrap() - loads.iter().min().unwrap();
            prop_assert!(spread <= u64::from(*ws.iter().max().unwrap()));
            for i in 0..ws.len() {
                for j in 0..ws.len() {
                    if ws[i] < ws[j] {
                        prop_assert!(counts[i] >= counts[j]);
                    }
                }
            }
        }

        #[test]
        fn allocation_scale_invariant(
            ws in proptest::collection::vec(1u32..500, 1..16),
            total in 0u64..50_000,
            k in 1u32..1000,
        ) {
            let base: Vec<BigRational> = ws.iter().map(|&w| BigRational::from_integer(w.into())).collect();
            let scaled: Vec<BigRational> = base
                .iter()
                .map(|w| w * BigRational::new(k.into(), 7.into()))
                .collect();
            prop_assert_eq!(
                solve_inverse_time_allocation(&base, total).unwrap(),
                solve_inverse_time_allocation(&scaled, total).unwrap()
            );
        }

        #[test]
        fn row_major_tail_rule(n in 1usize..20, total in 0u64..500) {
            let pes: Vec<NodeId> = (0..n).collect();
            let counts = map_row_major(&pes, total).counts();
            let base = total / n as u64;
            let extra = (total % n as u64) as usize;
            for (i, c) in counts.iter().enumerate() {
                prop_assert_eq!(*c, base + u64::from(i < extra));
            }
        }
    }
}
