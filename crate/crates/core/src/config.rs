use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device and network parameters shared by the simulator and the planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub vc_count: usize,
    /// Capacity of one virtual-channel FIFO, in flits.
    pub vc_buffer_flits: usize,
    pub noc_clock_ghz: f64,
    pub pe_clock_mhz: f64,
    pub macs_per_pe: u64,
    /// Memory bandwidth of one memory controller, in GB/s.
    pub memory_bandwidth_gbps: f64,
    pub bytes_per_value: u64,
    pub flit_payload_bytes: u64,
    /// Requests a memory controller holds at once (accepted but whose response
    /// has not fully left its network interface). `None` means unbounded.
    pub mc_queue_depth: Option<usize>,
    /// Cycles without any flit movement before the simulation is declared stuck.
    pub livelock_bound: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            vc_count: 4,
            vc_buffer_flits: 4,
            noc_clock_ghz: 2.0,
            pe_clock_mhz: 200.0,
            macs_per_pe: 64,
            memory_bandwidth_gbps: 64.0,
            bytes_per_value: 2,
            flit_payload_bytes: 32,
            mc_queue_depth: None,
            livelock_bound: 1_000_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vc_count", self.vc_count as f64),
            ("vc_buffer_flits", self.vc_buffer_flits as f64),
            ("noc_clock_ghz", self.noc_clock_ghz),
            ("pe_clock_mhz", self.pe_clock_mhz),
            ("macs_per_pe", self.macs_per_pe as f64),
            ("memory_bandwidth_gbps", self.memory_bandwidth_gbps),
            ("bytes_per_value", self.bytes_per_value as f64),
            ("flit_payload_bytes", self.flit_payload_bytes as f64),
            ("livelock_bound", self.livelock_bound as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("sim.{name} must be positive")));
            }
        }
        if self.mc_queue_depth == Some(0) {
            return Err(Error::Config("sim.mc_queue_depth must be at least 1".into()));
        }
        let ratio = self.noc_clock_ghz * 1000.0 / self.pe_clock_mhz;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "NoC/PE clock ratio must be a positive integer, got {ratio}"
            )));
        }
        Ok(())
    }

    /// NoC cycles per PE cycle.
    pub fn clock_ratio(&self) -> u64 {
        (self.noc_clock_ghz * 1000.0 / self.pe_clock_mhz).round() as u64
    }

    /// NoC cycles the memory needs to deliver one value.
    pub fn cycles_per_value(&self) -> f64 {
        self.bytes_per_value as f64 * self.noc_clock_ghz / self.memory_bandwidth_gbps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.clock_ratio(), 10);
        assert_eq!(cfg.cycles_per_value(), 0.0625);
    }

    #[test]
    fn rejects_fractional_clock_ratio() {
        let cfg = SimConfig {
            pe_clock_mhz: 300.0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
