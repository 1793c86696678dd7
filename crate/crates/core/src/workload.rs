//! DNN layer descriptions and the task populations they produce.
//!
//! A task is one output activation. Its cost is summarised by how many 16-bit
//! values it fetches from memory and how many MAC operations it performs; the
//! values themselves are never computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Pool,
    FullyConnected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    #[serde(default)]
    pub name: String,
    pub kind: LayerKind,
    pub input_h: usize,
    pub input_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default)]
    pub padding: usize,
    /// Defaults to 1 for convolutions and to the kernel size for pooling.
    #[serde(default)]
    pub stride: Option<usize>,
}

fn default_kernel() -> usize {
    1
}

impl LayerSpec {
    pub fn conv(
        name: &str,
        input: usize,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        padding: usize,
    ) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv,
            input_h: input,
            input_w: input,
            in_channels,
            out_channels,
            kernel,
            padding,
            stride: None,
        }
    }

    pub fn pool(name: &str, input: usize, channels: usize, kernel: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Pool,
            input_h: input,
            input_w: input,
            in_channels: channels,
            out_channels: channels,
            kernel,
            padding: 0,
            stride: None,
        }
    }

    pub fn fully_connected(name: &str, fan_in: usize, outputs: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::FullyConnected,
            input_h: 1,
            input_w: 1,
            in_channels: fan_in,
            out_channels: outputs,
            kernel: 1,
            padding: 0,
            stride: None,
        }
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(match self.kind {
            LayerKind::Pool => self.kernel,
            _ => 1,
        })
    }

    fn label(&self) -> String {
        if self.name.is_empty() {
            format!("{:?}", self.kind)
        } else {
            self.name.clone()
        }
    }

    /// Output height and width; errors if either would be non-positive.
    pub fn output_dims(&self) -> Result<(usize, usize)> {
        if self.kind == LayerKind::FullyConnected {
            return if self.out_channels == 0 || self.fan_in() == 0 {
                Err(Error::EmptyLayerOutput(self.label()))
            } else {
                Ok((1, 1))
            };
        }
        let stride = self.stride();
        if self.kernel == 0 || stride == 0 || self.out_channels == 0 || self.in_channels == 0 {
            return Err(Error::EmptyLayerOutput(self.label()));
        }
        let dim = |input: usize| {
            let padded = input + 2 * self.padding;
            (padded >= self.kernel).then(|| (padded - self.kernel) / stride + 1)
        };
        match (dim(self.input_h), dim(self.input_w)) {
            (Some(h), Some(w)) if h > 0 && w > 0 => Ok((h, w)),
            _ => Err(Error::EmptyLayerOutput(self.label())),
        }
    }

    fn fan_in(&self) -> usize {
        self.input_h * self.input_w * self.in_channels
    }

    /// Per-task cost: values fetched from memory and MAC operations.
    pub fn task_shape(&self) -> Result<TaskShape> {
        self.output_dims()?;
        let k2 = (self.kernel * self.kernel) as u64;
        let shape = match self.kind {
            // K² weights plus K² inputs for every input channel
            LayerKind::Conv => TaskShape {
                data_values: 2 * k2 * self.in_channels as u64,
                mac_ops: k2 * self.in_channels as u64,
            },
            // one input channel per pooling window, no weights
            LayerKind::Pool => TaskShape {
                data_values: k2,
                mac_ops: k2,
            },
            LayerKind::FullyConnected => TaskShape {
                data_values: 2 * self.fan_in() as u64,
                mac_ops: self.fan_in() as u64,
            },
        };
        Ok(shape)
    }
}

/// Cost shared by every task of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskShape {
    pub data_values: u64,
    pub mac_ops: u64,
}

pub type TaskId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub task_id: TaskId,
    pub layer_id: usize,
    pub data_values: u64,
    pub mac_ops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerTasks {
    pub layer_id: usize,
    pub count: u64,
    pub shape: TaskShape,
}

impl LayerTasks {
    pub fn iter(&self) -> impl Iterator<Item = Task> + '_ {
        (0..self.count).map(move |task_id| Task {
            task_id,
            layer_id: self.layer_id,
            data_values: self.shape.data_values,
            mac_ops: self.shape.mac_ops,
        })
    }
}

pub fn tasks_for_layer(layer: &LayerSpec, layer_id: usize) -> Result<LayerTasks> {
    let (h, w) = layer.output_dims()?;
    let count = match layer.kind {
        LayerKind::FullyConnected => layer.out_channels as u64,
        _ => (layer.out_channels * h * w) as u64,
    };
    Ok(LayerTasks {
        layer_id,
        count,
        shape: layer.task_shape()?,
    })
}

/// Flit counts of the three packet kinds exchanged per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub request_flits: u32,
    pub response_flits: u32,
    pub result_flits: u32,
    pub flit_payload_bytes: u64,
}

impl PacketSpec {
    pub fn for_task(shape: TaskShape, bytes_per_value: u64, flit_payload_bytes: u64) -> Self {
        Self {
            request_flits: 1,
            response_flits: flits_for_bytes(shape.data_values * bytes_per_value, flit_payload_bytes),
            result_flits: 1,
            flit_payload_bytes,
        }
    }
}

fn flits_for_bytes(bytes: u64, flit_payload_bytes: u64) -> u32 {
    bytes.div_ceil(flit_payload_bytes).max(1) as u32
}

/// Response flits for a convolution task: K² weights and K² inputs per input
/// channel, two bytes each.
pub fn response_flit_count(kernel: usize, in_channels: usize, flit_payload_bytes: u64) -> u32 {
    let values = 2 * (kernel * kernel * in_channels) as u64;
    flits_for_bytes(values * 2, flit_payload_bytes)
}

/// PE cycles needed for `mac_ops` operations on `macs_per_pe` MAC units.
pub fn compute_cycles_for_task(mac_ops: u64, macs_per_pe: u64) -> u64 {
    mac_ops.div_ceil(macs_per_pe)
}

/// Memory access time in (fractional) NoC cycles.
pub fn memory_delay_for_task(data_values: u64, cycles_per_value: f64) -> f64 {
    data_values as f64 * cycles_per_value
}

/// The seven LeNet-5 layers, C3 fully connected to all six input maps.
pub fn lenet_preset() -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv("C1", 28, 1, 6, 5, 2),
        LayerSpec::pool("S2", 28, 6, 2),
        LayerSpec::conv("C3", 14, 6, 16, 5, 0),
        LayerSpec::pool("S4", 10, 16, 2),
        LayerSpec::conv("C5", 5, 16, 120, 5, 0),
        LayerSpec::fully_connected("F6", 120, 84),
        LayerSpec::fully_connected("OUT", 84, 10),
    ]
}

pub fn preset(name: &str) -> Option<Vec<LayerSpec>> {
    match name {
        "lenet" => Some(lenet_preset()),
        "lenet-c1" => Some(lenet_preset().into_iter().take(1).collect()),
        _ => None,
    }
}
