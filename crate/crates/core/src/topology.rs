//! Mesh geometry, node roles and dimension-order routes.
//!
//! Nodes are numbered row-major: `id = y * width + x`, with `y = 0` the top row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeCoord {
    pub x: usize,
    pub y: usize,
}

impl NodeCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: NodeCoord) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Pe,
    Mc,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub width: usize,
    pub height: usize,
    pub mc_nodes: Vec<NodeId>,
    /// NoC cycles for a flit to cross one link.
    #[serde(default = "one")]
    pub link_delay: u32,
    /// NoC cycles a flit spends in a router before switch traversal.
    #[serde(default = "default_router_delay")]
    pub router_delay: u32,
    /// Packetization cycles at the source network interface.
    #[serde(default = "default_ni_delay")]
    pub ni_delay: u32,
}

pub const DEFAULT_ROUTER_DELAY: u32 = 2;
pub const DEFAULT_NI_DELAY: u32 = 8;

fn default_router_delay() -> u32 {
    DEFAULT_ROUTER_DELAY
}

fn default_ni_delay() -> u32 {
    DEFAULT_NI_DELAY
}

impl TopologyConfig {
    /// 4x4 mesh with two memory controllers in the centre of row 2.
    pub fn mesh_4x4_two_mc() -> Self {
        Self {
            width: 4,
            height: 4,
            mc_nodes: vec![9, 10],
            link_delay: 1,
            router_delay: DEFAULT_ROUTER_DELAY,
            ni_delay: DEFAULT_NI_DELAY,
        }
    }

    /// 4x4 mesh with the centre 2x2 block populated by memory controllers.
    pub fn mesh_4x4_four_mc() -> Self {
        Self {
            width: 4,
            height: 4,
            mc_nodes: vec![5, 6, 9, 10],
            link_delay: 1,
            router_delay: DEFAULT_ROUTER_DELAY,
            ni_delay: DEFAULT_NI_DELAY,
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self::mesh_4x4_two_mc()
    }
}

/// Hop distance from a PE to its nearest memory controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceClass {
    pub pe_id: NodeId,
    pub distance: usize,
}

#[derive(Debug, Clone)]
pub struct Topology {
    config: TopologyConfig,
    roles: Vec<NodeRole>,
    pe_ids: Vec<NodeId>,
    mc_ids: Vec<NodeId>,
    // indexed by node id; None for MC nodes
    home_mc: Vec<Option<NodeId>>,
}

impl Topology {
    pub fn new(config: TopologyConfig) -> Result<Self> {
        if config.width == 0 || config.height == 0 {
            return Err(Error::Config("mesh dimensions must be positive".into()));
        }
        if config.link_delay == 0 || config.router_delay == 0 {
            return Err(Error::Config(
                "link_delay and router_delay must be at least 1 cycle".into(),
            ));
        }
        let nodes = config.width * config.height;
        let mut roles = vec![NodeRole::Pe; nodes];
        for &id in &config.mc_nodes {
            if id >= nodes {
                return Err(Error::McOutOfRange {
                    id,
                    width: config.width,
                    height: config.height,
                });
            }
            roles[id] = NodeRole::Mc;
        }
        let mc_ids: Vec<NodeId> = (0..nodes).filter(|&n| roles[n] == NodeRole::Mc).collect();
        if mc_ids.is_empty() {
            return Err(Error::NoMemoryControllers);
        }
        let pe_ids: Vec<NodeId> = (0..nodes).filter(|&n| roles[n] == NodeRole::Pe).collect();
        if pe_ids.is_empty() {
            return Err(Error::NoProcessingElements);
        }

        let width = config.width;
        let coord = |id: NodeId| NodeCoord::new(id % width, id / width);
        let home_mc = (0..nodes)
            .map(|n| {
                if roles[n] == NodeRole::Mc {
                    return None;
                }
                // mc_ids is ascending, so min_by_key keeps the lower id on ties
                mc_ids
                    .iter()
                    .copied()
                    .min_by_key(|&mc| coord(n).manhattan(coord(mc)))
            })
            .collect();

        Ok(Self {
            config,
            roles,
            pe_ids,
            mc_ids,
            home_mc,
        })
    }

    pub fn config(&self) -> &TopologyConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, id: NodeId) -> NodeRole {
        self.roles[id]
    }

    pub fn coord(&self, id: NodeId) -> NodeCoord {
        NodeCoord::new(id % self.config.width, id / self.config.width)
    }

    pub fn id(&self, coord: NodeCoord) -> NodeId {
        coord.y * self.config.width + coord.x
    }

    pub fn contains(&self, coord: NodeCoord) -> bool {
        coord.x < self.config.width && coord.y < self.config.height
    }

    /// PE node ids in row-major order.
    pub fn pe_ids(&self) -> &[NodeId] {
        &self.pe_ids
    }

    pub fn mc_ids(&self) -> &[NodeId] {
        &self.mc_ids
    }

    pub fn pe_count(&self) -> usize {
        self.pe_ids.len()
    }

    /// Memory controller a PE sends its requests to: the nearest one, lower id on ties.
    pub fn home_mc(&self, pe: NodeId) -> Option<NodeId> {
        self.home_mc[pe]
    }

    pub fn hops(&self, a: NodeId, b: NodeId) -> usize {
        self.coord(a).manhattan(self.coord(b))
    }

    pub fn classify_distances(&self) -> Vec<DistanceClass> {
        self.pe_ids
            .iter()
            .map(|&pe| {
                let mc = self.home_mc[pe].expect("every PE has a home MC");
                DistanceClass {
                    pe_id: pe,
                    distance: self.hops(pe, mc),
                }
            })
            .collect()
    }
}

/// Dimension-order route from `src` to `dst`, excluding `src` and including `dst`.
///
/// The column displacement is resolved completely before the row displacement.
pub fn xy_route(src: NodeCoord, dst: NodeCoord) -> Vec<NodeCoord> {
    let mut path = Vec::with_capacity(src.manhattan(dst));
    let mut cur = src;
    while cur.x != dst.x {
        cur.x = if dst.x > cur.x { cur.x + 1 } else { cur.x - 1 };
        path.push(cur);
    }
    while cur.y != dst.y {
        cur.y = if dst.y > cur.y { cur.y + 1 } else { cur.y - 1 };
        path.push(cur);
    }
    path
}
