//! Protocol timing, topology and engine configuration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lsdb::Freshness;
use crate::types::NodeId;

/// Protocol constants shared by both models, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timing {
    pub hellointvl: u64,
    pub rtdeadintvl: u64,
    pub rxmtintvl: u64,
    pub refreshintvl: u64,
    pub freshness: Freshness,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            hellointvl: 10,
            rtdeadintvl: 50,
            rxmtintvl: 4,
            refreshintvl: 100,
            freshness: Freshness::Timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Simple,
    Detailed,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Simple => "simple",
            Model::Detailed => "detailed",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simple" => Ok(Model::Simple),
            "detailed" => Ok(Model::Detailed),
            _ => Err(format!("unknown model `{s}` (expected simple or detailed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("node id {0} is outside 1..={1}")]
    UnknownNode(u16, u16),
    #[error("self-loop on node {0}")]
    SelfLoop(u16),
}

/// Undirected graph over nodes `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    n: u16,
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Topology {
    pub fn new(n: u16) -> Self {
        let adj = (1..=n).map(|i| (NodeId(i), BTreeSet::new())).collect();
        Topology { n, adj }
    }

    pub fn from_edges(n: u16, edges: &[(u16, u16)]) -> Result<Self, TopologyError> {
        let mut t = Topology::new(n);
        for &(a, b) in edges {
            t.add_edge(a, b)?;
        }
        Ok(t)
    }

    pub fn add_edge(&mut self, a: u16, b: u16) -> Result<(), TopologyError> {
        for x in [a, b] {
            if x == 0 || x > self.n {
                return Err(TopologyError::UnknownNode(x, self.n));
            }
        }
        if a == b {
            return Err(TopologyError::SelfLoop(a));
        }
        self.adj.get_mut(&NodeId(a)).unwrap().insert(NodeId(b));
        self.adj.get_mut(&NodeId(b)).unwrap().insert(NodeId(a));
        Ok(())
    }

    pub fn line(n: u16) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Topology::from_edges(n, &edges).unwrap()
    }

    pub fn ring(n: u16) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        edges.push((n, 1));
        Topology::from_edges(n, &edges).unwrap()
    }

    /// Node 1 is the hub.
    pub fn star(n: u16) -> Self {
        let edges: Vec<_> = (2..=n).map(|i| (1, i)).collect();
        Topology::from_edges(n, &edges).unwrap()
    }

    pub fn n(&self) -> u16 {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, i: NodeId) -> &BTreeSet<NodeId> {
        &self.adj[&i]
    }

    pub fn connected(&self, a: NodeId, b: NodeId) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adj
            .iter()
            .flat_map(|(a, s)| s.iter().filter(move |b| a < *b).map(move |b| (*a, *b)))
            .collect()
    }

    fn distances_from(&self, src: NodeId) -> BTreeMap<NodeId, u64> {
        let mut dist = BTreeMap::from([(src, 0)]);
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            let d = dist[&u];
            for v in self.neighbors(u) {
                if !dist.contains_key(v) {
                    dist.insert(*v, d + 1);
                    q.push_back(*v);
                }
            }
        }
        dist
    }

    /// Largest hop distance between two nodes of the same component.
    pub fn diameter(&self) -> u64 {
        self.nodes()
            .flat_map(|s| self.distances_from(s).into_values())
            .max()
            .unwrap_or(0)
    }

    /// Nodes reachable from `i`, including `i`.
    pub fn component(&self, i: NodeId) -> BTreeSet<NodeId> {
        self.distances_from(i).into_keys().collect()
    }
}

/// Which neighbour pairs of the detailed model try to become adjacent.
/// Symmetric by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum AdjPolicy {
    #[default]
    All,
    Only(BTreeSet<(NodeId, NodeId)>),
}

impl AdjPolicy {
    pub fn only(pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        AdjPolicy::Only(
            pairs
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        )
    }

    pub fn adj(&self, a: NodeId, b: NodeId) -> bool {
        match self {
            AdjPolicy::All => true,
            AdjPolicy::Only(s) => s.contains(&(a.min(b), a.max(b))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("loss_prob must be 0 for the simple model (got {0})")]
    LossWithSimpleModel(f64),
    #[error("loss_prob must lie in [0, 1] (got {0})")]
    LossOutOfRange(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("boot offset given for node {0}, which is not in the topology")]
    BootForUnknownNode(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub model: Model,
    pub timing: Timing,
    pub time_sending: u64,
    pub time_spread: u64,
    /// Boot tick per node; missing nodes boot at 0.
    pub boot_offsets: BTreeMap<NodeId, u64>,
    pub loss_prob: f64,
    pub seed: u64,
    pub max_ticks: u64,
    pub queue_capacity: Option<usize>,
    pub adjacency: AdjPolicy,
    /// Input messages a node handles per tick; `None` empties the queue.
    pub inbox_batch: Option<usize>,
    /// Fold a new emission into a queued one that it duplicates or, for
    /// acks to the same neighbours, extends.
    pub merge_pending: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            model: Model::Detailed,
            timing: Timing::default(),
            time_sending: 1,
            time_spread: 0,
            boot_offsets: BTreeMap::new(),
            loss_prob: 0.0,
            seed: 0,
            max_ticks: 1000,
            queue_capacity: None,
            adjacency: AdjPolicy::All,
            inbox_batch: None,
            merge_pending: true,
        }
    }
}

impl EngineConfig {
    pub fn new(model: Model) -> Self {
        EngineConfig {
            model,
            ..Default::default()
        }
    }

    pub fn boot_at(&self, i: NodeId) -> u64 {
        self.boot_offsets.get(&i).copied().unwrap_or(0)
    }

    pub fn validate(&self, topo: &Topology) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(ConfigError::LossOutOfRange(self.loss_prob));
        }
        if self.model == Model::Simple && self.loss_prob != 0.0 {
            return Err(ConfigError::LossWithSimpleModel(self.loss_prob));
        }
        let positive = [
            ("hellointvl", self.timing.hellointvl),
            ("rtdeadintvl", self.timing.rtdeadintvl),
            ("rxmtintvl", self.timing.rxmtintvl),
            ("refreshintvl", self.timing.refreshintvl),
            ("time_sending", self.time_sending),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if let Some(i) = self
            .boot_offsets
            .keys()
            .find(|i| i.0 == 0 || i.0 > topo.n())
        {
            return Err(ConfigError::BootForUnknownNode(*i));
        }
        Ok(())
    }
}
