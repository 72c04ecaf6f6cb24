//! Line-oriented scenario files.
//!
//! ```text
//! # two routers on one link
//! nodes 2
//! edge 1 2
//! model detailed
//! boot 2 3
//! ```
//!
//! The first non-comment line declares the node count. `edge i j` adds a
//! link, `adj i j` restricts which neighbours of the detailed model form
//! adjacencies (all of them when no `adj` line is present), and the
//! remaining keys override configuration values.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::config::{AdjPolicy, EngineConfig, Model, Topology};
use crate::types::NodeId;

pub const VALID_KEYS: &[&str] = &[
    "nodes",
    "edge",
    "adj",
    "model",
    "hellointvl",
    "rtdeadintvl",
    "rxmtintvl",
    "refreshintvl",
    "time_sending",
    "time_spread",
    "loss_prob",
    "seed",
    "max_ticks",
    "queue_capacity",
    "inbox_batch",
    "merge_pending",
    "boot",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn err(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub config: EngineConfig,
    rtdeadintvl_explicit: bool,
}

impl Scenario {
    pub fn new(topology: Topology, config: EngineConfig) -> Self {
        Scenario {
            topology,
            config,
            rtdeadintvl_explicit: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (first, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty scenario, expected `nodes N`"))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        let n = match words.as_slice() {
            ["nodes", n] => n
                .parse::<u16>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| err(first, format!("bad node count `{n}`")))?,
            _ => return Err(err(first, "first line must be `nodes N`")),
        };

        let mut sc = Scenario {
            topology: Topology::new(n),
            config: EngineConfig::default(),
            rtdeadintvl_explicit: false,
        };
        let mut adj_pairs: Option<BTreeSet<(NodeId, NodeId)>> = None;
        for (line, text) in lines {
            let words: Vec<&str> = text.split_whitespace().collect();
            let node = |s: &str| -> Result<u16, ScenarioError> {
                let v: u16 = s
                    .parse()
                    .map_err(|_| err(line, format!("bad node id `{s}`")))?;
                if v == 0 || v > n {
                    return Err(err(
                        line,
                        format!("node {v} is not declared (nodes 1..={n})"),
                    ));
                }
                Ok(v)
            };
            match words.as_slice() {
                ["edge", a, b] => {
                    let (a, b) = (node(a)?, node(b)?);
                    sc.topology
                        .add_edge(a, b)
                        .map_err(|e| err(line, e.to_string()))?;
                }
                ["adj", a, b] => {
                    let (a, b) = (NodeId(node(a)?), NodeId(node(b)?));
                    adj_pairs
                        .get_or_insert_with(BTreeSet::new)
                        .insert((a.min(b), a.max(b)));
                }
                ["boot", i, t] => {
                    let i = node(i)?;
                    let t = t
                        .parse()
                        .map_err(|_| err(line, format!("bad boot tick `{t}`")))?;
                    sc.config.boot_offsets.insert(NodeId(i), t);
                }
                ["nodes", ..] => {
                    return Err(err(line, "`nodes` may appear only on the first line"))
                }
                [key, value] => sc.set(key, value).map_err(|m| err(line, m))?,
                [key, ..] if !VALID_KEYS.contains(key) => {
                    return Err(err(line, unknown_key(key)));
                }
                [key, ..] => {
                    return Err(err(line, format!("wrong number of arguments for `{key}`")))
                }
                [] => unreachable!(),
            }
        }
        if let Some(p) = adj_pairs {
            sc.config.adjacency = AdjPolicy::only(p);
        }
        Ok(sc)
    }

    /// Applies one `key value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse()
                .map_err(|_| format!("bad value `{v}` for `{key}`"))
        }
        let c = &mut self.config;
        match key {
            "model" => c.model = value.parse::<Model>()?,
            "hellointvl" => {
                c.timing.hellointvl = num(key, value)?;
                if !self.rtdeadintvl_explicit {
                    c.timing.rtdeadintvl = 5 * c.timing.hellointvl;
                }
            }
            "rtdeadintvl" => {
                c.timing.rtdeadintvl = num(key, value)?;
                self.rtdeadintvl_explicit = true;
            }
            "rxmtintvl" => c.timing.rxmtintvl = num(key, value)?,
            "refreshintvl" => c.timing.refreshintvl = num(key, value)?,
            "time_sending" => c.time_sending = num(key, value)?,
            "time_spread" => c.time_spread = num(key, value)?,
            "loss_prob" => c.loss_prob = num(key, value)?,
            "seed" => c.seed = num(key, value)?,
            "max_ticks" => c.max_ticks = num(key, value)?,
            "queue_capacity" => c.queue_capacity = Some(num(key, value)?),
            "inbox_batch" => {
                c.inbox_batch = match value {
                    "all" => None,
                    v => match num::<usize>(key, v)? {
                        0 => return Err("`inbox_batch` must be positive or `all`".to_owned()),
                        k => Some(k),
                    },
                }
            }
            "merge_pending" => c.merge_pending = num(key, value)?,
            "boot" | "edge" | "adj" | "nodes" => {
                return Err(format!("`{key}` takes two arguments"));
            }
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    /// Applies `key=value` overrides, as given on a command line.
    pub fn apply_overrides<'a>(
        &mut self,
        kvs: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), String> {
        for kv in kvs {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("override `{kv}` is not of the form key=value"))?;
            if k == "boot" {
                let (i, t) = v
                    .split_once(':')
                    .ok_or_else(|| "boot override must be boot=NODE:TICK".to_owned())?;
                let i: u16 = i.parse().map_err(|_| format!("bad node id `{i}`"))?;
                if i == 0 || i > self.topology.n() {
                    return Err(format!("node {i} is not declared"));
                }
                let t = t.parse().map_err(|_| format!("bad boot tick `{t}`"))?;
                self.config.boot_offsets.insert(NodeId(i), t);
            } else {
                self.set(k, v)?;
            }
        }
        Ok(())
    }
}

fn unknown_key(key: &str) -> String {
    format!("unknown key `{key}`; valid keys: {}", VALID_KEYS.join(", "))
}
