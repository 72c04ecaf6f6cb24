//! Bounded exhaustive exploration of the simple model.
//!
//! Nodes run with wrap-around LSA ages and bounded queues. Starting from
//! every vector of boot offsets in `0..=start_interval`, the explorer
//! enumerates, tick by tick, every resolution of the engine's open choices:
//! the arrival order of messages reaching one node in the same tick, whether
//! a node with both a due timer and a queued message handles the message
//! first, and the transmission spread. Within a tick, the order in which
//! nodes take their turn does not matter (a turn only touches the node's own
//! state and output queue), so it is not enumerated.
//!
//! States are compared after abstracting absolute time: every deadline is
//! stored relative to the current tick, and deadlines already in the past
//! collapse to `-1`.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::config::{EngineConfig, Model, Timing, Topology};
use crate::engine::{Engine, NodeModel, Overflow, Scheduler, SimState};
use crate::lsdb::Freshness;
use crate::trace::TraceEvent;
use crate::types::{Lsa, Message, NodeId, SendInstruction};

#[derive(Debug, Clone)]
pub struct ExploreConfig {
    pub topology: Topology,
    /// Queue bound M.
    pub queue_bound: usize,
    pub age_bound: u64,
    pub start_interval: u64,
    /// Ticks after which an unconverged path makes the run inconclusive.
    pub depth_bound: u64,
    pub max_states: usize,
    /// State properties checked on every explored state.
    pub properties: BTreeSet<Property>,
    pub time_limit: Option<Duration>,
    pub hellointvl: u64,
    pub rtdeadintvl: u64,
    pub time_sending: u64,
    pub time_spread: u64,
    /// Largest network accepted.
    pub max_nodes: u16,
    /// Keep full canonical states to detect fingerprint collisions.
    pub check_collisions: bool,
}

impl ExploreConfig {
    /// Constants of the timed-automata model: M = 10, ages bounded by
    /// 2 * (n + 1), boot within 10 ticks, hello every 10 ticks, neighbours
    /// dead after 5 missed hellos.
    pub fn new(topology: Topology) -> Self {
        let n = topology.n() as u64;
        ExploreConfig {
            topology,
            queue_bound: 10,
            age_bound: 2 * (n + 1),
            start_interval: 10,
            depth_bound: 200,
            max_states: 5_000_000,
            properties: [
                Property::QueueBound,
                Property::LsdbInvariant,
                Property::AgeWindow,
            ]
            .into(),
            time_limit: None,
            hellointvl: 10,
            rtdeadintvl: 50,
            time_sending: 1,
            time_spread: 0,
            max_nodes: 4,
            check_collisions: false,
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            model: Model::Simple,
            timing: Timing {
                hellointvl: self.hellointvl,
                rtdeadintvl: self.rtdeadintvl,
                freshness: Freshness::WrapAround {
                    age_bound: self.age_bound,
                },
                ..Timing::default()
            },
            time_sending: self.time_sending,
            time_spread: self.time_spread,
            queue_capacity: self
                .properties
                .contains(&Property::QueueBound)
                .then_some(self.queue_bound),
            max_ticks: u64::MAX,
            inbox_batch: Some(1),
            merge_pending: false,
            ..EngineConfig::default()
        }
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self.engine_config(), self.topology.clone()).expect("explorer config is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("topology has {0} nodes; the explorer accepts at most {1}")]
    TooLarge(u16, u16),
}

/// Replays a recorded sequence of choices; past the end of the script every
/// choice is the default one. Records the size of every choice domain met.
#[derive(Debug, Clone, Default)]
pub struct ScriptedScheduler {
    pub script: Vec<u16>,
    pos: usize,
    pub domains: Vec<u16>,
}

impl ScriptedScheduler {
    pub fn new(script: Vec<u16>) -> Self {
        ScriptedScheduler {
            script,
            pos: 0,
            domains: Vec::new(),
        }
    }

    fn choose(&mut self, domain: usize) -> usize {
        let c = self.script.get(self.pos).copied().unwrap_or(0) as usize;
        self.pos += 1;
        self.domains.push(domain as u16);
        c.min(domain - 1)
    }

    /// The choices actually taken in the last step.
    pub fn used(&self) -> Vec<u16> {
        (0..self.domains.len())
            .map(|k| self.script.get(k).copied().unwrap_or(0))
            .collect()
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// The `index`-th permutation of `0..k` in lexicographic order.
pub fn nth_permutation(k: usize, mut index: usize) -> Vec<usize> {
    let mut items: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(k);
    for i in (1..=k).rev() {
        let f = factorial(i - 1);
        out.push(items.remove(index / f));
        index %= f;
    }
    out
}

impl Scheduler for ScriptedScheduler {
    fn arrival_order(&mut self, _recipient: NodeId, senders: &[NodeId]) -> Vec<usize> {
        let k = senders.len();
        let c = self.choose(factorial(k));
        nth_permutation(k, c)
    }

    fn message_first(&mut self, _node: NodeId) -> bool {
        self.choose(2) == 1
    }

    fn spread(&mut self, _node: NodeId, max: u64) -> u64 {
        self.choose(max as usize + 1) as u64
    }
}

/// Advances `script` to the next choice vector, given the domains seen
/// while executing it. Returns `false` once all vectors were produced.
fn next_script(script: &mut Vec<u16>, domains: &[u16]) -> bool {
    script.resize(domains.len(), 0);
    while let Some(last) = script.len().checked_sub(1) {
        if script[last] + 1 < domains[last] {
            script[last] += 1;
            return true;
        }
        script.pop();
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CanonNode {
    boot_in: Option<i64>,
    hellot: i64,
    nbrs: Vec<(NodeId, i64)>,
    lsdb: Vec<Lsa>,
    inbox: Vec<Message>,
    outbox: Vec<SendInstruction>,
    sending: Option<(Message, BTreeSet<NodeId>, i64)>,
}

/// Time-abstracted encoding of a simulation state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonState(Vec<CanonNode>);

impl CanonState {
    pub fn of(st: &SimState) -> Self {
        let now = st.now.0 as i64;
        let rel = |t: u64| (t as i64 - now).max(-1);
        CanonState(
            st.nodes
                .iter()
                .map(|slot| {
                    let NodeModel::Simple(s) = &slot.model else {
                        panic!("the explorer runs the simple model only")
                    };
                    CanonNode {
                        boot_in: (!slot.booted).then(|| rel(slot.boot_at.0)),
                        hellot: rel(s.hellot.0),
                        nbrs: s
                            .nbrs
                            .iter()
                            .map(|n| (n.nip, rel(n.inact_deadline.0)))
                            .collect(),
                        lsdb: s.lsdb.iter().cloned().collect(),
                        inbox: slot.inbox.iter().cloned().collect(),
                        outbox: slot.outbox.iter().cloned().collect(),
                        sending: slot.sending.as_ref().map(|f| {
                            (f.payload.clone(), f.recipients.clone(), rel(f.deliver_at.0))
                        }),
                    }
                })
                .collect(),
        )
    }

    /// 128-bit fingerprint from two independently salted hashes.
    pub fn fingerprint(&self) -> u128 {
        let half = |salt: u64| {
            let mut h = DefaultHasher::new();
            salt.hash(&mut h);
            self.hash(&mut h);
            h.finish()
        };
        ((half(0x9e37_79b9_7f4a_7c15) as u128) << 64) | half(0xc2b2_ae3d_27d4_eb4f) as u128
    }
}

/// Boot offsets plus the choices taken in every tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub boot: Vec<u64>,
    pub choices: Vec<Vec<u16>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// Some queue exceeded the bound M.
    QueueBound,
    /// Some database held two LSAs of one origin or a self-link.
    LsdbInvariant,
    /// A stored age fell outside the half window behind its origin's
    /// current age.
    AgeWindow,
    /// A reachable cycle of unconverged states.
    Livelock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Violation {
        property: Property,
        counterexample: Counterexample,
        detail: String,
    },
    Inconclusive {
        reason: String,
        frontier: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExploreReport {
    pub outcome: Outcome,
    pub states: usize,
    pub initial_states: usize,
    pub converged_states: usize,
    pub transitions: usize,
    pub max_queue: usize,
    pub max_depth: u64,
    /// Longest tick count from an initial to a converged state, when the
    /// state graph was fully built and found acyclic.
    pub longest_path: Option<u64>,
    pub elapsed_ms: u128,
}

impl ExploreReport {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

struct Record {
    parent: u32,
    choices: Box<[u16]>,
    depth: u64,
    converged: bool,
}

const ROOT: u32 = u32::MAX;

/// The explored state graph. Kept after the run so that other schedules can
/// be checked against it.
pub struct Explorer {
    pub config: ExploreConfig,
    engine: Engine,
    index: HashMap<u128, u32>,
    records: Vec<Record>,
    roots: HashMap<u32, Vec<u64>>,
    edges: Vec<(u32, u32)>,
    full: HashMap<u128, CanonState>,
}

fn age_window_ok(g: u64, a: u64, bound: u64) -> bool {
    2 * ((g + bound - a) % bound) < bound
}

fn check_state(
    st: &SimState,
    age_bound: u64,
    props: &BTreeSet<Property>,
) -> Result<(), (Property, String)> {
    for slot in &st.nodes {
        let db = slot.model.lsdb();
        if props.contains(&Property::LsdbInvariant) && !db.check_invariant() {
            return Err((Property::LsdbInvariant, format!("node {}", slot.id)));
        }
        if !props.contains(&Property::AgeWindow) {
            continue;
        }
        for lsa in db {
            let Some(own) = st.node(lsa.origin).model.lsdb().get(lsa.origin) else {
                continue;
            };
            if !age_window_ok(own.stamp.0, lsa.stamp.0, age_bound) {
                return Err((
                    Property::AgeWindow,
                    format!(
                        "node {} holds age {} of origin {}, whose current age is {}",
                        slot.id, lsa.stamp, lsa.origin, own.stamp
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn boot_vectors(n: usize, max: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=max).map(move |t| {
                    let mut w = v.clone();
                    w.push(t);
                    w
                })
            })
            .collect();
    }
    out
}

impl Explorer {
    pub fn new(config: ExploreConfig) -> Result<Self, ExploreError> {
        if config.topology.n() > config.max_nodes {
            return Err(ExploreError::TooLarge(
                config.topology.n(),
                config.max_nodes,
            ));
        }
        let engine = config.engine();
        Ok(Explorer {
            config,
            engine,
            index: HashMap::new(),
            records: Vec::new(),
            roots: HashMap::new(),
            edges: Vec::new(),
            full: HashMap::new(),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn initial_state(&self, boot: &[u64]) -> SimState {
        let mut st = self.engine.initial_state();
        for (slot, b) in st.nodes.iter_mut().zip(boot) {
            slot.boot_at = crate::types::TimeStamp(*b);
        }
        st
    }

    fn intern(&mut self, st: &SimState) -> (u32, bool) {
        let canon = CanonState::of(st);
        let fp = canon.fingerprint();
        if let Some(&id) = self.index.get(&fp) {
            if self.config.check_collisions {
                assert_eq!(self.full[&fp], canon, "fingerprint collision");
            }
            return (id, false);
        }
        let id = self.records.len() as u32;
        self.index.insert(fp, id);
        if self.config.check_collisions {
            self.full.insert(fp, canon);
        }
        (id, true)
    }

    pub fn contains(&self, st: &SimState) -> bool {
        self.index.contains_key(&CanonState::of(st).fingerprint())
    }

    fn path_to(&self, mut id: u32, last: Option<Vec<u16>>) -> Counterexample {
        let mut choices: Vec<Vec<u16>> = last.into_iter().collect();
        loop {
            let r = &self.records[id as usize];
            if r.parent == ROOT {
                break;
            }
            choices.push(r.choices.to_vec());
            id = r.parent;
        }
        choices.reverse();
        Counterexample {
            boot: self.roots[&id].clone(),
            choices,
        }
    }

    pub fn run(&mut self) -> ExploreReport {
        let started = Instant::now();
        let n = self.config.topology.n() as usize;
        let age_bound = self.config.age_bound;
        let mut queue: VecDeque<(u32, SimState)> = VecDeque::new();
        let mut max_queue = 0;
        let mut max_depth = 0;
        let mut transitions = 0;

        let report = |me: &Self, outcome: Outcome, max_queue, max_depth, transitions, longest| {
            ExploreReport {
                outcome,
                states: me.records.len(),
                initial_states: me.roots.len(),
                converged_states: me.records.iter().filter(|r| r.converged).count(),
                transitions,
                max_queue,
                max_depth,
                longest_path: longest,
                elapsed_ms: started.elapsed().as_millis(),
            }
        };

        for boot in boot_vectors(n, self.config.start_interval) {
            let st = self.initial_state(&boot);
            let (id, new) = self.intern(&st);
            if new {
                self.records.push(Record {
                    parent: ROOT,
                    choices: Box::new([]),
                    depth: 0,
                    converged: false,
                });
                self.roots.insert(id, boot);
                queue.push_back((id, st));
            }
        }

        while let Some((id, st)) = queue.pop_front() {
            let depth = self.records[id as usize].depth;
            if depth >= self.config.depth_bound {
                let frontier = queue.len() + 1;
                return report(
                    self,
                    Outcome::Inconclusive {
                        reason: format!(
                            "unconverged state at depth bound {}",
                            self.config.depth_bound
                        ),
                        frontier,
                    },
                    max_queue,
                    max_depth,
                    transitions,
                    None,
                );
            }
            if self.records.len() >= self.config.max_states
                || self
                    .config
                    .time_limit
                    .is_some_and(|l| started.elapsed() > l)
            {
                let frontier = queue.len() + 1;
                return report(
                    self,
                    Outcome::Inconclusive {
                        reason: format!(
                            "state budget exhausted after {} states",
                            self.records.len()
                        ),
                        frontier,
                    },
                    max_queue,
                    max_depth,
                    transitions,
                    None,
                );
            }

            let mut script: Vec<u16> = Vec::new();
            loop {
                let mut next = st.clone();
                let mut sched = ScriptedScheduler::new(script.clone());
                let res = self.engine.step(&mut next, &mut sched, None);
                let used = sched.used();
                transitions += 1;
                max_queue = max_queue.max(next.peak_queue);
                if let Err(o) = res {
                    let ce = self.path_to(id, Some(used));
                    return report(
                        self,
                        Outcome::Violation {
                            property: Property::QueueBound,
                            counterexample: ce,
                            detail: o.to_string(),
                        },
                        max_queue.max(o.len),
                        max_depth,
                        transitions,
                        None,
                    );
                }
                if let Err((property, detail)) =
                    check_state(&next, age_bound, &self.config.properties)
                {
                    let ce = self.path_to(id, Some(used));
                    return report(
                        self,
                        Outcome::Violation {
                            property,
                            counterexample: ce,
                            detail,
                        },
                        max_queue,
                        max_depth,
                        transitions,
                        None,
                    );
                }
                let (sid, new) = self.intern(&next);
                self.edges.push((id, sid));
                if new {
                    let converged = self.engine.converged(&next);
                    self.records.push(Record {
                        parent: id,
                        choices: used.clone().into_boxed_slice(),
                        depth: depth + 1,
                        converged,
                    });
                    max_depth = max_depth.max(depth + 1);
                    if !converged {
                        queue.push_back((sid, next));
                    }
                }
                if !next_script(&mut script, &sched.domains) {
                    break;
                }
            }
        }

        match self.find_cycle() {
            Some(on_cycle) => {
                let ce = self.path_to(on_cycle, None);
                report(
                    self,
                    Outcome::Violation {
                        property: Property::Livelock,
                        counterexample: ce,
                        detail: "a cycle of unconverged states is reachable".into(),
                    },
                    max_queue,
                    max_depth,
                    transitions,
                    None,
                )
            }
            None => {
                let longest = self.longest_path();
                report(
                    self,
                    Outcome::Pass,
                    max_queue,
                    max_depth,
                    transitions,
                    Some(longest),
                )
            }
        }
    }

    fn adjacency(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.records.len();
        let mut start = vec![0usize; n + 1];
        for &(a, _) in &self.edges {
            start[a as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut targets = vec![0u32; self.edges.len()];
        for &(a, b) in &self.edges {
            targets[fill[a as usize]] = b;
            fill[a as usize] += 1;
        }
        (start, targets)
    }

    /// Some state on a cycle of unconverged states, if there is one.
    fn find_cycle(&self) -> Option<u32> {
        let (start, targets) = self.adjacency();
        let n = self.records.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; n];
        for root in 0..n {
            if color[root] != 0 || self.records[root].converged {
                continue;
            }
            let mut stack = vec![(root, start[root])];
            color[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < start[v + 1] {
                    let w = targets[*next] as usize;
                    *next += 1;
                    if self.records[w].converged {
                        continue;
                    }
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            stack.push((w, start[w]));
                        }
                        1 => return Some(w as u32),
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Longest path, in ticks, through the acyclic unconverged subgraph.
    fn longest_path(&self) -> u64 {
        let (start, targets) = self.adjacency();
        let n = self.records.len();
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        for root in 0..n {
            if done[root] {
                continue;
            }
            let mut stack = vec![(root, start[root])];
            done[root] = true;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if !self.records[v].converged && *next < start[v + 1] {
                    let w = targets[*next] as usize;
                    *next += 1;
                    if !done[w] {
                        done[w] = true;
                        stack.push((w, start[w]));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut len = vec![0u64; n];
        for &v in &order {
            if self.records[v].converged {
                continue;
            }
            len[v] = (start[v]..start[v + 1])
                .map(|e| len[targets[e] as usize] + 1)
                .max()
                .unwrap_or(0);
        }
        self.roots
            .keys()
            .map(|&r| len[r as usize])
            .max()
            .unwrap_or(0)
    }

    /// Runs the engine's own schedule from `boot` and reports whether every
    /// state it passes through was explored.
    pub fn includes_schedule(&self, boot: &[u64]) -> bool {
        let mut st = self.initial_state(boot);
        let mut sched = crate::engine::DefaultScheduler;
        for _ in 0..self.config.depth_bound {
            if !self.contains(&st) {
                return false;
            }
            if self.engine.converged(&st) {
                return true;
            }
            if self.engine.step(&mut st, &mut sched, None).is_err() {
                return false;
            }
        }
        self.contains(&st)
    }
}

/// Replays a counterexample in the engine, returning the final state, the
/// trace, and the overflow if the last step hit one.
pub fn replay(
    explorer: &Explorer,
    ce: &Counterexample,
) -> (SimState, Vec<TraceEvent>, Option<Overflow>) {
    let engine = explorer.engine();
    let mut st = explorer.initial_state(&ce.boot);
    let mut trace = Vec::new();
    for choices in &ce.choices {
        let mut sched = ScriptedScheduler::new(choices.clone());
        if let Err(o) = engine.step(&mut st, &mut sched, Some(&mut trace)) {
            return (st, trace, Some(o));
        }
    }
    (st, trace, None)
}
