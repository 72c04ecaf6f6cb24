//! Discrete-time network engine.
//!
//! All nodes step together. Each tick:
//!
//! 1. transmissions due this tick are appended to their recipients' input
//!    queues (or dropped by the loss model);
//! 2. every booted node, in ascending id order, runs its due timers and
//!    handles at most one queued message;
//! 3. the resulting send instructions join the node's output queue;
//! 4. an idle sender takes the head of its output queue and starts a
//!    transmission lasting `time_sending` (+ spread) ticks;
//! 5. the clock advances.
//!
//! Choices the model leaves open (arrival order of simultaneous messages,
//! timers versus message first, transmission spread) are delegated to a
//! [`Scheduler`], which is what the explorer enumerates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{AdjPolicy, ConfigError, EngineConfig, Model, Timing, Topology};
use crate::detailed::DetailedNodeState;
use crate::simple::{Emissions, SimpleNodeState};
use crate::trace::{EventKind, MessageCounts, TraceEvent};
use crate::types::{
    Lsdb, Message, MessageKind, NeighborState, NodeId, SendInstruction, SendMethod, TimeStamp,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeModel {
    Simple(SimpleNodeState),
    Detailed(DetailedNodeState),
}

impl NodeModel {
    pub fn new(model: Model, ip: NodeId) -> Self {
        match model {
            Model::Simple => NodeModel::Simple(SimpleNodeState::new(ip)),
            Model::Detailed => NodeModel::Detailed(DetailedNodeState::new(ip)),
        }
    }

    pub fn lsdb(&self) -> &Lsdb {
        match self {
            NodeModel::Simple(s) => &s.lsdb,
            NodeModel::Detailed(s) => &s.lsdb,
        }
    }

    pub fn timers_due(&self, now: TimeStamp, t: &Timing) -> bool {
        match self {
            NodeModel::Simple(s) => s.timers_due(now),
            NodeModel::Detailed(s) => s.timers_due(now, t),
        }
    }

    fn run_timers(&mut self, now: TimeStamp, t: &Timing) -> Emissions {
        let (next, out) = match self {
            NodeModel::Simple(s) => {
                let (n, o) = s.simple_timers(now, t);
                (NodeModel::Simple(n), o)
            }
            NodeModel::Detailed(s) => {
                let (n, o) = s.detailed_timers(now, t);
                (NodeModel::Detailed(n), o)
            }
        };
        *self = next;
        out
    }

    fn handle(&mut self, msg: &Message, now: TimeStamp, t: &Timing, adj: &AdjPolicy) -> Emissions {
        let (next, out) = match self {
            NodeModel::Simple(s) => {
                let (n, o) = s.handle(msg, now, t);
                (NodeModel::Simple(n), o)
            }
            NodeModel::Detailed(s) => {
                let (n, o) = s.handle(msg, now, t, adj);
                (NodeModel::Detailed(n), o)
            }
        };
        *self = next;
        out
    }

    fn transmitted(&mut self, msg: &Message, dests: &BTreeSet<NodeId>, now: TimeStamp, t: &Timing) {
        if let NodeModel::Detailed(s) = self {
            s.transmitted(msg, dests, now, t);
        }
    }

    /// Per-neighbour state label, used to report state changes.
    fn nbr_labels(&self) -> BTreeMap<NodeId, String> {
        match self {
            NodeModel::Simple(s) => s.nbrs.iter().map(|n| (n.nip, "known".to_owned())).collect(),
            NodeModel::Detailed(s) => s.nbrs.iter().map(|n| (n.nip, n.ns.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InFlight {
    pub sender: NodeId,
    pub payload: Message,
    pub recipients: BTreeSet<NodeId>,
    pub deliver_at: TimeStamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeSlot {
    pub id: NodeId,
    pub boot_at: TimeStamp,
    pub booted: bool,
    pub model: NodeModel,
    pub inbox: VecDeque<Message>,
    pub outbox: VecDeque<SendInstruction>,
    pub sending: Option<InFlight>,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub now: TimeStamp,
    pub nodes: Vec<NodeSlot>,
    pub rng: ChaCha8Rng,
    /// Largest queue length seen so far, measured right after deliveries
    /// and after each node's emissions.
    pub peak_queue: usize,
}

impl SimState {
    pub fn node(&self, id: NodeId) -> &NodeSlot {
        &self.nodes[id.0 as usize - 1]
    }

    pub fn max_queue_len(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.inbox.len().max(n.outbox.len()))
            .max()
            .unwrap_or(0)
    }
}

/// Resolves the choices the protocol models leave open.
pub trait Scheduler {
    /// Delivery order for messages reaching `recipient` in the same tick,
    /// as a permutation of indices into `senders` (ascending sender order).
    fn arrival_order(&mut self, recipient: NodeId, senders: &[NodeId]) -> Vec<usize> {
        let _ = recipient;
        (0..senders.len()).collect()
    }

    /// Asked only when `node` has both a due timer and a queued message.
    fn message_first(&mut self, node: NodeId) -> bool {
        let _ = node;
        false
    }

    /// Extra transmission delay in `0..=max`; asked only when `max > 0`.
    fn spread(&mut self, node: NodeId, max: u64) -> u64 {
        let _ = (node, max);
        0
    }
}

/// Ascending sender order, timers first, no spread.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultScheduler;

impl Scheduler for DefaultScheduler {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueKind {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[error("{queue:?} queue of node {node} holds {len} messages at tick {tick}, capacity {capacity}")]
pub struct Overflow {
    pub node: NodeId,
    pub tick: u64,
    pub queue: QueueKind,
    pub len: usize,
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Converged { tick: u64, counts: MessageCounts },
    TimedOut { counts: MessageCounts },
    QueueOverflow(Overflow),
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Converged { tick, counts } => write!(f, "CONVERGED tick={tick} {counts}"),
            Verdict::TimedOut { counts } => write!(f, "TIMEOUT {counts}"),
            Verdict::QueueOverflow(o) => write!(
                f,
                "OVERFLOW node={} tick={} queue={} len={} capacity={}",
                o.node,
                o.tick,
                match o.queue {
                    QueueKind::Input => "input",
                    QueueKind::Output => "output",
                },
                o.len,
                o.capacity
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: SimState,
    pub trace: Vec<TraceEvent>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub config: EngineConfig,
    pub topology: Topology,
}

fn msg_value(m: &Message) -> Value {
    serde_json::to_value(m).expect("messages serialize")
}

impl Engine {
    pub fn new(config: EngineConfig, topology: Topology) -> Result<Self, ConfigError> {
        config.validate(&topology)?;
        Ok(Engine { config, topology })
    }

    pub fn initial_state(&self) -> SimState {
        let nodes = self
            .topology
            .nodes()
            .map(|id| NodeSlot {
                id,
                boot_at: TimeStamp(self.config.boot_at(id)),
                booted: false,
                model: NodeModel::new(self.config.model, id),
                inbox: VecDeque::new(),
                outbox: VecDeque::new(),
                sending: None,
            })
            .collect();
        SimState {
            now: TimeStamp(0),
            nodes,
            rng: ChaCha8Rng::seed_from_u64(self.config.seed),
            peak_queue: 0,
        }
    }

    fn check_capacity(
        &self,
        slot: &NodeSlot,
        queue: QueueKind,
        now: TimeStamp,
        peak: &mut usize,
    ) -> Result<(), Overflow> {
        let len = match queue {
            QueueKind::Input => slot.inbox.len(),
            QueueKind::Output => slot.outbox.len(),
        };
        *peak = (*peak).max(len);
        let Some(capacity) = self.config.queue_capacity else {
            return Ok(());
        };
        if len > capacity {
            return Err(Overflow {
                node: slot.id,
                tick: now.0,
                queue,
                len,
                capacity,
            });
        }
        Ok(())
    }

    /// Advances the state by one tick and returns the send events started
    /// in it. Trace events are appended to `trace` when given, ordered by
    /// node and then event kind.
    pub fn step(
        &self,
        st: &mut SimState,
        sched: &mut dyn Scheduler,
        trace: Option<&mut Vec<TraceEvent>>,
    ) -> Result<Vec<(NodeId, MessageKind)>, Overflow> {
        let now = st.now;
        let tracing = trace.is_some();
        let mut events = Vec::new();
        let mut ev = |node: NodeId, kind: EventKind, detail: Value| {
            if tracing {
                events.push(TraceEvent {
                    tick: now.0,
                    node: node.0,
                    kind,
                    detail,
                });
            }
        };
        let t = self.config.timing;

        let mut arrivals: BTreeMap<usize, Vec<(NodeId, Message)>> = BTreeMap::new();
        for i in 0..st.nodes.len() {
            let due = st.nodes[i]
                .sending
                .as_ref()
                .is_some_and(|f| f.deliver_at <= now);
            if !due {
                continue;
            }
            let f = st.nodes[i].sending.take().unwrap();
            for r in &f.recipients {
                let kind = f.payload.kind().name();
                if self.config.loss_prob > 0.0 && st.rng.gen_bool(self.config.loss_prob) {
                    ev(*r, EventKind::Drop, json!({"from": f.sender, "type": kind}));
                } else {
                    arrivals
                        .entry(r.0 as usize - 1)
                        .or_default()
                        .push((f.sender, f.payload.clone()));
                }
            }
        }
        for (r, list) in arrivals {
            let order: Vec<usize> = if list.len() > 1 {
                let senders: Vec<NodeId> = list.iter().map(|(s, _)| *s).collect();
                sched.arrival_order(st.nodes[r].id, &senders)
            } else {
                vec![0]
            };
            debug_assert_eq!(
                order.iter().copied().collect::<BTreeSet<_>>().len(),
                list.len()
            );
            let slot = &mut st.nodes[r];
            for k in order {
                let (from, m) = &list[k];
                ev(
                    slot.id,
                    EventKind::Deliver,
                    json!({"from": from, "type": m.kind().name()}),
                );
                slot.inbox.push_back(m.clone());
            }
            self.check_capacity(slot, QueueKind::Input, now, &mut st.peak_queue)?;
        }

        for i in 0..st.nodes.len() {
            let slot = &mut st.nodes[i];
            if !slot.booted && now >= slot.boot_at {
                slot.booted = true;
                ev(slot.id, EventKind::Boot, Value::Null);
            }
            if !slot.booted {
                continue;
            }
            let timers = slot.model.timers_due(now, &t);
            let message_first = timers && !slot.inbox.is_empty() && sched.message_first(slot.id);
            let before = tracing.then(|| (slot.model.nbr_labels(), slot.model.lsdb().clone()));

            let mut out = Vec::new();
            let handle_one = |slot: &mut NodeSlot, out: &mut Emissions| {
                let k = self.config.inbox_batch.unwrap_or(usize::MAX);
                for _ in 0..k {
                    let Some(m) = slot.inbox.pop_front() else {
                        break;
                    };
                    out.extend(slot.model.handle(&m, now, &t, &self.config.adjacency));
                }
            };
            if message_first {
                handle_one(slot, &mut out);
                out.extend(slot.model.run_timers(now, &t));
            } else {
                if timers {
                    out.extend(slot.model.run_timers(now, &t));
                }
                handle_one(slot, &mut out);
            }

            if let Some((labels, lsdb)) = before {
                let after = slot.model.nbr_labels();
                let nips: BTreeSet<_> = labels.keys().chain(after.keys()).collect();
                for nip in nips {
                    let from = labels.get(nip).map_or("absent", String::as_str);
                    let to = after.get(nip).map_or("absent", String::as_str);
                    if from != to {
                        ev(
                            slot.id,
                            EventKind::StateChange,
                            json!({"nbr": nip, "from": from, "to": to}),
                        );
                    }
                }
                for lsa in slot.model.lsdb() {
                    if !lsdb.contains(lsa) {
                        ev(
                            slot.id,
                            EventKind::LsaInstall,
                            json!({"origin": lsa.origin, "stamp": lsa.stamp, "links": lsa.links}),
                        );
                    }
                }
            }
            if self.config.merge_pending {
                for si in out {
                    enqueue_merged(&mut slot.outbox, si);
                }
            } else {
                slot.outbox.extend(out);
            }
            self.check_capacity(slot, QueueKind::Output, now, &mut st.peak_queue)?;
        }

        let mut sends = Vec::new();
        for slot in st.nodes.iter_mut() {
            if slot.sending.is_some() {
                continue;
            }
            let Some(si) = slot.outbox.pop_front() else {
                continue;
            };
            let nbrs = self.topology.neighbors(slot.id);
            let recipients: BTreeSet<NodeId> = match &si.method {
                SendMethod::Broadcast => nbrs.clone(),
                SendMethod::Groupcast(d) => d.intersection(nbrs).copied().collect(),
            };
            let spread = if self.config.time_spread > 0 {
                sched
                    .spread(slot.id, self.config.time_spread)
                    .min(self.config.time_spread)
            } else {
                0
            };
            let kind = si.payload.kind();
            ev(
                slot.id,
                EventKind::Send,
                json!({"type": kind.name(), "to": recipients, "msg": msg_value(&si.payload)}),
            );
            sends.push((slot.id, kind));
            slot.model.transmitted(&si.payload, &recipients, now, &t);
            slot.sending = Some(InFlight {
                sender: slot.id,
                payload: si.payload,
                recipients,
                deliver_at: now + self.config.time_sending + spread,
            });
        }

        st.now = now + 1;
        if let Some(tr) = trace {
            events.sort_by_key(|e| (e.node, e.kind));
            tr.extend(events);
        }
        Ok(sends)
    }

    /// Stable routing knowledge with only periodic traffic left.
    ///
    /// Every node must be booted and hold, for every node of its component,
    /// that node's true link set (an absent entry counts as an empty set).
    /// Queues and transmissions may hold hellos only. In the detailed model
    /// every pair of neighbours meant to be adjacent must be Full on both
    /// sides with nothing left to request or retransmit.
    pub fn converged(&self, st: &SimState) -> bool {
        let empty = BTreeSet::new();
        for slot in &st.nodes {
            if !slot.booted {
                return false;
            }
            let hello_only = slot.inbox.iter().all(Message::is_hello)
                && slot.outbox.iter().all(|s| s.payload.is_hello())
                && slot.sending.as_ref().is_none_or(|f| f.payload.is_hello());
            if !hello_only {
                return false;
            }
            let lsdb = slot.model.lsdb();
            for j in self.topology.component(slot.id) {
                let view = lsdb.get(j).map_or(&empty, |l| &l.links);
                if view != self.topology.neighbors(j) {
                    return false;
                }
            }
        }
        if self.config.model == Model::Detailed {
            for (a, b) in self.topology.edges() {
                if !self.config.adjacency.adj(a, b) {
                    continue;
                }
                for (x, y) in [(a, b), (b, a)] {
                    let NodeModel::Detailed(s) = &st.node(x).model else {
                        unreachable!()
                    };
                    let ok = s.nbrs.get(y).is_some_and(|n| {
                        n.ns == NeighborState::Full
                            && n.req_list.is_empty()
                            && n.rxmt_list.is_empty()
                    });
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn run(&self) -> RunResult {
        self.run_with(&mut DefaultScheduler, true)
    }

    pub fn run_with(&self, sched: &mut dyn Scheduler, tracing: bool) -> RunResult {
        let mut st = self.initial_state();
        let mut trace = Vec::new();
        let mut counts = MessageCounts::default();
        let verdict = loop {
            if st.now.0 >= self.config.max_ticks {
                break Verdict::TimedOut { counts };
            }
            let tick = st.now.0;
            let tr = if tracing { Some(&mut trace) } else { None };
            match self.step(&mut st, sched, tr) {
                Err(o) => break Verdict::QueueOverflow(o),
                Ok(sends) => sends.into_iter().for_each(|(_, k)| counts.add(k)),
            }
            if self.converged(&st) {
                if tracing {
                    trace.push(TraceEvent {
                        tick,
                        node: 0,
                        kind: EventKind::Converged,
                        detail: serde_json::to_value(counts).unwrap(),
                    });
                }
                break Verdict::Converged { tick, counts };
            }
        };
        RunResult {
            state: st,
            trace,
            verdict,
        }
    }
}

/// Per-node link sets, keyed by origin: the routing picture with stamps
/// projected away.
pub fn link_projection(st: &SimState) -> BTreeMap<NodeId, BTreeMap<NodeId, BTreeSet<NodeId>>> {
    st.nodes
        .iter()
        .map(|s| {
            let view = s
                .model
                .lsdb()
                .iter()
                .map(|l| (l.origin, l.links.clone()))
                .collect();
            (s.id, view)
        })
        .collect()
}

/// Appends `si` unless an identical instruction is already queued. An ack
/// joins a queued ack from the same sender to the same neighbours instead.
fn enqueue_merged(outbox: &mut VecDeque<SendInstruction>, si: SendInstruction) {
    if outbox.contains(&si) {
        return;
    }
    if let Message::Ack { hdrs, sip } = &si.payload {
        for q in outbox.iter_mut() {
            if q.method != si.method {
                continue;
            }
            if let Message::Ack { hdrs: qh, sip: qs } = &mut q.payload {
                if qs == sip {
                    qh.extend(hdrs.iter().cloned());
                    return;
                }
            }
        }
    }
    outbox.push_back(si);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(model: Model, topo: Topology) -> Engine {
        Engine::new(EngineConfig::new(model), topo).unwrap()
    }

    #[test]
    fn hellos_arrive_after_time_sending() {
        let e = engine(Model::Simple, Topology::line(2));
        let mut st = e.initial_state();
        let mut tr = Vec::new();
        let sends = e
            .step(&mut st, &mut DefaultScheduler, Some(&mut tr))
            .unwrap();
        assert_eq!(
            sends,
            vec![
                (NodeId(1), MessageKind::Hello),
                (NodeId(2), MessageKind::Hello)
            ]
        );
        assert!(st.nodes.iter().all(|n| n.inbox.is_empty()));
        e.step(&mut st, &mut DefaultScheduler, Some(&mut tr))
            .unwrap();
        let delivers = tr.iter().filter(|e| e.kind == EventKind::Deliver).count();
        assert_eq!(delivers, 2);
    }

    #[test]
    fn total_loss_isolates_everyone() {
        let mut c = EngineConfig::new(Model::Detailed);
        c.loss_prob = 1.0;
        c.max_ticks = 60;
        let e = Engine::new(c, Topology::line(2)).unwrap();
        let r = e.run();
        assert!(matches!(r.verdict, Verdict::TimedOut { .. }));
        assert!(r.trace.iter().all(|e| e.kind != EventKind::Deliver));
        assert!(r.trace.iter().any(|e| e.kind == EventKind::Drop));
        assert!(r.state.nodes.iter().all(|n| match &n.model {
            NodeModel::Detailed(s) => s.nbrs.is_empty(),
            _ => false,
        }));
    }

    #[test]
    fn isolated_node_converges_alone() {
        let e = engine(Model::Simple, Topology::new(1));
        let r = e.run();
        assert!(matches!(r.verdict, Verdict::Converged { tick: 0, .. }));
        assert!(r.trace.iter().all(|e| e.kind != EventKind::Deliver));
    }

    #[test]
    fn two_node_simple_learns_both_lsas() {
        let r = engine(Model::Simple, Topology::line(2)).run();
        assert!(
            matches!(r.verdict, Verdict::Converged { .. }),
            "{}",
            r.verdict
        );
        for s in &r.state.nodes {
            let db = s.model.lsdb();
            assert_eq!(
                db.get(NodeId(1)).unwrap().links,
                BTreeSet::from([NodeId(2)])
            );
            assert_eq!(
                db.get(NodeId(2)).unwrap().links,
                BTreeSet::from([NodeId(1)])
            );
        }
    }

    #[test]
    fn line3_middle_lists_both_ends() {
        let r = engine(Model::Simple, Topology::line(3)).run();
        assert!(
            matches!(r.verdict, Verdict::Converged { .. }),
            "{}",
            r.verdict
        );
        let db = r.state.node(NodeId(1)).model.lsdb();
        assert_eq!(
            db.get(NodeId(2)).unwrap().links,
            BTreeSet::from([NodeId(1), NodeId(3)])
        );
    }

    #[test]
    fn queue_bound_overflow_is_reported() {
        let mut c = EngineConfig::new(Model::Simple);
        c.queue_capacity = Some(1);
        let e = Engine::new(c, Topology::star(4)).unwrap();
        let r = e.run();
        let Verdict::QueueOverflow(o) = r.verdict else {
            panic!("{}", r.verdict)
        };
        assert_eq!(o.node, NodeId(1));
    }
}
