//! Domain values shared by both protocol models.
//!
//! Everything here is a plain immutable value. Sets are `BTreeSet`s so that
//! iteration order, equality and hashing are structural and deterministic,
//! which the engine relies on for reproducible traces and the explorer for
//! state canonicalization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a router. `0` is reserved as "no node".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl NodeId {
    pub const NONE: NodeId = NodeId(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point on a node's local clock, in ticks.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TimeStamp(pub u64);

impl Add<u64> for TimeStamp {
    type Output = TimeStamp;

    fn add(self, ticks: u64) -> TimeStamp {
        TimeStamp(self.0 + ticks)
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Database description sequence number.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DdSqn(pub u32);

impl DdSqn {
    pub fn next(self) -> DdSqn {
        DdSqn(self.0 + 1)
    }
}

/// Identity and freshness key of an LSA.
///
/// The derived `Ord` is the lexicographic order on `(origin, stamp)`. It is a
/// total order used only for deterministic selection; protocol freshness uses
/// [`LsaHeader::leq`], which never relates headers of different origins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LsaHeader {
    pub origin: NodeId,
    pub stamp: TimeStamp,
}

impl LsaHeader {
    pub fn new(origin: NodeId, stamp: TimeStamp) -> Self {
        LsaHeader { origin, stamp }
    }

    /// `self <= other` in the freshness order: same origin, no later stamp.
    pub fn leq(&self, other: &LsaHeader) -> bool {
        self.origin == other.origin && self.stamp <= other.stamp
    }

    /// Strict freshness order.
    pub fn lt(&self, other: &LsaHeader) -> bool {
        self.leq(other) && self != other
    }
}

pub fn header_leq(h1: &LsaHeader, h2: &LsaHeader) -> bool {
    h1.leq(h2)
}

pub fn header_lt(h1: &LsaHeader, h2: &LsaHeader) -> bool {
    h1.lt(h2)
}

/// A router LSA: originator, generation stamp and the originator's links.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lsa {
    pub origin: NodeId,
    pub stamp: TimeStamp,
    pub links: BTreeSet<NodeId>,
}

impl Lsa {
    /// Builds an LSA, dropping `origin` from its own link set.
    pub fn new(origin: NodeId, stamp: TimeStamp, links: impl IntoIterator<Item = NodeId>) -> Self {
        let links = links.into_iter().filter(|l| *l != origin).collect();
        Lsa {
            origin,
            stamp,
            links,
        }
    }

    pub fn header(&self) -> LsaHeader {
        LsaHeader::new(self.origin, self.stamp)
    }
}

pub fn hdr(lsa: &Lsa) -> LsaHeader {
    lsa.header()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LsdbError {
    #[error("two LSAs with origin {0} in one database")]
    DuplicateOrigin(NodeId),
}

/// A link state database: at most one LSA per origin.
///
/// Keyed by origin, so the uniqueness invariant holds by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Lsa>", try_from = "Vec<Lsa>")]
pub struct Lsdb {
    entries: BTreeMap<NodeId, Lsa>,
}

impl Lsdb {
    pub fn new() -> Self {
        Lsdb::default()
    }

    /// Rejects inputs with two LSAs of the same origin.
    pub fn try_from_lsas(lsas: impl IntoIterator<Item = Lsa>) -> Result<Self, LsdbError> {
        let mut entries = BTreeMap::new();
        for lsa in lsas {
            let origin = lsa.origin;
            if entries.insert(origin, lsa).is_some() {
                return Err(LsdbError::DuplicateOrigin(origin));
            }
        }
        Ok(Lsdb { entries })
    }

    /// Normalizing constructor: keeps the freshest LSA per origin. Ties on
    /// the stamp keep the first one seen.
    pub fn from_lsas_keep_max(lsas: impl IntoIterator<Item = Lsa>) -> Self {
        let mut entries: BTreeMap<NodeId, Lsa> = BTreeMap::new();
        for lsa in lsas {
            match entries.get(&lsa.origin) {
                Some(cur) if cur.stamp >= lsa.stamp => {}
                _ => {
                    entries.insert(lsa.origin, lsa);
                }
            }
        }
        Lsdb { entries }
    }

    pub fn singleton(lsa: Lsa) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(lsa.origin, lsa);
        Lsdb { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Lsa> {
        self.entries.values()
    }

    pub fn get(&self, origin: NodeId) -> Option<&Lsa> {
        self.entries.get(&origin)
    }

    pub fn headers(&self) -> BTreeSet<LsaHeader> {
        self.iter().map(Lsa::header).collect()
    }

    pub fn contains(&self, lsa: &Lsa) -> bool {
        self.entries.get(&lsa.origin) == Some(lsa)
    }

    /// Replaces whatever is stored for the LSA's origin.
    pub(crate) fn put(&mut self, lsa: Lsa) {
        self.entries.insert(lsa.origin, lsa);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Lsa) -> bool) {
        self.entries.retain(|_, lsa| keep(lsa));
    }

    /// Checks uniqueness of origins and that no LSA lists its own origin.
    pub fn check_invariant(&self) -> bool {
        self.entries
            .iter()
            .all(|(k, lsa)| *k == lsa.origin && !lsa.links.contains(&lsa.origin))
    }
}

impl From<Lsdb> for Vec<Lsa> {
    fn from(db: Lsdb) -> Self {
        db.entries.into_values().collect()
    }
}

impl TryFrom<Vec<Lsa>> for Lsdb {
    type Error = LsdbError;

    fn try_from(v: Vec<Lsa>) -> Result<Self, Self::Error> {
        Lsdb::try_from_lsas(v)
    }
}

impl<'a> IntoIterator for &'a Lsdb {
    type Item = &'a Lsa;
    type IntoIter = std::collections::btree_map::Values<'a, NodeId, Lsa>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.values()
    }
}

/// Adjacency state of a neighbour, ordered by progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NeighborState {
    Init,
    TwoWay,
    ExStart,
    Exchange,
    Loading,
    Full,
}

impl NeighborState {
    pub const ALL: [NeighborState; 6] = [
        NeighborState::Init,
        NeighborState::TwoWay,
        NeighborState::ExStart,
        NeighborState::Exchange,
        NeighborState::Loading,
        NeighborState::Full,
    ];
}

impl fmt::Display for NeighborState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NeighborState::Init => "Init",
            NeighborState::TwoWay => "2-Way",
            NeighborState::ExStart => "ExStart",
            NeighborState::Exchange => "Exchange",
            NeighborState::Loading => "Loading",
            NeighborState::Full => "Full",
        };
        f.write_str(s)
    }
}

/// Neighbour entry of the simplified model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimpleNeighbor {
    pub nip: NodeId,
    pub inact_deadline: TimeStamp,
}

/// Neighbour entry of the detailed model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetailedNeighbor {
    pub nip: NodeId,
    pub ns: NeighborState,
    pub inact_deadline: TimeStamp,
    pub ddsqn: DdSqn,
    pub dd_deadline: TimeStamp,
    pub req_list: BTreeSet<LsaHeader>,
    pub req_deadline: TimeStamp,
    pub rxmt_list: Lsdb,
    pub rxmt_deadline: TimeStamp,
}

impl DetailedNeighbor {
    /// A freshly discovered neighbour: `Init` with every other field zeroed.
    pub fn fresh(nip: NodeId) -> Self {
        DetailedNeighbor {
            nip,
            ns: NeighborState::Init,
            inact_deadline: TimeStamp(0),
            ddsqn: DdSqn(0),
            dd_deadline: TimeStamp(0),
            req_list: BTreeSet::new(),
            req_deadline: TimeStamp(0),
            rxmt_list: Lsdb::new(),
            rxmt_deadline: TimeStamp(0),
        }
    }
}

/// OSPF control messages of both models.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        ips: BTreeSet<NodeId>,
        sip: NodeId,
    },
    DbdSimple {
        hdrs: BTreeSet<LsaHeader>,
        sip: NodeId,
    },
    DbdDetailed {
        hdrs: BTreeSet<LsaHeader>,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
    },
    ReqSimple {
        hdrs: BTreeSet<LsaHeader>,
        sip: NodeId,
    },
    ReqDetailed {
        hdr: LsaHeader,
        sip: NodeId,
    },
    Upd {
        lsas: Lsdb,
        sip: NodeId,
    },
    Ack {
        hdrs: BTreeSet<LsaHeader>,
        sip: NodeId,
    },
}

impl Message {
    pub fn sender(&self) -> NodeId {
        match self {
            Message::Hello { sip, .. }
            | Message::DbdSimple { sip, .. }
            | Message::DbdDetailed { sip, .. }
            | Message::ReqSimple { sip, .. }
            | Message::ReqDetailed { sip, .. }
            | Message::Upd { sip, .. }
            | Message::Ack { sip, .. } => *sip,
        }
    }

    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Hello { .. } => MessageKind::Hello,
            Message::DbdSimple { .. } | Message::DbdDetailed { .. } => MessageKind::Dbd,
            Message::ReqSimple { .. } | Message::ReqDetailed { .. } => MessageKind::Req,
            Message::Upd { .. } => MessageKind::Upd,
            Message::Ack { .. } => MessageKind::Ack,
        }
    }

    pub fn is_hello(&self) -> bool {
        matches!(self, Message::Hello { .. })
    }
}

/// Coarse message type, used for counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Hello,
    Dbd,
    Req,
    Upd,
    Ack,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::Hello,
        MessageKind::Dbd,
        MessageKind::Req,
        MessageKind::Upd,
        MessageKind::Ack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Hello => "hello",
            MessageKind::Dbd => "dbd",
            MessageKind::Req => "req",
            MessageKind::Upd => "upd",
            MessageKind::Ack => "ack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SendMethod {
    Broadcast,
    Groupcast(BTreeSet<NodeId>),
}

/// A message handed from the protocol process to the node's sender.
///
/// Hellos are always broadcast, everything else is groupcast; the
/// constructors enforce this.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SendInstruction {
    pub payload: Message,
    pub method: SendMethod,
}

impl SendInstruction {
    pub fn broadcast(payload: Message) -> Self {
        assert!(payload.is_hello(), "only hello messages are broadcast");
        SendInstruction {
            payload,
            method: SendMethod::Broadcast,
        }
    }

    pub fn groupcast(payload: Message, dests: impl IntoIterator<Item = NodeId>) -> Self {
        assert!(!payload.is_hello(), "hello messages are never groupcast");
        SendInstruction {
            payload,
            method: SendMethod::Groupcast(dests.into_iter().collect()),
        }
    }

    pub fn unicast(payload: Message, dest: NodeId) -> Self {
        SendInstruction::groupcast(payload, [dest])
    }
}
