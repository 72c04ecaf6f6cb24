//! Neighbour tables of both models.
//!
//! Tables are keyed by neighbour id, so an id can appear at most once. The
//! operations that the protocol treats as partial return `None` when the
//! neighbour is unknown; setters on an unknown neighbour leave the table as it
//! was.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lsdb::{install_in_place, lsa_exist};
use crate::types::{
    DdSqn, DetailedNeighbor, LsaHeader, Lsdb, Message, NeighborState, NodeId, SimpleNeighbor,
    TimeStamp,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimpleNbrTable {
    entries: BTreeMap<NodeId, SimpleNeighbor>,
}

impl SimpleNbrTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nbr_exist(&self, nip: NodeId) -> bool {
        self.entries.contains_key(&nip)
    }

    pub fn get(&self, nip: NodeId) -> Option<&SimpleNeighbor> {
        self.entries.get(&nip)
    }

    /// Adds `nip` with a zero deadline.
    ///
    /// # Panics
    /// If `nip` is already present.
    pub fn new_nbr(&mut self, nip: NodeId) {
        assert!(!self.nbr_exist(nip), "neighbour {nip} already in table");
        self.entries.insert(
            nip,
            SimpleNeighbor {
                nip,
                inact_deadline: TimeStamp(0),
            },
        );
    }

    /// Sets the inactivity deadline, inserting the entry if it is missing.
    pub fn set_inact_t(&mut self, nip: NodeId, t: TimeStamp) {
        self.entries.insert(
            nip,
            SimpleNeighbor {
                nip,
                inact_deadline: t,
            },
        );
    }

    pub fn dead_nbrs(&self, t: TimeStamp) -> BTreeSet<NodeId> {
        self.iter()
            .filter(|n| n.inact_deadline < t)
            .map(|n| n.nip)
            .collect()
    }

    pub fn remove(&mut self, nips: &BTreeSet<NodeId>) {
        self.entries.retain(|k, _| !nips.contains(k));
    }

    pub fn nips(&self) -> BTreeSet<NodeId> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SimpleNeighbor> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Which per-neighbour timer [`DetailedNbrTable::select_fired`] looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    Dd,
    Req,
    Rxmt,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetailedNbrTable {
    entries: BTreeMap<NodeId, DetailedNeighbor>,
}

impl DetailedNbrTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nbr_exist(&self, nip: NodeId) -> bool {
        self.entries.contains_key(&nip)
    }

    pub fn get(&self, nip: NodeId) -> Option<&DetailedNeighbor> {
        self.entries.get(&nip)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DetailedNeighbor> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nips(&self) -> BTreeSet<NodeId> {
        self.entries.keys().copied().collect()
    }

    /// # Panics
    /// If `nip` is already present.
    pub fn new_nbr(&mut self, nip: NodeId) {
        assert!(!self.nbr_exist(nip), "neighbour {nip} already in table");
        self.entries.insert(nip, DetailedNeighbor::fresh(nip));
    }

    fn update(&mut self, nip: NodeId, f: impl FnOnce(&mut DetailedNeighbor)) {
        if let Some(n) = self.entries.get_mut(&nip) {
            f(n);
        }
    }

    pub fn ns(&self, nip: NodeId) -> Option<NeighborState> {
        self.get(nip).map(|n| n.ns)
    }

    pub fn ddsqn(&self, nip: NodeId) -> Option<DdSqn> {
        self.get(nip).map(|n| n.ddsqn)
    }

    pub fn req_list(&self, nip: NodeId) -> Option<&BTreeSet<LsaHeader>> {
        self.get(nip).map(|n| &n.req_list)
    }

    pub fn rxmt_list(&self, nip: NodeId) -> Option<&Lsdb> {
        self.get(nip).map(|n| &n.rxmt_list)
    }

    pub fn set_ns(&mut self, nip: NodeId, ns: NeighborState) {
        self.update(nip, |n| n.ns = ns);
    }

    pub fn set_inact_t(&mut self, nip: NodeId, t: TimeStamp) {
        self.update(nip, |n| n.inact_deadline = t);
    }

    pub fn set_ddsqn(&mut self, nip: NodeId, sqn: DdSqn) {
        self.update(nip, |n| n.ddsqn = sqn);
    }

    pub fn set_dd_t(&mut self, nip: NodeId, t: TimeStamp) {
        self.update(nip, |n| n.dd_deadline = t);
    }

    pub fn set_req_t(&mut self, nip: NodeId, t: TimeStamp) {
        self.update(nip, |n| n.req_deadline = t);
    }

    pub fn set_rxmts(&mut self, nip: NodeId, lsas: Lsdb) {
        self.update(nip, |n| n.rxmt_list = lsas);
    }

    pub fn set_rxmt_t(&mut self, nip: NodeId, t: TimeStamp) {
        self.update(nip, |n| n.rxmt_deadline = t);
    }

    pub fn inc_ddsqn(&mut self, nip: NodeId) {
        self.update(nip, |n| n.ddsqn = n.ddsqn.next());
    }

    /// Moves `nip` to `ns` and empties both of its lists.
    pub fn init_nbr(&mut self, nip: NodeId, ns: NeighborState) {
        self.update(nip, |n| {
            n.ns = ns;
            n.req_list.clear();
            n.rxmt_list = Lsdb::new();
        });
    }

    /// Drops requested headers that `lsdb` already satisfies.
    pub fn clean_reqs(&mut self, nip: NodeId, lsdb: &Lsdb) -> Option<()> {
        let n = self.entries.get_mut(&nip)?;
        n.req_list.retain(|h| !lsa_exist(lsdb, h));
        Some(())
    }

    pub fn add_reqs(&mut self, nip: NodeId, lsdb: &Lsdb, hdrs: &BTreeSet<LsaHeader>) -> Option<()> {
        let n = self.entries.get_mut(&nip)?;
        n.req_list.extend(hdrs.iter().copied());
        n.req_list.retain(|h| !lsa_exist(lsdb, h));
        Some(())
    }

    /// Removes retransmission entries acknowledged by some header in `hdrs`.
    pub fn clean_rxmts(&mut self, nip: NodeId, hdrs: &BTreeSet<LsaHeader>) -> Option<()> {
        let n = self.entries.get_mut(&nip)?;
        n.rxmt_list
            .retain(|lsa| !hdrs.iter().any(|h| lsa.header().leq(h)));
        Some(())
    }

    /// Queues `lsas` for retransmission to every neighbour at Exchange or later.
    pub fn upd_rxmts(&mut self, lsas: &Lsdb) {
        for n in self.entries.values_mut() {
            if n.ns >= NeighborState::Exchange {
                install_in_place(&mut n.rxmt_list, lsas);
            }
        }
    }

    /// Like [`upd_rxmts`](Self::upd_rxmts), and restarts the retransmission
    /// timer of every list that gained an entry, so nothing is resent before
    /// `deadline`.
    pub fn upd_rxmts_armed(&mut self, lsas: &Lsdb, deadline: TimeStamp) {
        for n in self.entries.values_mut() {
            if n.ns >= NeighborState::Exchange {
                let before = n.rxmt_list.clone();
                install_in_place(&mut n.rxmt_list, lsas);
                if n.rxmt_list != before {
                    n.rxmt_deadline = deadline;
                }
            }
        }
    }

    pub fn dead_nbrs(&self, t: TimeStamp) -> BTreeSet<NodeId> {
        self.iter()
            .filter(|n| n.inact_deadline < t)
            .map(|n| n.nip)
            .collect()
    }

    pub fn remove(&mut self, nips: &BTreeSet<NodeId>) {
        self.entries.retain(|k, _| !nips.contains(k));
    }

    /// The smallest neighbour whose `kind` timer has fired, if any.
    pub fn select_fired(&self, now: TimeStamp, ip: NodeId, kind: TimerKind) -> Option<NodeId> {
        self.iter()
            .find(|n| match kind {
                TimerKind::Dd => {
                    n.dd_deadline < now
                        && (n.ns == NeighborState::ExStart
                            || (n.ns == NeighborState::Exchange && n.nip <= ip))
                }
                TimerKind::Req => n.req_deadline < now && !n.req_list.is_empty(),
                TimerKind::Rxmt => n.rxmt_deadline < now && !n.rxmt_list.is_empty(),
            })
            .map(|n| n.nip)
    }

    pub fn flood_nips(&self) -> BTreeSet<NodeId> {
        self.iter()
            .filter(|n| n.ns >= NeighborState::Exchange)
            .map(|n| n.nip)
            .collect()
    }

    /// Database description for `nip`: the initial (`ibit`) form at ExStart,
    /// the exchange form afterwards. Both carry every header of `lsdb`.
    pub fn gen_dbd(&self, lsdb: &Lsdb, nip: NodeId, ip: NodeId) -> Option<Message> {
        let n = self.get(nip)?;
        if n.ns < NeighborState::ExStart {
            return None;
        }
        Some(Message::DbdDetailed {
            hdrs: lsdb.headers(),
            sqn: n.ddsqn,
            ibit: n.ns == NeighborState::ExStart,
            sip: ip,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Lsa;

    const IP: NodeId = NodeId(5);
    const A: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);
    const C: NodeId = NodeId(3);

    fn h(o: NodeId, t: u64) -> LsaHeader {
        LsaHeader::new(o, TimeStamp(t))
    }

    fn db(v: &[(NodeId, u64)]) -> Lsdb {
        Lsdb::try_from_lsas(v.iter().map(|&(o, t)| Lsa::new(o, TimeStamp(t), []))).unwrap()
    }

    #[test]
    fn simple_table_examples() {
        let mut t = SimpleNbrTable::new();
        assert!(!t.nbr_exist(B));
        t.new_nbr(B);
        assert_eq!(t.get(B).unwrap().inact_deadline, TimeStamp(0));
        t.set_inact_t(B, TimeStamp(50));
        assert!(t.nbr_exist(B));
        assert!(!t.nbr_exist(C));
        t.set_inact_t(C, TimeStamp(60));
        assert_eq!(t.len(), 2);
        assert_eq!(t.dead_nbrs(TimeStamp(50)), BTreeSet::new());
        assert_eq!(t.dead_nbrs(TimeStamp(51)), BTreeSet::from([B]));
    }

    #[test]
    #[should_panic(expected = "already in table")]
    fn new_nbr_rejects_existing() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        t.new_nbr(B);
    }

    #[test]
    fn detailed_setters_ignore_unknown() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        let before = t.clone();
        t.set_ns(C, NeighborState::Full);
        t.inc_ddsqn(C);
        t.init_nbr(C, NeighborState::ExStart);
        assert_eq!(t, before);
        assert_eq!(t.clean_reqs(C, &Lsdb::new()), None);
        assert_eq!(t.ddsqn(B), Some(DdSqn(0)));
        assert_eq!(t.req_list(C), None);
    }

    #[test]
    fn init_nbr_clears_lists() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        t.set_ns(B, NeighborState::Full);
        t.set_ddsqn(B, DdSqn(4));
        t.set_inact_t(B, TimeStamp(9));
        t.upd_rxmts(&db(&[(A, 3)]));
        t.add_reqs(B, &Lsdb::new(), &BTreeSet::from([h(C, 1)]));
        t.init_nbr(B, NeighborState::Init);
        let n = t.get(B).unwrap();
        assert_eq!(n.ns, NeighborState::Init);
        assert!(n.req_list.is_empty() && n.rxmt_list.is_empty());
        assert_eq!(n.ddsqn, DdSqn(4));
        assert_eq!(n.inact_deadline, TimeStamp(9));
    }

    #[test]
    fn request_list_examples() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        let lsdb = db(&[(A, 5), (B, 3)]);
        t.add_reqs(B, &lsdb, &BTreeSet::from([h(A, 6), h(B, 2)]));
        assert_eq!(t.req_list(B), Some(&BTreeSet::from([h(A, 6)])));
        t.clean_reqs(B, &db(&[(A, 6)]));
        assert_eq!(t.req_list(B), Some(&BTreeSet::new()));
    }

    #[test]
    fn rxmt_examples() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        t.new_nbr(C);
        t.set_ns(B, NeighborState::Full);
        t.upd_rxmts(&db(&[(A, 9)]));
        assert_eq!(t.rxmt_list(B), Some(&db(&[(A, 9)])));
        assert_eq!(t.rxmt_list(C), Some(&Lsdb::new()));
        t.clean_rxmts(B, &BTreeSet::from([h(A, 8)]));
        assert_eq!(t.rxmt_list(B), Some(&db(&[(A, 9)])));
        t.clean_rxmts(B, &BTreeSet::from([h(A, 9)]));
        assert_eq!(t.rxmt_list(B), Some(&Lsdb::new()));

        t.upd_rxmts_armed(&db(&[(A, 10)]), TimeStamp(14));
        assert_eq!(t.get(B).unwrap().rxmt_deadline, TimeStamp(14));
        t.upd_rxmts_armed(&db(&[(A, 10)]), TimeStamp(17));
        assert_eq!(t.get(B).unwrap().rxmt_deadline, TimeStamp(14));
        t.upd_rxmts_armed(&db(&[(C, 1)]), TimeStamp(20));
        assert_eq!(t.get(B).unwrap().rxmt_deadline, TimeStamp(20));
    }

    #[test]
    fn select_fired_examples() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        t.set_ns(B, NeighborState::ExStart);
        t.set_dd_t(B, TimeStamp(4));
        assert_eq!(t.select_fired(TimeStamp(5), IP, TimerKind::Dd), Some(B));
        assert_eq!(t.select_fired(TimeStamp(4), IP, TimerKind::Dd), None);
        t.set_ns(B, NeighborState::Exchange);
        assert_eq!(t.select_fired(TimeStamp(5), IP, TimerKind::Dd), Some(B));
        assert_eq!(t.select_fired(TimeStamp(5), A, TimerKind::Dd), None);
        assert_eq!(t.select_fired(TimeStamp(5), IP, TimerKind::Req), None);
    }

    #[test]
    fn gen_dbd_branches() {
        let mut t = DetailedNbrTable::new();
        t.new_nbr(B);
        let lsdb = db(&[(IP, 1)]);
        assert_eq!(t.gen_dbd(&lsdb, B, IP), None);
        t.set_ns(B, NeighborState::ExStart);
        t.set_ddsqn(B, DdSqn(3));
        assert_eq!(
            t.gen_dbd(&lsdb, B, IP),
            Some(Message::DbdDetailed {
                hdrs: BTreeSet::from([h(IP, 1)]),
                sqn: DdSqn(3),
                ibit: true,
                sip: IP
            })
        );
        t.set_ns(B, NeighborState::Exchange);
        t.set_ddsqn(B, DdSqn(4));
        assert_eq!(
            t.gen_dbd(&lsdb, B, IP),
            Some(Message::DbdDetailed {
                hdrs: BTreeSet::from([h(IP, 1)]),
                sqn: DdSqn(4),
                ibit: false,
                sip: IP
            })
        );
        assert_eq!(t.flood_nips(), BTreeSet::from([B]));
    }
}
