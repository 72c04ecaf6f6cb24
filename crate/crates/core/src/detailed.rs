//! The detailed OSPF model: adjacency state machine, master/slave database
//! exchange with DD sequence numbers, requests, acknowledged flooding and
//! retransmission timers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::{AdjPolicy, Timing};
use crate::lsdb::{get_lsa, install_in_place, lsa_exist, new_lsa_detailed, Freshness};
use crate::neighbor::{DetailedNbrTable, TimerKind};
use crate::simple::Emissions;
use crate::types::{
    DdSqn, LsaHeader, Lsdb, Message, NeighborState, NodeId, SendInstruction, TimeStamp,
};

use NeighborState::*;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetailedNodeState {
    pub ip: NodeId,
    pub nbrs: DetailedNbrTable,
    pub lsdb: Lsdb,
    pub hellot: TimeStamp,
}

/// The mutually exclusive cases of DBD handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DbdBranch {
    UnknownSender,
    InitNonAdjacent,
    TwoWay,
    InitAdjacent,
    NegotiateSlave,
    NegotiateMaster,
    NegotiateOthers,
    ExchangeDuplicateSlave,
    ExchangeDuplicateMaster,
    ExchangeSlave,
    ExchangeMaster,
    ExchangeOthers,
    LoadDuplicateSlave,
    LoadDuplicateMaster,
    LoadOthers,
}

/// Every DBD guard evaluated independently, so that exclusivity can be
/// checked rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbdGuards {
    pub unknown: bool,
    pub init_nonadj: bool,
    pub two_way: bool,
    pub init_adj: bool,
    pub negotiate_slave: bool,
    pub negotiate_master: bool,
    pub negotiate_others: bool,
    pub exchange_duplicate_slave: bool,
    pub exchange_duplicate_master: bool,
    pub exchange_slave: bool,
    pub exchange_master: bool,
    pub exchange_others: bool,
    pub load_duplicate_slave: bool,
    pub load_duplicate_master: bool,
    pub load_others: bool,
}

impl DbdGuards {
    pub fn evaluate(
        nbrs: &DetailedNbrTable,
        ip: NodeId,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
        now: TimeStamp,
        adj: &AdjPolicy,
    ) -> Self {
        let Some(n) = nbrs.get(sip) else {
            return DbdGuards {
                unknown: true,
                ..DbdGuards::none()
            };
        };
        let ns = n.ns;
        let ddsqn = n.ddsqn;
        let adjacent = adj.adj(ip, sip);
        let is_slave = adjacent && ip < sip;
        let is_master = adjacent && ip > sip;

        let negotiate_slave = ns == ExStart && is_slave && ibit;
        let negotiate_master = ns == ExStart && is_master && sqn == ddsqn && !ibit;
        let negotiate_others = ns == ExStart && !negotiate_slave && !negotiate_master;

        let exchange_duplicate_slave = ns == Exchange && is_slave && sqn <= ddsqn;
        let exchange_duplicate_master = ns == Exchange && is_master && sqn < ddsqn;
        let exchange_slave = ns == Exchange && is_slave && sqn == ddsqn.next() && !ibit;
        let exchange_master = ns == Exchange && is_master && sqn == ddsqn && !ibit;
        let exchange_others = ns == Exchange
            && !exchange_slave
            && !exchange_master
            && !exchange_duplicate_master
            && !exchange_duplicate_slave;

        let load_duplicate_slave =
            ns >= Loading && is_slave && sqn <= ddsqn && !ibit && n.dd_deadline >= now;
        let load_duplicate_master = ns >= Loading && is_master && sqn < ddsqn && !ibit;
        let load_others = ns >= Loading && !load_duplicate_slave && !load_duplicate_master;

        DbdGuards {
            unknown: false,
            init_nonadj: ns == Init && !adjacent,
            two_way: ns == NeighborState::TwoWay,
            init_adj: ns == Init && adjacent,
            negotiate_slave,
            negotiate_master,
            negotiate_others,
            exchange_duplicate_slave,
            exchange_duplicate_master,
            exchange_slave,
            exchange_master,
            exchange_others,
            load_duplicate_slave,
            load_duplicate_master,
            load_others,
        }
    }

    fn none() -> Self {
        DbdGuards {
            unknown: false,
            init_nonadj: false,
            two_way: false,
            init_adj: false,
            negotiate_slave: false,
            negotiate_master: false,
            negotiate_others: false,
            exchange_duplicate_slave: false,
            exchange_duplicate_master: false,
            exchange_slave: false,
            exchange_master: false,
            exchange_others: false,
            load_duplicate_slave: false,
            load_duplicate_master: false,
            load_others: false,
        }
    }

    /// All branches whose guard holds.
    pub fn fired(&self) -> Vec<DbdBranch> {
        use DbdBranch as B;
        [
            (self.unknown, B::UnknownSender),
            (self.init_nonadj, B::InitNonAdjacent),
            (self.two_way, B::TwoWay),
            (self.init_adj, B::InitAdjacent),
            (self.negotiate_slave, B::NegotiateSlave),
            (self.negotiate_master, B::NegotiateMaster),
            (self.negotiate_others, B::NegotiateOthers),
            (self.exchange_duplicate_slave, B::ExchangeDuplicateSlave),
            (self.exchange_duplicate_master, B::ExchangeDuplicateMaster),
            (self.exchange_slave, B::ExchangeSlave),
            (self.exchange_master, B::ExchangeMaster),
            (self.exchange_others, B::ExchangeOthers),
            (self.load_duplicate_slave, B::LoadDuplicateSlave),
            (self.load_duplicate_master, B::LoadDuplicateMaster),
            (self.load_others, B::LoadOthers),
        ]
        .into_iter()
        .filter_map(|(g, b)| g.then_some(b))
        .collect()
    }
}

impl DetailedNodeState {
    pub fn new(ip: NodeId) -> Self {
        DetailedNodeState {
            ip,
            nbrs: DetailedNbrTable::new(),
            lsdb: Lsdb::new(),
            hellot: TimeStamp(0),
        }
    }

    pub fn timers_due(&self, now: TimeStamp, t: &Timing) -> bool {
        self.hellot <= now
            || !self.nbrs.dead_nbrs(now).is_empty()
            || [TimerKind::Dd, TimerKind::Req, TimerKind::Rxmt]
                .into_iter()
                .any(|k| self.nbrs.select_fired(now, self.ip, k).is_some())
            || self.refresh_due(now, t)
    }

    fn refresh_due(&self, now: TimeStamp, t: &Timing) -> bool {
        self.lsdb
            .get(self.ip)
            .is_some_and(|l| l.stamp + t.refreshintvl <= now)
    }

    /// New self-LSA: install, queue for retransmission and flood.
    fn originate(&mut self, now: TimeStamp, t: &Timing, out: &mut Emissions) {
        let prev = self.lsdb.get(self.ip).map(|l| l.stamp);
        let stamp = Freshness::Timestamp.next_own_stamp(prev, now);
        let lsas = Lsdb::singleton(new_lsa_detailed(self.ip, stamp, self.nbrs.iter()));
        install_in_place(&mut self.lsdb, &lsas);
        self.nbrs.upd_rxmts_armed(&lsas, now + t.rxmtintvl);
        out.push(SendInstruction::groupcast(
            Message::Upd { lsas, sip: self.ip },
            self.nbrs.flood_nips(),
        ));
    }

    fn send_dbd(&self, nip: NodeId, out: &mut Emissions) {
        if let Some(m) = self.nbrs.gen_dbd(&self.lsdb, nip, self.ip) {
            out.push(SendInstruction::unicast(m, nip));
        }
    }

    /// Loading if something is still requested from `sip`, otherwise Full
    /// with a fresh self-LSA.
    fn finish_exchange(&mut self, sip: NodeId, now: TimeStamp, t: &Timing, out: &mut Emissions) {
        if self.nbrs.req_list(sip).is_some_and(|r| !r.is_empty()) {
            self.nbrs.set_ns(sip, Loading);
        } else {
            self.nbrs.set_ns(sip, Full);
            self.originate(now, t, out);
        }
    }

    /// Called when `msg` actually leaves the node. Retransmission intervals
    /// count from this moment rather than from when the message was queued,
    /// so a node's own output backlog never triggers a retransmission.
    pub fn transmitted(
        &mut self,
        msg: &Message,
        dests: &BTreeSet<NodeId>,
        now: TimeStamp,
        t: &Timing,
    ) {
        let at = now + t.rxmtintvl;
        for &d in dests {
            let Some(n) = self.nbrs.get(d) else {
                continue;
            };
            match msg {
                Message::DbdDetailed { .. } if n.dd_deadline < at => self.nbrs.set_dd_t(d, at),
                Message::ReqDetailed { .. } if n.req_deadline < at => self.nbrs.set_req_t(d, at),
                Message::Upd { .. } if !n.rxmt_list.is_empty() && n.rxmt_deadline < at => {
                    self.nbrs.set_rxmt_t(d, at)
                }
                _ => {}
            }
        }
    }

    pub fn detailed_timers(&self, now: TimeStamp, t: &Timing) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        let ip = s.ip;
        if s.hellot <= now {
            s.hellot = now + t.hellointvl;
            out.push(SendInstruction::broadcast(Message::Hello {
                ips: s.nbrs.nips(),
                sip: ip,
            }));
        }
        let dead = s.nbrs.dead_nbrs(now);
        if !dead.is_empty() {
            s.nbrs.remove(&dead);
            s.originate(now, t, &mut out);
        }
        if let Some(nip) = s.nbrs.select_fired(now, ip, TimerKind::Dd) {
            s.nbrs.set_dd_t(nip, now + t.rxmtintvl);
            s.send_dbd(nip, &mut out);
        }
        if let Some(nip) = s.nbrs.select_fired(now, ip, TimerKind::Req) {
            s.nbrs.set_req_t(nip, now + t.rxmtintvl);
            let hdr = *s.nbrs.req_list(nip).unwrap().iter().next().unwrap();
            out.push(SendInstruction::unicast(
                Message::ReqDetailed { hdr, sip: ip },
                nip,
            ));
        }
        if let Some(nip) = s.nbrs.select_fired(now, ip, TimerKind::Rxmt) {
            s.nbrs.set_rxmt_t(nip, now + t.rxmtintvl);
            let lsas = s.nbrs.rxmt_list(nip).unwrap().clone();
            out.push(SendInstruction::unicast(
                Message::Upd { lsas, sip: ip },
                nip,
            ));
        }
        if s.refresh_due(now, t) {
            s.originate(now, t, &mut out);
        }
        (s, out)
    }

    pub fn handle_hello_detailed(
        &self,
        ips: &BTreeSet<NodeId>,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
        adj: &AdjPolicy,
    ) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        if !s.nbrs.nbr_exist(sip) {
            s.nbrs.new_nbr(sip);
        }
        s.nbrs.set_inact_t(sip, now + t.rtdeadintvl);
        let ns = s.nbrs.ns(sip).unwrap();
        let adjacent = adj.adj(s.ip, sip);
        if ips.contains(&s.ip) {
            if ns == Init && adjacent {
                s.nbrs.set_ns(sip, ExStart);
                s.nbrs.inc_ddsqn(sip);
                s.nbrs.set_dd_t(sip, now + t.rxmtintvl);
                s.send_dbd(sip, &mut out);
            } else if ns >= ExStart {
            } else if !adjacent {
                s.nbrs.set_ns(sip, NeighborState::TwoWay);
            }
        } else {
            s.nbrs.init_nbr(sip, Init);
        }
        (s, out)
    }

    pub fn dbd_guards(
        &self,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
        now: TimeStamp,
        adj: &AdjPolicy,
    ) -> DbdGuards {
        DbdGuards::evaluate(&self.nbrs, self.ip, sqn, ibit, sip, now, adj)
    }

    /// The single branch a DBD message takes.
    ///
    /// # Panics
    /// If the guards do not select exactly one branch.
    pub fn dbd_branch(
        &self,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
        now: TimeStamp,
        adj: &AdjPolicy,
    ) -> DbdBranch {
        let fired = self.dbd_guards(sqn, ibit, sip, now, adj).fired();
        assert_eq!(fired.len(), 1, "DBD guards not exclusive: {fired:?}");
        fired[0]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn handle_dbd_detailed(
        &self,
        hdrs: &BTreeSet<LsaHeader>,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
        adj: &AdjPolicy,
    ) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        s.dbd_step(hdrs, sqn, ibit, sip, now, t, adj, true, &mut out);
        (s, out)
    }

    #[allow(clippy::too_many_arguments)]
    fn dbd_step(
        &mut self,
        hdrs: &BTreeSet<LsaHeader>,
        sqn: DdSqn,
        ibit: bool,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
        adj: &AdjPolicy,
        may_redispatch: bool,
        out: &mut Emissions,
    ) {
        use DbdBranch as B;
        match self.dbd_branch(sqn, ibit, sip, now, adj) {
            B::UnknownSender
            | B::TwoWay
            | B::NegotiateOthers
            | B::ExchangeDuplicateMaster
            | B::LoadDuplicateMaster => {}
            B::InitNonAdjacent => self.nbrs.set_ns(sip, NeighborState::TwoWay),
            B::InitAdjacent => {
                self.nbrs.set_ns(sip, ExStart);
                self.nbrs.inc_ddsqn(sip);
                self.nbrs.set_dd_t(sip, now + t.rxmtintvl);
                self.send_dbd(sip, out);
                if may_redispatch {
                    self.dbd_step(hdrs, sqn, ibit, sip, now, t, adj, false, out);
                }
            }
            B::NegotiateSlave => {
                self.nbrs.set_ns(sip, Exchange);
                self.nbrs.set_ddsqn(sip, sqn);
                self.send_dbd(sip, out);
            }
            B::NegotiateMaster => {
                self.nbrs.set_ns(sip, Exchange);
                self.nbrs.inc_ddsqn(sip);
                self.nbrs.set_dd_t(sip, now + t.rxmtintvl);
                self.nbrs.add_reqs(sip, &self.lsdb, hdrs);
                self.send_dbd(sip, out);
            }
            B::ExchangeDuplicateSlave | B::LoadDuplicateSlave => self.send_dbd(sip, out),
            B::ExchangeSlave => {
                self.nbrs.inc_ddsqn(sip);
                // Late duplicates from the master are answered until the
                // neighbour could be declared dead.
                self.nbrs.set_dd_t(sip, now + t.rtdeadintvl);
                self.nbrs.add_reqs(sip, &self.lsdb, hdrs);
                self.send_dbd(sip, out);
                self.finish_exchange(sip, now, t, out);
            }
            B::ExchangeMaster => {
                self.nbrs.inc_ddsqn(sip);
                self.nbrs.add_reqs(sip, &self.lsdb, hdrs);
                self.finish_exchange(sip, now, t, out);
            }
            B::ExchangeOthers | B::LoadOthers => self.snmis_in_place(sip, now, t, out),
        }
    }

    fn snmis_in_place(&mut self, sip: NodeId, now: TimeStamp, t: &Timing, out: &mut Emissions) {
        if !self.nbrs.nbr_exist(sip) {
            return;
        }
        self.nbrs.init_nbr(sip, ExStart);
        self.nbrs.inc_ddsqn(sip);
        self.nbrs.set_dd_t(sip, now + t.rxmtintvl);
        self.send_dbd(sip, out);
    }

    /// Restarts the database exchange with `sip`.
    pub fn snmis(&self, sip: NodeId, now: TimeStamp, t: &Timing) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        s.snmis_in_place(sip, now, t, &mut out);
        (s, out)
    }

    pub fn handle_req_detailed(&self, h: &LsaHeader, sip: NodeId) -> (Self, Emissions) {
        let serve = self.nbrs.ns(sip).is_some_and(|ns| ns >= Exchange) && lsa_exist(&self.lsdb, h);
        let mut out = Vec::new();
        if serve {
            let lsa = get_lsa(&self.lsdb, h).unwrap().clone();
            out.push(SendInstruction::unicast(
                Message::Upd {
                    lsas: Lsdb::singleton(lsa),
                    sip: self.ip,
                },
                sip,
            ));
        }
        (self.clone(), out)
    }

    pub fn handle_upd_detailed(
        &self,
        lsas: &Lsdb,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
    ) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        if !s.nbrs.nbr_exist(sip) {
            return (s, out);
        }
        out.push(SendInstruction::unicast(
            Message::Ack {
                hdrs: lsas.headers(),
                sip: s.ip,
            },
            sip,
        ));
        let mut fresh = lsas.clone();
        fresh.retain(|l| !lsa_exist(&s.lsdb, &l.header()));
        if fresh.is_empty() {
            return (s, out);
        }
        install_in_place(&mut s.lsdb, &fresh);
        s.nbrs.clean_reqs(sip, &s.lsdb);
        s.nbrs.upd_rxmts_armed(&fresh, now + t.rxmtintvl);
        out.push(SendInstruction::groupcast(
            Message::Upd {
                lsas: fresh,
                sip: s.ip,
            },
            s.nbrs.flood_nips(),
        ));
        if s.nbrs.req_list(sip).is_some_and(|r| r.is_empty()) && s.nbrs.ns(sip) == Some(Loading) {
            s.nbrs.set_ns(sip, Full);
            s.originate(now, t, &mut out);
        }
        (s, out)
    }

    pub fn handle_ack(&self, hdrs: &BTreeSet<LsaHeader>, sip: NodeId) -> (Self, Emissions) {
        let mut s = self.clone();
        s.nbrs.clean_rxmts(sip, hdrs);
        (s, Vec::new())
    }

    /// Dispatches a received message. Messages of the simple model are
    /// ignored.
    pub fn handle(
        &self,
        msg: &Message,
        now: TimeStamp,
        t: &Timing,
        adj: &AdjPolicy,
    ) -> (Self, Emissions) {
        match msg {
            Message::Hello { ips, sip } => self.handle_hello_detailed(ips, *sip, now, t, adj),
            Message::DbdDetailed {
                hdrs,
                sqn,
                ibit,
                sip,
            } => self.handle_dbd_detailed(hdrs, *sqn, *ibit, *sip, now, t, adj),
            Message::ReqDetailed { hdr, sip } => self.handle_req_detailed(hdr, *sip),
            Message::Upd { lsas, sip } => self.handle_upd_detailed(lsas, *sip, now, t),
            Message::Ack { hdrs, sip } => self.handle_ack(hdrs, *sip),
            Message::DbdSimple { .. } | Message::ReqSimple { .. } => (self.clone(), Vec::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Lsa;

    const A: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);
    const C: NodeId = NodeId(3);

    fn t() -> Timing {
        Timing::default()
    }

    fn with_nbr(ip: NodeId, nip: NodeId, ns: NeighborState, ddsqn: u32) -> DetailedNodeState {
        let mut s = DetailedNodeState::new(ip);
        s.nbrs.new_nbr(nip);
        s.nbrs.set_ns(nip, ns);
        s.nbrs.set_ddsqn(nip, DdSqn(ddsqn));
        s.nbrs.set_inact_t(nip, TimeStamp(100));
        s
    }

    #[test]
    fn hello_starts_exstart() {
        let s = with_nbr(A, B, Init, 0);
        let (s2, out) =
            s.handle_hello_detailed(&BTreeSet::from([A]), B, TimeStamp(5), &t(), &AdjPolicy::All);
        let n = s2.nbrs.get(B).unwrap();
        assert_eq!(
            (n.ns, n.ddsqn, n.dd_deadline),
            (ExStart, DdSqn(1), TimeStamp(9))
        );
        assert_eq!(
            out,
            vec![SendInstruction::unicast(
                Message::DbdDetailed {
                    hdrs: BTreeSet::new(),
                    sqn: DdSqn(1),
                    ibit: true,
                    sip: A
                },
                B
            )]
        );
    }

    #[test]
    fn hello_without_us_resets_neighbour() {
        let mut s = with_nbr(A, B, Full, 3);
        s.nbrs
            .upd_rxmts(&Lsdb::singleton(Lsa::new(A, TimeStamp(1), [B])));
        let (s2, out) =
            s.handle_hello_detailed(&BTreeSet::new(), B, TimeStamp(5), &t(), &AdjPolicy::All);
        assert!(out.is_empty());
        let n = s2.nbrs.get(B).unwrap();
        assert_eq!(n.ns, Init);
        assert!(n.rxmt_list.is_empty());

        let s = with_nbr(A, B, Loading, 3);
        let (s2, _) =
            s.handle_hello_detailed(&BTreeSet::from([A]), B, TimeStamp(5), &t(), &AdjPolicy::All);
        assert_eq!(s2.nbrs.ns(B), Some(Loading));
        assert_eq!(s2.nbrs.get(B).unwrap().inact_deadline, TimeStamp(55));

        let none = AdjPolicy::only([]);
        let s = with_nbr(A, B, Init, 0);
        let (s2, _) = s.handle_hello_detailed(&BTreeSet::from([A]), B, TimeStamp(5), &t(), &none);
        assert_eq!(s2.nbrs.ns(B), Some(NeighborState::TwoWay));
    }

    #[test]
    fn slave_negotiation() {
        let s = with_nbr(A, B, ExStart, 1);
        let (s2, out) = s.handle_dbd_detailed(
            &BTreeSet::new(),
            DdSqn(1),
            true,
            B,
            TimeStamp(12),
            &t(),
            &AdjPolicy::All,
        );
        assert_eq!(s2.nbrs.ns(B), Some(Exchange));
        assert_eq!(s2.nbrs.ddsqn(B), Some(DdSqn(1)));
        let Message::DbdDetailed { ibit, sqn, .. } = out[0].payload else {
            panic!()
        };
        assert!(!ibit);
        assert_eq!(sqn, DdSqn(1));
    }

    #[test]
    fn master_exchange_completes_to_full() {
        let s = with_nbr(B, A, Exchange, 2);
        let (s2, out) = s.handle_dbd_detailed(
            &BTreeSet::new(),
            DdSqn(2),
            false,
            A,
            TimeStamp(15),
            &t(),
            &AdjPolicy::All,
        );
        assert_eq!(s2.nbrs.ns(A), Some(Full));
        assert_eq!(s2.lsdb.get(B), Some(&Lsa::new(B, TimeStamp(15), [A])));
        assert_eq!(out.len(), 1);
        assert_eq!(s2.nbrs.rxmt_list(A).unwrap().len(), 1);
    }

    #[test]
    fn exchange_sequence_gap_triggers_snmis() {
        let s = with_nbr(A, B, Exchange, 2);
        assert_eq!(
            s.dbd_branch(DdSqn(4), false, B, TimeStamp(0), &AdjPolicy::All),
            DbdBranch::ExchangeOthers
        );
        let (s2, out) = s.handle_dbd_detailed(
            &BTreeSet::new(),
            DdSqn(4),
            false,
            B,
            TimeStamp(7),
            &t(),
            &AdjPolicy::All,
        );
        assert_eq!(s2.nbrs.ns(B), Some(ExStart));
        assert_eq!(s2.nbrs.ddsqn(B), Some(DdSqn(3)));
        let Message::DbdDetailed { ibit, .. } = out[0].payload else {
            panic!()
        };
        assert!(ibit);
    }

    #[test]
    fn init_adjacent_redispatches_once() {
        // B is the master and receives the slave's echo before its own hello
        // exchange finished: it enters ExStart, then treats the same message
        // as a negotiation answer.
        let s = with_nbr(B, A, Init, 0);
        let (s2, out) = s.handle_dbd_detailed(
            &BTreeSet::new(),
            DdSqn(1),
            false,
            A,
            TimeStamp(3),
            &t(),
            &AdjPolicy::All,
        );
        assert_eq!(s2.nbrs.ns(A), Some(Exchange));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn req_served_only_when_current() {
        let mut s = with_nbr(A, B, Loading, 1);
        s.lsdb.put(Lsa::new(C, TimeStamp(6), [B]));
        let (_, out) = s.handle_req_detailed(&LsaHeader::new(C, TimeStamp(4)), B);
        assert_eq!(out.len(), 1);
        let (_, out) = s.handle_req_detailed(&LsaHeader::new(C, TimeStamp(7)), B);
        assert!(out.is_empty());
        let s = with_nbr(A, B, Init, 1);
        let (_, out) = s.handle_req_detailed(&LsaHeader::new(A, TimeStamp(0)), B);
        assert!(out.is_empty());
    }

    #[test]
    fn upd_completes_loading() {
        let mut s = with_nbr(A, B, Loading, 2);
        s.nbrs.add_reqs(
            B,
            &s.lsdb.clone(),
            &BTreeSet::from([LsaHeader::new(C, TimeStamp(4))]),
        );
        let lsas = Lsdb::singleton(Lsa::new(C, TimeStamp(4), [B]));
        let (s2, out) = s.handle_upd_detailed(&lsas, B, TimeStamp(20), &t());
        assert_eq!(s2.nbrs.ns(B), Some(Full));
        assert!(matches!(out[0].payload, Message::Ack { .. }));
        assert_eq!(out.len(), 3);
        let (s3, out) = s2.handle_upd_detailed(&lsas, B, TimeStamp(21), &t());
        assert_eq!(out.len(), 1);
        assert_eq!(s3, s2);
        let (s4, _) = s3.handle_ack(&BTreeSet::from([LsaHeader::new(C, TimeStamp(4))]), B);
        assert!(s4.nbrs.rxmt_list(B).unwrap().get(C).is_none());
    }

    #[test]
    fn timers_retransmit_min_request() {
        let mut s = with_nbr(A, B, Loading, 2);
        s.hellot = TimeStamp(50);
        s.nbrs.add_reqs(
            B,
            &Lsdb::new(),
            &BTreeSet::from([
                LsaHeader::new(C, TimeStamp(4)),
                LsaHeader::new(B, TimeStamp(9)),
            ]),
        );
        let (s2, out) = s.detailed_timers(TimeStamp(1), &t());
        assert_eq!(
            out,
            vec![SendInstruction::unicast(
                Message::ReqDetailed {
                    hdr: LsaHeader::new(B, TimeStamp(9)),
                    sip: A
                },
                B
            )]
        );
        assert_eq!(s2.nbrs.get(B).unwrap().req_deadline, TimeStamp(5));
        let (_, out) = s2.detailed_timers(TimeStamp(2), &t());
        assert!(out.is_empty());
    }
}
