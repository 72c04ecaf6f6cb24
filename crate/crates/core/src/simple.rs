//! The simplified OSPF model: hellos, one-shot database exchange, requests
//! and flooding, without acknowledgements or retransmission.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::Timing;
use crate::lsdb::{missing_headers, new_lsa_simple, Freshness};
use crate::neighbor::SimpleNbrTable;
use crate::types::{LsaHeader, Lsdb, Message, NodeId, SendInstruction, TimeStamp};

pub type Emissions = Vec<SendInstruction>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimpleNodeState {
    pub ip: NodeId,
    pub nbrs: SimpleNbrTable,
    pub lsdb: Lsdb,
    pub hellot: TimeStamp,
}

impl SimpleNodeState {
    pub fn new(ip: NodeId) -> Self {
        SimpleNodeState {
            ip,
            nbrs: SimpleNbrTable::new(),
            lsdb: Lsdb::new(),
            hellot: TimeStamp(0),
        }
    }

    pub fn timers_due(&self, now: TimeStamp) -> bool {
        self.hellot <= now || !self.nbrs.dead_nbrs(now).is_empty()
    }

    /// Originates a fresh self-LSA, installs it and floods it to every
    /// current neighbour.
    fn originate(&mut self, now: TimeStamp, fresh: Freshness, out: &mut Emissions) {
        let prev = self.lsdb.get(self.ip).map(|l| l.stamp);
        let stamp = fresh.next_own_stamp(prev, now);
        let lsa = new_lsa_simple(self.ip, stamp, self.nbrs.iter());
        let lsas = Lsdb::singleton(lsa);
        self.lsdb.put(lsas.iter().next().unwrap().clone());
        out.push(SendInstruction::groupcast(
            Message::Upd { lsas, sip: self.ip },
            self.nbrs.nips(),
        ));
    }

    fn discover(&mut self, sip: NodeId, now: TimeStamp, t: &Timing, out: &mut Emissions) {
        self.nbrs.new_nbr(sip);
        self.nbrs.set_inact_t(sip, now + t.rtdeadintvl);
        self.originate(now, t.freshness, out);
        out.push(SendInstruction::unicast(
            Message::DbdSimple {
                hdrs: self.lsdb.headers(),
                sip: self.ip,
            },
            sip,
        ));
    }

    pub fn simple_timers(&self, now: TimeStamp, t: &Timing) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        if s.hellot <= now {
            s.hellot = now + t.hellointvl;
            out.push(SendInstruction::broadcast(Message::Hello {
                ips: s.nbrs.nips(),
                sip: s.ip,
            }));
        }
        let dead = s.nbrs.dead_nbrs(now);
        if !dead.is_empty() {
            s.nbrs.remove(&dead);
            s.originate(now, t.freshness, &mut out);
        }
        (s, out)
    }

    /// The `ips` field of a hello plays no role in this model.
    pub fn handle_hello_simple(
        &self,
        _ips: &BTreeSet<NodeId>,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
    ) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        if !s.nbrs.nbr_exist(sip) {
            s.discover(sip, now, t, &mut out);
        } else {
            s.nbrs.set_inact_t(sip, now + t.rtdeadintvl);
        }
        (s, out)
    }

    pub fn handle_dbd_simple(
        &self,
        hdrs: &BTreeSet<LsaHeader>,
        sip: NodeId,
        now: TimeStamp,
        t: &Timing,
    ) -> (Self, Emissions) {
        let mut s = self.clone();
        let mut out = Vec::new();
        if !s.nbrs.nbr_exist(sip) {
            s.discover(sip, now, t, &mut out);
        }
        let reqs = missing_headers(t.freshness, &s.lsdb, hdrs);
        if !reqs.is_empty() {
            out.push(SendInstruction::unicast(
                Message::ReqSimple {
                    hdrs: reqs,
                    sip: s.ip,
                },
                sip,
            ));
        }
        (s, out)
    }

    pub fn handle_req_simple(&self, hdrs: &BTreeSet<LsaHeader>, sip: NodeId) -> (Self, Emissions) {
        if !self.nbrs.nbr_exist(sip) {
            return (self.clone(), Vec::new());
        }
        let origins: BTreeSet<NodeId> = hdrs.iter().map(|h| h.origin).collect();
        let mut lsas = self.lsdb.clone();
        lsas.retain(|l| origins.contains(&l.origin));
        let out = vec![SendInstruction::unicast(
            Message::Upd { lsas, sip: self.ip },
            sip,
        )];
        (self.clone(), out)
    }

    pub fn handle_upd_simple(&self, lsas: &Lsdb, _sip: NodeId, t: &Timing) -> (Self, Emissions) {
        let mut fresh = lsas.clone();
        fresh.retain(|l| !t.freshness.covers(&self.lsdb, &l.header()));
        if fresh.is_empty() {
            return (self.clone(), Vec::new());
        }
        let mut s = self.clone();
        t.freshness.install(&mut s.lsdb, &fresh);
        let out = vec![SendInstruction::groupcast(
            Message::Upd {
                lsas: fresh,
                sip: s.ip,
            },
            s.nbrs.nips(),
        )];
        (s, out)
    }

    /// Dispatches a received message. Messages of the detailed model are
    /// ignored.
    pub fn handle(&self, msg: &Message, now: TimeStamp, t: &Timing) -> (Self, Emissions) {
        match msg {
            Message::Hello { ips, sip } => self.handle_hello_simple(ips, *sip, now, t),
            Message::DbdSimple { hdrs, sip } => self.handle_dbd_simple(hdrs, *sip, now, t),
            Message::ReqSimple { hdrs, sip } => self.handle_req_simple(hdrs, *sip),
            Message::Upd { lsas, sip } => self.handle_upd_simple(lsas, *sip, t),
            Message::DbdDetailed { .. } | Message::ReqDetailed { .. } | Message::Ack { .. } => {
                (self.clone(), Vec::new())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Lsa, SendMethod};

    const IP: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);
    const C: NodeId = NodeId(3);

    fn timing() -> Timing {
        Timing::default()
    }

    #[test]
    fn first_timer_call_sends_hello() {
        let (s, out) = SimpleNodeState::new(IP).simple_timers(TimeStamp(0), &timing());
        assert_eq!(s.hellot, TimeStamp(10));
        assert_eq!(
            out,
            vec![SendInstruction::broadcast(Message::Hello {
                ips: BTreeSet::new(),
                sip: IP
            })]
        );
    }

    #[test]
    fn dead_neighbour_is_removed() {
        let mut s = SimpleNodeState::new(IP);
        s.hellot = TimeStamp(10);
        s.nbrs.set_inact_t(B, TimeStamp(5));
        let (s2, out) = s.simple_timers(TimeStamp(6), &timing());
        assert!(s2.nbrs.is_empty());
        assert_eq!(s2.lsdb.get(IP), Some(&Lsa::new(IP, TimeStamp(6), [])));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].method, SendMethod::Groupcast(BTreeSet::new()));

        let (s3, out) = s2.simple_timers(TimeStamp(7), &timing());
        assert_eq!(s3, s2);
        assert!(out.is_empty());
    }

    #[test]
    fn hello_from_unknown_creates_neighbour() {
        let s = SimpleNodeState::new(IP);
        let (s2, out) = s.handle_hello_simple(&BTreeSet::new(), B, TimeStamp(3), &timing());
        assert_eq!(s2.nbrs.get(B).unwrap().inact_deadline, TimeStamp(53));
        assert_eq!(s2.lsdb.get(IP), Some(&Lsa::new(IP, TimeStamp(3), [B])));
        assert_eq!(out.len(), 2);
        assert!(matches!(out[0].payload, Message::Upd { .. }));
        assert_eq!(out[0].method, SendMethod::Groupcast(BTreeSet::from([B])));
        assert!(matches!(out[1].payload, Message::DbdSimple { .. }));

        let (s3, out) = s2.handle_hello_simple(&BTreeSet::from([IP]), B, TimeStamp(9), &timing());
        assert!(out.is_empty());
        assert_eq!(s3.nbrs.get(B).unwrap().inact_deadline, TimeStamp(59));
        assert_eq!(s3.lsdb, s2.lsdb);
    }

    #[test]
    fn dbd_requests_only_missing_headers() {
        let mut s = SimpleNodeState::new(IP);
        s.nbrs.set_inact_t(B, TimeStamp(50));
        let hdrs = BTreeSet::from([LsaHeader::new(C, TimeStamp(4))]);
        let (_, out) = s.handle_dbd_simple(&hdrs, B, TimeStamp(1), &timing());
        assert_eq!(
            out,
            vec![SendInstruction::unicast(
                Message::ReqSimple {
                    hdrs: hdrs.clone(),
                    sip: IP
                },
                B
            )]
        );

        s.lsdb.put(Lsa::new(C, TimeStamp(4), []));
        let (_, out) = s.handle_dbd_simple(&hdrs, B, TimeStamp(1), &timing());
        assert!(out.is_empty());
    }

    #[test]
    fn req_and_upd() {
        let mut s = SimpleNodeState::new(IP);
        let (_, out) = s.handle_req_simple(&BTreeSet::new(), B);
        assert!(out.is_empty());

        s.nbrs.set_inact_t(B, TimeStamp(50));
        s.lsdb.put(Lsa::new(C, TimeStamp(6), [B]));
        let (_, out) = s.handle_req_simple(&BTreeSet::from([LsaHeader::new(C, TimeStamp(4))]), B);
        let Message::Upd { lsas, .. } = &out[0].payload else {
            panic!()
        };
        assert_eq!(lsas.get(C).unwrap().stamp, TimeStamp(6));

        let fresh = Lsdb::singleton(Lsa::new(C, TimeStamp(7), []));
        let (s2, out) = s.handle_upd_simple(&fresh, B, &timing());
        assert_eq!(s2.lsdb.get(C).unwrap().stamp, TimeStamp(7));
        assert_eq!(out.len(), 1);
        let (s3, out) = s2.handle_upd_simple(&fresh, B, &timing());
        assert_eq!(s3, s2);
        assert!(out.is_empty());
    }
}
