//! LSA construction, database installation and freshness comparisons.

use std::collections::BTreeSet;

use crate::types::{
    DetailedNeighbor, Lsa, LsaHeader, Lsdb, NeighborState, NodeId, SimpleNeighbor, TimeStamp,
};

pub fn new_lsa_simple<'a>(
    ip: NodeId,
    t: TimeStamp,
    nbrs: impl IntoIterator<Item = &'a SimpleNeighbor>,
) -> Lsa {
    Lsa::new(ip, t, nbrs.into_iter().map(|n| n.nip))
}

pub fn new_lsa_detailed<'a>(
    ip: NodeId,
    t: TimeStamp,
    nbrs: impl IntoIterator<Item = &'a DetailedNeighbor>,
) -> Lsa {
    Lsa::new(
        ip,
        t,
        nbrs.into_iter()
            .filter(|n| n.ns >= NeighborState::TwoWay)
            .map(|n| n.nip),
    )
}

/// Merges `lsas` into `lsdb`, keeping for every origin the entry with the
/// largest stamp. On equal stamps the stored entry wins.
pub fn install(lsdb: &Lsdb, lsas: &Lsdb) -> Lsdb {
    let mut out = lsdb.clone();
    install_in_place(&mut out, lsas);
    out
}

pub fn install_in_place(lsdb: &mut Lsdb, lsas: &Lsdb) {
    for lsa in lsas {
        let newer = match lsdb.get(lsa.origin) {
            Some(cur) => cur.stamp < lsa.stamp,
            None => true,
        };
        if newer {
            lsdb.put(lsa.clone());
        }
    }
}

pub fn lsa_exist(lsdb: &Lsdb, h: &LsaHeader) -> bool {
    lsdb.get(h.origin).is_some_and(|lsa| h.stamp <= lsa.stamp)
}

/// Lookup by origin only; the stamp of `h` is ignored.
pub fn get_lsa<'a>(lsdb: &'a Lsdb, h: &LsaHeader) -> Option<&'a Lsa> {
    lsdb.get(h.origin)
}

/// Wrap-around comparison of bounded ages: is `age1` newer than `age2`?
///
/// Age 0 stands for "no LSA". Equal non-zero ages compare as newer.
pub fn newer_age(age1: u64, age2: u64, age_bound: u64) -> bool {
    if age1 == 0 {
        return false;
    } else if age2 == 0 {
        return true;
    }
    let older = (age2 > age1 && 2 * (age2 - age1) < age_bound)
        || (age1 > age2 && 2 * (age1 - age2) > age_bound);
    !older
}

/// How a node decides whether a received LSA is fresher than what it holds.
///
/// The simulation models compare unbounded timestamps. The explorer runs the
/// simple model on bounded wrap-around ages instead, which keeps its state
/// space finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Freshness {
    Timestamp,
    WrapAround { age_bound: u64 },
}

impl Freshness {
    /// Whether `lsdb` already holds information at least as fresh as `h`.
    pub fn covers(&self, lsdb: &Lsdb, h: &LsaHeader) -> bool {
        match *self {
            Freshness::Timestamp => lsa_exist(lsdb, h),
            Freshness::WrapAround { age_bound } => {
                let stored = lsdb.get(h.origin).map_or(0, |l| l.stamp.0);
                stored != 0 && (stored == h.stamp.0 || !newer_age(h.stamp.0, stored, age_bound))
            }
        }
    }

    pub fn install(&self, lsdb: &mut Lsdb, lsas: &Lsdb) {
        match *self {
            Freshness::Timestamp => install_in_place(lsdb, lsas),
            Freshness::WrapAround { .. } => {
                for lsa in lsas {
                    let h = lsa.header();
                    if !self.covers(lsdb, &h) {
                        lsdb.put(lsa.clone());
                    }
                }
            }
        }
    }

    /// Stamp for the next self-originated LSA.
    ///
    /// Timestamps never repeat even when a node originates twice in one
    /// tick. Ages start at 1 and wrap from `age_bound` back to 1.
    pub fn next_own_stamp(&self, prev: Option<TimeStamp>, now: TimeStamp) -> TimeStamp {
        match (*self, prev) {
            (Freshness::Timestamp, None) => now,
            (Freshness::Timestamp, Some(p)) => now.max(p + 1),
            (Freshness::WrapAround { .. }, None) => TimeStamp(1),
            (Freshness::WrapAround { age_bound }, Some(p)) => {
                if p.0 >= age_bound {
                    TimeStamp(1)
                } else {
                    p + 1
                }
            }
        }
    }
}

/// Headers of `hdrs` that `lsdb` does not cover under `fresh`.
pub fn missing_headers(
    fresh: Freshness,
    lsdb: &Lsdb,
    hdrs: &BTreeSet<LsaHeader>,
) -> BTreeSet<LsaHeader> {
    hdrs.iter()
        .filter(|h| !fresh.covers(lsdb, h))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);
    const C: NodeId = NodeId(3);

    fn lsa(o: NodeId, t: u64, links: &[NodeId]) -> Lsa {
        Lsa::new(o, TimeStamp(t), links.iter().copied())
    }

    fn db<const N: usize>(v: [Lsa; N]) -> Lsdb {
        Lsdb::try_from_lsas(v).unwrap()
    }

    #[test]
    fn new_lsa_examples() {
        let sn = [
            SimpleNeighbor {
                nip: B,
                inact_deadline: TimeStamp(55),
            },
            SimpleNeighbor {
                nip: C,
                inact_deadline: TimeStamp(60),
            },
        ];
        assert_eq!(new_lsa_simple(A, TimeStamp(5), &sn), lsa(A, 5, &[B, C]));
        assert_eq!(new_lsa_simple(A, TimeStamp(0), &[]), lsa(A, 0, &[]));

        let mut b = DetailedNeighbor::fresh(B);
        let mut c = DetailedNeighbor::fresh(C);
        c.ns = NeighborState::Full;
        assert_eq!(new_lsa_detailed(A, TimeStamp(4), [&b, &c]), lsa(A, 4, &[C]));
        b.ns = NeighborState::TwoWay;
        assert_eq!(new_lsa_detailed(A, TimeStamp(4), [&b]), lsa(A, 4, &[B]));
    }

    #[test]
    fn install_examples() {
        let x = lsa(A, 1, &[B]);
        assert_eq!(install(&Lsdb::new(), &db([x.clone()])), db([x.clone()]));
        assert_eq!(
            install(&db([x.clone()]), &db([lsa(A, 2, &[B, C])])),
            db([lsa(A, 2, &[B, C])])
        );
        assert_eq!(
            install(&db([lsa(A, 2, &[B])]), &db([lsa(A, 1, &[])])),
            db([lsa(A, 2, &[B])])
        );
        let y = lsa(B, 1, &[C]);
        assert_eq!(install(&db([x.clone()]), &db([y.clone()])), db([x, y]));
    }

    #[test]
    fn lookup_examples() {
        let d = db([lsa(A, 5, &[B])]);
        assert!(lsa_exist(&d, &LsaHeader::new(A, TimeStamp(3))));
        assert!(!lsa_exist(&d, &LsaHeader::new(A, TimeStamp(6))));
        assert!(!lsa_exist(&Lsdb::new(), &LsaHeader::new(A, TimeStamp(1))));
        assert_eq!(
            get_lsa(&d, &LsaHeader::new(A, TimeStamp(2))),
            Some(&lsa(A, 5, &[B]))
        );
        assert_eq!(get_lsa(&d, &LsaHeader::new(C, TimeStamp(2))), None);
    }

    #[test]
    fn newer_age_examples() {
        assert!(!newer_age(0, 5, 8));
        assert!(!newer_age(3, 5, 8));
        assert!(newer_age(1, 8, 8));
        assert!(newer_age(4, 0, 8));
        assert!(newer_age(5, 5, 8));
    }

    #[test]
    fn wrap_freshness_follows_newer_age() {
        let f = Freshness::WrapAround { age_bound: 8 };
        let d = db([lsa(A, 8, &[])]);
        assert!(!f.covers(&d, &LsaHeader::new(A, TimeStamp(1))));
        assert!(f.covers(&d, &LsaHeader::new(A, TimeStamp(8))));
        assert!(f.covers(&d, &LsaHeader::new(A, TimeStamp(6))));
        assert!(!f.covers(&d, &LsaHeader::new(B, TimeStamp(1))));

        let mut d2 = d.clone();
        f.install(&mut d2, &db([lsa(A, 1, &[B])]));
        assert_eq!(d2.get(A).unwrap().stamp, TimeStamp(1));

        assert_eq!(f.next_own_stamp(None, TimeStamp(40)), TimeStamp(1));
        assert_eq!(
            f.next_own_stamp(Some(TimeStamp(8)), TimeStamp(40)),
            TimeStamp(1)
        );
        assert_eq!(
            f.next_own_stamp(Some(TimeStamp(3)), TimeStamp(40)),
            TimeStamp(4)
        );
    }

    #[test]
    fn timestamp_own_stamps_never_repeat() {
        let f = Freshness::Timestamp;
        assert_eq!(f.next_own_stamp(None, TimeStamp(7)), TimeStamp(7));
        assert_eq!(
            f.next_own_stamp(Some(TimeStamp(7)), TimeStamp(7)),
            TimeStamp(8)
        );
        assert_eq!(
            f.next_own_stamp(Some(TimeStamp(3)), TimeStamp(7)),
            TimeStamp(7)
        );
    }
}
