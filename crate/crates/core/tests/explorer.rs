use ospf_models::explorer::{replay, ExploreConfig, Explorer, Outcome, Property};
use ospf_models::Topology;

#[test]
fn counterexample_replays_to_the_same_overflow() {
    let mut cfg = ExploreConfig::new(Topology::line(3));
    cfg.queue_bound = 1;
    let mut ex = Explorer::new(cfg).unwrap();
    let r = ex.run();
    let Outcome::Violation {
        property,
        counterexample,
        ..
    } = &r.outcome
    else {
        panic!("expected a violation, got {:?}", r.outcome);
    };
    assert_eq!(*property, Property::QueueBound);
    let (_, trace, overflow) = replay(&ex, counterexample);
    let o = overflow.expect("replay overflows");
    assert!(o.len > 1);
    assert_eq!(o.tick + 1, counterexample.choices.len() as u64);
    assert!(!trace.is_empty());
}

#[test]
fn state_budget_gives_inconclusive() {
    let mut cfg = ExploreConfig::new(Topology::line(3));
    cfg.max_states = 50;
    let r = Explorer::new(cfg).unwrap().run();
    match r.outcome {
        Outcome::Inconclusive { frontier, .. } => assert!(frontier > 0),
        o => panic!("{o:?}"),
    }
}

#[test]
fn shallow_depth_gives_inconclusive() {
    let mut cfg = ExploreConfig::new(Topology::line(2));
    cfg.depth_bound = 3;
    let r = Explorer::new(cfg).unwrap().run();
    assert!(
        matches!(r.outcome, Outcome::Inconclusive { .. }),
        "{:?}",
        r.outcome
    );
}

#[test]
fn fingerprints_do_not_collide() {
    let mut cfg = ExploreConfig::new(Topology::line(2));
    cfg.check_collisions = true;
    let r = Explorer::new(cfg).unwrap().run();
    assert!(r.passed(), "{:?}", r.outcome);
    assert_eq!(r.states, 564);
}

#[test]
fn two_node_explored_space_covers_engine_runs() {
    let cfg = ExploreConfig::new(Topology::line(2));
    let bound = cfg.start_interval;
    let mut ex = Explorer::new(cfg).unwrap();
    assert!(ex.run().passed());
    for a in 0..=bound {
        for b in 0..=bound {
            assert!(ex.includes_schedule(&[a, b]), "boot {a} {b}");
        }
    }
}

#[test]
fn star_of_four_is_accepted_and_five_refused() {
    assert!(Explorer::new(ExploreConfig::new(Topology::star(4))).is_ok());
    assert!(Explorer::new(ExploreConfig::new(Topology::star(5))).is_err());
}
