//! Prints every message of a two-router detailed run, tick by tick.

use ospf_models::trace::EventKind;
use ospf_models::{Engine, EngineConfig, Model, Topology};

fn main() {
    let run = Engine::new(EngineConfig::new(Model::Detailed), Topology::line(2))
        .unwrap()
        .run();
    for e in &run.trace {
        match e.kind {
            EventKind::Send => println!("t={:<3} {} sends {}", e.tick, e.node, e.detail["msg"]),
            EventKind::StateChange => println!(
                "t={:<3} {} sees {} go {} -> {}",
                e.tick, e.node, e.detail["nbr"], e.detail["from"], e.detail["to"]
            ),
            _ => {}
        }
    }
    println!("{}", run.verdict);
}
