//! Detailed model on a ring with per-recipient message loss, over a range
//! of seeds.
//!
//! `cargo run --example lossy_run -- 0.3`

use ospf_models::{Engine, EngineConfig, Model, Topology, Verdict};

fn main() {
    let loss: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.2);
    for seed in 0..10 {
        let cfg = EngineConfig {
            loss_prob: loss,
            seed,
            ..EngineConfig::new(Model::Detailed)
        };
        let run = Engine::new(cfg, Topology::ring(4)).unwrap().run();
        let drops = run
            .trace
            .iter()
            .filter(|e| e.kind == ospf_models::trace::EventKind::Drop)
            .count();
        match run.verdict {
            Verdict::Converged { tick, counts } => {
                println!("seed {seed}: tick {tick}, {counts}, {drops} drops")
            }
            v => println!("seed {seed}: {v}, {drops} drops"),
        }
    }
}
