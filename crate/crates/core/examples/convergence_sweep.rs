//! Convergence time and message load of both models over lines, rings and
//! stars.

use ospf_models::{Engine, EngineConfig, Model, Topology, Verdict};

fn main() {
    let line: fn(u16) -> Topology = Topology::line;
    let shapes = [
        ("line", line),
        ("ring", Topology::ring),
        ("star", Topology::star),
    ];
    println!(
        "{:<8} {:>8} {:>6} {:>6}",
        "topology", "model", "tick", "msgs"
    );
    for (name, make) in shapes {
        for n in 3..=8 {
            for model in [Model::Simple, Model::Detailed] {
                let run = Engine::new(EngineConfig::new(model), make(n))
                    .unwrap()
                    .run();
                match run.verdict {
                    Verdict::Converged { tick, counts } => {
                        println!(
                            "{:<8} {:>8} {:>6} {:>6}",
                            format!("{name}({n})"),
                            model,
                            tick,
                            counts.total()
                        )
                    }
                    v => println!("{:<8} {:>8} {v}", format!("{name}({n})"), model),
                }
            }
        }
    }
}
