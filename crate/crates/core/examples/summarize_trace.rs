//! Writes a trace to JSONL and reads it back through the summarizer.

use ospf_models::trace::{summarize, to_jsonl};
use ospf_models::{Engine, EngineConfig, Model, Topology};

fn main() {
    let run = Engine::new(EngineConfig::new(Model::Detailed), Topology::star(4))
        .unwrap()
        .run();
    let text = to_jsonl(&run.trace);
    println!("{} bytes of trace", text.len());
    let summary = summarize(text.as_bytes()).expect("engine traces parse");
    print!("{summary}");
    println!("verdict: {}", run.verdict);
}
