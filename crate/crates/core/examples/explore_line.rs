//! Exhaustively explores a line network and prints the report.
//!
//! `cargo run --release --example explore_line -- 3`

use ospf_models::explorer::{ExploreConfig, Explorer};
use ospf_models::Topology;

fn main() {
    let n: u16 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(3);
    let mut ex = Explorer::new(ExploreConfig::new(Topology::line(n))).expect("network too large");
    let report = ex.run();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    println!(
        "default schedule explored: {}",
        ex.includes_schedule(&vec![0; n as usize])
    );
}
