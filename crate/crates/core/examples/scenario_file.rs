//! Loads a scenario from text, applies command-line style overrides and runs
//! it.

use ospf_models::scenario::Scenario;
use ospf_models::Engine;

const SCENARIO: &str = "\
# a square with one diagonal; 1 and 3 never form an adjacency
nodes 4
edge 1 2
edge 2 3
edge 3 4
edge 4 1
edge 1 3
adj 1 2
adj 2 3
adj 3 4
adj 4 1
boot 3 5
";

fn main() {
    let mut sc = Scenario::parse(SCENARIO).unwrap();
    sc.apply_overrides(["seed=3", "boot=4:2"]).unwrap();
    let run = Engine::new(sc.config, sc.topology).unwrap().run();
    println!("{}", run.verdict);
}
