//! Parse a model and its constraint sidecar, and show how malformed input is reported.

use cpomdp::parser::{parse_constraint_sidecar, parse_pomdp, serialize_model};
use cpomdp::problems::TIGER_POMDP;

const SIDECAR: &str = "\
budget: 21
cost: listen : * 2
cost: open-left : * 1
cost: open-right : * 1
terminal: * 0
delta: uniform
";

const BROKEN: &str = "\
states: 2
actions: a b
observations: 1
T: a
0.5 0.4
0 1
";

fn main() {
    let model = parse_pomdp(TIGER_POMDP).expect("tiger parses");
    println!(
        "tiger: {} states {:?}, actions {:?}, observations {:?}, discount {}",
        model.num_states(),
        model.states,
        model.actions,
        model.observations,
        model.discount
    );
    let side = parse_constraint_sidecar(SIDECAR, &model).expect("sidecar parses");
    println!("budget {}, cost rows {:?}, delta {:?}", side.spec.budget, side.spec.cost, side.spec.delta);

    let text = serialize_model(&model);
    let again = parse_pomdp(&text).expect("serialized model parses");
    println!("round trip preserves the model: {}", again == model);

    println!("\ndiagnostics for a malformed file:");
    for d in parse_pomdp(BROKEN).unwrap_err() {
        println!("  {d}");
    }
}
