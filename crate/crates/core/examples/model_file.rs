//! Loading a JSON model and running the full bound-versus-distance comparison,
//! the same path the `compare` subcommand takes.

use steinlab::model_io::parse_model;
use steinlab::pipeline::{compare, BoundOptions};

const MODEL: &str = r#"{
  "bernoulli": [0.2, 0.2, 0.2, 0.2, 0.2, 0.2],
  "functional": {"kind": "weighted_sum", "coeffs": [1, 1, 1, 1, 1, 1]}
}"#;

fn main() {
    let model = parse_model(MODEL).expect("valid model");
    let cmp = compare(&model, "bernoulli6", &BoundOptions::default()).expect("comparison");
    println!("{:<34} {:>10} {:>10} {:>10}", "bound", "value", "distance", "slack");
    for row in &cmp.rows {
        println!("{:<34} {:>10.5} {:>10.5} {:>10.5}", row.theorem.tag(), row.bound, row.distance, row.slack);
    }
    for s in &cmp.skipped {
        println!("skipped {}: {}", s.theorem.tag(), s.reason);
    }
    println!("all bounds dominate: {}", cmp.all_dominate());
}
