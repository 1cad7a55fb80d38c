//! Parse a model from text, print its shape, and compare it with a
//! reweighted copy and a copy with an extra edge.
//!
//!     cargo run --example parse_and_check

use beliefshield::fixtures;
use beliefshield::model::format::{parse_model, serialize_model};
use beliefshield::model::{is_graph_preserving, overapproximates};

fn main() {
    let m = parse_model(fixtures::T1).expect("T1 parses");
    println!(
        "{} states, actions {:?}, observations {:?}",
        m.num_states(),
        m.action_names(),
        m.obs_names()
    );
    println!("graph fingerprint {}", m.graph_fingerprint());

    let reweighted = m.with_transition_probs(|_, _, row| vec![1.0 / row.len() as f64; row.len()]).unwrap();
    println!("uniformly reweighted T1 preserves T1's graph: {}", is_graph_preserving(&m, &reweighted).unwrap());
    let t2 = fixtures::t2();
    println!("T2 preserves T1's graph: {}", is_graph_preserving(&m, &t2).unwrap());

    // give state 1 a second successor under `a`
    let mut b = m.to_builder();
    b.remove_transition(1, 0, 3).transition(1, 0, 3, 0.9).transition(1, 0, 0, 0.1);
    let wide = b.build().unwrap();
    println!("widened T1 overapproximates T1: {}", overapproximates(&wide, &m).unwrap());
    println!("T1 overapproximates widened T1: {}", overapproximates(&m, &wide).unwrap());

    // the text format round-trips
    let again = parse_model(&serialize_model(&m)).unwrap();
    assert_eq!(again.graph_fingerprint(), m.graph_fingerprint());

    // malformed input is rejected with a reason
    let bad = fixtures::T1.replace("T: 0 a 1 1", "T: 0 a 1 0.7");
    match parse_model(&bad) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
}
