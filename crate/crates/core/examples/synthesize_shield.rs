//! Synthesize reach-avoid and avoid-only shields for T1 and check the
//! reach-avoid one with the independent policy verifier.

use beliefshield::fixtures;
use beliefshield::model::{SpecKind, Specification};
use beliefshield::synth::{build_support_mdp, compute_winning, synthesize_default, verify_winning_policy, DEFAULT_MAX_NODES};

fn main() {
    let m = fixtures::t1();
    for kind in [SpecKind::ReachAvoid, SpecKind::AvoidOnly] {
        let spec = Specification::from_labels(&m, kind).unwrap();
        let g = build_support_mdp(&m, &spec, DEFAULT_MAX_NODES).unwrap();
        let w = compute_winning(&g);
        println!("{kind:?}: {} support nodes, {} winning, {} rounds", g.len(), w.len(), w.rounds());
        let sh = synthesize_default(&m, &spec).unwrap();
        for (b, allowed) in sh.table() {
            let names: Vec<&str> = allowed.iter().map(|a| m.action_name(a)).collect();
            println!("  {b:?} -> {names:?}");
        }
        println!("  verified: {}", verify_winning_policy(&m, sh.table(), &spec).unwrap());
    }

    let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
    let json = synthesize_default(&m, &spec).unwrap().to_json();
    println!("shield file is {} bytes", json.len());
}
