//! Generate every benchmark at default parameters, synthesize its shield
//! and print sizes. Pass a domain name to dump that model as text instead.
//!
//!     cargo run --release --example generate_domains
//!     cargo run --release --example generate_domains -- obstacle > obstacle.pomdp

use beliefshield::domains::{generate_default, DomainName};
use beliefshield::model::format::serialize_model;
use beliefshield::synth::synthesize_default;

fn main() {
    if let Some(name) = std::env::args().nth(1) {
        let name: DomainName = name.parse().expect("known domain name");
        print!("{}", serialize_model(&generate_default(name).pomdp));
        return;
    }
    println!("{:<10} {:>7} {:>8} {:>6} {:>9} {:>8}", "domain", "states", "actions", "obs", "supports", "winning");
    for name in DomainName::ALL {
        let d = generate_default(name);
        let sh = synthesize_default(&d.pomdp, &d.spec).unwrap();
        println!(
            "{:<10} {:>7} {:>8} {:>6} {:>9} {:>8}",
            name.as_str(),
            d.pomdp.num_states(),
            d.pomdp.num_actions(),
            d.pomdp.num_observations(),
            sh.stats().support_nodes,
            sh.stats().winning
        );
    }
}
