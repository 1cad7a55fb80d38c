//! Turning the shield off after 1000 episodes, suddenly or gradually.

use beliefshield::domains::{generate_default, DomainName};
use beliefshield::learn::{train, Agent, TrainConfig};
use beliefshield::runtime::ShieldSchedule;
use beliefshield::synth::synthesize_default;

fn main() {
    let d = generate_default(DomainName::Obstacle);
    let sh = synthesize_default(&d.pomdp, &d.spec).unwrap();
    let seeds = 20;
    for spec in ["on", "sudden:1000", "smooth:1000:0.001", "prob:0.5"] {
        let schedule: ShieldSchedule = spec.parse().unwrap();
        let mut total = 0;
        for seed in 0..seeds {
            let cfg = TrainConfig::new(Agent::Reinforce).with_seed(seed).with_schedule(schedule.clone());
            total += train(&d, Some(&sh), &cfg).unwrap().violations_during;
        }
        println!("{spec:>18}: {total} violating training episodes over {seeds} seeds");
    }
}
