//! Shielded versus unshielded random walks on Obstacle.

use beliefshield::domains::{generate_default, DomainName};
use beliefshield::estimator::SupportTracker;
use beliefshield::runtime::ShieldGate;
use beliefshield::sim::random_rollout;
use beliefshield::synth::synthesize_default;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let d = generate_default(DomainName::Obstacle);
    let sh = synthesize_default(&d.pomdp, &d.spec).unwrap();
    let episodes = 1000;
    for (label, shield) in [("shielded", Some(&sh)), ("unshielded", None)] {
        let mut tracker = SupportTracker::new(&d.pomdp);
        let mut gate = ShieldGate::new(shield);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut reached, mut violated, mut steps) = (0, 0, 0);
        for _ in 0..episodes {
            let tr = random_rollout(&mut tracker, &mut gate, &d.spec, &d.terminal, d.config.episode_cap, &mut rng).unwrap();
            reached += tr.reached as usize;
            violated += tr.violated as usize;
            steps += tr.len();
        }
        println!(
            "{label:>10}: reached {reached}/{episodes}, violated {violated}/{episodes}, mean length {:.1}",
            steps as f64 / episodes as f64
        );
    }
}
