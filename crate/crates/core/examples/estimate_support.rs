//! Track the belief support along sampled runs of T2, next to the exact
//! belief. The support only uses the graph; the belief needs the numbers.

use beliefshield::estimator::Estimator;
use beliefshield::fixtures;
use beliefshield::sim::{sample_initial, sample_step};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let m = fixtures::t2();
    let a = m.action_id("a").unwrap();
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, z) = sample_initial(&m, &mut rng);
        let mut est = Estimator::with_belief(&m, z).unwrap();
        println!("run {seed}: start in {s}, observe {}: support {:?}", m.obs_name(z), est.current());
        for _ in 0..4 {
            let (t, z, _) = sample_step(&m, s, a, &mut rng);
            let b = est.step(a, z).unwrap().clone();
            s = t;
            assert!(b.contains(s));
            println!("  a -> state {s}, observe {}: support {b:?}, belief {:?}", m.obs_name(z), est.belief().unwrap().entries());
            if m.successors(s, a) == [(s, 1.0)] {
                break;
            }
        }
    }
}
