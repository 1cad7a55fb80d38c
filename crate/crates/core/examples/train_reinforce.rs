//! Shielded and unshielded REINFORCE on Obstacle.

use beliefshield::domains::{generate_default, DomainName};
use beliefshield::learn::{train, Agent, FeatureRepr, TrainConfig};
use beliefshield::runtime::ShieldSchedule;
use beliefshield::synth::synthesize_default;

fn main() {
    let d = generate_default(DomainName::Obstacle);
    let sh = synthesize_default(&d.pomdp, &d.spec).unwrap();
    let base = TrainConfig::new(Agent::Reinforce).with_repr(FeatureRepr::Support).with_episodes(3000).with_seed(3);
    for schedule in [ShieldSchedule::AlwaysOn, ShieldSchedule::Off] {
        let cfg = base.clone().with_schedule(schedule.clone());
        let shield = schedule.uses_shield().then_some(&sh);
        let curve = train(&d, shield, &cfg).unwrap();
        println!("schedule {schedule}");
        for row in curve.rows.iter().step_by(5) {
            println!("  episode {:>5}  return {:>8.1}  smoothed {:.3}", row.idx, row.ret, row.smooth_norm);
        }
        println!("  violations during training {}", curve.violations_during);
    }
}
