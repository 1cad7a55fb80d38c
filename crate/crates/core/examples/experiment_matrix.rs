//! A small experiment matrix written to a directory with a manifest.
//!
//!     cargo run --release --example experiment_matrix -- /tmp/bundle

use std::path::PathBuf;

use beliefshield::domains::{DomainConfig, DomainName};
use beliefshield::learn::{run_matrix, Agent, Condition, FeatureRepr, MatrixSpec, TrainConfig};
use beliefshield::runtime::ShieldSchedule;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("beliefshield-matrix"));
    let mut conditions = Vec::new();
    for agent in [Agent::Reinforce, Agent::QLearning] {
        for schedule in [ShieldSchedule::AlwaysOn, ShieldSchedule::Off] {
            conditions.push(Condition::new(agent, schedule, FeatureRepr::Support));
        }
    }
    let spec = MatrixSpec {
        domains: vec![DomainConfig::new(DomainName::Refuel), DomainConfig::new(DomainName::Rocks)],
        conditions,
        seeds: vec![0, 1, 2],
        base: TrainConfig::new(Agent::Reinforce).with_episodes(1000),
    };
    let bundle = run_matrix(&spec);
    for f in &bundle.failures {
        eprintln!("failed: {f:?}");
    }
    print!("{}", bundle.aggregate_csv());
    let manifest = bundle.write(&out).expect("bundle directory is writable");
    println!("wrote {} cell curves and {} baselines to {}", manifest.cells.len(), manifest.baselines.len(), out.display());
}
