//! Generators for the six grid benchmarks.
//!
//! Each generator documents its layout in its own module. All of them share
//! the same shape: goal and failure states are pre-terminal and lead to one
//! absorbing `sink` (label `terminal`), the reach-avoid specification is
//! read from the `reach`/`avoid` labels, and a potential `φ = -distance to
//! the domain's target` is attached for dense reward shaping.

mod avoid;
mod builder;
mod evade;
mod intercept;
mod obstacle;
mod refuel;
mod rocks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::model::{ActionId, Pomdp, Specification, StateId};
use crate::sim::terminal_states;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainName {
    Refuel,
    Obstacle,
    Avoid,
    Evade,
    Intercept,
    Rocks,
}

impl DomainName {
    pub const ALL: [DomainName; 6] =
        [DomainName::Refuel, DomainName::Obstacle, DomainName::Avoid, DomainName::Evade, DomainName::Intercept, DomainName::Rocks];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainName::Refuel => "refuel",
            DomainName::Obstacle => "obstacle",
            DomainName::Avoid => "avoid",
            DomainName::Evade => "evade",
            DomainName::Intercept => "intercept",
            DomainName::Rocks => "rocks",
        }
    }

    /// State count of the reference encoding of this benchmark at default
    /// parameters. Only informational; our layouts differ.
    pub fn reference_states(self) -> usize {
        match self {
            DomainName::Refuel => 270,
            DomainName::Obstacle => 37,
            DomainName::Avoid => 5976,
            DomainName::Evade => 4232,
            DomainName::Intercept => 4705,
            DomainName::Rocks => 331,
        }
    }

    /// Affine map sending the best achievable return to 1.
    pub fn normalization(self) -> Normalization {
        match self {
            DomainName::Rocks => Normalization { offset: 10.0, scale: 30.0 },
            DomainName::Refuel | DomainName::Evade => Normalization { offset: 0.0, scale: 10.0 },
            DomainName::Avoid | DomainName::Intercept | DomainName::Obstacle => Normalization { offset: 1000.0, scale: 2000.0 },
        }
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainName {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainName::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| DomainError::UnknownDomain(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardVariant {
    #[default]
    Sparse,
    Dense,
}

impl FromStr for RewardVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(RewardVariant::Sparse),
            "dense" | "dense-shaped" => Ok(RewardVariant::Dense),
            other => Err(format!("unknown reward variant {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw + self.offset) / self.scale
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainConfig {
    pub name: DomainName,
    pub n: usize,
    /// Vision radius (avoid, evade, intercept).
    pub radius: usize,
    /// Battery capacity (refuel).
    pub energy: usize,
    pub episode_cap: usize,
    pub reward_variant: RewardVariant,
}

impl DomainConfig {
    /// Default parameters of each benchmark.
    pub fn new(name: DomainName) -> Self {
        let (n, radius, energy, episode_cap) = match name {
            DomainName::Refuel => (6, 0, 8, 100),
            DomainName::Obstacle => (6, 0, 0, 100),
            DomainName::Avoid => (6, 3, 0, 100),
            DomainName::Evade => (6, 2, 0, 350),
            DomainName::Intercept => (7, 1, 0, 100),
            DomainName::Rocks => (6, 0, 0, 100),
        };
        DomainConfig { name, n, radius, energy, episode_cap, reward_variant: RewardVariant::Sparse }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_energy(mut self, energy: usize) -> Self {
        self.energy = energy;
        self
    }

    pub fn with_episode_cap(mut self, cap: usize) -> Self {
        self.episode_cap = cap;
        self
    }

    pub fn with_reward(mut self, variant: RewardVariant) -> Self {
        self.reward_variant = variant;
        self
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |msg: String| Err(DomainError::UnsupportedParameter(msg));
        let min_n = match self.name {
            DomainName::Obstacle | DomainName::Refuel => 3,
            DomainName::Rocks | DomainName::Evade => 4,
            DomainName::Avoid | DomainName::Intercept => 5,
        };
        if self.n < min_n {
            return bad(format!("{} needs a grid of at least {min_n}, got {}", self.name, self.n));
        }
        if self.n > 12 {
            return bad(format!("grid size {} is beyond the explicit-state budget (at most 12)", self.n));
        }
        if self.radius >= self.n {
            return bad(format!("radius {} must be smaller than the grid size {}", self.radius, self.n));
        }
        if self.name == DomainName::Refuel && self.energy < 2 {
            return bad(format!("refuel needs an energy capacity of at least 2, got {}", self.energy));
        }
        if self.episode_cap == 0 {
            return bad("episode cap must be at least 1".into());
        }
        Ok(())
    }
}

/// A benchmark instance ready for synthesis and learning.
#[derive(Clone, Debug)]
pub struct GeneratedDomain {
    pub config: DomainConfig,
    pub pomdp: Pomdp,
    pub spec: Specification,
    pub normalization: Normalization,
    /// Shaping potential per state; the sink has 0.
    pub potential: Vec<f64>,
    /// States that end an episode (the sink).
    pub terminal: Vec<bool>,
}

impl GeneratedDomain {
    pub fn name(&self) -> DomainName {
        self.config.name
    }
}

pub fn generate(c: &DomainConfig) -> Result<GeneratedDomain, DomainError> {
    c.validate()?;
    let built = match c.name {
        DomainName::Refuel => builder::build(&refuel::Refuel::new(c.n, c.energy))?,
        DomainName::Obstacle => builder::build(&obstacle::Obstacle::new(c.n))?,
        DomainName::Avoid => builder::build(&avoid::Avoid::new(c.n, c.radius))?,
        DomainName::Evade => builder::build(&evade::Evade::new(c.n, c.radius))?,
        DomainName::Intercept => builder::build(&intercept::Intercept::new(c.n, c.radius))?,
        DomainName::Rocks => builder::build(&rocks::Rocks::new(c.n))?,
    };
    let terminal = terminal_states(&built.pomdp, &built.spec);
    Ok(GeneratedDomain {
        config: c.clone(),
        pomdp: built.pomdp,
        spec: built.spec,
        normalization: c.name.normalization(),
        potential: built.potential,
        terminal,
    })
}

/// Default-parameter instance of `name`.
pub fn generate_default(name: DomainName) -> GeneratedDomain {
    generate(&DomainConfig::new(name)).expect("default parameters are valid")
}

pub fn normalize_return(d: &GeneratedDomain, raw_return: f64) -> f64 {
    d.normalization.apply(raw_return)
}

/// Shaped reward of the transition `s -a-> next`: the sparse reward plus
/// `φ(next) - φ(s)`, except that entering a terminal state adds nothing. The
/// shaping terms of an episode therefore sum to `φ(last) - φ(first)` over
/// its non-terminal states.
pub fn dense_reward(d: &GeneratedDomain, s: StateId, a: ActionId, next: StateId) -> Result<f64, DomainError> {
    if d.config.reward_variant != RewardVariant::Dense {
        return Err(DomainError::VariantMismatch);
    }
    Ok(shaped_reward(d, s, a, next))
}

/// [`dense_reward`] without the variant check.
pub fn shaped_reward(d: &GeneratedDomain, s: StateId, a: ActionId, next: StateId) -> f64 {
    let r = d.pomdp.reward(s, a);
    if d.terminal[next] {
        r
    } else {
        r + d.potential[next] - d.potential[s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::format::{parse_model, serialize_model};
    use crate::sim::sample_initial;
    use crate::sim::sample_step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn obstacle_has_cells_plus_sink() {
        let d = generate_default(DomainName::Obstacle);
        assert_eq!(d.pomdp.num_states(), 37);
        let traps = obstacle::Obstacle::new(6).traps().to_vec();
        assert_eq!(traps.len(), 4);
        assert!(traps.iter().all(|&(x, y)| y >= 1 && x <= 4 && !(x <= 1 && y <= 1)));
        assert_eq!(d.spec.avoid().len(), 4);
        assert_eq!(d.spec.reach().len(), 1);
    }

    #[test]
    fn default_caps() {
        assert_eq!(DomainConfig::new(DomainName::Evade).episode_cap, 350);
        for name in DomainName::ALL.into_iter().filter(|&n| n != DomainName::Evade) {
            assert_eq!(DomainConfig::new(name).episode_cap, 100, "{name}");
        }
    }

    #[test]
    fn rocks_reward_constants() {
        let d = generate_default(DomainName::Rocks);
        let m = &d.pomdp;
        let mut rewards: Vec<f64> =
            (0..m.num_states()).flat_map(|s| (0..m.num_actions()).map(move |a| m.reward(s, a))).filter(|&r| r != 0.0).collect();
        rewards.sort_by(f64::total_cmp);
        rewards.dedup();
        assert_eq!(rewards, vec![-10.0, 10.0]);
        // the +10 for a good rock and the +10 for delivery sit on different actions
        let collect = m.action_id("collect").unwrap();
        let deliveries = d.spec.reach().iter().filter(|&&s| (0..m.num_actions()).all(|a| m.reward(s, a) == 10.0)).count();
        assert_eq!(deliveries, d.spec.reach().len());
        assert!((0..m.num_states()).any(|s| m.reward(s, collect) == 10.0 && !d.spec.is_reach(s)));
        assert!((0..m.num_states()).any(|s| m.reward(s, collect) == -10.0));
    }

    #[test]
    fn normalization_examples() {
        let at = |name, raw| normalize_return(&generate_default(name), raw);
        assert_eq!(at(DomainName::Refuel, 10.0), 1.0);
        assert_eq!(at(DomainName::Rocks, 20.0), 1.0);
        assert_eq!(at(DomainName::Avoid, -1000.0), 0.0);
        assert_eq!(at(DomainName::Evade, 10.0), 1.0);
        assert_eq!(at(DomainName::Obstacle, 1000.0), 1.0);
        assert_eq!(at(DomainName::Intercept, 1000.0 - 10.0), 0.995);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = DomainConfig::new(DomainName::Evade).with_radius(6);
        assert!(matches!(generate(&c), Err(DomainError::UnsupportedParameter(_))));
        let c = DomainConfig::new(DomainName::Refuel).with_energy(0);
        assert!(matches!(generate(&c), Err(DomainError::UnsupportedParameter(_))));
        let c = DomainConfig::new(DomainName::Avoid).with_n(1);
        assert!(matches!(generate(&c), Err(DomainError::UnsupportedParameter(_))));
        assert!(matches!("maze".parse::<DomainName>(), Err(DomainError::UnknownDomain(_))));
    }

    #[test]
    fn generation_is_deterministic_and_reparseable() {
        for name in DomainName::ALL {
            let a = generate_default(name);
            let b = generate_default(name);
            let text = serialize_model(&a.pomdp);
            assert_eq!(text, serialize_model(&b.pomdp), "{name}");
            assert_eq!(parse_model(&text).unwrap(), a.pomdp, "{name}");
        }
    }

    #[test]
    fn dense_reward_requires_dense_variant() {
        let d = generate_default(DomainName::Obstacle);
        assert_eq!(dense_reward(&d, 0, 0, 0), Err(DomainError::VariantMismatch));
    }

    #[test]
    fn shaping_one_step_onto_target() {
        let d = generate(&DomainConfig::new(DomainName::Refuel).with_reward(RewardVariant::Dense)).unwrap();
        let m = &d.pomdp;
        let s = m.state_id("r5_4_e3").unwrap();
        let goal = m.state_id("r5_5_e2").unwrap();
        let north = m.action_id("north").unwrap();
        assert_eq!(dense_reward(&d, s, north, goal).unwrap() - m.reward(s, north), 1.0);
        let sink = m.state_id("sink").unwrap();
        assert_eq!(dense_reward(&d, goal, north, sink).unwrap(), m.reward(goal, north));
    }

    #[test]
    fn shaping_telescopes_on_random_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in DomainName::ALL {
            let d = generate(&DomainConfig::new(name).with_reward(RewardVariant::Dense)).unwrap();
            let m = &d.pomdp;
            for _ in 0..50 {
                let (mut s, _) = sample_initial(m, &mut rng);
                let first = s;
                let mut last = s;
                let mut shaping = 0.0;
                for _ in 0..200 {
                    if d.terminal[s] {
                        break;
                    }
                    let a = rng.gen_range(0..m.num_actions());
                    let (t, _, r) = sample_step(m, s, a, &mut rng);
                    shaping += dense_reward(&d, s, a, t).unwrap() - r;
                    if !d.terminal[t] {
                        last = t;
                    }
                    s = t;
                }
                let expected = d.potential[last] - d.potential[first];
                assert!((shaping - expected).abs() < 1e-9, "{name}: {shaping} vs {expected}");
            }
        }
    }

    #[test]
    fn every_default_domain_is_shieldable() {
        for name in DomainName::ALL {
            let d = generate_default(name);
            let sh = crate::synth::synthesize_default(&d.pomdp, &d.spec).unwrap();
            assert!(sh.initial_not_winning().is_empty(), "{name}");
            assert!(!sh.is_empty(), "{name}");
        }
    }
}
