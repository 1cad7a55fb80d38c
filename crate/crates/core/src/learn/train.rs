//! The training loop: agents act through the shield gate, evaluations run
//! the greedy policy on the sparse reward.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curve::{CurveRow, EpisodeFlag, LearningCurve};
use super::features::{FeatureMap, FeatureRepr};
use super::qlearning::{q_update, QTable, Transition};
use super::reinforce::{reinforce_update, SoftmaxPolicy, Step};
use crate::domains::{shaped_reward, GeneratedDomain, RewardVariant};
use crate::error::LearnError;
use crate::estimator::SupportTracker;
use crate::model::{ActionId, ActionSet};
use crate::runtime::{shield_probability, uniform_action, Phase, ShieldGate, ShieldSchedule};
use crate::sim::{sample_initial, sample_step};
use crate::synth::Shield;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agent {
    Reinforce,
    QLearning,
}

impl Agent {
    pub fn as_str(self) -> &'static str {
        match self {
            Agent::Reinforce => "reinforce",
            Agent::QLearning => "qlearning",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reinforce" => Ok(Agent::Reinforce),
            "qlearning" | "q-learning" => Ok(Agent::QLearning),
            other => Err(format!("unknown agent {other:?} (expected reinforce or qlearning)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub agent: Agent,
    pub episodes: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    /// Exploration rate of Q-learning; unused by REINFORCE.
    pub epsilon: f64,
    pub seed: u64,
    pub schedule: ShieldSchedule,
    pub repr: FeatureRepr,
    /// Overrides the domain's episode cap.
    pub episode_cap: Option<usize>,
}

impl TrainConfig {
    pub fn new(agent: Agent) -> Self {
        let learning_rate = match agent {
            Agent::Reinforce => 0.1,
            Agent::QLearning => 0.2,
        };
        TrainConfig {
            agent,
            episodes: 5000,
            eval_interval: 100,
            eval_episodes: 10,
            gamma: 1.0,
            learning_rate,
            epsilon: 0.1,
            seed: 0,
            schedule: ShieldSchedule::AlwaysOn,
            repr: FeatureRepr::Support,
            episode_cap: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes;
        self
    }

    pub fn with_schedule(mut self, schedule: ShieldSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_repr(mut self, repr: FeatureRepr) -> Self {
        self.repr = repr;
        self
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: String| Err(LearnError::ConfigInvalid(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("discount {} outside [0, 1]", self.gamma));
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return bad("evaluation interval and episode count must be positive".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("exploration rate {} outside [0, 1]", self.epsilon));
        }
        if self.episode_cap == Some(0) {
            return bad("episode cap must be at least 1".into());
        }
        self.schedule.validate().map_err(LearnError::ConfigInvalid)
    }
}

/// What the learner sees at one decision.
struct Decision {
    x: Vec<u32>,
    mask: ActionSet,
}

struct Outcome {
    sparse_return: f64,
    violated: bool,
}

/// Environment, estimator and shield gate of one run.
struct Runner<'a> {
    d: &'a GeneratedDomain,
    fm: FeatureMap,
    tracker: SupportTracker<'a>,
    gate: ShieldGate<'a>,
    cap: usize,
    dense: bool,
    scale: f64,
}

impl<'a> Runner<'a> {
    fn decide(&mut self, b: u32, z: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Decision, LearnError> {
        let g = self.gate.apply(&self.tracker, b, p, rng)?;
        Ok(Decision { x: self.fm.features(z, self.tracker.support(b), g.mask), mask: g.mask })
    }

    /// Runs one episode. `act` picks an action; `learn` sees every step
    /// with the learner's reward and the next decision (none once the
    /// episode ended in a terminal state).
    fn episode<A, L>(&mut self, p: f64, rng: &mut ChaCha8Rng, mut act: A, mut learn: L) -> Result<Outcome, LearnError>
    where
        A: FnMut(&Decision, &mut ChaCha8Rng) -> ActionId,
        L: FnMut(&Decision, ActionId, f64, Option<&Decision>),
    {
        let m = &self.d.pomdp;
        let (mut s, z) = sample_initial(m, rng);
        let mut b = self.tracker.initial(z)?;
        let mut out = Outcome { sparse_return: 0.0, violated: self.d.spec.is_avoid(s) };
        let mut cur = if self.d.terminal[s] { None } else { Some(self.decide(b, z, p, rng)?) };
        let mut steps = 0;
        while let Some(dec) = cur.take() {
            let a = act(&dec, rng);
            let (t, z2, r) = sample_step(m, s, a, rng);
            let r_learn = if self.dense { shaped_reward(self.d, s, a, t) } else { r } * self.scale;
            b = self.tracker.update(b, a, z2)?;
            out.sparse_return += r;
            out.violated |= self.d.spec.is_avoid(t);
            steps += 1;
            let next = if self.d.terminal[t] { None } else { Some(self.decide(b, z2, p, rng)?) };
            learn(&dec, a, r_learn, next.as_ref());
            s = t;
            if steps < self.cap {
                cur = next;
            }
        }
        Ok(out)
    }
}

enum Learner {
    Reinforce(SoftmaxPolicy),
    Q(QTable),
}

impl Learner {
    fn greedy(&self, d: &Decision) -> ActionId {
        match self {
            Learner::Reinforce(pi) => pi.mode(&d.x, d.mask),
            Learner::Q(q) => q.greedy(&d.x, d.mask),
        }
    }
}

/// Trains the configured agent on `d`. Every action is chosen from the mask
/// the schedule's shield gate allows; the result is a pure function of the
/// inputs and `cfg.seed`.
pub fn train(d: &GeneratedDomain, sh: Option<&Shield>, cfg: &TrainConfig) -> Result<LearningCurve, LearnError> {
    cfg.validate()?;
    let shield = if cfg.schedule.uses_shield() {
        let sh = sh.ok_or_else(|| LearnError::ConfigInvalid(format!("schedule {} needs a shield", cfg.schedule)))?;
        if !sh.matches_graph(&d.pomdp) {
            return Err(LearnError::ConfigInvalid("shield was synthesized for a different model".into()));
        }
        Some(sh)
    } else {
        None
    };
    let m = &d.pomdp;
    let fm = FeatureMap::new(cfg.repr, m);
    let mut run = Runner {
        d,
        fm,
        tracker: SupportTracker::new(m),
        gate: ShieldGate::new(shield),
        cap: cfg.episode_cap.unwrap_or(d.config.episode_cap),
        dense: d.config.reward_variant == RewardVariant::Dense,
        scale: 1.0 / d.normalization.scale,
    };
    let mut learner = match cfg.agent {
        Agent::Reinforce => Learner::Reinforce(SoftmaxPolicy::new(fm.dim(), m.num_actions())),
        Agent::QLearning => Learner::Q(QTable::new(m.num_actions())),
    };
    let mut train_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    eval_rng.set_stream(1);

    let mut curve = LearningCurve::default();
    let mut viol_after_total = 0;
    for k in 0..cfg.episodes {
        let p = shield_probability(&cfg.schedule, k);
        let out = match &mut learner {
            Learner::Reinforce(pi) => {
                let mut steps: Vec<Step> = Vec::new();
                let out = run.episode(
                    p,
                    &mut train_rng,
                    |dec, rng| pi.sample(&dec.x, dec.mask, rng),
                    |dec, a, r, _| steps.push(Step { features: dec.x.clone(), mask: dec.mask, action: a, reward: r }),
                )?;
                reinforce_update(pi, &steps, cfg.gamma, cfg.learning_rate)
                    .map_err(|detail| LearnError::NonFinite { episode: k, detail })?;
                out
            }
            Learner::Q(q) => {
                let q = std::cell::RefCell::new(q);
                run.episode(
                    p,
                    &mut train_rng,
                    |dec, rng| q.borrow().epsilon_greedy(&dec.x, dec.mask, cfg.epsilon, rng),
                    |dec, a, r, next| {
                        let t = Transition { x: &dec.x, a, r, next: next.map(|n| (n.x.as_slice(), n.mask)) };
                        q_update(&mut q.borrow_mut(), &t, cfg.gamma, cfg.learning_rate);
                    },
                )?
            }
        };
        if out.violated {
            curve.violations_during += 1;
        }
        curve.flags.push(EpisodeFlag { episode: k, violated: out.violated, phase: Phase::During, p_shield: p });

        if (k + 1) % cfg.eval_interval == 0 {
            let mut total = 0.0;
            let mut block_violations = 0;
            for _ in 0..cfg.eval_episodes {
                let out = run.episode(p, &mut eval_rng, |dec, _| learner.greedy(dec), |_, _, _, _| {})?;
                total += out.sparse_return;
                block_violations += usize::from(out.violated);
                curve.flags.push(EpisodeFlag { episode: k, violated: out.violated, phase: Phase::After, p_shield: p });
            }
            viol_after_total += block_violations;
            curve.violations_after = block_violations;
            let ret = total / cfg.eval_episodes as f64;
            curve.rows.push(CurveRow {
                idx: k + 1,
                ret,
                norm_return: d.normalization.apply(ret),
                smooth_norm: 0.0,
                viol_during: curve.violations_during,
                viol_after: viol_after_total,
                p_shield: p,
            });
        }
    }
    curve.finish();
    Ok(curve)
}

/// Uniform-random policy over the offered actions, or over the shield's
/// allowed actions when `sh` is given. Produces one row per evaluation
/// block of `cfg` with the same index grid as [`train`]; all of its
/// episodes count as evaluation episodes.
pub fn random_baseline(d: &GeneratedDomain, sh: Option<&Shield>, cfg: &TrainConfig) -> Result<LearningCurve, LearnError> {
    cfg.validate()?;
    if let Some(sh) = sh {
        if !sh.matches_graph(&d.pomdp) {
            return Err(LearnError::ConfigInvalid("shield was synthesized for a different model".into()));
        }
    }
    let m = &d.pomdp;
    let mut run = Runner {
        d,
        fm: FeatureMap::new(FeatureRepr::Observation, m),
        tracker: SupportTracker::new(m),
        gate: ShieldGate::new(sh),
        cap: cfg.episode_cap.unwrap_or(d.config.episode_cap),
        dense: false,
        scale: 1.0,
    };
    let p = if sh.is_some() { 1.0 } else { 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut curve = LearningCurve::default();
    let mut viol_total = 0;
    for block in 0..cfg.episodes / cfg.eval_interval {
        let idx = (block + 1) * cfg.eval_interval;
        let mut total = 0.0;
        let mut violations = 0;
        for _ in 0..cfg.eval_episodes {
            let out = run.episode(p, &mut rng, |dec, rng| uniform_action(dec.mask, rng).expect("mask is nonempty"), |_, _, _, _| {})?;
            total += out.sparse_return;
            violations += usize::from(out.violated);
            curve.flags.push(EpisodeFlag { episode: idx - 1, violated: out.violated, phase: Phase::After, p_shield: p });
        }
        viol_total += violations;
        curve.violations_after = violations;
        let ret = total / cfg.eval_episodes as f64;
        curve.rows.push(CurveRow {
            idx,
            ret,
            norm_return: d.normalization.apply(ret),
            smooth_norm: 0.0,
            viol_during: 0,
            viol_after: viol_total,
            p_shield: p,
        });
    }
    curve.finish();
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{generate_default, DomainName};
    use crate::synth::synthesize_default;

    fn obstacle() -> (GeneratedDomain, Shield) {
        let d = generate_default(DomainName::Obstacle);
        let sh = synthesize_default(&d.pomdp, &d.spec).unwrap();
        (d, sh)
    }

    #[test]
    fn zero_episodes_give_an_empty_curve() {
        let (d, sh) = obstacle();
        let c = train(&d, Some(&sh), &TrainConfig::new(Agent::Reinforce).with_episodes(0)).unwrap();
        assert!(c.is_empty() && c.flags.is_empty());
    }

    #[test]
    fn always_on_never_violates() {
        let (d, sh) = obstacle();
        for agent in [Agent::Reinforce, Agent::QLearning] {
            let c = train(&d, Some(&sh), &TrainConfig::new(agent).with_episodes(300).with_seed(4)).unwrap();
            assert_eq!(c.rows.len(), 3);
            assert!(c.rows.iter().all(|r| r.viol_during == 0 && r.viol_after == 0));
            assert!(c.flags.iter().all(|f| !f.violated));
        }
    }

    #[test]
    fn unshielded_training_violates() {
        let (d, _) = obstacle();
        let cfg = TrainConfig::new(Agent::Reinforce).with_episodes(200).with_schedule(ShieldSchedule::Off);
        assert!(train(&d, None, &cfg).unwrap().violations_during > 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let (d, sh) = obstacle();
        let cfg = TrainConfig::new(Agent::QLearning).with_episodes(200).with_seed(9).with_schedule(ShieldSchedule::SmoothOff { k0: 50, alpha: 0.01 });
        let a = train(&d, Some(&sh), &cfg).unwrap();
        let b = train(&d, Some(&sh), &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.ledger_csv(), b.ledger_csv());
    }

    #[test]
    fn config_errors() {
        let (d, sh) = obstacle();
        let mut cfg = TrainConfig::new(Agent::Reinforce);
        cfg.gamma = 1.5;
        assert!(matches!(train(&d, Some(&sh), &cfg), Err(LearnError::ConfigInvalid(_))));
        let cfg = TrainConfig::new(Agent::Reinforce);
        assert!(matches!(train(&d, None, &cfg), Err(LearnError::ConfigInvalid(_))));
        let other = generate_default(DomainName::Refuel);
        assert!(matches!(train(&other, Some(&sh), &cfg), Err(LearnError::ConfigInvalid(_))));
    }

    #[test]
    fn shielded_baseline_is_safe() {
        let (d, sh) = obstacle();
        let cfg = TrainConfig::new(Agent::Reinforce).with_episodes(1000);
        let c = random_baseline(&d, Some(&sh), &cfg).unwrap();
        assert_eq!(c.rows.len(), 10);
        assert_eq!(c.rows.last().unwrap().viol_after, 0);
        let c = random_baseline(&d, None, &cfg).unwrap();
        assert!(c.rows.last().unwrap().viol_after > 0);
    }

    #[test]
    fn agent_names_parse() {
        for a in [Agent::Reinforce, Agent::QLearning] {
            assert_eq!(a.as_str().parse::<Agent>().unwrap(), a);
        }
    }
}
