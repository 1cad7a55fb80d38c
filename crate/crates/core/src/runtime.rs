//! Applying a shield at run time: switch-off schedules, masking, the
//! shielded random policy and per-episode violation accounting.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::RuntimeError;
use crate::estimator::{BeliefSupport, SupportId, SupportTracker};
use crate::model::{ActionId, ActionSet, Specification, StateId};
use crate::synth::Shield;

/// How likely the shield is applied at each step of a given episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ShieldSchedule {
    AlwaysOn,
    Off,
    /// On before episode `k0`, off from `k0`.
    SuddenOff { k0: usize },
    /// `p = max(0, 1 - alpha (k - k0))` from `k0` on.
    SmoothOff { k0: usize, alpha: f64 },
    Fixed { p: f64 },
}

impl ShieldSchedule {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ShieldSchedule::SmoothOff { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(format!("decay rate must be positive, got {alpha}"))
            }
            ShieldSchedule::Fixed { p } if !(0.0..=1.0).contains(&p) => Err(format!("shield probability {p} outside [0, 1]")),
            _ => Ok(()),
        }
    }

    /// Whether a shield is ever consulted.
    pub fn uses_shield(&self) -> bool {
        !matches!(self, ShieldSchedule::Off | ShieldSchedule::Fixed { p: 0.0 })
    }
}

impl FromStr for ShieldSchedule {
    type Err = String;

    /// `always-on`, `off`, `sudden:K`, `smooth:K:ALPHA` or `prob:P`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let int = |x: &str| x.parse::<usize>().map_err(|e| format!("bad episode index {x:?}: {e}"));
        let real = |x: &str| x.parse::<f64>().map_err(|e| format!("bad number {x:?}: {e}"));
        let sched = match parts.as_slice() {
            ["always-on"] | ["on"] => ShieldSchedule::AlwaysOn,
            ["off"] => ShieldSchedule::Off,
            ["sudden", k] => ShieldSchedule::SuddenOff { k0: int(k)? },
            ["smooth", k, alpha] => ShieldSchedule::SmoothOff { k0: int(k)?, alpha: real(alpha)? },
            ["prob", p] => ShieldSchedule::Fixed { p: real(p)? },
            _ => return Err(format!("unknown shield schedule {s:?}")),
        };
        sched.validate()?;
        Ok(sched)
    }
}

impl fmt::Display for ShieldSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShieldSchedule::AlwaysOn => write!(f, "always-on"),
            ShieldSchedule::Off => write!(f, "off"),
            ShieldSchedule::SuddenOff { k0 } => write!(f, "sudden:{k0}"),
            ShieldSchedule::SmoothOff { k0, alpha } => write!(f, "smooth:{k0}:{alpha}"),
            ShieldSchedule::Fixed { p } => write!(f, "prob:{p}"),
        }
    }
}

pub fn shield_probability(s: &ShieldSchedule, episode: usize) -> f64 {
    match *s {
        ShieldSchedule::AlwaysOn => 1.0,
        ShieldSchedule::Off => 0.0,
        ShieldSchedule::SuddenOff { k0 } => {
            if episode < k0 {
                1.0
            } else {
                0.0
            }
        }
        ShieldSchedule::SmoothOff { k0, alpha } => {
            if episode < k0 {
                1.0
            } else {
                (1.0 - alpha * (episode - k0) as f64).max(0.0)
            }
        }
        ShieldSchedule::Fixed { p } => p,
    }
}

/// `offered ∩ ν(b)` when active, `offered` otherwise.
pub fn mask_actions(sh: &Shield, b: &BeliefSupport, offered: ActionSet, active: bool) -> Result<ActionSet, RuntimeError> {
    if offered.is_empty() {
        return Err(RuntimeError::NoOfferedAction(b.clone()));
    }
    if !active {
        return Ok(offered);
    }
    let allowed = sh.allowed(b).ok_or_else(|| RuntimeError::SupportNotWinning(b.clone()))?;
    let mask = offered.intersection(allowed);
    if mask.is_empty() {
        return Err(RuntimeError::EmptyMask(b.clone()));
    }
    Ok(mask)
}

/// Result of one masking decision under a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub mask: ActionSet,
    /// The coin said "shield" and the shield had an entry.
    pub shielded: bool,
    /// The shield would have applied but the support is outside the winning
    /// region, so it abstained.
    pub abstained: bool,
}

/// Per-run cache of shield lookups keyed by tracker ids.
#[derive(Debug)]
pub struct ShieldGate<'s> {
    shield: Option<&'s Shield>,
    cache: Vec<Option<Option<ActionSet>>>,
}

impl<'s> ShieldGate<'s> {
    pub fn new(shield: Option<&'s Shield>) -> Self {
        ShieldGate { shield, cache: Vec::new() }
    }

    pub fn shield(&self) -> Option<&'s Shield> {
        self.shield
    }

    fn lookup(&mut self, tracker: &SupportTracker, id: SupportId) -> Option<ActionSet> {
        let sh = self.shield?;
        let i = id as usize;
        if self.cache.len() <= i {
            self.cache.resize(i + 1, None);
        }
        *self.cache[i].get_or_insert_with(|| sh.allowed(tracker.support(id)))
    }

    /// Flips the shield coin with probability `p` (no draw when `p` is 0 or
    /// 1) and masks the offered actions of support `id`.
    pub fn apply<R: Rng>(&mut self, tracker: &SupportTracker, id: SupportId, p: f64, rng: &mut R) -> Result<Gate, RuntimeError> {
        let offered = tracker.offered(id);
        if offered.is_empty() {
            return Err(RuntimeError::NoOfferedAction(tracker.support(id).clone()));
        }
        let active = self.shield.is_some() && (p >= 1.0 || (p > 0.0 && rng.gen_bool(p)));
        if !active {
            return Ok(Gate { mask: offered, shielded: false, abstained: false });
        }
        match self.lookup(tracker, id) {
            Some(allowed) => {
                let mask = offered.intersection(allowed);
                if mask.is_empty() {
                    return Err(RuntimeError::EmptyMask(tracker.support(id).clone()));
                }
                Ok(Gate { mask, shielded: true, abstained: false })
            }
            None => Ok(Gate { mask: offered, shielded: false, abstained: true }),
        }
    }
}

/// Uniform choice among the members of `set`.
pub fn uniform_action<R: Rng>(set: ActionSet, rng: &mut R) -> Option<ActionId> {
    if set.is_empty() {
        return None;
    }
    set.nth(rng.gen_range(0..set.len()))
}

/// Picks uniformly among the shield-allowed actions; fair and admissible.
#[derive(Debug)]
pub struct ShieldedRandomPolicy<'s> {
    shield: &'s Shield,
    rng: ChaCha8Rng,
}

impl<'s> ShieldedRandomPolicy<'s> {
    pub fn new(shield: &'s Shield, seed: u64) -> Self {
        ShieldedRandomPolicy { shield, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn choose(&mut self, b: &BeliefSupport, offered: ActionSet) -> Result<ActionId, RuntimeError> {
        let mask = mask_actions(self.shield, b, offered, true)?;
        Ok(uniform_action(mask, &mut self.rng).expect("mask is nonempty"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    During,
    After,
}

/// One flag per episode, kept separately for training and final evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ViolationLedger {
    during: Vec<bool>,
    after: Vec<bool>,
}

impl ViolationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Flags the episode iff any visited state is in AVOID; returns the flag.
    pub fn record_episode(&mut self, visited: impl IntoIterator<Item = StateId>, spec: &Specification, phase: Phase) -> bool {
        let violated = visited.into_iter().any(|s| spec.is_avoid(s));
        self.record_flag(violated, phase);
        violated
    }

    pub fn record_flag(&mut self, violated: bool, phase: Phase) {
        match phase {
            Phase::During => self.during.push(violated),
            Phase::After => self.after.push(violated),
        }
    }

    pub fn episodes(&self, phase: Phase) -> usize {
        self.flags(phase).len()
    }

    pub fn flags(&self, phase: Phase) -> &[bool] {
        match phase {
            Phase::During => &self.during,
            Phase::After => &self.after,
        }
    }

    pub fn total(&self, phase: Phase) -> usize {
        self.flags(phase).iter().filter(|&&v| v).count()
    }

    /// Resets the post-training block, which is re-measured at every
    /// evaluation.
    pub fn clear_after(&mut self) {
        self.after.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::SpecKind;
    use crate::synth::synthesize_default;

    fn t1_shield() -> Shield {
        let m = fixtures::t1();
        synthesize_default(&m, &Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap()).unwrap()
    }

    fn sup(ids: &[usize]) -> BeliefSupport {
        BeliefSupport::new(ids.iter().copied()).unwrap()
    }

    #[test]
    fn schedule_probabilities() {
        assert_eq!(shield_probability(&ShieldSchedule::AlwaysOn, 12345), 1.0);
        let sudden = ShieldSchedule::SuddenOff { k0: 1000 };
        assert_eq!(shield_probability(&sudden, 999), 1.0);
        assert_eq!(shield_probability(&sudden, 1000), 0.0);
        let smooth = ShieldSchedule::SmoothOff { k0: 1000, alpha: 0.001 };
        assert_eq!(shield_probability(&smooth, 1500), 0.5);
        assert_eq!(shield_probability(&smooth, 999), 1.0);
        assert_eq!(shield_probability(&smooth, 2500), 0.0);
        assert_eq!(shield_probability(&ShieldSchedule::Fixed { p: 0.3 }, 7), 0.3);
    }

    #[test]
    fn schedule_parsing() {
        for text in ["always-on", "off", "sudden:1000", "smooth:1000:0.001", "prob:0.5"] {
            let s: ShieldSchedule = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
        assert!("smooth:10:0".parse::<ShieldSchedule>().is_err());
        assert!("prob:1.5".parse::<ShieldSchedule>().is_err());
        assert!("sometimes".parse::<ShieldSchedule>().is_err());
    }

    #[test]
    fn masking() {
        let sh = t1_shield();
        let ab = ActionSet::full(2);
        assert_eq!(mask_actions(&sh, &sup(&[0, 1]), ab, true).unwrap(), ActionSet::singleton(0));
        assert_eq!(mask_actions(&sh, &sup(&[0, 1]), ab, false).unwrap(), ab);
        assert_eq!(mask_actions(&sh, &sup(&[2]), ab, true).unwrap_err(), RuntimeError::SupportNotWinning(sup(&[2])));
        assert!(matches!(mask_actions(&sh, &sup(&[1]), ActionSet::EMPTY, true), Err(RuntimeError::NoOfferedAction(_))));
    }

    #[test]
    fn gate_abstains_outside_region() {
        let m = fixtures::t1();
        let sh = t1_shield();
        let mut tracker = SupportTracker::new(&m);
        let mut gate = ShieldGate::new(Some(&sh));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = tracker.intern(sup(&[2]));
        let g = gate.apply(&tracker, bad, 1.0, &mut rng).unwrap();
        assert!(g.abstained && !g.shielded);
        let start = tracker.intern(sup(&[0, 1]));
        let g = gate.apply(&tracker, start, 1.0, &mut rng).unwrap();
        assert_eq!(g.mask, ActionSet::singleton(0));
        let g = gate.apply(&tracker, start, 0.0, &mut rng).unwrap();
        assert_eq!(g.mask, ActionSet::full(2));
    }

    #[test]
    fn shielded_random_is_seed_deterministic() {
        let sh = t1_shield();
        let draw = |seed| {
            let mut p = ShieldedRandomPolicy::new(&sh, seed);
            (0..50).map(|_| p.choose(&sup(&[1]), ActionSet::full(2)).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert!(draw(7).contains(&0) && draw(7).contains(&1));
    }

    #[test]
    fn ledger_counts_once_per_episode() {
        let spec = Specification::reach_avoid([3], [2]).unwrap();
        let mut l = ViolationLedger::new();
        assert!(l.record_episode([0, 2, 2, 0, 2], &spec, Phase::During));
        assert!(!l.record_episode([0, 1, 3], &spec, Phase::During));
        assert!(!l.record_episode([], &spec, Phase::After));
        assert_eq!(l.total(Phase::During), 1);
        assert_eq!(l.total(Phase::After), 0);
        assert_eq!(l.episodes(Phase::During), 2);
    }
}
