use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::BeliefSupport;
use crate::model::{ActionSet, ObsId, Pomdp};

/// What the agent sees at each step. Every variant carries a bias feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureRepr {
    /// One-hot of the current observation.
    Observation,
    /// Indicator of every state in the belief support.
    Support,
    /// Observation, support and the current action mask side by side.
    Stacked,
}

impl FeatureRepr {
    pub const ALL: [FeatureRepr; 3] = [FeatureRepr::Observation, FeatureRepr::Support, FeatureRepr::Stacked];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureRepr::Observation => "obs",
            FeatureRepr::Support => "support",
            FeatureRepr::Stacked => "stacked",
        }
    }
}

impl fmt::Display for FeatureRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureRepr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "obs" | "observation" | "observation-onehot" => Ok(FeatureRepr::Observation),
            "support" | "support-bitvector" => Ok(FeatureRepr::Support),
            "stacked" => Ok(FeatureRepr::Stacked),
            other => Err(format!("unknown representation {other:?} (expected obs, support or stacked)")),
        }
    }
}

/// Sparse binary features: the list of active indices, bias first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    repr: FeatureRepr,
    num_obs: usize,
    num_states: usize,
    num_actions: usize,
}

impl FeatureMap {
    pub fn new(repr: FeatureRepr, m: &Pomdp) -> Self {
        FeatureMap { repr, num_obs: m.num_observations(), num_states: m.num_states(), num_actions: m.num_actions() }
    }

    pub fn repr(&self) -> FeatureRepr {
        self.repr
    }

    pub fn dim(&self) -> usize {
        1 + match self.repr {
            FeatureRepr::Observation => self.num_obs,
            FeatureRepr::Support => self.num_states,
            FeatureRepr::Stacked => self.num_obs + self.num_states + self.num_actions,
        }
    }

    /// Writes the active indices into `out` (cleared first), sorted.
    pub fn encode(&self, z: ObsId, b: &BeliefSupport, mask: ActionSet, out: &mut Vec<u32>) {
        out.clear();
        out.push(0);
        let obs = |out: &mut Vec<u32>| out.push(1 + z as u32);
        let support = |out: &mut Vec<u32>, base: usize| out.extend(b.states().iter().map(|&s| (base + s) as u32));
        match self.repr {
            FeatureRepr::Observation => obs(out),
            FeatureRepr::Support => support(out, 1),
            FeatureRepr::Stacked => {
                obs(out);
                support(out, 1 + self.num_obs);
                let base = 1 + self.num_obs + self.num_states;
                out.extend(mask.iter().map(|a| (base + a) as u32));
            }
        }
    }

    pub fn features(&self, z: ObsId, b: &BeliefSupport, mask: ActionSet) -> Vec<u32> {
        let mut out = Vec::new();
        self.encode(z, b, mask, &mut out);
        out
    }
}
