use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::estimator::{initial_supports, BeliefSupport};
use crate::model::{ActionSet, Pomdp, SpecKind, Specification, StateId};
use crate::synth::support_mdp::{build_support_mdp, DEFAULT_MAX_NODES};
use crate::synth::winning::{compute_winning, WinningRegion};

const FORMAT_TAG: &str = "beliefshield-shield/1";

/// Synthesis metadata carried in the shield file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisStats {
    pub support_nodes: usize,
    pub winning: usize,
    pub rounds: usize,
}

/// A permissive policy: every winning support mapped to its allowed actions.
#[derive(Clone, Debug, PartialEq)]
pub struct Shield {
    spec: Specification,
    action_names: Vec<String>,
    table: BTreeMap<BeliefSupport, ActionSet>,
    fingerprint: String,
    initial_not_winning: Vec<BeliefSupport>,
    stats: SynthesisStats,
}

/// Builds the support MDP and computes the winning region for `spec.kind()`.
pub fn synthesize(m: &Pomdp, spec: &Specification, max_nodes: usize) -> Result<Shield, SynthError> {
    let g = build_support_mdp(m, spec, max_nodes)?;
    Ok(extract_shield(&compute_winning(&g), spec, m))
}

/// [`synthesize`] with the default node cap.
pub fn synthesize_default(m: &Pomdp, spec: &Specification) -> Result<Shield, SynthError> {
    synthesize(m, spec, DEFAULT_MAX_NODES)
}

pub fn extract_shield(w: &WinningRegion, spec: &Specification, m: &Pomdp) -> Shield {
    let mut initial_not_winning: Vec<_> =
        initial_supports(m).into_iter().map(|(_, b)| b).filter(|b| !w.contains(b)).collect();
    initial_not_winning.sort();
    initial_not_winning.dedup();
    Shield {
        spec: spec.clone(),
        action_names: m.action_names().to_vec(),
        table: w.table().clone(),
        fingerprint: m.graph_fingerprint(),
        initial_not_winning,
        stats: SynthesisStats { support_nodes: w.support_nodes(), winning: w.len(), rounds: w.rounds() },
    }
}

impl Shield {
    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn allowed(&self, b: &BeliefSupport) -> Option<ActionSet> {
        self.table.get(b).copied()
    }

    pub fn is_winning(&self, b: &BeliefSupport) -> bool {
        self.table.contains_key(b)
    }

    pub fn table(&self) -> &BTreeMap<BeliefSupport, ActionSet> {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Graph hash of the model the shield was computed on.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Initial supports outside the winning region (the InitialNotWinning
    /// warning). Empty when every first observation leads into the region.
    pub fn initial_not_winning(&self) -> &[BeliefSupport] {
        &self.initial_not_winning
    }

    pub fn stats(&self) -> &SynthesisStats {
        &self.stats
    }

    /// Whether `m` has the graph this shield was synthesized for.
    pub fn matches_graph(&self, m: &Pomdp) -> bool {
        self.fingerprint == m.graph_fingerprint()
    }

    pub fn to_json(&self) -> String {
        let names = |set: ActionSet| set.iter().map(|a| self.action_names[a].clone()).collect();
        let file = ShieldFile {
            format: FORMAT_TAG.to_string(),
            spec: SpecFile { kind: self.spec.kind(), reach: self.spec.reach().to_vec(), avoid: self.spec.avoid().to_vec() },
            model_fingerprint: self.fingerprint.clone(),
            actions: self.action_names.clone(),
            stats: self.stats.clone(),
            initial_not_winning: self.initial_not_winning.clone(),
            table: self.table.iter().map(|(b, &set)| Entry { support: b.clone(), allowed: names(set) }).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("shield serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Shield, SynthError> {
        let file: ShieldFile = serde_json::from_str(text).map_err(|e| SynthError::Format(e.to_string()))?;
        if file.format != FORMAT_TAG {
            return Err(SynthError::Format(format!("unsupported format tag {:?}", file.format)));
        }
        let spec = match file.spec.kind {
            SpecKind::ReachAvoid => Specification::reach_avoid(file.spec.reach, file.spec.avoid)?,
            SpecKind::AvoidOnly => Specification::avoid_only(file.spec.avoid)?,
        };
        let mut table = BTreeMap::new();
        for entry in file.table {
            let mut set = ActionSet::EMPTY;
            for name in &entry.allowed {
                let a = file
                    .actions
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| SynthError::Format(format!("unknown action {name:?}")))?;
                set.insert(a);
            }
            if set.is_empty() {
                return Err(SynthError::Format(format!("support {:?} has no allowed action", entry.support)));
            }
            if table.insert(entry.support.clone(), set).is_some() {
                return Err(SynthError::Format(format!("support {:?} listed twice", entry.support)));
            }
        }
        Ok(Shield {
            spec,
            action_names: file.actions,
            table,
            fingerprint: file.model_fingerprint,
            initial_not_winning: file.initial_not_winning,
            stats: file.stats,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    kind: SpecKind,
    reach: Vec<StateId>,
    avoid: Vec<StateId>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    support: BeliefSupport,
    allowed: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ShieldFile {
    format: String,
    spec: SpecFile,
    model_fingerprint: String,
    actions: Vec<String>,
    stats: SynthesisStats,
    initial_not_winning: Vec<BeliefSupport>,
    table: Vec<Entry>,
}
