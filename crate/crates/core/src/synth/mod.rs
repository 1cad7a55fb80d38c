//! Shield synthesis on the belief-support MDP.
//!
//! [`build_support_mdp`] explores every support reachable from the initial
//! ones; [`compute_winning_reach_avoid`] and [`compute_winning_avoid`] run the
//! graph fixpoints; [`extract_shield`] packages the result with the model's
//! graph fingerprint. [`verify_winning_policy`] checks a policy on the
//! state-support product independently of all of the above.

mod diameter;
mod shield;
mod support_mdp;
mod verify;
mod winning;

pub use diameter::{graph_diameter, shielded_diameter};
pub use shield::{extract_shield, synthesize, synthesize_default, Shield, SynthesisStats};
pub use support_mdp::{build_support_mdp, NodeId, SupportMdp, DEFAULT_MAX_NODES};
pub use verify::{verify_winning_from, verify_winning_policy, PolicyTable};
pub use winning::{compute_winning, compute_winning_avoid, compute_winning_reach_avoid, WinningRegion};
