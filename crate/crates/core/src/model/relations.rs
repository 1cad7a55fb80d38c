use crate::error::ModelError;
use crate::model::Pomdp;

fn check_vocabularies(m: &Pomdp, other: &Pomdp) -> Result<(), ModelError> {
    if m.num_states() != other.num_states() {
        return Err(ModelError::VocabularyMismatch(format!(
            "{} vs {} states",
            m.num_states(),
            other.num_states()
        )));
    }
    if m.action_names() != other.action_names() {
        return Err(ModelError::VocabularyMismatch("action names differ".into()));
    }
    if m.obs_names() != other.obs_names() {
        return Err(ModelError::VocabularyMismatch("observation names differ".into()));
    }
    Ok(())
}

/// `supp(sub) ⊆ supp(sup)` for every transition and observation row.
fn supports_included(sub: &Pomdp, sup: &Pomdp) -> bool {
    (0..sub.num_states()).all(|s| {
        (0..sub.num_actions()).all(|a| {
            let row = sup.successors(s, a);
            sub.successors(s, a)
                .iter()
                .all(|&(t, _)| row.binary_search_by(|e| e.0.cmp(&t)).is_ok())
        }) && {
            let row = sup.observations(s);
            sub.observations(s)
                .iter()
                .all(|&(z, _)| row.binary_search_by(|e| e.0.cmp(&z)).is_ok())
        }
    })
}

/// True iff `m` and `m_prime` have identical transition and observation
/// supports; probabilities may differ arbitrarily.
pub fn is_graph_preserving(m: &Pomdp, m_prime: &Pomdp) -> Result<bool, ModelError> {
    check_vocabularies(m, m_prime)?;
    Ok(supports_included(m, m_prime) && supports_included(m_prime, m))
}

/// True iff every positive transition (and observation) of `m` is positive
/// in `m_prime`.
pub fn overapproximates(m_prime: &Pomdp, m: &Pomdp) -> Result<bool, ModelError> {
    check_vocabularies(m, m_prime)?;
    Ok(supports_included(m, m_prime))
}
