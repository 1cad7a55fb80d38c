use thiserror::Error;

use crate::estimator::BeliefSupport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("initial distribution sums to {sum}, expected 1")]
    InitialDistribution { sum: f64 },
    #[error("transition distribution of state {state} under action {action} sums to {sum}, expected 1")]
    TransitionDistribution { state: usize, action: String, sum: f64 },
    #[error("observation distribution of state {state} sums to {sum}, expected 1")]
    ObservationDistribution { state: usize, sum: f64 },
    #[error("probability {value} outside [0, 1] ({context})")]
    ProbabilityRange { value: f64, context: String },
    #[error("state {state} has no available action")]
    NoAvailableAction { state: usize },
    #[error("transition declared for unavailable action {action} in state {state}")]
    UnavailableTransition { state: usize, action: String },
    #[error("labels reach and avoid overlap in state {state}")]
    LabelOverlap { state: usize },
    #[error("{kind} id {id} out of range (have {len})")]
    OutOfRange { kind: &'static str, id: usize, len: usize },
    #[error("model declares {0} actions; at most 64 are supported")]
    TooManyActions(usize),
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("invalid specification: {0}")]
    InvalidSpecification(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("observation {observation} is impossible here; the trace does not fit the model")]
    EmptySupport { observation: String },
    #[error("action {action} is unavailable in state {state} of the support")]
    UnavailableAction { action: String, state: usize },
    #[error("observation {observation} has zero probability under the current belief")]
    ZeroProbabilityObservation { observation: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("support MDP exceeds the node limit of {limit}")]
    SizeLimitExceeded { limit: usize },
    #[error("policy has no entry for reachable support {0:?}")]
    PolicyIncomplete(BeliefSupport),
    #[error("shield file: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error("support {0:?} is outside the winning region")]
    SupportNotWinning(BeliefSupport),
    #[error("shield produced an empty action mask for support {0:?}")]
    EmptyMask(BeliefSupport),
    #[error("no action is offered at support {0:?}")]
    NoOfferedAction(BeliefSupport),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),
    #[error("unknown domain {0:?}")]
    UnknownDomain(String),
    #[error("dense reward requested on a domain generated with sparse rewards")]
    VariantMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("non-finite parameters after update at episode {episode}: {detail}")]
    NonFinite { episode: usize, detail: String },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
