use alloc::string::String;

use crate::label::{SubscriptionLabel, UserId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid filter policy: min {min} must be below max {max}")]
    InvalidFilterPolicy { min: u64, max: u64 },

    #[error("user {0} is not a node of the call graph")]
    UnknownUser(UserId),

    #[error("user {0} has no outgoing calls")]
    NoOutgoingCalls(UserId),

    #[error("callee {callee} of user {user} has no known label")]
    MissingCalleeLabel { user: UserId, callee: UserId },

    #[error("class {label} has {available} members, {requested} requested")]
    InsufficientClass {
        label: SubscriptionLabel,
        available: usize,
        requested: usize,
    },

    #[error("class {0} is absent from the training data")]
    MissingClass(SubscriptionLabel),

    #[error("class {label} has {count} training examples, at least {min} required")]
    TooFewExamples {
        label: SubscriptionLabel,
        count: usize,
        min: usize,
    },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("features and labels disagree in length ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },

    #[error("boosting needs at least one round")]
    ZeroRounds,

    #[error("no decision stump beats chance on the training data")]
    NoWeakLearner,

    #[error("user {0} has a prediction but no ground-truth label")]
    MissingTruth(UserId),

    #[error("posterior {0} lies outside the clamped range")]
    PosteriorOutOfRange(f64),

    #[error("out-degree of the postpaid endpoint is zero")]
    ZeroOutDegree,

    #[error("invalid labeling problem: {0}")]
    InvalidProblem(String),

    #[error("fixed labels contradict each other: an s-t path of unbounded arcs exists")]
    ContradictoryFixedLabels,

    #[error("brute force supports at most {max} nodes, got {got}")]
    TooManyNodes { got: usize, max: usize },

    #[error("pruning thresholds must lie in (0.5, 1], got tau1={tau1}, tau2={tau2}")]
    InvalidThreshold { tau1: f64, tau2: f64 },

    #[error("invalid bipartite graph: {0}")]
    InvalidBipartite(String),

    #[error("bipartite graph has no edges")]
    EmptyEdgeSet,

    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}
