use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TsError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("state `{0}` has no label")]
    Unlabeled(String),
    #[error("labeling has {found} entries, system has {expected} states")]
    LabelingSize { expected: usize, found: usize },
    #[error("partition domains differ ({left} vs {right} elements)")]
    DomainMismatch { left: usize, right: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(&'static str),
    #[error("state `{state}` has several `{label}`-successors")]
    Nondeterministic { state: String, label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("input is not deterministic: `{state}` has several `{label}`-successors")]
    NondeterministicInput { state: String, label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("action, observation and initial sets must be nonempty")]
    EmptyAlphabet,
    #[error("history tree would have {nodes} nodes, limit is {limit}")]
    SizeLimit { nodes: u128, limit: usize },
    #[error("I-map leaves history `{0}` unlabeled")]
    PartialMap(String),
    #[error("edge label `{0}` is not an (action, observation) letter")]
    NotALetter(String),
    #[error("name `{0}` may not be empty or contain ',', '.', ':' or '|'")]
    BadName(String),
    #[error("policy assigns `{action}` to `{state}`, which has no such outgoing action")]
    PolicyOutsideAlphabet { state: String, action: String },
    #[error("task machine is incomplete: no transition from `{state}` on {letter}")]
    IncompleteMachine { state: String, letter: String },
    #[error("task machine has no output for `{0}`")]
    MissingOutput(String),
    #[error("unknown task machine state `{0}`")]
    UnknownMachineState(String),
    #[error("goal set is empty")]
    EmptyGoal,
    #[error("refinement does not settle within depth {0}; unroll deeper")]
    TooShallow(usize),
    #[error(transparent)]
    Ts(#[from] TsError),
    #[error(transparent)]
    Refine(#[from] RefineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoupledError {
    #[error("disturbance ({theta}, {psi}) is not admissible at `{state}`")]
    InadmissibleDisturbance {
        state: String,
        theta: String,
        psi: String,
    },
    #[error("internal system has no transition from `{state}` on `{observation}`")]
    UndefinedInternalTransition { state: String, observation: String },
    #[error("policy outputs `{action}` at `{state}`, which is not an action")]
    UndefinedAction { state: String, action: String },
    #[error("a disturbance must be supplied for a disturbed system")]
    MissingDisturbance,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("exhaustive rollout would exceed {limit} trajectories")]
    SizeLimit { limit: usize },
    #[error("feasibility is defined for disturbance-free couplings only")]
    DisturbedCoupling,
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("probability rows for `{0}` do not sum to 1")]
    NotNormalized(String),
    #[error(transparent)]
    Ts(#[from] TsError),
    #[error(transparent)]
    Hist(#[from] HistError),
    #[error(transparent)]
    Refine(#[from] RefineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("observation is inconsistent with the model (empty state set)")]
    InconsistentObservation,
    #[error("observation has zero probability under the current belief")]
    ZeroEvidence,
    #[error("empty initial state set")]
    EmptyInitialSet,
    #[error("window size must be positive")]
    ZeroWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbiError {
    #[error("closure violated: prefixing class {class} with `{action}` gives an unknown vector")]
    ClosureViolation { class: usize, action: String },
    #[error("states `{0}` and `{1}` share a success vector but not an observation")]
    SigmaIllDefined(String, String),
    #[error("machine is not reduced: `{0}` and `{1}` have equal success vectors")]
    NotReduced(String, String),
    #[error("a Moore machine needs disturbance-free dynamics")]
    Disturbed,
    #[error("unknown initial state index {0}")]
    UnknownInitial(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsrError {
    #[error("history has zero probability under the model")]
    ZeroProbabilityHistory,
    #[error("observation has zero predicted probability")]
    ImpossibleObservation,
    #[error("maximum test length must be at least 1")]
    ZeroTestLength,
    #[error("weight systems unsolvable with tests up to length {max_len}; try length {needed}")]
    RankDeficientExtensions { max_len: usize, needed: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
