//! Transition systems, sufficient labelings and minimal information
//! transition systems for coupled robot/environment models.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, DOT export and
//! the command-line front end live in the `minbrain` crate.

#![no_std]

extern crate alloc;

pub mod coupled;
pub mod dbi;
pub mod error;
pub mod external;
pub mod filters;
pub mod history;
pub mod iso;
pub mod linalg;
pub mod partition;
pub mod prob;
pub mod psr;
pub mod refine;
pub mod scenarios;
pub mod task;
pub mod ts;

pub use coupled::{
    backward_reachable_set, is_feasible_policy, minimal_dits_for_policy, rollout, step, CoupledSystem,
    PolicyEncoding, Verdict,
};
pub use error::{CoupledError, FilterError, HistError, RefineError, TsError};
pub use external::ExternalSystem;
pub use history::{apply_imap, derive_its, restrict, strong_restrict, tree_msr, unroll, HistoryState, HistoryTree, IMap};
pub use task::TaskMachine;
pub use iso::{is_isomorphism, isomorphic};
pub use partition::{common_refinement, refines, Partition};
pub use refine::{minimal_sufficient_refinement, verify_minimality, RefinementResult};
pub use ts::{
    is_deterministic, is_full, is_sufficient, quotient, quotient_labeled, Labeling, StateRelabeledTS,
    SufficiencyWitness, TransitionSystem,
};
