//! Planning, simulation, and verification of multi-variable intervention
//! experiments for causal DAG identification.
//!
//! The library answers three kinds of question about learning the structure
//! of a causal DAG from idealized randomized experiments:
//!
//! - **Planning**: which sequences of intervention sets settle every variable
//!   pair: one intervention at a time (`n - 1` experiments), the
//!   binary-codeword construction (`⌈log₂ n⌉` experiments, plus one passive
//!   experiment at exact powers of two), or block schedules under a cap on
//!   the number of simultaneously randomized variables.
//! - **Simulation**: a d-separation oracle over manipulated graphs, and two
//!   recovery engines that consume its answers: a per-pair possibility
//!   lattice that scales with the number of pairs, and an exact tracker of
//!   all DAGs consistent with every response so far.
//! - **Verification**: exhaustive small-n search certifying that the planned
//!   schedule lengths are not just sufficient but worst-case minimal.
//!
//! All operations are pure functions over immutable values; randomness only
//! enters through explicit seeds.

pub mod graph;
pub mod io;
pub mod knowledge;
pub mod oracle;
pub mod planner;
pub mod verifier;

pub use graph::{
    enumerate_dags, enumerate_dags_with_cap, random_dag, Dag, GraphError, InterventionSet, VarId,
    VarSet, DEFAULT_ENUM_CAP, MAX_VARS,
};
pub use knowledge::{
    apply_collider_rule, extract_dag, update_consistent_set, update_pairwise, ConsistentSet,
    KnowledgeError, KnowledgeState, PairRelation, PairState,
};
pub use oracle::{
    count_test_kinds, pair_outcomes, run_experiment, run_experiment_with_cap, CiStatement,
    Experiment, OracleError, OracleResponse, PairOutcome, TestKind, TestKindCounts, Verdict,
    DEFAULT_RESPONSE_CAP,
};
pub use planner::{
    adaptive_next, binary_codeword_schedule, binary_schedule_bound, coverage_report,
    kmax_schedule, kmax_schedule_bound, single_intervention_schedule, CoverageReport,
    PairCoverage, PlannerError, Schedule,
};
pub use verifier::{
    adaptive_min_experiments, canonical_schedules, cross_check_engines,
    cross_check_engines_with_cap, identifies_all, identifies_all_with_cap, min_schedule_length,
    min_schedule_length_with_cap, IdentificationCheck, SignatureTable, VerifierError,
};
