//! Finite-domain constraint propagation with value-withdrawal explanations.
//!
//! A problem is reduced by local consistency operators; every removed value
//! is recorded with the rule that removed it, and the records of a complete
//! search tree are assembled into proof trees. On top of that sit constraint
//! retraction and declarative diagnosis of wrong removals.

pub mod bundle;
pub mod checks;
pub mod cli;
pub mod csp;
pub mod diagnosis;
pub mod error;
pub mod explanations;
pub mod instances;
pub mod model;
pub mod operators;
pub mod propagation;
pub mod render;
pub mod retraction;
pub mod search;

pub use bundle::{Bundle, Transcript};
pub use csp::{Assignment, CmpOp, ConstraintSpec, Csp, DomainElement, Environment, GlobalDomain, Value, VarId};
pub use diagnosis::{diagnose, start_session, Blame, Conclusion, DiagnosisSession, IntendedOracle, Verdict};
pub use error::{Error, Result};
pub use explanations::{verify_proof_tree, Explanations, Judgment, ProofTree, RuleKind};
pub use model::{parse_model, print_model, Model};
pub use operators::{local_operators, LocalOperator, Operator, RestrictionOperator};
pub use propagation::{closure, closure_bruteforce, RemovalLog};
pub use retraction::{retract, verify_retraction, SolverState};
pub use search::{solve, BranchId, LabelDirective, SearchTree, Strategy};
