//! Numerical toolkit for inclusions of finite-dimensional C*-algebras:
//! conditional expectations, Watatani quasi-bases and indices, the basic
//! construction and its dual expectation, finite group actions, and exact-level
//! checks of the Rohlin property and approximate representability.

pub mod actions;
pub mod algebra;
pub mod asymptotic;
pub mod basic;
pub mod error;
pub mod expectation;
pub mod gns;
pub mod index;
pub mod linalg;
pub mod models;
pub mod rohlin;
pub mod subspace;
pub mod tolerance;

pub use actions::{
    rohlin_criterion, rohlin_partition_check, subgroup_inclusion, FiniteGroup, GroupAction, RohlinCriterionReport,
    RohlinPartition, RohlinPartitionReport, SubgroupInclusion, SubgroupReport,
};
pub use algebra::{is_projection, operator_norm, AlgebraElement, MultiMatrixAlgebra, ProjectionReport};
pub use asymptotic::{defect_curve, rohlin_defect, DefectCurve, DefectRecord, Embedding, InductiveSystem, Stage};
pub use basic::{
    build_basic_construction, dual_index_check, jones_tower, tower_summary, tunnel_construction, BasicConstruction,
    BasicDefects, DualIndexReport, TowerLevel, Tunnel, TunnelReport,
};
pub use error::{Error, Result};
pub use expectation::{
    is_faithful, trace_preserving_expectation, uniform_trace_expectation, verify_expectation, ConditionalExpectation,
    ExpectationReport, FaithfulnessReport,
};
pub use gns::GnsSpace;
pub use index::{
    e_inverse_map, pimsner_popa_margin, quasi_basis_defects, solve_quasi_basis, watatani_index, IndexValue,
    IndexedExpectation, QuasiBasis, QuasiBasisDefects,
};
pub use linalg::C64;
pub use rohlin::{
    approx_rep_check, beta_map, duality_backward, duality_forward, duality_round_trip, recover_rohlin_projection,
    relative_commutant_report, rohlin_check, ApproxRepReport, BackwardReport, BetaReport, ForwardReport,
    RecoverReport, RelativeCommutantReport, RohlinReport, RoundTripReport,
};
pub use subspace::{commutant_in, generated_subalgebra, Subalgebra, Subspace};
pub use tolerance::ToleranceConfig;
