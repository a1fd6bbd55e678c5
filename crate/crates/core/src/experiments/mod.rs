//! Interpolation-error bounds, scaling checks and refinement studies.

pub mod bounds;
pub mod counterexample;
pub mod family;
pub mod norms;
pub mod scaling;
pub mod sampling;
pub mod stability;
pub mod study;

pub use bounds::{
    bound_breakdown, bound_rhs, error_lhs, interpolant_norm, norm_degree, safe_ratio,
    BoundBreakdown, BoundVariant,
};
pub use counterexample::{counterexample, CounterexampleReport};
pub use norms::{check_p, Integrator};
pub use scaling::{check_scaling_lemma, ScalingLemma, ScalingReport};
pub use stability::{component_stability, ComponentBound, ComponentStability};
pub use family::{cap_series, cap_triangle, FamilyKind, FamilySpec};
pub use study::{run_family_study, run_family_study_with, summarize, StudyRow, StudySummary};
