//! Supporting functions of compact convex bodies in the nonnegative
//! orthant, logarithmic supporting functions on C^n, closed-form and
//! numerically approximated extremal growth functions for product
//! compacta, and the counterexample constructions around the product
//! formula.

pub mod body;
pub mod closed_forms;
pub mod counterexamples;
pub mod error;
pub mod log_support;
pub mod lp;
pub mod product;
pub mod siciak;
pub mod testkit;

pub use body::{build_product_body, probe_union_convexity, ConvexBody, ProductStructure};
pub use closed_forms::{v_disc, v_factor_scaled, v_interval, v_polydisc_body, CompactFactorSpec, ProductCompact};
pub use counterexamples::{
    intro_counterexample, nonmaximality_note, sublevel_nonconvexity, weighted_counterexample,
    IntroReport, NonmaximalityReport, SublevelWitness, WeightedWitness,
};
pub use error::{Error, Result};
pub use log_support::{
    check_lelong, compose_support, h_of_body, LelongCertificate, LogPoint, MaxAffine, Piece,
};
pub use siciak::{
    approx_v, bernstein_walsh_check, build_basis, convergence_sweep, enumerate_lattice, grading,
    ApproxConfig, BernsteinWalshReport, FactorBasis, GradedBasis, LatticeClass, SweepRow,
};
pub use product::{
    corollary_suite, lhs_exact, quarter_pball, rhs_eval, sides_same_canonical, verify_against_lhs,
    verify_theorem, CorollaryReport, CorollarySpec, GridSpec, TheoremInstance, VerifyReport,
};
