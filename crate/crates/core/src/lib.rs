//! Constructive quasiconformal mapping toolkit: Möbius normalizations,
//! folding and winding maps, the chain-of-balls to unit-ball algorithm
//! with explicit dilatation accounting, conformal-modulus computations,
//! and an empirical verification harness for the associated modulus
//! inequalities.
//!
//! All domain types are immutable values and safe to share across
//! threads. Dimension is runtime data (n = 2..=8 supported throughout).

pub mod dilatation;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mobius;
pub mod modulus;
pub mod qcmaps;
pub mod quasiball;
pub mod sample;
pub mod verify;

pub use dilatation::{jacobian, sample_dilatation, DilatationReport, DilatationSample};
pub use error::{Error, Result};
pub use geometry::{chordal_diameter, chordal_distance, Ball, CylCoords, ExtPoint, Wedge};
pub use mobius::{balls_to_wedge, canonical_t, intersection_angle, IntersectionAngle, MobiusGen, MobiusMap};
pub use modulus::{annulus_modulus, capacity_2d, CapacityBounds, InnerPlate, OuterPlate, RingDomain};
pub use qcmaps::{AnalyticDilatation, Folding, MapExpr, PiecewiseFold, Validity, Winding};
pub use quasiball::{construct, validate_chain, BallChain, ChainViolation, QuasiballConstruction};
pub use sample::Sampler;
pub use verify::{
    check_ko, check_poletskii, preimage_size_bound, run_suite, BlaschkeMap, Bound, CurveFamily,
    InequalityCheck, SuiteConfig, SuiteReport,
};
