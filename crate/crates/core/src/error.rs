use thiserror::Error;

use crate::multidegree::Multidegree;
use crate::scalar::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scalar mode mismatch: {left:?} combined with {right:?}")]
    ModeMismatch { left: Mode, right: Mode },

    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },

    #[error("substituted component {0} has a nonzero constant term")]
    NonzeroConstantTerm(usize),

    #[error("component {0} has a nonzero constant term: the field is regular at the origin")]
    RegularPoint(usize),

    #[error("linear part is singular")]
    SingularLinearPart,

    #[error("exact-mode Lie series needs a generator with vanishing linear part")]
    NonterminatingFlow,

    #[error("cannot wedge {q} differentials in {nvars} variables")]
    FormDegree { q: usize, nvars: usize },

    #[error("invalid spectrum: {0}")]
    Spectrum(String),

    #[error("eigenvalues are not exactly representable ({0}); use float mode")]
    NonRepresentableEigenvalues(String),

    #[error("linear part is not diagonalizable (nilpotent part {0})")]
    NotDiagonalizable(String),

    #[error("resonance obstruction: {} resonant target(s), first {:?}", witnesses.len(), witnesses.first())]
    ResonanceObstruction { witnesses: Vec<ResonantTerm> },

    #[error("field does not have the transversal normal shape: {0}")]
    Shape(String),

    #[error("field is not of type ({r},{s}): component {component} carries {monomial}")]
    TypeViolation {
        r: u32,
        s: u32,
        component: usize,
        monomial: Multidegree,
    },

    #[error("cap {cap} too small for target type ({r},{s})")]
    CapTooSmall { cap: u32, r: u32, s: u32 },

    #[error("holonomy order not certified up to {0}")]
    OrderNotCertified(u32),

    #[error("linear form {0} makes the invariant product vanish")]
    DegenerateForm(usize),

    #[error("reconstruction failed for integral {index}: {reason}")]
    Reconstruction { index: usize, reason: String },

    #[error("divisor is constant")]
    ConstantDivisor,

    #[error("invalid trace configuration: {0}")]
    TraceConfig(String),

    #[error("seed norm {norm} lies outside the ball of radius {epsilon}")]
    SeedOutsideBall { norm: f64, epsilon: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("point of norm {norm} is not on the sphere of radius {epsilon}")]
    NotOnSphere { norm: f64, epsilon: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A coefficient `x^k ∂_component` that the homological operator cannot remove.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ResonantTerm {
    pub component: usize,
    pub monomial: Multidegree,
}
