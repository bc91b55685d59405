pub mod error;
pub mod form;
pub mod holonomy;
pub mod integrals;
pub mod linalg;
pub mod multidegree;
pub mod normalform;
pub mod ode;
pub mod resonance;
pub mod scalar;
pub mod series;
pub mod tracer;
pub mod vectorfield;

pub use error::{Error, Result};
pub use multidegree::Multidegree;
pub use scalar::{Coeff, GaussianRational, Mode, Scalar, C64};
pub use series::{AnySeries, SeriesOp, TruncatedSeries};
pub use form::{wedge, ExteriorForm};
pub use holonomy::{holonomy_map, order_of, Holonomy, HolonomyGroup, OrderReport};
pub use integrals::{first_integral_kernel, independence_test, reconstruct_coordinates, FirstIntegralSet, Provenance};
pub use linalg::Matrix;
pub use normalform::{poincare_dulac, reduce_type, ConjugationCertificate, TypeRS};
pub use resonance::{resonance_lattice, rj_sj, Spectrum};
pub use tracer::{integrate_leaf, numeric_holonomy, LeafTrace, TraceConfig};
pub use vectorfield::{exp_formal, pushforward, FormalDiffeo, VectorField};
