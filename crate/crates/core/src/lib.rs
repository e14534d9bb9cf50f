//! Construction and numerical verification of magnetofluidostatic equilibria:
//! Beltrami fields, Clebsch-type finite-pressure fields, Euclidean symmetry
//! detection, Grad-Shafranov residuals and Lie-derivative solution generation.

pub mod beltrami;
pub mod calculus;
pub mod characteristics;
pub mod composite;
pub mod expr;
pub mod gradshafranov;
pub mod jet;
pub mod orbit;
pub mod parse;
pub mod pressure;
pub mod report;
pub mod sampling;
pub mod symmetry;

pub use expr::{EvalError, Func, Point3, ScalarExpr, Var, VectorExpr};
pub use jet::{Jet, Jet2};
pub use parse::{parse_scalar, parse_vector, ParseError};
pub use report::{CheckStats, Provenance, ResidualReport};
pub use sampling::{DomainSpec, Exclusion, Generator, SampleSet, Shape, SingularSet};
