pub mod error;
pub mod expr;
pub mod galois;
pub mod linalg;
pub mod ode;
pub mod param;
pub mod poly;
pub mod puiseux;
pub mod ratfunc;
pub mod reduction;
pub mod scalar;
pub mod series;
pub mod tower;

pub use param::ParamScalar;
pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use scalar::{Field, Rational};
pub use error::{Error, Result};
pub use tower::{FieldElem, RatS, Tower};
pub mod integrability;
pub mod cli;
