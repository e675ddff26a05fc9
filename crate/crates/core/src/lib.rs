//! Automorph classes of integral quadratic forms.
//!
//! Exact enumeration of representations and automorphs, isotropic sums over
//! finite quadratic modules, Hecke and Eichler actions on theta coefficients,
//! the Clifford lift of ternary automorphs to quaternary ones, and checks of
//! the resulting class-counting identities.

pub mod autoring;
pub mod classes;
pub mod clifford;
pub mod intmat;
pub mod isosum;
pub mod qform;
pub mod reps;
pub mod shimlift;
pub mod theta;

pub use intmat::{IntMatrix, Matrix, SMatrix};
pub use qform::QuadraticForm;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("singular")]
    Singular,
    #[error("not primitive")]
    NotPrimitive,
    #[error("singular form")]
    SingularForm,
    #[error("even prime unsupported")]
    EvenPrime,
    #[error("singular prime: p = {0} divides det q")]
    SingularPrime(i64),
    #[error("enumeration requires positive definite form")]
    NotPositiveDefinite,
    #[error("determinant mismatch")]
    DeterminantMismatch,
    #[error("parent mismatch")]
    ParentMismatch,
    #[error("index mismatch")]
    IndexMismatch,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("requires primitive automorph")]
    NotPrimitiveAutomorph,
    #[error("singular or inconsistent input")]
    Inconsistent,
    #[error("not an algebra homomorphism")]
    NotHomomorphism,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
