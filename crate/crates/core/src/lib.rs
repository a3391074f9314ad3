//! Exact-arithmetic engine for multiplicative resolutions of graded algebras,
//! Hopf-resolution coproduct lifts, perturbation pairs and their gauge orbits.
//!
//! Everything is computed over a subring R ⊆ Q described by a set of inverted
//! primes; all linear algebra is exact (no floating point anywhere).

pub mod algebra;
pub mod error;
pub mod homology;
pub mod hopf;
pub mod linalg;
pub mod maps;
pub mod perturbation;
pub mod resolution;
pub mod ring;
pub mod solve;

pub use error::EngineError;

/// Exact scalar type used throughout.
pub type Q = num_rational::BigRational;

/// Integer-to-scalar shorthand.
pub fn qi(n: i64) -> Q {
    Q::from_integer(num_bigint::BigInt::from(n))
}
