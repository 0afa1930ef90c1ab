//! Exact computer algebra for the dGBV algebra attached to a Calabi-Yau
//! projective complete intersection.
//!
//! The algebra is a polynomial superalgebra on even variables y_1..y_k,
//! x_0..x_n and odd partners eta_1..eta_{n+k+1}, equipped with the BV
//! Laplacian and the Koszul differential twisted by the potential
//! S = sum y_l G_l of the defining forms G_l. On top of that foundation the
//! crate computes, with rational arithmetic throughout:
//!
//! * a monomial basis of the degree-zero cohomology (the graded Jacobian
//!   ring), with division certificates against the partials of S,
//! * structure constants of the induced multiplication on the formal
//!   deformation space, order by order in the deformation parameters,
//! * weak primitive forms and the flat structure constants they induce,
//! * the modified higher residue pairing and its axiom checks.
//!
//! Everything is deterministic: iteration orders are fixed, coefficients are
//! arbitrary-precision rationals, and randomized verification suites take an
//! explicit seed.

pub mod algebra;
pub mod error;
pub mod fmanifold;
pub mod frobenius;
pub mod gaussmanin;
pub mod groebner;
pub mod model;
pub mod primitive;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
