//! Loewner chains, Faber polynomials and Grunsky coefficients, and the hodograph
//! reductions of the dispersionless KP and Toda hierarchies built from them.

// Index loops mirror the coefficient formulas; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod pseries;

pub mod coulomb;
pub mod faber_grunsky;
pub mod loewner;
pub mod polynomial;
pub mod reduction;
pub mod series;
pub mod verify;

pub use num_complex::Complex64;
pub use polynomial::LaurentPolynomial;
pub use series::{Expansion, Region, Series, SeriesError, TruncatedLaurentSeries, DEFAULT_DEPTH};
