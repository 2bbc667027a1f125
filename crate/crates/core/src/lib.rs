//! Exact computations over finite fields F_q (q odd): regular varieties,
//! Cayley graph spectra through character sums, k-energies, distance
//! counters, and empirical checks of the mixing inequalities that bound them.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod report;
pub mod space;
pub mod spectra;

pub use error::{Error, Result};
pub use field::{make_field_context, ComplexValue, FieldContext};
pub use geometry::{DiagonalPoly, Family, PolySpec, QuadraticForm, Variety};
pub use space::AffineSpace;
pub use spectra::{Multiset, Spectrum};
