//! Finite-depth machinery for sets of points that are well approximated by
//! truncated lambda-expansions.
//!
//! The crate is split along the objects it computes with:
//!
//! - [`expansion`]: lambda-sums of binary words, level sets `F_{λ,n}`, growth
//!   exponents and collapse relations at multinacci parameters.
//! - [`proximity`]: counts of word pairs whose lambda-sums are close, the
//!   recursive inequality between them, parameter intervals and the
//!   exceptional-parameter scan.
//! - [`betashift`]: the beta-transformation, greedy digits, Parry
//!   admissibility, the multinacci subshifts of finite type and their Perron
//!   eigenvalues.
//! - [`dimension`]: covers of the approximation layers, dimension brackets,
//!   multiplicity covers, cylinder location and the nested interval tree.
//!
//! Everything is a pure function of its inputs. Randomised scans take an
//! explicit seed.

pub mod betashift;
pub mod dimension;
mod error;
pub mod exact;
pub mod expansion;
pub mod grid;
pub mod proximity;

pub use error::{Error, Result};
pub use expansion::{Interval, Lambda, LevelSet, Word};
