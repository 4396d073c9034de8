//! Strategy iteration for least fixpoints of non-expansive functions over
//! complete MV-chains.
//!
//! The core of the crate is a small combinator language ([`term::FunTerm`])
//! for monotone, non-expansive functions `M^Y -> M^Z` where `M` is either the
//! real interval `[0, 1]` or a finite chain `{0, .., k}`. For every
//! combinator a closed-form *approximation* is available that tracks where a
//! decrease at the input propagates to the output; at a fixpoint `a` of an
//! endo-function `f` this yields a decidable check whether `a` is the *least*
//! fixpoint, and if not, a "vicious cycle" of positions whose values can be
//! lowered while staying above `mu f`.
//!
//! On top of that sit generalized strategy iteration solvers
//! ([`strategy::si_above`], [`strategy::si_below`]) and three concrete
//! instantiations: simple stochastic games ([`ssg`]), energy games
//! ([`energy`]) and behavioural pseudometrics on probabilistic automata
//! ([`pa`]). All arithmetic is exact (arbitrary-precision rationals or
//! bounded naturals); no floating point is used anywhere.

pub mod approx;
pub mod assign;
pub mod bench;
pub mod chain;
pub mod energy;
pub mod error;
pub mod format;
pub mod gen;
pub mod lp;
pub mod pa;
pub mod pos;
pub mod ssg;
pub mod strategy;
pub mod term;
pub mod transport;

pub use approx::{decrease_to_prefixpoint, nu_approx, nu_star};
pub use assign::{Assignment, PosSet};
pub use chain::{Chain, Value};
pub use error::Error;
pub use pos::Pos;
pub use term::FunTerm;
