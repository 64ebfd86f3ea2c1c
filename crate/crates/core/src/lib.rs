//! Reasoning about rationality and iterated elimination in finite strategic games.
//!
//! The crate has five layers, each usable on its own:
//!
//! - [`game`]: finite games with exact rational payoffs and the lattice of
//!   restrictions (per-player strategy subsets).
//! - [`lo`]: a first-order language of *optimality conditions* ("is the focus
//!   strategy acceptable given this context?"), with a parser, a positivity
//!   analysis and the satisfaction relation.
//! - [`operators`]: optimality operators on the restriction lattice, iteration
//!   to a fixpoint, monotonicity checks and the inclusion lemma relating
//!   monotone and contracting operators.
//! - [`belief`] and [`lnu`]: belief models, common belief, and a modal fixpoint
//!   language over rationality, belief and optimality.
//! - [`proof`]: a small kernel checking derivations that link common belief of
//!   rationality to iterated elimination.
//!
//! [`oracle`] holds brute-force re-implementations and model enumerators that the
//! test suites use as independent references.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod belief;
pub mod game;
pub mod lnu;
pub mod lo;
pub mod operators;
pub mod oracle;
pub mod proof;

mod lex;

pub use belief::{BeliefModel, Event};
pub use game::{Game, GameError, Payoff, Profile, Restriction, RestrictionLattice, StrategySet};
pub use lex::ParseError;
pub use lnu::{ConditionRegistry, FormulaNu};
pub use lo::FormulaO;
pub use operators::{IterationTrace, Operator};
pub use proof::{LemmaRegistry, ProofScript};
