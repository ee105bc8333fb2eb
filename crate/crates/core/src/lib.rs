//! Decision procedures and proof transformations for fragments of
//! propositional dynamic logic presented as one-sided sequent calculi.

pub mod atm;
pub mod calculus;
pub mod cutelim;
pub mod error;
pub mod expansion;
pub mod formula;
pub mod ordinal;
pub mod par;
pub mod prover;
pub mod qbf;
pub mod semantics;

pub use error::{PdlError, Result};
pub use formula::{Formula, Fragment, Program, Sequent};
pub use ordinal::Ordinal;
