//! Executable finite-domain semantics for Event-B projects.
//!
//! Predicates are sets of states over a declared finite [`kernel::Universe`].
//! On top of the kernel sit the project structure and its static checks
//! ([`model`]), invariant-preservation obligations ([`obligations`]), the
//! operational semantics with hot replacement ([`dynamics`]), variable-based
//! machine splitting with a product oracle ([`transform`]) and a small
//! textual modelling language ([`surface`]).

pub mod dynamics;
pub mod kernel;
pub mod model;
pub mod obligations;
pub mod surface;
pub mod transform;

pub use kernel::{Ident, IdentKind, Predicate, Universe, Valuation, Value};
pub use model::{EventDef, Machine, Project};
