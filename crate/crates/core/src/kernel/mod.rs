//! The predicate kernel: predicates as finite sets of states, with the
//! `Free`, `Subst`, `Proj` and `Conjuncts` operations, conjunction as
//! intersection and implication as inclusion.

mod ident;
mod predicate;
mod universe;

pub use ident::{next_renaming, prime_set, unprime_renaming, unprime_set, Ident, IdentKind};
pub use predicate::{Predicate, Valuation};
pub use universe::{Declaration, Domain, DomainKind, Role, Universe, Value};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("name `{0}` is declared twice")]
    DuplicateName(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("`{ident}` is not a {expected}")]
    Kind { ident: Ident, expected: IdentKind },

    #[error("domain mismatch on `{ident}`")]
    DomainMismatch { ident: Ident },

    #[error("renaming `{from}` to `{to}` captures a free identifier")]
    Capture { from: Ident, to: Ident },

    #[error("renaming maps both `{first}` and `{second}` to `{target}`")]
    NonInjective { first: Ident, second: Ident, target: Ident },

    #[error("`{0}` is not bound")]
    Unbound(Ident),

    #[error("value {value} is outside the domain of `{ident}`")]
    ValueOutOfDomain { ident: Ident, value: Value },
}
