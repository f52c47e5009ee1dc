//! Invariant-preservation proof obligations, discharged by enumeration.
//!
//! For machine `m` and event `e` the obligation is the inclusion
//! `inv ∩ guard ∩ action ⊆ inv'`, where `inv'` is the invariant with every
//! variable replaced by its primed image. The enumeration space is
//! `vars(m) ∪ vars(m)' ∪ pars(e)`.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{next_renaming, prime_set, Ident, KernelError, Valuation};
use crate::model::{Machine, Project};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObligationError {
    #[error("machine `{machine}` has no event `{event}`")]
    UnknownEvent { machine: String, event: String },

    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    Fails,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObligationResult {
    pub machine: String,
    pub event: String,
    pub status: Status,
    /// Present iff `status` is `Fails`: the smallest state over variables,
    /// primed variables and parameters that breaks the inclusion.
    pub counterexample: Option<Valuation>,
}

impl ObligationResult {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }
}

/// The enumeration scope of the obligation for one event.
pub fn obligation_scope(machine: &Machine, event: &str) -> Result<BTreeSet<Ident>, ObligationError> {
    let def = machine.event(event).ok_or_else(|| ObligationError::UnknownEvent {
        machine: machine.name().to_string(),
        event: event.to_string(),
    })?;
    let mut scope = machine.vars().clone();
    scope.extend(prime_set(machine.vars())?);
    scope.extend(def.pars().iter().cloned());
    Ok(scope)
}

/// Checks `inv ∩ guard ∩ action ⊆ Subst(Next)(inv)` for one event.
pub fn po_inv_preservation(machine: &Machine, event: &str) -> Result<ObligationResult, ObligationError> {
    let scope = obligation_scope(machine, event)?;
    let def = &machine.events()[event];
    let before = machine
        .inv()
        .intersect(def.guard())?
        .intersect(def.action())?
        .extend_to(&scope)?;
    let after = machine.inv().subst(&next_renaming(machine.vars())?)?;
    let counterexample = before.entailment_witness(&after)?;
    Ok(ObligationResult {
        machine: machine.name().to_string(),
        event: event.to_string(),
        status: if counterexample.is_some() { Status::Fails } else { Status::Holds },
        counterexample,
    })
}

/// One result per (machine, event), ordered by machine then event name.
pub fn po_all(project: &Project) -> Result<Vec<ObligationResult>, ObligationError> {
    project
        .machines()
        .flat_map(|m| m.events().keys().map(move |e| po_inv_preservation(m, e)))
        .collect()
}
