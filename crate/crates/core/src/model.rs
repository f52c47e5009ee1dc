//! Project structure and static semantics.
//!
//! A [`Project`] is a set of [`Machine`]s over one shared [`Universe`].
//! Variables are global by base name, so two machines that both list `x`
//! talk about the same state component. [`check_static`] enforces the three
//! visibility rules on free identifiers; [`Project::new_machine`] only admits
//! machines that pass them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::kernel::{prime_set, Ident, IdentKind, Predicate, Universe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("machine `{0}` already exists")]
    DuplicateMachine(String),

    #[error("unknown machine `{0}`")]
    UnknownMachine(String),

    #[error("machine is not well formed ({} violation(s))", .0.violations.len())]
    StaticViolation(StaticReport),

    #[error("`{ident}` is not a {expected}")]
    Kind { ident: Ident, expected: IdentKind },

    #[error("machine `{0}` is built over a different universe")]
    UniverseMismatch(String),
}

/// An event: its parameters, a single guard and a single before-after
/// action predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDef {
    pars: BTreeSet<Ident>,
    guard: Predicate,
    action: Predicate,
}

impl EventDef {
    pub fn new(pars: impl IntoIterator<Item = Ident>, guard: Predicate, action: Predicate) -> Result<Self, ModelError> {
        let pars: BTreeSet<Ident> = pars.into_iter().collect();
        if let Some(bad) = pars.iter().find(|p| !p.is_param()) {
            return Err(ModelError::Kind {
                ident: bad.clone(),
                expected: IdentKind::Param,
            });
        }
        Ok(EventDef { pars, guard, action })
    }

    pub fn pars(&self) -> &BTreeSet<Ident> {
        &self.pars
    }

    pub fn guard(&self) -> &Predicate {
        &self.guard
    }

    pub fn action(&self) -> &Predicate {
        &self.action
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    name: String,
    vars: BTreeSet<Ident>,
    inv: Predicate,
    events: BTreeMap<String, EventDef>,
}

impl Machine {
    pub fn new(
        name: impl Into<String>,
        vars: impl IntoIterator<Item = Ident>,
        inv: Predicate,
        events: impl IntoIterator<Item = (String, EventDef)>,
    ) -> Result<Self, ModelError> {
        let vars: BTreeSet<Ident> = vars.into_iter().collect();
        if let Some(bad) = vars.iter().find(|v| !v.is_var()) {
            return Err(ModelError::Kind {
                ident: bad.clone(),
                expected: IdentKind::Var,
            });
        }
        Ok(Machine {
            name: name.into(),
            vars,
            inv,
            events: events.into_iter().collect(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &BTreeSet<Ident> {
        &self.vars
    }

    pub fn inv(&self) -> &Predicate {
        &self.inv
    }

    pub fn events(&self) -> &BTreeMap<String, EventDef> {
        &self.events
    }

    pub fn event(&self, name: &str) -> Option<&EventDef> {
        self.events.get(name)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        self.inv.universe()
    }

    /// Same machine under another name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        std::iter::once(&self.inv).chain(self.events.values().flat_map(|e| [&e.guard, &e.action]))
    }
}

/// The three visibility rules of the static semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// `Free(inv) ⊆ vars`
    InvariantScope,
    /// `Free(guard) ⊆ vars ∪ pars`
    GuardScope,
    /// `Free(action) ⊆ vars ∪ vars' ∪ pars`
    ActionScope,
}

impl Rule {
    pub fn id(&self) -> &'static str {
        match self {
            Rule::InvariantScope => "@mInv_ctr",
            Rule::GuardScope => "@mGuards_ctr",
            Rule::ActionScope => "@mActions_ctr",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub machine: String,
    pub event: Option<String>,
    pub rule: Rule,
    pub offending: BTreeSet<Ident>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in machine `{}`", self.rule, self.machine)?;
        if let Some(e) = &self.event {
            write!(f, ", event `{e}`")?;
        }
        let names: Vec<String> = self.offending.iter().map(ToString::to_string).collect();
        write!(f, ": {} not visible", names.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StaticReport {
    pub violations: Vec<Violation>,
}

impl StaticReport {
    pub fn is_well_formed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn outside(free: BTreeSet<Ident>, allowed: &BTreeSet<Ident>) -> BTreeSet<Ident> {
    free.into_iter().filter(|i| !allowed.contains(i)).collect()
}

/// Visibility violations of a single machine, in canonical order.
pub fn check_machine(machine: &Machine) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut report = |event: Option<&String>, rule, offending: BTreeSet<Ident>| {
        if !offending.is_empty() {
            out.push(Violation {
                machine: machine.name.clone(),
                event: event.cloned(),
                rule,
                offending,
            });
        }
    };
    report(None, Rule::InvariantScope, outside(machine.inv.free(), &machine.vars));
    let primes = prime_set(&machine.vars).expect("machine variables have kind Var");
    for (name, event) in &machine.events {
        let guard_scope: BTreeSet<Ident> = machine.vars.union(&event.pars).cloned().collect();
        report(Some(name), Rule::GuardScope, outside(event.guard.free(), &guard_scope));
        let action_scope: BTreeSet<Ident> = guard_scope.union(&primes).cloned().collect();
        report(Some(name), Rule::ActionScope, outside(event.action.free(), &action_scope));
    }
    out
}

/// Checks every machine of the project against the visibility rules.
pub fn check_static(project: &Project) -> StaticReport {
    StaticReport {
        violations: project.machines.values().flat_map(check_machine).collect(),
    }
}

/// A set of machines over a shared universe. Machines are keyed by name,
/// so equality does not depend on insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    universe: Arc<Universe>,
    machines: BTreeMap<String, Machine>,
}

impl Project {
    pub fn new(universe: Arc<Universe>) -> Self {
        Project {
            universe,
            machines: BTreeMap::new(),
        }
    }

    /// Builds a structurally valid project without checking static
    /// semantics; run [`check_static`] on the result.
    pub fn from_machines(universe: Arc<Universe>, machines: impl IntoIterator<Item = Machine>) -> Result<Self, ModelError> {
        let mut project = Project::new(universe);
        for m in machines {
            project.insert_structural(m)?;
        }
        Ok(project)
    }

    fn insert_structural(&mut self, machine: Machine) -> Result<(), ModelError> {
        if self.machines.contains_key(&machine.name) {
            return Err(ModelError::DuplicateMachine(machine.name));
        }
        let same = |u: &Arc<Universe>| Arc::ptr_eq(u, &self.universe) || **u == *self.universe;
        if !machine.predicates().all(|p| same(p.universe())) {
            return Err(ModelError::UniverseMismatch(machine.name));
        }
        self.machines.insert(machine.name.clone(), machine);
        Ok(())
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn machines(&self) -> impl Iterator<Item = &Machine> {
        self.machines.values()
    }

    pub fn machine_names(&self) -> impl Iterator<Item = &str> {
        self.machines.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.machines.contains_key(name)
    }

    pub fn get_machine(&self, name: &str) -> Result<&Machine, ModelError> {
        self.machines
            .get(name)
            .ok_or_else(|| ModelError::UnknownMachine(name.to_string()))
    }

    /// Adds one well-formed machine; existing machines are untouched.
    pub fn new_machine(&self, machine: Machine) -> Result<Project, ModelError> {
        if self.machines.contains_key(&machine.name) {
            return Err(ModelError::DuplicateMachine(machine.name));
        }
        let violations = check_machine(&machine);
        if !violations.is_empty() {
            return Err(ModelError::StaticViolation(StaticReport { violations }));
        }
        let mut next = self.clone();
        next.insert_structural(machine)?;
        Ok(next)
    }

    /// Adds several machines, all or nothing.
    pub fn add_machines(&self, machines: impl IntoIterator<Item = Machine>) -> Result<Project, ModelError> {
        machines.into_iter().try_fold(self.clone(), |p, m| p.new_machine(m))
    }

    pub fn remove_machine(&self, name: &str) -> Result<Project, ModelError> {
        let mut next = self.clone();
        next.machines
            .remove(name)
            .ok_or_else(|| ModelError::UnknownMachine(name.to_string()))?;
        Ok(next)
    }
}
