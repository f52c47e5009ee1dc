//! Operational semantics: the active-machine state map, the `step` update,
//! hot replacement of active machines and trace execution.
//!
//! A step of machine `m` with event `e` and parameter predicate `p` replaces
//! the state `s` of `m` by
//!
//! ```text
//! Subst(Next∼)(Proj(Next[vars(m)])(s ∩ p ∩ action(e)))
//! ```
//!
//! provided `s ∩ p ⊆ guard(e)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::kernel::{prime_set, unprime_renaming, Ident, KernelError, Predicate, Valuation};
use crate::model::{EventDef, Machine, Project};

/// The four conditions every active state must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StateInvariant {
    /// The state is a non-empty set.
    Satisfiable,
    /// `Free(state) ⊆ vars`
    FreeState,
    /// The state is a product of per-variable constraints.
    Decomposable,
    /// `state ⊆ inv`
    StateDync,
}

impl StateInvariant {
    pub fn id(&self) -> &'static str {
        match self {
            StateInvariant::Satisfiable => "satisfiable",
            StateInvariant::FreeState => "@free_state",
            StateInvariant::Decomposable => "@state_ty",
            StateInvariant::StateDync => "@state_dync",
        }
    }
}

impl fmt::Display for StateInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Serialize for StateInvariant {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),

    #[error("initial state of `{machine}` violates {invariant}")]
    InitViolation {
        machine: String,
        invariant: StateInvariant,
    },

    #[error("machine `{0}` is not active")]
    InactiveMachine(String),

    #[error("machine `{machine}` has no event `{event}`")]
    UnknownEvent { machine: String, event: String },

    #[error("parameter predicate mentions non-parameters: {}", join(.offending))]
    NonParamPredicate { offending: BTreeSet<Ident> },

    #[error("guard of `{machine}.{event}` is not entailed; witness {witness}")]
    GuardNotEntailed {
        machine: String,
        event: String,
        witness: Valuation,
    },

    #[error("action of `{machine}.{event}` has no successor from the current state")]
    EmptySuccessor { machine: String, event: String },

    #[error("machine `{0}` is not active and cannot be retired")]
    NotActive(String),

    #[error("machine `{0}` is already active")]
    AlreadyActive(String),

    #[error("conjunction of retired states differs from conjunction of new states at {witness}")]
    TransparencyViolation { witness: Valuation },

    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl RunError {
    /// Stable short name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::UnknownMachine(_) => "UnknownMachine",
            RunError::InitViolation { .. } => "InitViolation",
            RunError::InactiveMachine(_) => "InactiveMachine",
            RunError::UnknownEvent { .. } => "UnknownEvent",
            RunError::NonParamPredicate { .. } => "NonParamPredicate",
            RunError::GuardNotEntailed { .. } => "GuardNotEntailed",
            RunError::EmptySuccessor { .. } => "EmptySuccessor",
            RunError::NotActive(_) => "NotActive",
            RunError::AlreadyActive(_) => "AlreadyActive",
            RunError::TransparencyViolation { .. } => "TransparencyViolation",
            RunError::Kernel(_) => "KernelError",
        }
    }
}

fn join(idents: &BTreeSet<Ident>) -> String {
    idents.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Checks a candidate state for `machine` against the four state invariants.
pub fn check_state(machine: &Machine, state: &Predicate) -> Result<(), RunError> {
    let fail = |invariant| RunError::InitViolation {
        machine: machine.name().to_string(),
        invariant,
    };
    if state.is_unsatisfiable() {
        return Err(fail(StateInvariant::Satisfiable));
    }
    if !state.free().is_subset(machine.vars()) {
        return Err(fail(StateInvariant::FreeState));
    }
    if !state.is_decomposable() {
        return Err(fail(StateInvariant::Decomposable));
    }
    if !state.entails(machine.inv())? {
        return Err(fail(StateInvariant::StateDync));
    }
    Ok(())
}

/// Active machines and their current states. Immutable: every operation
/// returns a new snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunState {
    project: Arc<Project>,
    active: BTreeMap<String, Predicate>,
}

impl RunState {
    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn active(&self) -> &BTreeMap<String, Predicate> {
        &self.active
    }

    pub fn state(&self, machine: &str) -> Option<&Predicate> {
        self.active.get(machine)
    }

    pub fn is_active(&self, machine: &str) -> bool {
        self.active.contains_key(machine)
    }

    /// Conjunction of all active states.
    pub fn global_state(&self) -> Result<Predicate, KernelError> {
        Predicate::intersect_all(self.project.universe(), self.active.values())
    }

    fn active_machine(&self, name: &str) -> Result<(&Machine, &Predicate), RunError> {
        let state = self
            .active
            .get(name)
            .ok_or_else(|| RunError::InactiveMachine(name.to_string()))?;
        let machine = self
            .project
            .get_machine(name)
            .expect("active machines belong to the project");
        Ok((machine, state))
    }
}

/// Starts a run with exactly the given machines active.
pub fn init_run(project: impl Into<Arc<Project>>, initial: BTreeMap<String, Predicate>) -> Result<RunState, RunError> {
    let project = project.into();
    for (name, state) in &initial {
        let machine = project
            .get_machine(name)
            .map_err(|_| RunError::UnknownMachine(name.clone()))?;
        check_state(machine, state)?;
    }
    Ok(RunState {
        project,
        active: initial,
    })
}

/// A condition the post-step state fails to meet. The step still happens;
/// these are reported rather than hidden.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum StepWarning {
    NotDecomposable { machine: String },
    InvariantViolated { machine: String, witness: Valuation },
    FreeOutsideVars { machine: String, offending: BTreeSet<Ident> },
}

impl fmt::Display for StepWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepWarning::NotDecomposable { machine } => write!(f, "state of `{machine}` is not decomposable"),
            StepWarning::InvariantViolated { machine, witness } => {
                write!(f, "state of `{machine}` violates its invariant at {witness}")
            }
            StepWarning::FreeOutsideVars { machine, offending } => {
                write!(f, "state of `{machine}` depends on {}", join(offending))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub run: RunState,
    pub warnings: Vec<StepWarning>,
}

fn guard_holds(state: &Predicate, params: &Predicate, event: &EventDef) -> Result<Option<Valuation>, KernelError> {
    state.intersect(params)?.entailment_witness(event.guard())
}

fn successor(machine: &Machine, state: &Predicate, params: &Predicate, event: &EventDef) -> Result<Predicate, KernelError> {
    let primes = prime_set(machine.vars())?;
    let joined = state.intersect(params)?.intersect(event.action())?;
    joined.proj(&primes).subst(&unprime_renaming(machine.vars())?)
}

/// Fires event `event` of active machine `machine` with parameter values `params`.
pub fn step(rs: &RunState, machine: &str, event: &str, params: &Predicate) -> Result<Step, RunError> {
    let (m, state) = rs.active_machine(machine)?;
    let def = m.event(event).ok_or_else(|| RunError::UnknownEvent {
        machine: machine.to_string(),
        event: event.to_string(),
    })?;
    let offending: BTreeSet<Ident> = params.free().into_iter().filter(|i| !i.is_param()).collect();
    if !offending.is_empty() {
        return Err(RunError::NonParamPredicate { offending });
    }
    if let Some(witness) = guard_holds(state, params, def)? {
        return Err(RunError::GuardNotEntailed {
            machine: machine.to_string(),
            event: event.to_string(),
            witness,
        });
    }
    let next = successor(m, state, params, def)?;
    if next.is_unsatisfiable() {
        return Err(RunError::EmptySuccessor {
            machine: machine.to_string(),
            event: event.to_string(),
        });
    }

    let mut warnings = Vec::new();
    let outside: BTreeSet<Ident> = next.free().into_iter().filter(|i| !m.vars().contains(i)).collect();
    if !outside.is_empty() {
        warnings.push(StepWarning::FreeOutsideVars {
            machine: machine.to_string(),
            offending: outside,
        });
    }
    if !next.is_decomposable() {
        warnings.push(StepWarning::NotDecomposable {
            machine: machine.to_string(),
        });
    }
    if let Some(witness) = next.entailment_witness(m.inv())? {
        warnings.push(StepWarning::InvariantViolated {
            machine: machine.to_string(),
            witness,
        });
    }

    let mut active = rs.active.clone();
    active.insert(machine.to_string(), next);
    Ok(Step {
        run: RunState {
            project: rs.project.clone(),
            active,
        },
        warnings,
    })
}

/// Point predicates over the event's parameters in canonical order; just
/// `true` when the event has none.
fn parameter_points(rs: &RunState, event: &EventDef) -> Result<Vec<Predicate>, KernelError> {
    let universe = rs.project.universe();
    let all = Predicate::from_fn(universe, event.pars().iter().cloned(), |_| true)?;
    all.valuations().map(|v| Predicate::point(universe, &v)).collect()
}

/// Events of an active machine whose guard is entailed for some parameter
/// point, each with the smallest such point.
pub fn enabled(rs: &RunState, machine: &str) -> Result<Vec<(String, Predicate)>, RunError> {
    let (m, state) = rs.active_machine(machine)?;
    let mut out = Vec::new();
    for (name, def) in m.events() {
        for p in parameter_points(rs, def)? {
            if guard_holds(state, &p, def)?.is_none() {
                out.push((name.clone(), p));
                break;
            }
        }
    }
    Ok(out)
}

/// Every (event, parameter point) of an active machine that satisfies the
/// guard and has a non-empty successor.
pub fn fireable(rs: &RunState, machine: &str) -> Result<Vec<(String, Predicate)>, RunError> {
    let (m, state) = rs.active_machine(machine)?;
    let mut out = Vec::new();
    for (name, def) in m.events() {
        for p in parameter_points(rs, def)? {
            if guard_holds(state, &p, def)?.is_none() && !successor(m, state, &p, def)?.is_unsatisfiable() {
                out.push((name.clone(), p));
            }
        }
    }
    Ok(out)
}

/// Retires some active machines and activates inactive ones, provided the
/// conjunction of the retired states equals the conjunction of the new ones.
pub fn replace_active(
    rs: &RunState,
    retire: &BTreeSet<String>,
    activate: &BTreeMap<String, Predicate>,
) -> Result<RunState, RunError> {
    if let Some(m) = retire.iter().find(|m| !rs.is_active(m)) {
        return Err(RunError::NotActive(m.clone()));
    }
    for (name, state) in activate {
        let machine = rs
            .project
            .get_machine(name)
            .map_err(|_| RunError::UnknownMachine(name.clone()))?;
        if rs.is_active(name) {
            return Err(RunError::AlreadyActive(name.clone()));
        }
        check_state(machine, state)?;
    }
    let universe = rs.project.universe();
    let old = Predicate::intersect_all(universe, retire.iter().map(|m| &rs.active[m]))?;
    let new = Predicate::intersect_all(universe, activate.values())?;
    if let Some(witness) = old.distinguishing_state(&new)? {
        return Err(RunError::TransparencyViolation { witness });
    }
    let mut active = rs.active.clone();
    for m in retire {
        active.remove(m);
    }
    active.extend(activate.iter().map(|(k, v)| (k.clone(), v.clone())));
    Ok(RunState {
        project: rs.project.clone(),
        active,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptStep {
    pub machine: String,
    pub event: String,
    pub params: Predicate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceMode {
    Script(Vec<ScriptStep>),
    /// Uniform choice among fireable (machine, event, parameter point)
    /// triples, drawn from a ChaCha8 generator seeded with `seed`.
    Random { seed: u64, steps: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub index: usize,
    pub machine: String,
    pub event: String,
    pub params: Predicate,
    pub state: BTreeMap<String, Predicate>,
    pub warnings: Vec<StepWarning>,
}

#[derive(Debug, Clone)]
pub enum TraceOutcome {
    Completed,
    /// Nothing was fireable before step `index`.
    Deadlock { index: usize },
    /// Script step `index` was rejected.
    Failed { index: usize, error: RunError },
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub outcome: TraceOutcome,
    pub last: RunState,
}

impl Trace {
    pub fn warnings(&self) -> impl Iterator<Item = &StepWarning> {
        self.records.iter().flat_map(|r| r.warnings.iter())
    }
}

fn record(index: usize, machine: &str, event: &str, params: &Predicate, step: &Step) -> TraceRecord {
    TraceRecord {
        index,
        machine: machine.to_string(),
        event: event.to_string(),
        params: params.clone(),
        state: step.run.active.clone(),
        warnings: step.warnings.clone(),
    }
}

/// Runs a script or a seeded random walk from `rs`.
pub fn run_trace(rs: &RunState, mode: &TraceMode) -> Result<Trace, RunError> {
    let mut current = rs.clone();
    let mut records = Vec::new();
    match mode {
        TraceMode::Script(steps) => {
            for (index, s) in steps.iter().enumerate() {
                match step(&current, &s.machine, &s.event, &s.params) {
                    Ok(next) => {
                        records.push(record(index, &s.machine, &s.event, &s.params, &next));
                        current = next.run;
                    }
                    Err(error) => {
                        return Ok(Trace {
                            records,
                            outcome: TraceOutcome::Failed { index, error },
                            last: current,
                        })
                    }
                }
            }
        }
        TraceMode::Random { seed, steps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for index in 0..*steps {
                let mut choices = Vec::new();
                for m in current.active.keys() {
                    for (e, p) in fireable(&current, m)? {
                        choices.push((m.clone(), e, p));
                    }
                }
                if choices.is_empty() {
                    return Ok(Trace {
                        records,
                        outcome: TraceOutcome::Deadlock { index },
                        last: current,
                    });
                }
                let (m, e, p) = &choices[rng.gen_range(0..choices.len())];
                let next = step(&current, m, e, p)?;
                records.push(record(index, m, e, p, &next));
                current = next.run;
            }
        }
    }
    Ok(Trace {
        records,
        outcome: TraceOutcome::Completed,
        last: current,
    })
}
