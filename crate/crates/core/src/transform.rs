//! State-based decomposition of a machine along a partition of its
//! variables, and the brute-force product oracle used to validate it.
//!
//! Splitting allocates each invariant conjunct to the block holding its free
//! variables and each event to the single block it reads or writes. A frame
//! conjunct `v' = v` on a variable of another block does not count as a
//! write: it is dropped from the submachine and restored by
//! [`compose_oracle`] as stuttering padding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{next_renaming, prime_set, Ident, KernelError, Predicate, Valuation};
use crate::model::{check_machine, EventDef, Machine, ModelError, Project, StaticReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),

    #[error("source machine is not well formed")]
    NotWellFormed(StaticReport),

    #[error("invalid split plan: {0}")]
    InvalidPlan(String),

    #[error("invariant conjunct `{conjunct}` spans blocks {}", .blocks.join(", "))]
    CrossBlockInvariant { conjunct: String, blocks: Vec<String> },

    #[error("event `{event}` spans blocks {}{}", .blocks.join(", "), .conjunct.as_ref().map(|c| format!(" (conjunct `{c}`)")).unwrap_or_default())]
    CrossBlockEvent {
        event: String,
        conjunct: Option<String>,
        blocks: Vec<String>,
    },

    #[error("machines `{first}` and `{second}` share variables")]
    OverlappingVars { first: String, second: String },

    #[error("nothing to compose")]
    EmptyComposition,

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl TransformError {
    pub fn kind(&self) -> &'static str {
        match self {
            TransformError::UnknownMachine(_) => "UnknownMachine",
            TransformError::NotWellFormed(_) => "NotWellFormed",
            TransformError::InvalidPlan(_) => "InvalidPlan",
            TransformError::CrossBlockInvariant { .. } => "CrossBlockInvariant",
            TransformError::CrossBlockEvent { .. } => "CrossBlockEvent",
            TransformError::OverlappingVars { .. } => "OverlappingVars",
            TransformError::EmptyComposition => "EmptyComposition",
            TransformError::Model(_) => "ModelError",
            TransformError::Kernel(_) => "KernelError",
        }
    }
}

/// A partition of the source machine's variables into named blocks; each
/// block becomes a submachine of the same name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitPlan {
    pub source: String,
    pub blocks: Vec<(String, BTreeSet<Ident>)>,
}

impl SplitPlan {
    pub fn new(source: impl Into<String>, blocks: impl IntoIterator<Item = (String, BTreeSet<Ident>)>) -> Self {
        SplitPlan {
            source: source.into(),
            blocks: blocks.into_iter().collect(),
        }
    }

    /// Blocks must be non-empty, disjoint, uniquely named and cover `vars`.
    pub fn validate(&self, vars: &BTreeSet<Ident>) -> Result<(), TransformError> {
        let mut seen = BTreeSet::new();
        let mut names = BTreeSet::new();
        if self.blocks.is_empty() {
            return Err(TransformError::InvalidPlan("no blocks".into()));
        }
        for (name, block) in &self.blocks {
            if !names.insert(name) {
                return Err(TransformError::InvalidPlan(format!("block `{name}` named twice")));
            }
            if block.is_empty() {
                return Err(TransformError::InvalidPlan(format!("block `{name}` is empty")));
            }
            for v in block {
                if !vars.contains(v) {
                    return Err(TransformError::InvalidPlan(format!("`{v}` is not a variable of `{}`", self.source)));
                }
                if !seen.insert(v) {
                    return Err(TransformError::InvalidPlan(format!("`{v}` is in more than one block")));
                }
            }
        }
        if let Some(missing) = vars.iter().find(|v| !seen.contains(v)) {
            return Err(TransformError::InvalidPlan(format!("`{missing}` is not covered")));
        }
        Ok(())
    }

    /// Splits a decomposable source state into one state per block.
    pub fn split_state(&self, state: &Predicate) -> BTreeMap<String, Predicate> {
        self.blocks
            .iter()
            .map(|(name, block)| (name.clone(), state.proj(block)))
            .collect()
    }
}

struct Blocks<'a> {
    plan: &'a SplitPlan,
}

impl Blocks<'_> {
    fn of(&self, ident: &Ident) -> Option<usize> {
        let var = if ident.is_prime() { ident.unprime().ok()? } else { ident.clone() };
        self.plan.blocks.iter().position(|(_, b)| b.contains(&var))
    }

    fn touched(&self, idents: &BTreeSet<Ident>) -> BTreeSet<usize> {
        idents.iter().filter_map(|i| self.of(i)).collect()
    }

    fn names(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&i| self.plan.blocks[i].0.clone()).collect()
    }
}

/// `v' = v` for some variable `v`, as a stand-alone conjunct.
fn frame_variable(conjunct: &Predicate) -> Result<Option<Ident>, KernelError> {
    let free = conjunct.free();
    let var = match free.iter().find(|i| i.is_var()) {
        Some(v) if free.len() == 2 && free.contains(&v.prime()?) => v.clone(),
        _ => return Ok(None),
    };
    let identity = Predicate::identity(conjunct.universe(), &var)?;
    Ok(conjunct.equivalent(&identity)?.then_some(var))
}

struct Allocated {
    block: usize,
    guard: Vec<Predicate>,
    action: Vec<Predicate>,
}

fn allocate_event(source: &Machine, blocks: &Blocks, name: &str, event: &EventDef) -> Result<Allocated, TransformError> {
    // An event that can never fire touches nothing.
    if event.guard().intersect(event.action())?.is_unsatisfiable() {
        let never = Predicate::falsity(source.universe());
        return Ok(Allocated {
            block: 0,
            guard: vec![never.clone()],
            action: vec![never],
        });
    }
    let mut touched = BTreeSet::new();
    let mut spanning: Option<String> = None;
    let mut note = |set: BTreeSet<usize>, c: &Predicate, touched: &mut BTreeSet<usize>| {
        if set.len() > 1 && spanning.is_none() {
            spanning = Some(c.to_string());
        }
        touched.extend(set);
    };

    let guard = event.guard().conjuncts();
    for c in &guard {
        note(blocks.touched(&c.free()), c, &mut touched);
    }
    let mut frames: Vec<(Ident, Predicate)> = Vec::new();
    let mut action = Vec::new();
    for c in event.action().conjuncts() {
        match frame_variable(&c)? {
            Some(v) => frames.push((v, c)),
            None => {
                note(blocks.touched(&c.free()), &c, &mut touched);
                action.push(c);
            }
        }
    }
    // A variable whose primed image is unconstrained is havocked by the event.
    let written = event.action().free();
    for v in source.vars() {
        if !written.contains(&v.prime()?) {
            touched.extend(blocks.of(v));
        }
    }

    if touched.len() > 1 {
        return Err(TransformError::CrossBlockEvent {
            event: name.to_string(),
            conjunct: spanning,
            blocks: blocks.names(&touched),
        });
    }
    let block = touched.into_iter().next().unwrap_or(0);
    action.extend(
        frames
            .into_iter()
            .filter(|(v, _)| blocks.of(v) == Some(block))
            .map(|(_, c)| c),
    );
    Ok(Allocated { block, guard, action })
}

/// Adds one submachine per plan block to the project. The source machine
/// stays in the project.
pub fn split_machine(project: &Project, plan: &SplitPlan) -> Result<Project, TransformError> {
    Ok(project.add_machines(split_into_machines(project, plan)?)?)
}

/// The submachines of an accepted plan, in plan order.
pub fn split_into_machines(project: &Project, plan: &SplitPlan) -> Result<Vec<Machine>, TransformError> {
    let source = project
        .get_machine(&plan.source)
        .map_err(|_| TransformError::UnknownMachine(plan.source.clone()))?;
    let violations = check_machine(source);
    if !violations.is_empty() {
        return Err(TransformError::NotWellFormed(StaticReport { violations }));
    }
    plan.validate(source.vars())?;
    let blocks = Blocks { plan };
    let universe = project.universe();
    let n = plan.blocks.len();

    let mut invs: Vec<Vec<Predicate>> = vec![Vec::new(); n];
    for c in source.inv().conjuncts() {
        let touched = blocks.touched(&c.free());
        match touched.len() {
            0 => invs.iter_mut().for_each(|v| v.push(c.clone())),
            1 => invs[*touched.first().unwrap()].push(c),
            _ => {
                return Err(TransformError::CrossBlockInvariant {
                    conjunct: c.to_string(),
                    blocks: blocks.names(&touched),
                })
            }
        }
    }

    let mut events: Vec<Vec<(String, EventDef)>> = vec![Vec::new(); n];
    for (name, event) in source.events() {
        let a = allocate_event(source, &blocks, name, event)?;
        let def = EventDef::new(
            event.pars().iter().cloned(),
            Predicate::intersect_all(universe, &a.guard)?,
            Predicate::intersect_all(universe, &a.action)?,
        )?;
        events[a.block].push((name.clone(), def));
    }

    plan.blocks
        .iter()
        .zip(invs)
        .zip(events)
        .map(|(((name, block), inv), evs)| {
            Ok(Machine::new(
                name.clone(),
                block.iter().cloned(),
                Predicate::intersect_all(universe, &inv)?,
                evs,
            )?)
        })
        .collect()
}

/// Product of machines over disjoint variables: invariants are intersected
/// and every event is padded with `v' = v` for the other machines'
/// variables. Event names shared by two machines are qualified as
/// `machine.event`.
pub fn compose_oracle(subs: &[Machine]) -> Result<Machine, TransformError> {
    let first = subs.first().ok_or(TransformError::EmptyComposition)?;
    let universe: Arc<_> = first.universe().clone();
    for (i, a) in subs.iter().enumerate() {
        for b in &subs[i + 1..] {
            if !a.vars().is_disjoint(b.vars()) {
                return Err(TransformError::OverlappingVars {
                    first: a.name().to_string(),
                    second: b.name().to_string(),
                });
            }
        }
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in subs {
        for e in m.events().keys() {
            *counts.entry(e).or_default() += 1;
        }
    }

    let vars: BTreeSet<Ident> = subs.iter().flat_map(|m| m.vars().iter().cloned()).collect();
    let inv = Predicate::intersect_all(&universe, subs.iter().map(Machine::inv))?;
    let mut events = Vec::new();
    for m in subs {
        let frame = vars
            .iter()
            .filter(|v| !m.vars().contains(v))
            .map(|v| Predicate::identity(&universe, v))
            .collect::<Result<Vec<_>, _>>()?;
        for (name, e) in m.events() {
            let action = frame.iter().try_fold(e.action().clone(), |acc, f| acc.intersect(f))?;
            let qualified = if counts[name.as_str()] > 1 {
                format!("{}.{name}", m.name())
            } else {
                name.clone()
            };
            events.push((qualified, EventDef::new(e.pars().iter().cloned(), e.guard().clone(), action)?));
        }
    }
    let name = subs.iter().map(Machine::name).collect::<Vec<_>>().join("||");
    Ok(Machine::new(name, vars, inv, events)?)
}

/// One labelled transition between full variable valuations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Transition {
    pub from: Valuation,
    pub event: String,
    pub params: Valuation,
    pub to: Valuation,
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] --{}", self.from, self.event)?;
        if !self.params.is_empty() {
            write!(f, "({})", self.params)?;
        }
        write!(f, "--> [{}]", self.to)
    }
}

/// All transitions of `machine` from states satisfying its invariant, in
/// canonical order.
pub fn transition_relation(machine: &Machine) -> Result<BTreeSet<Transition>, KernelError> {
    let primes = prime_set(machine.vars())?;
    let unprime: BTreeMap<Ident, Ident> = next_renaming(machine.vars())?.into_iter().map(|(v, p)| (p, v)).collect();
    let mut out = BTreeSet::new();
    for (name, e) in machine.events() {
        let mut scope = machine.vars().clone();
        scope.extend(primes.iter().cloned());
        scope.extend(e.pars().iter().cloned());
        let table = machine
            .inv()
            .intersect(e.guard())?
            .intersect(e.action())?
            .extend_to(&scope)?;
        for row in table.valuations() {
            out.insert(Transition {
                from: row.restrict(|i| i.is_var()),
                event: name.clone(),
                params: row.restrict(|i| i.is_param()),
                to: row
                    .iter()
                    .filter(|(i, _)| i.is_prime())
                    .map(|(i, v)| (unprime[i].clone(), v.clone()))
                    .collect(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Source,
    Composed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// The two machines range over different variables.
    Variables { source: BTreeSet<Ident>, composed: BTreeSet<Ident> },
    /// A state admitted by exactly one of the two invariants.
    Invariant { state: Valuation },
    /// A transition present on one side only.
    Transition { transition: Transition, only_in: Side },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Variables { .. } => f.write_str("variable sets differ"),
            Witness::Invariant { state } => write!(f, "invariants differ at {state}"),
            Witness::Transition { transition, only_in } => write!(f, "{transition} only in {only_in:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Equal,
    Differs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub source_transitions: usize,
    pub composed_transitions: usize,
}

impl EquivalenceReport {
    pub fn is_equal(&self) -> bool {
        self.verdict == Verdict::Equal
    }
}

/// Compares the transition relation of `source` with that of the product
/// of `subs`, by exhaustive enumeration.
pub fn check_split_equivalence(source: &Machine, subs: &[Machine]) -> Result<EquivalenceReport, TransformError> {
    let composed = compose_oracle(subs)?;
    let left = transition_relation(source)?;
    let right = transition_relation(&composed)?;
    let differs = |witness| EquivalenceReport {
        verdict: Verdict::Differs,
        witness: Some(witness),
        source_transitions: left.len(),
        composed_transitions: right.len(),
    };
    if source.vars() != composed.vars() {
        return Ok(differs(Witness::Variables {
            source: source.vars().clone(),
            composed: composed.vars().clone(),
        }));
    }
    let source_inv = source.inv().extend_to(source.vars())?;
    if let Some(state) = source_inv.distinguishing_state(&composed.inv().extend_to(source.vars())?)? {
        return Ok(differs(Witness::Invariant { state }));
    }
    let first = match (left.difference(&right).next(), right.difference(&left).next()) {
        (Some(a), Some(b)) if b < a => Some((b, Side::Composed)),
        (Some(a), _) => Some((a, Side::Source)),
        (None, Some(b)) => Some((b, Side::Composed)),
        (None, None) => None,
    };
    Ok(match first {
        Some((t, side)) => differs(Witness::Transition {
            transition: t.clone(),
            only_in: side,
        }),
        None => EquivalenceReport {
            verdict: Verdict::Equal,
            witness: None,
            source_transitions: left.len(),
            composed_transitions: right.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Domain, Universe, Value};

    fn universe() -> Arc<Universe> {
        Arc::new(
            Universe::new()
                .with_var("x", Domain::range(0, 3).unwrap())
                .unwrap()
                .with_var("y", Domain::range(0, 2).unwrap())
                .unwrap(),
        )
    }

    fn int(v: Option<&Value>) -> i64 {
        match v {
            Some(Value::Int(i)) => *i,
            other => panic!("expected int, got {other:?}"),
        }
    }

    fn le(u: &Arc<Universe>, v: &Ident, k: i64) -> Predicate {
        Predicate::from_fn(u, [v.clone()], |s| int(s.get(v)) <= k).unwrap()
    }
    fn lt(u: &Arc<Universe>, v: &Ident, k: i64) -> Predicate {
        Predicate::from_fn(u, [v.clone()], |s| int(s.get(v)) < k).unwrap()
    }
    fn inc(u: &Arc<Universe>, v: &Ident) -> Predicate {
        let p = v.prime().unwrap();
        Predicate::from_fn(u, [v.clone(), p.clone()], |s| int(s.get(&p)) == int(s.get(v)) + 1).unwrap()
    }

    /// vars {x, y}; inv x ≤ 2 ∧ y ≤ 1; incx, incy each framing the other.
    fn pair(u: &Arc<Universe>, inv: Predicate) -> Machine {
        let (x, y) = (Ident::var("x"), Ident::var("y"));
        let incx = EventDef::new(
            [],
            lt(u, &x, 2),
            inc(u, &x).intersect(&Predicate::identity(u, &y).unwrap()).unwrap(),
        )
        .unwrap();
        let incy = EventDef::new(
            [],
            lt(u, &y, 1),
            inc(u, &y).intersect(&Predicate::identity(u, &x).unwrap()).unwrap(),
        )
        .unwrap();
        Machine::new(
            "Pair",
            [x, y],
            inv,
            [("incx".to_string(), incx), ("incy".to_string(), incy)],
        )
        .unwrap()
    }

    fn default_inv(u: &Arc<Universe>) -> Predicate {
        le(u, &Ident::var("x"), 2).intersect(&le(u, &Ident::var("y"), 1)).unwrap()
    }

    fn plan() -> SplitPlan {
        SplitPlan::new(
            "Pair",
            [
                ("Px".to_string(), BTreeSet::from([Ident::var("x")])),
                ("Py".to_string(), BTreeSet::from([Ident::var("y")])),
            ],
        )
    }

    #[test]
    fn split_allocates_conjuncts() {
        let u = universe();
        let project = Project::new(u.clone()).new_machine(pair(&u, default_inv(&u))).unwrap();
        let split = split_machine(&project, &plan()).unwrap();
        assert_eq!(split.len(), 3);
        let px = split.get_machine("Px").unwrap();
        let py = split.get_machine("Py").unwrap();
        assert!(px.inv().equivalent(&le(&u, &Ident::var("x"), 2)).unwrap());
        assert!(py.inv().equivalent(&le(&u, &Ident::var("y"), 1)).unwrap());
        assert_eq!(px.events().keys().collect::<Vec<_>>(), ["incx"]);
        assert_eq!(py.events().keys().collect::<Vec<_>>(), ["incy"]);
        assert!(px.event("incx").unwrap().action().equivalent(&inc(&u, &Ident::var("x"))).unwrap());
    }

    #[test]
    fn correlated_invariant_is_rejected() {
        let u = universe();
        let (x, y) = (Ident::var("x"), Ident::var("y"));
        let corr = Predicate::from_fn(&u, [x.clone(), y.clone()], |s| s.get(&x) == s.get(&y)).unwrap();
        let project = Project::new(u.clone()).new_machine(pair(&u, corr)).unwrap();
        assert!(matches!(
            split_machine(&project, &plan()),
            Err(TransformError::CrossBlockInvariant { .. })
        ));
    }

    #[test]
    fn havocking_event_crosses_blocks() {
        let u = universe();
        let x = Ident::var("x");
        let only_x = EventDef::new([], Predicate::truth(&u), inc(&u, &x)).unwrap();
        let m = Machine::new("Pair", [x, Ident::var("y")], Predicate::truth(&u), [("e".to_string(), only_x)]).unwrap();
        let project = Project::new(u).new_machine(m).unwrap();
        match split_machine(&project, &plan()) {
            Err(TransformError::CrossBlockEvent { blocks, .. }) => assert_eq!(blocks, ["Px", "Py"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_block_plan_is_identity() {
        let u = universe();
        let source = pair(&u, default_inv(&u));
        let project = Project::new(u.clone()).new_machine(source.clone()).unwrap();
        let whole = SplitPlan::new("Pair", [("All".to_string(), source.vars().clone())]);
        let subs = split_into_machines(&project, &whole).unwrap();
        assert!(check_split_equivalence(&source, &subs).unwrap().is_equal());
        assert!(subs[0].inv().equivalent(source.inv()).unwrap());
    }

    #[test]
    fn split_round_trip_and_strengthened_guard() {
        let u = universe();
        let source = pair(&u, default_inv(&u));
        let project = Project::new(u.clone()).new_machine(source.clone()).unwrap();
        let subs = split_into_machines(&project, &plan()).unwrap();
        let report = check_split_equivalence(&source, &subs).unwrap();
        assert!(report.is_equal(), "{report:?}");
        assert_eq!(report.source_transitions, report.composed_transitions);

        let x = Ident::var("x");
        let px = &subs[0];
        let strengthened = EventDef::new([], lt(&u, &x, 1), px.event("incx").unwrap().action().clone()).unwrap();
        let px2 = Machine::new("Px", [x.clone()], px.inv().clone(), [("incx".to_string(), strengthened)]).unwrap();
        let report = check_split_equivalence(&source, &[px2, subs[1].clone()]).unwrap();
        match report.witness {
            Some(Witness::Transition { transition, only_in }) => {
                assert_eq!(only_in, Side::Source);
                assert_eq!(transition.event, "incx");
                assert_eq!(transition.from.get(&x), Some(&Value::Int(1)));
                assert_eq!(transition.from.get(&Ident::var("y")), Some(&Value::Int(0)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compose_cases() {
        let u = universe();
        let source = pair(&u, default_inv(&u));
        let project = Project::new(u.clone()).new_machine(source.clone()).unwrap();
        let subs = split_into_machines(&project, &plan()).unwrap();
        let c = compose_oracle(&subs).unwrap();
        assert_eq!(c.vars(), source.vars());
        assert_eq!(c.events().keys().collect::<Vec<_>>(), ["incx", "incy"]);
        let single = compose_oracle(&subs[..1]).unwrap();
        assert_eq!(single.events(), subs[0].events());
        assert!(matches!(
            compose_oracle(&[source.clone(), subs[0].clone()]),
            Err(TransformError::OverlappingVars { .. })
        ));
        assert!(check_split_equivalence(&source, std::slice::from_ref(&source)).unwrap().is_equal());
    }

    #[test]
    fn invalid_plans() {
        let vars = BTreeSet::from([Ident::var("x"), Ident::var("y")]);
        let overlap = SplitPlan::new(
            "Pair",
            [
                ("A".to_string(), vars.clone()),
                ("B".to_string(), BTreeSet::from([Ident::var("y")])),
            ],
        );
        assert!(matches!(overlap.validate(&vars), Err(TransformError::InvalidPlan(_))));
        let partial = SplitPlan::new("Pair", [("A".to_string(), BTreeSet::from([Ident::var("x")]))]);
        assert!(partial.validate(&vars).is_err());
        let empty = SplitPlan::new("Pair", [("A".to_string(), BTreeSet::new()), ("B".to_string(), vars.clone())]);
        assert!(empty.validate(&vars).is_err());
        assert!(plan().validate(&vars).is_ok());
    }
}
