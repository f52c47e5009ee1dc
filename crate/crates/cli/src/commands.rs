use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{json, Value};

use ebmeta_core::dynamics::{init_run, replace_active, run_trace, RunError, TraceMode, TraceOutcome};
use ebmeta_core::kernel::Ident;
use ebmeta_core::model::{Machine, Project};
use ebmeta_core::obligations::{po_all, po_inv_preservation, ObligationResult};
use ebmeta_core::surface::{self, CompileOptions, Compiled, SurfaceError};
use ebmeta_core::transform::{check_split_equivalence, split_into_machines, TransformError};
use ebmeta_core::Predicate;

use crate::report::{ErrorInfo, Outcome, EXIT_FAIL, EXIT_RUNTIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Inv,
    Guard,
    Action,
    Init,
}

fn names(idents: &BTreeSet<Ident>) -> Vec<String> {
    idents.iter().map(ToString::to_string).collect()
}

fn static_failure(text: &str, err: &SurfaceError) -> Option<Outcome> {
    let SurfaceError::StaticViolation(vs) = err else { return None };
    let machines: Vec<String> = surface::parse(text)
        .map(|m| m.machines.iter().map(|m| m.name.text.clone()).collect())
        .unwrap_or_default();
    let summary = vs
        .iter()
        .map(|v| format!("{}:{}: {}", v.line, v.column, v.violation))
        .collect();
    Some(Outcome::fail(
        EXIT_FAIL,
        json!({ "machines": machines, "violations": vs }),
        summary,
    ))
}

/// Compiles the input; parse errors and static violations become outcomes.
fn compile(text: &str, options: CompileOptions) -> Result<Compiled, Box<Outcome>> {
    surface::load(text, options)
        .map_err(|e| Box::new(static_failure(text, &e).unwrap_or_else(|| Outcome::error((&e).into()))))
}

fn unknown_machine(name: &str) -> Outcome {
    Outcome::error(ErrorInfo::new("UnknownMachine", format!("unknown machine `{name}`")))
}

fn machine<'a>(c: &'a Compiled, name: &str) -> Result<&'a Machine, Box<Outcome>> {
    c.project.get_machine(name).map_err(|_| Box::new(unknown_machine(name)))
}

pub fn check(text: &str, options: CompileOptions) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let machines: Vec<&str> = c.project.machine_names().collect();
    let summary = vec![format!("{} machine(s), well formed", machines.len())];
    Outcome::ok(json!({ "machines": machines, "violations": [] }), summary)
}

pub fn po(text: &str, options: CompileOptions, machine_name: Option<&str>, event: Option<&str>) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let results: Vec<ObligationResult> = match machine_name {
        None => match po_all(&c.project) {
            Ok(r) => r,
            Err(e) => return Outcome::error(ErrorInfo::new("ObligationError", e.to_string())),
        },
        Some(name) => {
            let m = match machine(&c, name) {
                Ok(m) => m,
                Err(o) => return *o,
            };
            let events: Vec<&str> = match event {
                Some(e) => vec![e],
                None => m.events().keys().map(String::as_str).collect(),
            };
            let mut out = Vec::new();
            for e in events {
                match po_inv_preservation(m, e) {
                    Ok(r) => out.push(r),
                    Err(err) => {
                        return Outcome::error(ErrorInfo::new("UnknownEvent", err.to_string()));
                    }
                }
            }
            out
        }
    };
    let summary = results
        .iter()
        .map(|r| match &r.counterexample {
            Some(cx) => format!("{}.{}: {} at {cx}", r.machine, r.event, r.status),
            None => format!("{}.{}: {}", r.machine, r.event, r.status),
        })
        .collect();
    let payload = json!({ "obligations": results });
    if results.iter().all(ObligationResult::holds) {
        Outcome::ok(payload, summary)
    } else {
        Outcome::fail(EXIT_FAIL, payload, summary)
    }
}

pub enum SimulationMode<'a> {
    Random { seed: u64, steps: usize },
    Script(&'a str),
}

pub fn simulate(text: &str, options: CompileOptions, mode: SimulationMode<'_>) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let (mode, mode_json) = match mode {
        SimulationMode::Random { seed, steps } => (
            TraceMode::Random { seed, steps },
            json!({ "kind": "random", "seed": seed, "steps": steps }),
        ),
        SimulationMode::Script(script) => match c.parse_script(script) {
            Ok(steps) => {
                let n = steps.len();
                (TraceMode::Script(steps), json!({ "kind": "script", "steps": n }))
            }
            Err(e) => {
                let mut info = ErrorInfo::from(&e);
                info.message = format!("in script: {}", info.message);
                return Outcome::error(info);
            }
        },
    };
    let rs = match init_run(c.project.clone(), c.inits.clone()) {
        Ok(rs) => rs,
        Err(e) => {
            let payload = json!({ "mode": mode_json, "initial": c.inits });
            return Outcome::fail(EXIT_RUNTIME, payload, vec![format!("error: {e}")]).with_error((&e).into());
        }
    };
    let trace = match run_trace(&rs, &mode) {
        Ok(t) => t,
        Err(e) => return Outcome::error((&e).into()),
    };
    let mut summary: Vec<String> = trace
        .records
        .iter()
        .map(|r| {
            let states: Vec<String> = r.state.iter().map(|(m, s)| format!("{m}: {s}")).collect();
            format!("#{} {}.{} -> {}", r.index, r.machine, r.event, states.join("; "))
        })
        .collect();
    summary.extend(trace.warnings().map(|w| format!("warning: {w}")));
    let (outcome_json, error) = match &trace.outcome {
        TraceOutcome::Completed => (json!({ "kind": "completed" }), None),
        TraceOutcome::Deadlock { index } => {
            summary.push(format!("deadlock before step {index}"));
            (json!({ "kind": "deadlock", "index": index }), None)
        }
        TraceOutcome::Failed { index, error } => {
            summary.push(format!("step {index} rejected: {error}"));
            (json!({ "kind": "failed", "index": index }), Some(ErrorInfo::from(error)))
        }
    };
    let payload = json!({
        "mode": mode_json,
        "initial": rs.active(),
        "records": trace.records,
        "outcome": outcome_json,
        "final": trace.last.active(),
    });
    let warned = trace.warnings().next().is_some();
    match error {
        Some(info) => Outcome::fail(EXIT_RUNTIME, payload, summary).with_error(info),
        None if warned => Outcome::fail(EXIT_RUNTIME, payload, summary),
        None => Outcome::ok(payload, summary),
    }
}

fn machine_json(m: &Machine) -> Value {
    let events: BTreeMap<&String, Value> = m
        .events()
        .iter()
        .map(|(name, e)| {
            (
                name,
                json!({ "parameters": names(e.pars()), "guard": e.guard(), "action": e.action() }),
            )
        })
        .collect();
    json!({
        "name": m.name(),
        "variables": names(m.vars()),
        "invariant": m.inv(),
        "events": events,
    })
}

pub fn split(text: &str, options: CompileOptions, machine_name: &str, plan_name: &str, emit: Option<&Path>) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let source = match machine(&c, machine_name) {
        Ok(m) => m,
        Err(o) => return *o,
    };
    let Some(plan) = c.plans.get(plan_name) else {
        return Outcome::error(ErrorInfo::new("UnknownPlan", format!("unknown split plan `{plan_name}`")));
    };
    if plan.source != machine_name {
        return Outcome::error(ErrorInfo::new(
            "PlanMismatch",
            format!("plan `{plan_name}` splits `{}`, not `{machine_name}`", plan.source),
        ));
    }
    let blocks: BTreeMap<&String, Vec<String>> = plan.blocks.iter().map(|(n, b)| (n, names(b))).collect();
    let plan_json = json!({ "name": plan_name, "source": plan.source, "blocks": blocks });
    let subs = match split_into_machines(&c.project, plan) {
        Ok(s) => s,
        Err(e @ TransformError::UnknownMachine(_)) => return Outcome::error((&e).into()),
        Err(e) => {
            let summary = vec![format!("plan rejected: {e}")];
            return Outcome::fail(EXIT_FAIL, json!({ "plan": plan_json }), summary).with_error((&e).into());
        }
    };
    let report = match check_split_equivalence(source, &subs) {
        Ok(r) => r,
        Err(e) => return Outcome::error((&e).into()),
    };
    let obligations = Project::from_machines(c.universe().clone(), subs.clone())
        .map_err(|e| e.to_string())
        .and_then(|p| po_all(&p).map_err(|e| e.to_string()));
    let obligations = match obligations {
        Ok(o) => o,
        Err(msg) => return Outcome::error(ErrorInfo::new("ObligationError", msg)),
    };
    if let Some(path) = emit {
        let inits = c.inits.get(machine_name).map(|s| plan.split_state(s)).unwrap_or_default();
        let text = surface::emit(c.universe(), &subs, &inits);
        if let Err(e) = std::fs::write(path, text) {
            return Outcome::error(ErrorInfo::new("IoError", format!("{}: {e}", path.display())));
        }
    }
    let mut summary: Vec<String> = subs.iter().map(|m| format!("submachine {}: {}", m.name(), names(m.vars()).join(", "))).collect();
    summary.push(match &report.witness {
        None => format!("equivalence: {:?}", report.verdict),
        Some(w) => format!("equivalence: {:?} ({w})", report.verdict),
    });
    let payload = json!({
        "plan": plan_json,
        "submachines": subs.iter().map(machine_json).collect::<Vec<_>>(),
        "equivalence": report,
        "obligations": obligations,
        "emitted": emit.map(|p| p.display().to_string()),
    });
    if report.is_equal() {
        Outcome::ok(payload, summary)
    } else {
        Outcome::fail(EXIT_FAIL, payload, summary)
    }
}

pub fn swap_check(text: &str, options: CompileOptions, retire: &[String], activate: &[String]) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let mut incoming: BTreeMap<String, Predicate> = BTreeMap::new();
    for arg in activate {
        let (name, expr) = match arg.split_once(':') {
            Some((n, e)) => (n.trim(), Some(e)),
            None => (arg.trim(), None),
        };
        if let Err(o) = machine(&c, name) {
            return *o;
        }
        let state = match expr {
            Some(e) => match c.state_formula(e) {
                Ok(p) => p,
                Err(err) => return Outcome::error((&err).into()),
            },
            None => match c.inits.get(name) {
                Some(p) => p.clone(),
                None => {
                    return Outcome::error(ErrorInfo::new(
                        "MissingState",
                        format!("no init block for `{name}`; pass `{name}:<state>`"),
                    ))
                }
            },
        };
        incoming.insert(name.to_string(), state);
    }
    let initial: BTreeMap<String, Predicate> = c
        .inits
        .iter()
        .filter(|(m, _)| !incoming.contains_key(*m))
        .map(|(m, s)| (m.clone(), s.clone()))
        .collect();
    let rs = match init_run(c.project.clone(), initial) {
        Ok(rs) => rs,
        Err(e) => return Outcome::fail(EXIT_FAIL, Value::Null, vec![format!("error: {e}")]).with_error((&e).into()),
    };
    let retire: BTreeSet<String> = retire.iter().cloned().collect();
    for m in &retire {
        if !c.project.contains(m) {
            return unknown_machine(m);
        }
    }
    let universe = c.universe();
    let conj = |states: Vec<&Predicate>| Predicate::intersect_all(universe, states).map(|p| p.to_string());
    let old = conj(retire.iter().filter_map(|m| rs.state(m)).collect());
    let new = conj(incoming.values().collect());
    let (Ok(old), Ok(new)) = (old, new) else {
        return Outcome::error(ErrorInfo::new("KernelError", "could not form conjunctions"));
    };
    let base = json!({
        "retire": retire,
        "activate": incoming,
        "retired_conjunction": old,
        "activated_conjunction": new,
    });
    match replace_active(&rs, &retire, &incoming) {
        Ok(next) => {
            let mut payload = base;
            payload["active_after"] = json!(next.active().keys().collect::<Vec<_>>());
            Outcome::ok(payload, vec![format!("transparent: {old} == {new}")])
        }
        Err(e @ (RunError::TransparencyViolation { .. } | RunError::InitViolation { .. })) => {
            Outcome::fail(EXIT_FAIL, base, vec![format!("rejected: {e}")]).with_error((&e).into())
        }
        Err(e) => Outcome::error((&e).into()),
    }
}

pub fn conjuncts(text: &str, options: CompileOptions, machine_name: &str, target: Target, event: Option<&str>) -> Outcome {
    let c = match compile(text, options) {
        Ok(c) => c,
        Err(o) => return *o,
    };
    let m = match machine(&c, machine_name) {
        Ok(m) => m,
        Err(o) => return *o,
    };
    let pred = match target {
        Target::Inv => m.inv().clone(),
        Target::Init => match c.inits.get(machine_name) {
            Some(p) => p.clone(),
            None => return Outcome::error(ErrorInfo::new("MissingState", format!("no init block for `{machine_name}`"))),
        },
        Target::Guard | Target::Action => {
            let Some(event) = event else {
                return Outcome::error(ErrorInfo::new("Usage", "--event is required for guard and action targets"));
            };
            let Some(e) = m.event(event) else {
                return Outcome::error(ErrorInfo::new(
                    "UnknownEvent",
                    format!("machine `{machine_name}` has no event `{event}`"),
                ));
            };
            if target == Target::Guard {
                e.guard().clone()
            } else {
                e.action().clone()
            }
        }
    };
    let parts = pred.conjuncts();
    let summary = parts
        .iter()
        .map(|p| format!("{p}    free: {{{}}}", names(&p.free()).join(", ")))
        .collect();
    let target_name = match target {
        Target::Inv => "inv",
        Target::Guard => "guard",
        Target::Action => "action",
        Target::Init => "init",
    };
    let payload = json!({
        "machine": machine_name,
        "target": target_name,
        "event": event,
        "predicate": pred,
        "free": names(&pred.free()),
        "decomposable": pred.is_decomposable(),
        "conjuncts": parts
            .iter()
            .map(|p| json!({ "predicate": p, "free": names(&p.free()) }))
            .collect::<Vec<_>>(),
    });
    Outcome::ok(payload, summary)
}
