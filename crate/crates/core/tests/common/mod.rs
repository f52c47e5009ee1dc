#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use ebmeta_core::kernel::{Domain, Ident, Predicate, Universe, Valuation};
use proptest::prelude::*;

pub const NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Four variables with domain sizes 2, 3, 4 and 2; `a` and `d` share a
/// domain so they can be swapped by a renaming.
pub fn universe() -> Arc<Universe> {
    Arc::new(
        Universe::new()
            .with_var("a", Domain::range(0, 1).unwrap())
            .unwrap()
            .with_var("b", Domain::range(0, 2).unwrap())
            .unwrap()
            .with_var("c", Domain::enumeration(["r", "g", "b", "w"]).unwrap())
            .unwrap()
            .with_var("d", Domain::range(0, 1).unwrap())
            .unwrap(),
    )
}

pub fn ids(mask: u8) -> Vec<Ident> {
    NAMES
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, n)| Ident::var(*n))
        .collect()
}

/// Every valuation of `scope`, in canonical order.
pub fn all_valuations(u: &Arc<Universe>, scope: &[Ident]) -> Vec<Valuation> {
    Predicate::from_fn(u, scope.iter().cloned(), |_| true)
        .unwrap()
        .valuations()
        .collect()
}

/// A table over the variables in `mask` whose rows are picked by `bits`.
pub fn table(u: &Arc<Universe>, mask: u8, bits: &[bool]) -> Predicate {
    let scope = ids(mask);
    let rows: Vec<Valuation> = all_valuations(u, &scope)
        .into_iter()
        .zip(bits.iter().cycle())
        .filter(|(_, &keep)| keep)
        .map(|(v, _)| v)
        .collect();
    Predicate::from_valuations(u, scope, rows).unwrap()
}

/// Intersections of one to three random tables over random sub-scopes, so
/// that product structure shows up often.
pub fn arb_predicate() -> impl Strategy<Value = Predicate> {
    let factor = (1u8..16, prop::collection::vec(prop::bool::weighted(0.6), 1..97));
    prop::collection::vec(factor, 1..4).prop_map(|factors| {
        let u = universe();
        factors
            .iter()
            .map(|(mask, bits)| table(&u, *mask, bits))
            .reduce(|p, q| p.intersect(&q).unwrap())
            .unwrap()
    })
}

/// Membership of `v` (which may bind more than the scope) in `p`.
pub fn member(p: &Predicate, v: &Valuation) -> bool {
    let keep: BTreeSet<&Ident> = p.scope().iter().collect();
    p.satisfied_by(&v.restrict(|i| keep.contains(i))).unwrap()
}

/// Identifiers on which `p` really depends, by flipping one value at a time.
pub fn brute_free(u: &Arc<Universe>, p: &Predicate) -> BTreeSet<Ident> {
    let scope = p.scope().to_vec();
    let states = all_valuations(u, &scope);
    let mut out = BTreeSet::new();
    for i in &scope {
        let dom = u.domain(i).unwrap();
        'outer: for s in &states {
            for value in dom.values() {
                let t = s.clone().with(i.clone(), value.clone());
                if member(p, s) != member(p, &t) {
                    out.insert(i.clone());
                    break 'outer;
                }
            }
        }
    }
    out
}

/// All set partitions of `items`.
pub fn partitions(items: &[Ident]) -> Vec<Vec<BTreeSet<Ident>>> {
    let Some((first, rest)) = items.split_first() else {
        return vec![vec![]];
    };
    let mut out = Vec::new();
    for p in partitions(rest) {
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i].insert(first.clone());
            out.push(q);
        }
        let mut q = p.clone();
        q.push(BTreeSet::from([first.clone()]));
        out.push(q);
    }
    out
}

/// Whether `p` equals the product of its projections on `blocks`, checked
/// state by state over `p`'s scope.
pub fn lossless(u: &Arc<Universe>, p: &Predicate, blocks: &[BTreeSet<Ident>]) -> bool {
    let states = all_valuations(u, p.scope());
    let rows: Vec<&Valuation> = states.iter().filter(|s| member(p, s)).collect();
    states.iter().all(|s| {
        let in_product = blocks.iter().all(|b| {
            rows.iter()
                .any(|r| b.iter().all(|i| r.get(i) == s.get(i)))
        });
        in_product == member(p, s)
    })
}

/// `a` refines `b`: every block of `a` lies inside a block of `b`.
pub fn refines(a: &[BTreeSet<Ident>], b: &[BTreeSet<Ident>]) -> bool {
    a.iter().all(|x| b.iter().any(|y| x.is_subset(y)))
}
