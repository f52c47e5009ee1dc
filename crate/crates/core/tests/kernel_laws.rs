mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use ebmeta_core::kernel::{next_renaming, unprime_renaming, Ident, Predicate};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn conjuncts_recompose(p in arb_predicate()) {
        let u = universe();
        let parts = p.conjuncts();
        let back = Predicate::intersect_all(&u, &parts).unwrap();
        prop_assert!(back.equivalent(&p).unwrap());
        let union: BTreeSet<Ident> = parts.iter().flat_map(|c| c.free()).collect();
        prop_assert_eq!(union, p.free());
    }

    #[test]
    fn free_is_exactly_the_dependence_set(p in arb_predicate()) {
        let u = universe();
        prop_assert_eq!(p.free(), brute_free(&u, &p));
        prop_assert!(p.proj(&p.free()).equivalent(&p).unwrap());
    }

    #[test]
    fn finest_blocks_match_partition_search(p in arb_predicate()) {
        let u = universe();
        let free: Vec<Ident> = p.free().into_iter().collect();
        let blocks = p.conjunct_blocks();
        if free.is_empty() {
            prop_assert!(blocks.is_empty());
            prop_assert_eq!(p.conjuncts().len(), 1);
            prop_assert!(p.conjuncts()[0].equivalent(&p).unwrap());
            return Ok(());
        }
        prop_assert!(lossless(&u, &p, &blocks));
        for cand in partitions(&free) {
            if lossless(&u, &p, &cand) {
                prop_assert!(refines(&blocks, &cand), "{:?} is lossless but not refined by {:?}", cand, blocks);
            }
        }
        prop_assert_eq!(p.is_decomposable(), blocks.iter().all(|b| b.len() == 1));
    }

    #[test]
    fn priming_round_trips(p in arb_predicate()) {
        let vars: BTreeSet<Ident> = NAMES.iter().map(|n| Ident::var(*n)).collect();
        let primed = p.subst(&next_renaming(&vars).unwrap()).unwrap();
        prop_assert!(primed.free().iter().all(Ident::is_prime));
        let back = primed.subst(&unprime_renaming(&vars).unwrap()).unwrap();
        prop_assert!(back.equivalent(&p).unwrap());
    }

    #[test]
    fn projection_composes(p in arb_predicate(), a in 0u8..16, b in 0u8..16) {
        let sa: BTreeSet<Ident> = ids(a).into_iter().collect();
        let sb: BTreeSet<Ident> = ids(b).into_iter().collect();
        let both: BTreeSet<Ident> = sa.intersection(&sb).cloned().collect();
        prop_assert!(p.proj(&sb).proj(&sa).equivalent(&p.proj(&both)).unwrap());
        prop_assert!(p.entails(&p.proj(&sa)).unwrap());
    }

    #[test]
    fn entailment_is_a_preorder(p in arb_predicate(), q in arb_predicate(), r in arb_predicate()) {
        prop_assert!(p.entails(&p).unwrap());
        let pq = p.intersect(&q).unwrap();
        prop_assert!(pq.entails(&p).unwrap() && pq.entails(&q).unwrap());
        if p.entails(&q).unwrap() && q.entails(&r).unwrap() {
            prop_assert!(p.entails(&r).unwrap());
        }
        match p.entailment_witness(&q).unwrap() {
            None => prop_assert!(p.entails(&q).unwrap()),
            Some(w) => {
                prop_assert!(member(&p, &w) && !member(&q, &w));
            }
        }
    }

    #[test]
    fn boolean_algebra(p in arb_predicate(), q in arb_predicate()) {
        let u = universe();
        prop_assert!(p.complement().complement().equivalent(&p).unwrap());
        prop_assert!(p.intersect(&p.complement()).unwrap().is_unsatisfiable());
        prop_assert!(p.intersect(&q).unwrap().equivalent(&q.intersect(&p).unwrap()).unwrap());
        let diff = p.difference(&q).unwrap();
        prop_assert!(diff.intersect(&q).unwrap().is_unsatisfiable());
        prop_assert!(diff.entails(&p).unwrap());
        match p.distinguishing_state(&q).unwrap() {
            None => prop_assert!(p.equivalent(&q).unwrap()),
            Some(w) => prop_assert_ne!(member(&p, &w), member(&q, &w)),
        }
        prop_assert!(Predicate::truth(&u).entails(&p).unwrap() == p.is_valid());
    }

    #[test]
    fn renaming_respects_membership(p in arb_predicate()) {
        // a and d share a domain, so swapping them is a legal renaming.
        let swap: BTreeMap<Ident, Ident> = [
            (Ident::var("a"), Ident::var("d")),
            (Ident::var("d"), Ident::var("a")),
        ].into();
        let u = universe();
        match p.subst(&swap) {
            Ok(q) => {
                for s in all_valuations(&u, &ids(0b1111)) {
                    let t = s.iter().map(|(i, v)| {
                        let j = swap.get(i).cloned().unwrap_or_else(|| i.clone());
                        (j, v.clone())
                    });
                    let t = t.collect();
                    prop_assert_eq!(member(&p, &s), member(&q, &t));
                }
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
