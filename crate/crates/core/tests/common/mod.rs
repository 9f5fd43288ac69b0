#![allow(dead_code)]

use extreme_core::{Element, GroupSpec, Mass, PhaseMeasure, RationalTurn};
use num_complex::Complex64;
use proptest::prelude::*;

/// Every group of order at most `max`, as invariant-factor orders.
pub fn groups_up_to(max: u64) -> Vec<GroupSpec> {
    (2..=max).flat_map(GroupSpec::all_of_order).collect()
}

pub fn any_group(max: u64) -> impl Strategy<Value = GroupSpec> {
    proptest::sample::select(groups_up_to(max))
}

pub fn element(g: &GroupSpec, idx: usize) -> Element {
    g.element_at(idx % g.order() as usize)
}

pub fn any_element(g: GroupSpec) -> impl Strategy<Value = Element> {
    (0..g.order() as usize).prop_map(move |i| g.element_at(i))
}

/// A group with a nonempty subset.
pub fn group_and_set(max_order: u64, max_size: usize) -> impl Strategy<Value = (GroupSpec, Vec<Element>)> {
    any_group(max_order).prop_flat_map(move |g| {
        let n = g.order() as usize;
        let k = max_size.min(n);
        (
            Just(g),
            proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=k),
        )
            .prop_map(|(g, idx)| {
                let set = idx.iter().map(|&i| g.element_at(i)).collect();
                (g, set)
            })
    })
}

/// Unimodular measure with turns of denominator at most 12.
pub fn phase_measure(max_order: u64, max_size: usize) -> impl Strategy<Value = PhaseMeasure> {
    group_and_set(max_order, max_size).prop_flat_map(|(g, set)| {
        let n = set.len();
        (Just(g), Just(set), proptest::collection::vec((0i128..12, 1u64..=12), n)).prop_map(|(g, set, t)| {
            let turns: Vec<RationalTurn> = t.iter().map(|&(a, b)| RationalTurn::new(a, b)).collect();
            PhaseMeasure::unimodular(&g, &set, &turns).unwrap()
        })
    })
}

/// Measure with rational magnitudes and turns.
pub fn general_measure(max_order: u64, max_size: usize) -> impl Strategy<Value = PhaseMeasure> {
    group_and_set(max_order, max_size).prop_flat_map(|(g, set)| {
        let n = set.len();
        (
            Just(g),
            Just(set),
            proptest::collection::vec((1u64..6, 1u64..4, 0i128..24), n),
        )
            .prop_map(|(g, set, m)| {
                let entries = set.into_iter().zip(m).map(|(e, (p, q, t))| {
                    (
                        e,
                        Mass {
                            magnitude: num_rational::Ratio::new(p, q),
                            turn: RationalTurn::new(t, 24),
                        },
                    )
                });
                PhaseMeasure::new(&g, entries).unwrap()
            })
    })
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}
