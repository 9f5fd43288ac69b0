mod common;

use common::{any_group, groups_up_to};
use std::sync::OnceLock;

use extreme_core::{GroupSpec, RationalTurn, Subgroup};
use num_complex::Complex64;
use proptest::prelude::*;

fn divisor_count(n: u64) -> usize {
    (1..=n).filter(|d| n.is_multiple_of(*d)).count()
}

#[test]
fn characters_are_orthogonal() {
    for g in groups_up_to(30) {
        let elems = g.enumerate_elements().unwrap();
        for gamma in elems.iter().skip(1) {
            let s: Complex64 = elems.iter().map(|x| g.pairing_turn(gamma, x).phase::<f64>()).sum();
            assert!(s.norm() <= 1e-10, "{g} {gamma}: {s}");
        }
    }
}

#[test]
fn cyclic_subgroups_match_divisors() {
    for n in 2..=60 {
        let g = GroupSpec::cyclic(n).unwrap();
        assert_eq!(g.enumerate_subgroups(None).unwrap().len(), divisor_count(n), "Z{n}");
    }
}

fn group_with_triple() -> impl Strategy<Value = (GroupSpec, usize, usize, usize)> {
    any_group(64).prop_flat_map(|g| {
        let n = g.order() as usize;
        (Just(g), 0..n, 0..n, 0..n)
    })
}

fn with_subgroups() -> Vec<(GroupSpec, Vec<Subgroup>)> {
    static CACHE: OnceLock<Vec<(GroupSpec, Vec<Subgroup>)>> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            groups_up_to(64)
                .into_iter()
                .map(|g| {
                    let subs = g.enumerate_subgroups(None).unwrap();
                    (g, subs)
                })
                .collect()
        })
        .clone()
}

proptest! {
    #[test]
    fn pairing_is_bilinear((g, a, b, c) in group_with_triple()) {
        let (a, b, c) = (g.element_at(a), g.element_at(b), g.element_at(c));
        let p = |x, y| g.pairing_turn(x, y);
        let (bc, ab) = (g.add(&b, &c), g.add(&a, &b));
        prop_assert_eq!(p(&a, &bc), p(&a, &b) + p(&a, &c));
        prop_assert_eq!(p(&ab, &c), p(&a, &c) + p(&b, &c));
        prop_assert_eq!(p(&a, &b), p(&b, &a));
        prop_assert_eq!(p(&g.zero(), &c), RationalTurn::ZERO);
    }

    #[test]
    fn quotient_is_a_homomorphism((g, h, a, b) in proptest::sample::select(with_subgroups()).prop_flat_map(|(g, subs)| {
        let n = g.order() as usize;
        (Just(g), proptest::sample::select(subs), 0..n, 0..n)
    })) {
        let h = &h;
        let q = g.quotient(h).unwrap();
        let (a, b) = (g.element_at(a), g.element_at(b));
        prop_assert_eq!(q.group().order() * h.order(), g.order());
        prop_assert_eq!(q.project(&g.zero()), q.group().zero());
        prop_assert_eq!(q.project(&g.add(&a, &b)), q.group().add(&q.project(&a), &q.project(&b)));
        if h.contains(&a) {
            prop_assert_eq!(q.project(&a), q.group().zero());
        }
    }
}
