//! Necessary conditions and constructions for extreme sets.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Float, FloatConst};

use crate::group::{Element, GroupSpec, Quotient, Subgroup};
use crate::measure::{Mass, PhaseMeasure};
use crate::turn::RationalTurn;
use crate::Error;

/// Multiplicities of `x − y` over ordered pairs of a set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DifferenceMultiset {
    pub group: GroupSpec,
    pub counts: BTreeMap<Element, u64>,
}

impl DifferenceMultiset {
    pub fn count(&self, g: &Element) -> u64 {
        self.counts.get(g).copied().unwrap_or(0)
    }

    /// Nonzero differences that occur exactly once.
    pub fn unique_differences(&self) -> Vec<Element> {
        let zero = self.group.zero();
        self.counts
            .iter()
            .filter(|(g, &c)| c == 1 && **g != zero)
            .map(|(g, _)| g.clone())
            .collect()
    }
}

fn dedup_set(group: &GroupSpec, set: &[Element]) -> Result<Vec<Element>, Error> {
    if set.is_empty() {
        return Err(Error::InvalidElement("empty set".into()));
    }
    for e in set {
        group.check(e)?;
    }
    let s: BTreeSet<Element> = set.iter().cloned().collect();
    Ok(s.into_iter().collect())
}

pub fn difference_multiset(group: &GroupSpec, set: &[Element]) -> Result<DifferenceMultiset, Error> {
    let set = dedup_set(group, set)?;
    let mut counts = BTreeMap::new();
    for x in &set {
        for y in &set {
            *counts.entry(group.sub(x, y)).or_insert(0) += 1;
        }
    }
    Ok(DifferenceMultiset {
        group: group.clone(),
        counts,
    })
}

/// False when some nonzero difference occurs exactly once, which rules out extremality.
pub fn passes_difference_test(group: &GroupSpec, set: &[Element]) -> Result<bool, Error> {
    Ok(difference_multiset(group, set)?.unique_differences().is_empty())
}

pub fn is_subgroup(group: &GroupSpec, set: &[Element]) -> Result<bool, Error> {
    let set = dedup_set(group, set)?;
    let s: BTreeSet<&Element> = set.iter().collect();
    if !s.contains(&group.zero()) {
        return Ok(false);
    }
    Ok(set.iter().all(|a| set.iter().all(|b| s.contains(&group.sub(a, b)))))
}

pub fn is_coset(group: &GroupSpec, set: &[Element]) -> Result<bool, Error> {
    let set = dedup_set(group, set)?;
    let m = set[0].clone();
    let shifted: Vec<Element> = set.iter().map(|x| group.sub(x, &m)).collect();
    is_subgroup(group, &shifted)
}

fn integer_sqrt(n: u64) -> Option<u64> {
    let r = (n as f64).sqrt().round() as u64;
    (r * r == n).then_some(r)
}

/// A subgroup `H` of order `N` and `N` representatives with `E = ⋃ (g + H)`, when `#E = N²`.
pub fn coset_union_decomposition(
    group: &GroupSpec,
    set: &[Element],
) -> Result<Option<(Subgroup, Vec<Element>)>, Error> {
    let set = dedup_set(group, set)?;
    let Some(n) = integer_sqrt(set.len() as u64) else {
        return Ok(None);
    };
    let members: BTreeSet<&Element> = set.iter().collect();
    for h in group.enumerate_subgroups(Some(n))? {
        let mut covered: BTreeSet<Element> = BTreeSet::new();
        let mut reps = Vec::new();
        let mut ok = true;
        for x in &set {
            if covered.contains(x) {
                continue;
            }
            for y in h.elements() {
                let z = group.add(x, y);
                if !members.contains(&z) {
                    ok = false;
                    break;
                }
                covered.insert(z);
            }
            if !ok {
                break;
            }
            reps.push(x.clone());
        }
        if ok && reps.len() as u64 == n {
            return Ok(Some((h, reps)));
        }
    }
    Ok(None)
}

/// `Σ_n δ_{g_n} * (λ_n m_H)` with characters `λ_n` whose restrictions to `H` are distinct.
pub fn build_coset_union_measure(group: &GroupSpec, h: &Subgroup, reps: &[Element]) -> Result<PhaseMeasure, Error> {
    let n = h.order() as usize;
    if reps.len() != n {
        return Err(Error::InvalidMeasure(format!(
            "{} representatives for a subgroup of order {n}",
            reps.len()
        )));
    }
    if !is_subgroup(group, h.elements())? {
        return Err(Error::InvalidGroup("H is not a subgroup".into()));
    }
    let quotient = group.quotient(h)?;
    let labels: BTreeSet<Element> = reps.iter().map(|r| quotient.project(r)).collect();
    if labels.len() != n {
        return Err(Error::InvalidMeasure("representatives share a coset".into()));
    }
    let mut seen: BTreeSet<Vec<RationalTurn>> = BTreeSet::new();
    let mut chars = Vec::with_capacity(n);
    for i in 0..group.order() as usize {
        if chars.len() == n {
            break;
        }
        let gamma = group.element_at(i);
        let sig: Vec<RationalTurn> = h.elements().iter().map(|x| group.pairing_turn(&gamma, x)).collect();
        if seen.insert(sig) {
            chars.push(gamma);
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    for (g, lambda) in reps.iter().zip(&chars) {
        for x in h.elements() {
            entries.push((group.add(g, x), Mass::unit(group.pairing_turn(lambda, x))));
        }
    }
    PhaseMeasure::new(group, entries)
}

/// A factorization `E = A + B`.
pub type SumsetSplit = (Vec<Element>, Vec<Element>);

/// Every way to write `E = A + B` with `#E = #A·#B` and `#A, #B ≥ 2`.
///
/// Pairs are normalised so that `A ≤ B` lexicographically and both contain `min E`
/// translated to `0`; when `0 ∉ E`, `A` is shifted back by `min E`.
pub fn sumset_decomposition(group: &GroupSpec, set: &[Element]) -> Result<Vec<SumsetSplit>, Error> {
    let set = dedup_set(group, set)?;
    let base = if set.contains(&group.zero()) {
        group.zero()
    } else {
        set[0].clone()
    };
    let e: Vec<Element> = set.iter().map(|x| group.sub(x, &base)).collect();
    let members: BTreeSet<&Element> = e.iter().collect();
    let total = e.len();
    let mut out: BTreeSet<(Vec<Element>, Vec<Element>)> = BTreeSet::new();
    let nonzero: Vec<&Element> = e.iter().filter(|x| **x != group.zero()).collect();
    for b_size in 2..=total / 2 {
        if !total.is_multiple_of(b_size) {
            continue;
        }
        let a_size = total / b_size;
        for_each_subset(&nonzero, b_size - 1, &mut |rest| {
            let mut b: Vec<Element> = vec![group.zero()];
            b.extend(rest.iter().map(|x| (*x).clone()));
            // A ⊆ ∩_{y∈B} (E − y)
            let room: Vec<&Element> = nonzero
                .iter()
                .copied()
                .filter(|x| b.iter().all(|y| members.contains(&group.add(x, y))))
                .collect();
            for_each_subset(&room, a_size - 1, &mut |arest| {
                let mut a: Vec<Element> = vec![group.zero()];
                a.extend(arest.iter().map(|x| (*x).clone()));
                let sums: BTreeSet<Element> = a.iter().flat_map(|x| b.iter().map(|y| group.add(x, y))).collect();
                if sums.len() == total {
                    let mut a = a.clone();
                    let mut b = b.clone();
                    a.sort();
                    b.sort();
                    let (a, b) = if a <= b { (a, b) } else { (b, a) };
                    let a = a.iter().map(|x| group.add(x, &base)).collect();
                    out.insert((a, b));
                }
            });
        });
    }
    Ok(out.into_iter().collect())
}

fn for_each_subset<'a, F: FnMut(&[&'a Element])>(items: &[&'a Element], k: usize, f: &mut F) {
    fn rec<'a, F: FnMut(&[&'a Element])>(
        items: &[&'a Element],
        k: usize,
        start: usize,
        acc: &mut Vec<&'a Element>,
        f: &mut F,
    ) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - acc.len() {
                break;
            }
            acc.push(items[i]);
            rec(items, k, i + 1, acc, f);
            acc.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), f);
}

/// The image of `μ` on `G/H`, or `None` when two support points share a coset.
pub fn project_measure(mu: &PhaseMeasure, h: &Subgroup) -> Result<Option<(Quotient, PhaseMeasure)>, Error> {
    let group = mu.group();
    if !is_subgroup(group, h.elements())? {
        return Err(Error::InvalidGroup("H is not a subgroup".into()));
    }
    let q = group.quotient(h)?;
    let mut entries = BTreeMap::new();
    for (g, m) in mu.masses() {
        if entries.insert(q.project(g), *m).is_some() {
            return Ok(None);
        }
    }
    let projected = PhaseMeasure::new(q.group(), entries)?;
    Ok(Some((q, projected)))
}

/// `PSC({0,1}, Z_n) = |1 + e^{πi/n}| = 2 cos(π/2n)`.
pub fn two_element_psc<T: Float + FloatConst>(n: u64) -> Result<T, Error> {
    if n < 2 {
        return Err(Error::InvalidGroup(format!(
            "two-element constant needs n ≥ 2, got {n}"
        )));
    }
    let two = T::one() + T::one();
    Ok(two * (T::PI() / (two * T::from(n).unwrap())).cos())
}

/// A two-element set is extreme exactly when it is a coset, i.e. its difference has order 2.
pub fn two_element_extreme(group: &GroupSpec, pair: &[Element]) -> Result<bool, Error> {
    let set = dedup_set(group, pair)?;
    if set.len() != 2 {
        return Err(Error::InvalidElement(format!(
            "expected two distinct elements, got {}",
            set.len()
        )));
    }
    Ok(group.element_order(&group.sub(&set[1], &set[0])) == 2)
}
