//! Equivalence of subsets under translations and automorphisms.
//!
//! For cyclic groups the automorphisms are the unit multiplications and the canonical form
//! is exact. For other groups only the subgroup of automorphisms generated by per-factor
//! unit multiplications and permutations of equal-order factors is used, and results carry
//! `exact = false` unless the factor orders are pairwise coprime.

use rayon::prelude::*;

use crate::group::{units, Element, GroupSpec, GroupTables};
use crate::Error;

/// Largest number of automorphisms [`Automorphisms::new`] will list.
pub const AUTOMORPHISM_CAP: usize = 200_000;

/// Largest number of candidate subsets [`enumerate_class_representatives`] will visit.
pub const CLASS_WORK_CAP: u128 = 100_000_000;

/// A canonical orbit representative.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubsetClass {
    pub group: GroupSpec,
    pub representative: Vec<Element>,
    pub exact: bool,
}

/// Result of [`are_equivalent`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    /// When false a negative answer only rules out the generated automorphisms.
    pub exact: bool,
}

/// `x ↦ α(x) + shift` on flat element indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMap {
    pub automorphism: Vec<u32>,
    pub shift: usize,
}

impl AffineMap {
    pub fn apply(&self, tables: &GroupTables, x: usize) -> usize {
        tables.add(self.automorphism[x] as usize, self.shift)
    }
}

/// The listed automorphisms of a group, as permutations of flat indices.
#[derive(Clone, Debug)]
pub struct Automorphisms {
    group: GroupSpec,
    tables: GroupTables,
    perms: Vec<Vec<u32>>,
    exact: bool,
}

fn factor_permutations(orders: &[u64]) -> Vec<Vec<usize>> {
    fn rec(orders: &[u64], prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let k = orders.len();
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        let pos = prefix.len();
        for j in 0..k {
            if !used[j] && orders[j] == orders[pos] {
                used[j] = true;
                prefix.push(j);
                rec(orders, prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(orders, &mut Vec::new(), &mut vec![false; orders.len()], &mut out);
    out
}

impl Automorphisms {
    pub fn new(group: &GroupSpec) -> Result<Self, Error> {
        let tables = group.tables()?;
        let orders = group.orders();
        let unit_lists: Vec<Vec<u64>> = orders.iter().map(|&n| units(n)).collect();
        let perms_of_factors = factor_permutations(orders);
        let count = unit_lists
            .iter()
            .try_fold(perms_of_factors.len(), |acc, u| acc.checked_mul(u.len()))
            .filter(|&c| c <= AUTOMORPHISM_CAP)
            .ok_or(Error::TooLarge {
                what: "automorphism list",
                size: u64::MAX,
                cap: AUTOMORPHISM_CAP as u64,
            })?;
        let elems = group.enumerate_elements()?;
        let mut perms = Vec::with_capacity(count);
        let k = orders.len();
        let mut choice = vec![0usize; k];
        for sigma in &perms_of_factors {
            loop {
                let perm = elems
                    .iter()
                    .map(|e| {
                        let mut img = vec![0u64; k];
                        for j in 0..k {
                            let u = unit_lists[j][choice[j]];
                            img[sigma[j]] = e.0[j] * u % orders[j];
                        }
                        group.index_of(&Element(img)) as u32
                    })
                    .collect();
                perms.push(perm);
                // odometer over unit choices
                let mut j = k;
                while j > 0 {
                    j -= 1;
                    choice[j] += 1;
                    if choice[j] < unit_lists[j].len() {
                        break;
                    }
                    choice[j] = 0;
                }
                if choice.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }
        Ok(Automorphisms {
            group: group.clone(),
            tables,
            perms,
            exact: group.is_cyclic(),
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn tables(&self) -> &GroupTables {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn permutations(&self) -> &[Vec<u32>] {
        &self.perms
    }

    /// Canonical form of a set of flat indices, with the affine map that produces it.
    pub fn canonical_indices_with_map(&self, set: &[usize]) -> (Vec<usize>, AffineMap) {
        let mut best: Option<(Vec<usize>, usize, usize)> = None;
        let mut img = vec![0usize; set.len()];
        let mut cand = vec![0usize; set.len()];
        for (pi, perm) in self.perms.iter().enumerate() {
            for (slot, &x) in img.iter_mut().zip(set) {
                *slot = perm[x] as usize;
            }
            for &anchor in &img {
                let shift = self.tables.neg(anchor);
                for (c, &y) in cand.iter_mut().zip(&img) {
                    *c = self.tables.add(y, shift);
                }
                cand.sort_unstable();
                if best.as_ref().is_none_or(|(b, _, _)| cand < *b) {
                    best = Some((cand.clone(), pi, shift));
                }
            }
        }
        let (rep, pi, shift) = best.expect("nonempty set");
        (
            rep,
            AffineMap {
                automorphism: self.perms[pi].clone(),
                shift,
            },
        )
    }

    pub fn canonical_indices(&self, set: &[usize]) -> Vec<usize> {
        self.canonical_indices_with_map(set).0
    }

    fn indices(&self, set: &[Element]) -> Result<Vec<usize>, Error> {
        if set.is_empty() {
            return Err(Error::InvalidElement("empty set".into()));
        }
        let mut out = Vec::with_capacity(set.len());
        for e in set {
            self.group.check(e)?;
            out.push(self.group.index_of(e));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn canonical_form(&self, set: &[Element]) -> Result<SubsetClass, Error> {
        let idx = self.indices(set)?;
        Ok(SubsetClass {
            group: self.group.clone(),
            representative: self
                .canonical_indices(&idx)
                .into_iter()
                .map(|i| self.group.element_at(i))
                .collect(),
            exact: self.exact,
        })
    }

    /// An affine map carrying `e` onto `f`, if the listed automorphisms contain one.
    pub fn equivalence_map(&self, e: &[Element], f: &[Element]) -> Result<Option<AffineMap>, Error> {
        let ei = self.indices(e)?;
        let fi = self.indices(f)?;
        if ei.len() != fi.len() {
            return Ok(None);
        }
        let (ce, me) = self.canonical_indices_with_map(&ei);
        let (cf, mf) = self.canonical_indices_with_map(&fi);
        if ce != cf {
            return Ok(None);
        }
        // compose me with the inverse of mf
        let n = self.tables.order();
        let mut inv = vec![0u32; n];
        for (x, &y) in mf.automorphism.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        let shift_back = self.tables.neg(mf.shift);
        let automorphism: Vec<u32> = me.automorphism.iter().map(|&y| inv[y as usize]).collect();
        let shift = inv[self.tables.add(me.shift, shift_back)] as usize;
        Ok(Some(AffineMap { automorphism, shift }))
    }
}

pub fn canonical_form(group: &GroupSpec, set: &[Element]) -> Result<SubsetClass, Error> {
    Automorphisms::new(group)?.canonical_form(set)
}

pub fn are_equivalent(group: &GroupSpec, e: &[Element], f: &[Element]) -> Result<Equivalence, Error> {
    let autos = Automorphisms::new(group)?;
    let a = autos.canonical_form(e)?;
    let b = autos.canonical_form(f)?;
    Ok(Equivalence {
        equivalent: a.representative == b.representative,
        exact: autos.is_exact(),
    })
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// One canonical representative per orbit of `size`-element subsets, in lexicographic order.
pub fn enumerate_class_representatives(group: &GroupSpec, size: usize) -> Result<Vec<SubsetClass>, Error> {
    let n = group.order();
    if size == 0 || size as u64 > n {
        return Ok(Vec::new());
    }
    let work = binomial(n, size as u64);
    if work > CLASS_WORK_CAP {
        return Err(Error::TooLarge {
            what: "subset enumeration",
            size: u64::try_from(work).unwrap_or(u64::MAX),
            cap: CLASS_WORK_CAP as u64,
        });
    }
    let autos = Automorphisms::new(group)?;
    let reps = class_indices(&autos, size);
    Ok(reps
        .into_iter()
        .map(|r| SubsetClass {
            group: group.clone(),
            representative: r.into_iter().map(|i| group.element_at(i)).collect(),
            exact: autos.is_exact(),
        })
        .collect())
}

/// Canonical index sets of the given size; each contains 0.
pub fn class_indices(autos: &Automorphisms, size: usize) -> Vec<Vec<usize>> {
    let n = autos.tables().order();
    if size == 1 {
        return vec![vec![0]];
    }
    // blocks keyed by the second element
    let mut out: Vec<Vec<usize>> = (1..n)
        .into_par_iter()
        .flat_map_iter(|second| {
            let mut found = Vec::new();
            let mut set = vec![0, second];
            walk(autos, n, size, &mut set, &mut found);
            found
        })
        .collect();
    out.sort();
    out
}

fn walk(autos: &Automorphisms, n: usize, size: usize, set: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
    if set.len() == size {
        if autos.canonical_indices(set) == *set {
            found.push(set.clone());
        }
        return;
    }
    let last = *set.last().unwrap();
    let need = size - set.len();
    for x in last + 1..=n - need {
        set.push(x);
        walk(autos, n, size, set, found);
        set.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u64]) -> Vec<Element> {
        v.iter().map(|&x| Element::from(x)).collect()
    }

    fn rep(c: &SubsetClass) -> Vec<Vec<u64>> {
        c.representative.iter().map(|e| e.0.clone()).collect()
    }

    #[test]
    fn z7_examples() {
        let g = GroupSpec::cyclic(7).unwrap();
        let c = canonical_form(&g, &set(&[0, 2, 6])).unwrap();
        assert_eq!(rep(&c), vec![vec![0], vec![1], vec![3]]);
        assert!(c.exact);
        let c = canonical_form(&g, &set(&[0, 1, 2])).unwrap();
        assert_eq!(rep(&c), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(rep(&canonical_form(&g, &set(&[5])).unwrap()), vec![vec![0]]);
    }

    #[test]
    fn class_counts() {
        let g = GroupSpec::cyclic(7).unwrap();
        let c = enumerate_class_representatives(&g, 3).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(rep(&c[0]), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(rep(&c[1]), vec![vec![0], vec![1], vec![3]]);
        assert_eq!(enumerate_class_representatives(&g, 2).unwrap().len(), 1);
        assert_eq!(enumerate_class_representatives(&g, 1).unwrap().len(), 1);
    }

    #[test]
    fn product_automorphisms() {
        let g = GroupSpec::new(&[2, 2, 2]).unwrap();
        let a = Automorphisms::new(&g).unwrap();
        assert_eq!(a.len(), 6);
        assert!(!a.is_exact());
        let g = GroupSpec::new(&[3, 4]).unwrap();
        let a = Automorphisms::new(&g).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.is_exact());
    }

    #[test]
    fn equivalence_map_carries_sets() {
        let g = GroupSpec::cyclic(12).unwrap();
        let autos = Automorphisms::new(&g).unwrap();
        let e = set(&[0, 2, 3, 4, 7]);
        let f: Vec<Element> = e.iter().map(|x| Element::from((x.0[0] * 5 + 3) % 12)).collect();
        let m = autos.equivalence_map(&e, &f).unwrap().unwrap();
        let mut img: Vec<usize> = e.iter().map(|x| m.apply(autos.tables(), g.index_of(x))).collect();
        img.sort_unstable();
        let mut want: Vec<usize> = f.iter().map(|x| g.index_of(x)).collect();
        want.sort_unstable();
        assert_eq!(img, want);
    }
}
