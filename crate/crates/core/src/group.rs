//! Finite abelian groups `Z_{n1} × … × Z_{nk}` and their elements, characters and subgroups.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::turn::RationalTurn;
use crate::Error;

/// Largest group whose elements may be enumerated.
pub const ELEMENT_CAP: u64 = 1_000_000;
/// Largest group whose subgroup lattice may be enumerated.
pub const SUBGROUP_CAP: u64 = 10_000;

/// A finite abelian group given by its cyclic factor orders.
///
/// Elements are ordered lexicographically by coordinates, and the flat index of an
/// element is its position in that order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroupSpec {
    orders: Vec<u64>,
    order: u64,
}

/// A group element as a coordinate tuple with `0 <= x_j < n_j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Element(pub Vec<u64>);

/// Characters are identified with group elements through the pairing `Σ γ_j g_j / n_j`.
pub type Character = Element;

impl Element {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }
}

impl From<u64> for Element {
    fn from(x: u64) -> Self {
        Element(vec![x])
    }
}

impl From<Vec<u64>> for Element {
    fn from(v: Vec<u64>) -> Self {
        Element(v)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "(")?;
            for (i, x) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        }
    }
}

impl GroupSpec {
    /// Builds `Z_{n1} × … × Z_{nk}`. Every order must be at least 2.
    pub fn new(orders: &[u64]) -> Result<Self, Error> {
        if orders.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors given".into()));
        }
        if let Some(pos) = orders.iter().position(|&n| n < 2) {
            return Err(Error::InvalidGroup(format!(
                "factor {} has order {}, need at least 2",
                pos + 1,
                orders[pos]
            )));
        }
        let mut order: u64 = 1;
        for &n in orders {
            order = order
                .checked_mul(n)
                .ok_or_else(|| Error::InvalidGroup("group order overflows u64".into()))?;
        }
        Ok(GroupSpec {
            orders: orders.to_vec(),
            order,
        })
    }

    pub fn cyclic(n: u64) -> Result<Self, Error> {
        GroupSpec::new(&[n])
    }

    /// The one-element group, which arises as a quotient `G/G`.
    pub fn trivial() -> Self {
        GroupSpec {
            orders: Vec::new(),
            order: 1,
        }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_cyclic(&self) -> bool {
        self.orders.len() <= 1
            || self
                .orders
                .iter()
                .enumerate()
                .all(|(i, a)| self.orders[i + 1..].iter().all(|b| a.gcd(b) == 1))
    }

    /// Least common multiple of the factor orders.
    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1, |acc, n| acc.lcm(n))
    }

    pub fn zero(&self) -> Element {
        Element(vec![0; self.rank()])
    }

    pub fn contains(&self, g: &Element) -> bool {
        g.0.len() == self.rank() && g.0.iter().zip(&self.orders).all(|(x, n)| x < n)
    }

    /// Checks membership and reports a readable error otherwise.
    pub fn check(&self, g: &Element) -> Result<(), Error> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::InvalidElement(format!("{g} is not an element of {self}")))
        }
    }

    /// Reduces arbitrary integer coordinates into the group.
    pub fn element(&self, coords: &[i64]) -> Result<Element, Error> {
        if coords.len() != self.rank() {
            return Err(Error::InvalidElement(format!(
                "expected {} coordinates, got {}",
                self.rank(),
                coords.len()
            )));
        }
        Ok(Element(
            coords
                .iter()
                .zip(&self.orders)
                .map(|(&x, &n)| x.rem_euclid(n as i64) as u64)
                .collect(),
        ))
    }

    pub fn add(&self, a: &Element, b: &Element) -> Element {
        Element(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.orders)
                .map(|((x, y), n)| (x + y) % n)
                .collect(),
        )
    }

    pub fn neg(&self, a: &Element) -> Element {
        Element(a.0.iter().zip(&self.orders).map(|(x, n)| (n - x) % n).collect())
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Element {
        self.add(a, &self.neg(b))
    }

    /// `k·g`.
    pub fn scale(&self, k: i64, g: &Element) -> Element {
        Element(
            g.0.iter()
                .zip(&self.orders)
                .map(|(&x, &n)| ((x as i128 * k as i128).rem_euclid(n as i128)) as u64)
                .collect(),
        )
    }

    pub fn element_order(&self, g: &Element) -> u64 {
        g.0.iter()
            .zip(&self.orders)
            .map(|(&x, &n)| n / x.gcd(&n))
            .fold(1, |acc, o| acc.lcm(&o))
    }

    /// `Σ γ_j g_j / n_j mod 1`.
    pub fn pairing_turn(&self, gamma: &Character, g: &Element) -> RationalTurn {
        let d = self.exponent();
        let mut acc: u128 = 0;
        for ((a, b), n) in gamma.0.iter().zip(&g.0).zip(&self.orders) {
            let term = (*a as u128 * *b as u128) % *n as u128;
            acc = (acc + term * (d / n) as u128) % d as u128;
        }
        RationalTurn::new(acc as i128, d)
    }

    /// Flat index of `g` in lexicographic order.
    pub fn index_of(&self, g: &Element) -> usize {
        let mut idx: u64 = 0;
        for (x, n) in g.0.iter().zip(&self.orders) {
            idx = idx * n + x;
        }
        idx as usize
    }

    pub fn element_at(&self, mut idx: usize) -> Element {
        let mut coords = vec![0; self.rank()];
        for j in (0..self.rank()).rev() {
            let n = self.orders[j] as usize;
            coords[j] = (idx % n) as u64;
            idx /= n;
        }
        Element(coords)
    }

    /// All elements in lexicographic order.
    pub fn enumerate_elements(&self) -> Result<Vec<Element>, Error> {
        if self.order > ELEMENT_CAP {
            return Err(Error::TooLarge {
                what: "element enumeration",
                size: self.order,
                cap: ELEMENT_CAP,
            });
        }
        Ok((0..self.order as usize).map(|i| self.element_at(i)).collect())
    }

    /// Index tables for `a + b` and `-a`, used by the hot loops.
    pub fn tables(&self) -> Result<GroupTables, Error> {
        GroupTables::new(self)
    }

    /// The subgroup generated by `gens`.
    pub fn generated_subgroup(&self, gens: &[Element]) -> Subgroup {
        let mut seen: BTreeSet<Element> = BTreeSet::new();
        let zero = self.zero();
        seen.insert(zero.clone());
        let mut frontier = vec![zero];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = self.add(&x, g);
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        Subgroup {
            elements: seen.into_iter().collect(),
        }
    }

    /// Every subgroup, optionally only those of a given order.
    ///
    /// The result is sorted by order and then by element list.
    pub fn enumerate_subgroups(&self, order: Option<u64>) -> Result<Vec<Subgroup>, Error> {
        if self.order > SUBGROUP_CAP {
            return Err(Error::TooLarge {
                what: "subgroup enumeration",
                size: self.order,
                cap: SUBGROUP_CAP,
            });
        }
        let t = self.tables()?;
        let n = self.order as usize;
        // cyclic subgroups as sorted index lists
        let mut all: HashSet<Vec<usize>> = HashSet::new();
        for g in 0..n {
            let mut s = vec![0usize];
            let mut x = g;
            while x != 0 {
                s.push(x);
                x = t.add(x, g);
            }
            s.sort_unstable();
            all.insert(s);
        }
        // joins of pairs until nothing new appears
        let mut layer: Vec<Vec<usize>> = all.iter().cloned().collect();
        let cyclic: Vec<Vec<usize>> = layer.clone();
        while !layer.is_empty() {
            let mut next = Vec::new();
            for a in &layer {
                for c in &cyclic {
                    if c.len() == 1 || is_sorted_subset(c, a) {
                        continue;
                    }
                    let j = join(&t, a, c);
                    if !all.contains(&j) {
                        all.insert(j.clone());
                        next.push(j);
                    }
                }
            }
            layer = next;
        }
        let mut out: Vec<Subgroup> = all
            .into_iter()
            .filter(|s| order.is_none_or(|o| s.len() as u64 == o))
            .map(|s| Subgroup {
                elements: s.into_iter().map(|i| self.element_at(i)).collect(),
            })
            .collect();
        out.sort_by(|a, b| (a.order(), &a.elements).cmp(&(b.order(), &b.elements)));
        Ok(out)
    }

    /// The quotient `G/H` in invariant-factor form together with the projection.
    pub fn quotient(&self, h: &Subgroup) -> Result<Quotient, Error> {
        Quotient::new(self, h)
    }

    /// Every abelian group of order `n` up to isomorphism, in invariant-factor form
    /// `d_1 | d_2 | … | d_k`.
    pub fn all_of_order(n: u64) -> Vec<GroupSpec> {
        fn rec(n: u64, min_divisor_of: u64, acc: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if n == 1 {
                out.push(acc.clone());
                return;
            }
            // next factor d must be a multiple of the previous one and divide the rest
            for d in 2..=n {
                if n.is_multiple_of(d) && d % min_divisor_of == 0 {
                    let rest = n / d;
                    // every later factor is a multiple of d, so d^k must divide what remains
                    if rest.is_multiple_of(d) || rest == 1 {
                        acc.push(d);
                        rec(rest, d, acc, out);
                        acc.pop();
                    }
                }
            }
        }
        if n < 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        rec(n, 1, &mut Vec::new(), &mut out);
        out.into_iter()
            .map(|o| GroupSpec::new(&o).expect("valid factors"))
            .collect()
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.orders.is_empty() {
            return write!(f, "Z1");
        }
        for (i, n) in self.orders.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "Z{n}")?;
        }
        Ok(())
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses a comma-separated order list such as `12` or `2,2,3`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let orders: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse::<u64>()).collect();
        let orders = orders.map_err(|_| Error::Parse(format!("bad group literal `{s}`")))?;
        GroupSpec::new(&orders)
    }
}

fn is_sorted_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

fn join(t: &GroupTables, a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut s: BTreeSet<usize> = BTreeSet::new();
    for &x in a {
        for &y in b {
            s.insert(t.add(x, y));
        }
    }
    s.into_iter().collect()
}

/// The units of `Z_n` in increasing order.
pub fn units(n: u64) -> Vec<u64> {
    (1..n.max(2)).filter(|u| u.gcd(&n) == 1).collect()
}

/// Precomputed addition and negation on flat indices.
#[derive(Clone, Debug)]
pub struct GroupTables {
    n: usize,
    add: Vec<u32>,
    neg: Vec<u32>,
}

/// Groups above this order get no addition table.
pub const TABLE_CAP: u64 = 4096;

impl GroupTables {
    fn new(g: &GroupSpec) -> Result<Self, Error> {
        if g.order() > TABLE_CAP {
            return Err(Error::TooLarge {
                what: "group tables",
                size: g.order(),
                cap: TABLE_CAP,
            });
        }
        let n = g.order() as usize;
        let elems: Vec<Element> = (0..n).map(|i| g.element_at(i)).collect();
        let mut add = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                add[i * n + j] = g.index_of(&g.add(&elems[i], &elems[j])) as u32;
            }
        }
        let neg = elems.iter().map(|e| g.index_of(&g.neg(e)) as u32).collect();
        Ok(GroupTables { n, add, neg })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.n + b] as usize
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a] as usize
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }
}

/// A subgroup stored as its sorted element list.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subgroup {
    elements: Vec<Element>,
}

impl Subgroup {
    /// Wraps a sorted element list that is already known to be a subgroup.
    pub fn from_sorted(elements: Vec<Element>) -> Self {
        Subgroup { elements }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    /// A small generating set found greedily in element order.
    pub fn generators(&self, group: &GroupSpec) -> Vec<Element> {
        let mut gens: Vec<Element> = Vec::new();
        let mut span = group.generated_subgroup(&gens);
        for e in &self.elements {
            if !span.contains(e) {
                gens.push(e.clone());
                span = group.generated_subgroup(&gens);
            }
        }
        gens
    }
}

/// `G/H` realised as `Z_{d1} × … × Z_{dk}` with `d1 | d2 | …`.
#[derive(Clone, Debug)]
pub struct Quotient {
    group: GroupSpec,
    source: GroupSpec,
    /// Row transform from Smith normal form: `π(g)_i = (U g)_{offset+i} mod d_i`.
    transform: Vec<Vec<i128>>,
}

impl Quotient {
    fn new(g: &GroupSpec, h: &Subgroup) -> Result<Self, Error> {
        let k = g.rank();
        // relation columns: n_j e_j and the generators of H
        let mut cols: Vec<Vec<i128>> = Vec::new();
        for (j, &n) in g.orders().iter().enumerate() {
            let mut c = vec![0i128; k];
            c[j] = n as i128;
            cols.push(c);
        }
        for gen in h.generators(g) {
            cols.push(gen.0.iter().map(|&x| x as i128).collect());
        }
        let (u, diag) = smith_row_transform(k, &cols)?;
        let mut orders = Vec::new();
        let mut rows = Vec::new();
        for (i, d) in diag.iter().enumerate() {
            if *d > 1 {
                orders.push(*d as u64);
                rows.push(u[i].clone());
            }
        }
        let group = if orders.is_empty() {
            GroupSpec::trivial()
        } else {
            GroupSpec::new(&orders)?
        };
        Ok(Quotient {
            group,
            source: g.clone(),
            transform: rows,
        })
    }

    /// The quotient group.
    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    /// The projection `G → G/H`.
    pub fn project(&self, g: &Element) -> Element {
        debug_assert!(self.source.contains(g));
        Element(
            self.transform
                .iter()
                .zip(self.group.orders())
                .map(|(row, &d)| {
                    let s: i128 = row.iter().zip(&g.0).map(|(a, &x)| a * x as i128).sum();
                    s.rem_euclid(d as i128) as u64
                })
                .collect(),
        )
    }
}

/// Smith normal form of the `k × m` matrix whose columns are `cols`.
///
/// Returns the unimodular row transform `U` and the diagonal, padded with zeros to length `k`.
#[allow(clippy::needless_range_loop)]
fn smith_row_transform(k: usize, cols: &[Vec<i128>]) -> Result<(Vec<Vec<i128>>, Vec<i128>), Error> {
    let m = cols.len();
    let mut a: Vec<Vec<i128>> = (0..k).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..k).map(|i| (0..k).map(|j| i128::from(i == j)).collect()).collect();
    let overflow = || Error::Overflow("Smith normal form".into());
    let mut t = 0;
    while t < k.min(m) {
        // pivot: smallest nonzero magnitude in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..k {
            for j in t..m {
                if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let mut clean = true;
        // clear the column below the pivot
        for i in t + 1..k {
            let q = a[i][t].div_euclid(a[t][t]);
            if q != 0 {
                for j in t..m {
                    a[i][j] = a[i][j]
                        .checked_sub(q.checked_mul(a[t][j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
                for j in 0..k {
                    u[i][j] = u[i][j]
                        .checked_sub(q.checked_mul(u[t][j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
            }
            if a[i][t] != 0 {
                clean = false;
            }
        }
        // clear the row right of the pivot
        for j in t + 1..m {
            let q = a[t][j].div_euclid(a[t][t]);
            if q != 0 {
                for i in t..k {
                    a[i][j] = a[i][j]
                        .checked_sub(q.checked_mul(a[i][t]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
            }
            if a[t][j] != 0 {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility: fold any entry not divisible by the pivot into the pivot row
        let p = a[t][t];
        let mut bad_row = None;
        'outer: for i in t + 1..k {
            for j in t + 1..m {
                if a[i][j] % p != 0 {
                    bad_row = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad_row {
            for j in t..m {
                a[t][j] = a[t][j].checked_add(a[i][j]).ok_or_else(overflow)?;
            }
            for j in 0..k {
                u[t][j] = u[t][j].checked_add(u[i][j]).ok_or_else(overflow)?;
            }
            continue;
        }
        if a[t][t] < 0 {
            for row in a.iter_mut() {
                row[t] = -row[t];
            }
        }
        t += 1;
    }
    let diag = (0..k).map(|i| if i < m { a[i][i].abs() } else { 0 }).collect();
    Ok((u, diag))
}
