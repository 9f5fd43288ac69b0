//! Hierarchical grid search over unimodular phases.
//!
//! The first support point carries the fixed mass 1; every other point takes a phase
//! `k/mesh`. A pass scores grid points, keeps those that could still refine to an
//! extreme measure (or to a better PSC value), and the next pass refines the kept
//! points on a mesh `refinement_factor` times finer. Retained candidates are also
//! rounded to nearby rational grids and handed to the exact check.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rayon::prelude::*;
use rustc_hash::FxHashSet;

use crate::cyclotomic::exact_extremality_check;
use crate::group::{Element, GroupSpec};
use crate::measure::PhaseMeasure;
use crate::structure::difference_multiset;
use crate::turn::{snap_turn, RationalTurn};
use crate::Error;

/// Floating point types the search runs in.
pub trait Scalar: Float + FloatConst + Send + Sync + fmt::Debug + fmt::Display + 'static {}

impl<T: Float + FloatConst + Send + Sync + fmt::Debug + fmt::Display + 'static> Scalar for T {}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Objective {
    /// `max_γ |ν̂(γ)|`, searched by branch and bound for PSC bounds.
    TransformMax,
    /// `Σ_{g≠0} |Re c(g)| + |Im c(g)|` for `c = ν * ν̃`.
    ConvolutionResidual,
}

/// How [`Objective::ConvolutionResidual`] decides which candidates survive a pass.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Retention {
    /// Keep when `N + score ≤ N + ε√2 + precision` with `ε = 2N(N−1)·2π/mesh`.
    Window,
    /// Keep when every `|c(g)|, g ≠ 0` is at most `pairs(g)·2π/mesh + precision`.
    PerCoefficient,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// `None` picks [`default_mesh_start`].
    pub mesh_start: Option<u64>,
    pub mesh_max: u64,
    pub refinement_factor: u64,
    pub precision: f64,
    pub memory_budget: usize,
    pub objective: Objective,
    pub retention: Retention,
    /// How many of the best kept candidates are rounded and exact-checked after each pass.
    pub snap_limit: usize,
    /// Write the kept candidates here after every pass.
    pub checkpoint: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mesh_start: None,
            mesh_max: 64,
            refinement_factor: 2,
            precision: 1e-7,
            memory_budget: 1 << 30,
            objective: Objective::ConvolutionResidual,
            retention: Retention::Window,
            snap_limit: 64,
            checkpoint: None,
        }
    }
}

/// A grid point: packed phase indices of the non-anchor points and its score.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Candidate<T> {
    pub key: u128,
    pub score: T,
}

fn cmp_candidates<T: Float>(a: &Candidate<T>, b: &Candidate<T>) -> Ordering {
    a.score
        .partial_cmp(&b.score)
        .unwrap_or(Ordering::Equal)
        .then(a.key.cmp(&b.key))
}

struct Ranked<T>(Candidate<T>);

impl<T: Float> PartialEq for Ranked<T> {
    fn eq(&self, o: &Self) -> bool {
        cmp_candidates(&self.0, &o.0) == Ordering::Equal
    }
}
impl<T: Float> Eq for Ranked<T> {}
impl<T: Float> PartialOrd for Ranked<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Float> Ord for Ranked<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        cmp_candidates(&self.0, &o.0)
    }
}

/// Bookkeeping for one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct PassStats<T> {
    pub mesh: u64,
    pub evaluated: u64,
    /// Candidates that met the retention rule.
    pub retained: u64,
    pub kept: u64,
    /// Retained candidates dropped for lack of memory.
    pub discarded: u64,
    pub min_score: T,
    /// Smallest over evaluated candidates of `max_{g≠0} |c(g)|` (convolution objective).
    pub min_peak_coefficient: Option<T>,
    /// Running PSC upper bound (transform objective).
    pub upper_bound: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict<T> {
    ExtremeFound(PhaseMeasure),
    CertifiedNotExtreme { lower_bound: T, epsilon_used: T },
    Inconclusive(String),
}

impl<T> Verdict<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ExtremeFound(_) => "ExtremeFound",
            Verdict::CertifiedNotExtreme { .. } => "CertifiedNotExtreme",
            Verdict::Inconclusive(_) => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchReport<T> {
    pub set: Vec<Element>,
    pub objective: Objective,
    pub best_value: T,
    /// The best grid measure of the last pass, or the exact measure when one was found.
    pub best_measure: Option<PhaseMeasure>,
    /// Candidates kept by the last pass.
    pub kept: u64,
    /// Candidates dropped for lack of memory, over all passes.
    pub discarded: u64,
    pub mesh_reached: u64,
    /// PSC lower bound over every cell (transform objective).
    pub lower_bound: Option<T>,
    pub passes: Vec<PassStats<T>>,
    pub verdict: Verdict<T>,
}

/// `ε = 2N(N−1)·2π/mesh`.
pub fn window_epsilon(n: usize, mesh: u64) -> f64 {
    2.0 * n as f64 * (n as f64 - 1.0) * std::f64::consts::TAU / mesh as f64
}

/// `(N−1)·2π/mesh`, the drift of one coefficient of `ν * ν̃` over a grid cell.
pub fn per_coefficient_bound(n: usize, mesh: u64) -> f64 {
    (n as f64 - 1.0) * std::f64::consts::TAU / mesh as f64
}

/// `(N−1)·π/mesh`, the drift of `|ν̂(γ)|` over a grid cell with the anchor fixed.
pub fn transform_lipschitz(n: usize, mesh: u64) -> f64 {
    (n as f64 - 1.0) * std::f64::consts::PI / mesh as f64
}

/// A certificate that no extreme measure lives on the set, from a window search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub mesh: u64,
    pub epsilon: f64,
    pub min_score: f64,
}

pub fn certify_not_extreme(min_score: f64, mesh: u64, n: usize, discarded: u64, precision: f64) -> Option<Certificate> {
    let eps = window_epsilon(n, mesh);
    (discarded == 0 && min_score > eps * std::f64::consts::SQRT_2 + precision).then_some(Certificate {
        mesh,
        epsilon: eps,
        min_score,
    })
}

fn prime_divisors(mut k: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            out.push(p);
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        p += 1;
    }
    if k > 1 {
        out.push(k);
    }
    out
}

fn in_semigroup(c: u64, gens: &[u64]) -> bool {
    let mut reach = vec![false; c as usize + 1];
    reach[0] = true;
    for v in 1..=c as usize {
        reach[v] = gens.iter().any(|&g| g as usize <= v && reach[v - g as usize]);
    }
    reach[c as usize]
}

/// Smallest `k ≥ 2` such that every nonzero difference count of `E` is a sum of prime
/// divisors of `k`, since a vanishing sum of `k`-th roots of unity has such a length.
/// Differences occurring once are skipped; no grid makes them vanish.
pub fn default_mesh_start(group: &GroupSpec, set: &[Element]) -> Result<u64, Error> {
    let d = difference_multiset(group, set)?;
    let zero = group.zero();
    let counts: Vec<u64> = d
        .counts
        .iter()
        .filter(|(g, &c)| **g != zero && c > 1)
        .map(|(_, &c)| c)
        .collect();
    let mut k = 2;
    loop {
        let ps = prime_divisors(k);
        if counts.iter().all(|&c| in_semigroup(c, &ps)) {
            return Ok(k);
        }
        k += 1;
    }
}

struct DiffClass<T> {
    pairs: Vec<(usize, usize)>,
    weight: T,
    /// Squared retention threshold for [`Retention::PerCoefficient`].
    limit_sq: T,
}

/// Precomputed data for one set.
struct Evaluator {
    group: GroupSpec,
    set: Vec<Element>,
    n: usize,
    /// For each `h` up to sign, the ordered pairs with `a − b = h` and whether `h ≠ −h`.
    diffs: Vec<(Vec<(usize, usize)>, bool)>,
    /// `⟨γ, a⟩` numerators over the group exponent, row per character.
    char_turns: Vec<Vec<u64>>,
    exponent: u64,
}

struct MeshTables<T> {
    mesh: u64,
    conv: Vec<Complex<T>>,
    classes: Vec<DiffClass<T>>,
    /// `l = lcm(mesh, exponent)`; `phase[j] = e^{2πi j/l}`.
    l: u64,
    step: u64,
    phase: Vec<Complex<T>>,
    offsets: Vec<Vec<u64>>,
}

impl Evaluator {
    fn new(group: &GroupSpec, set: &[Element]) -> Result<Self, Error> {
        let mut set: Vec<Element> = set.to_vec();
        for e in &set {
            group.check(e)?;
        }
        set.sort();
        set.dedup();
        if set.is_empty() {
            return Err(Error::InvalidElement("empty set".into()));
        }
        let n = set.len();
        let zero = group.zero();
        let mut by_diff: std::collections::BTreeMap<Element, Vec<(usize, usize)>> = Default::default();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    by_diff.entry(group.sub(&set[a], &set[b])).or_default().push((a, b));
                }
            }
        }
        let mut diffs = Vec::new();
        for (h, pairs) in &by_diff {
            let neg = group.neg(h);
            if neg < *h {
                continue;
            }
            debug_assert!(*h != zero);
            diffs.push((pairs.clone(), neg != *h));
        }
        let exponent = group.exponent();
        let elems = group.enumerate_elements()?;
        let char_turns = elems
            .iter()
            .map(|gamma| {
                set.iter()
                    .map(|a| {
                        group
                            .pairing_turn(gamma, a)
                            .numerator_over(exponent)
                            .expect("pairing divides exponent")
                    })
                    .collect()
            })
            .collect();
        Ok(Evaluator {
            group: group.clone(),
            set,
            n,
            diffs,
            char_turns,
            exponent,
        })
    }

    fn tables<T: Scalar>(&self, mesh: u64, precision: f64) -> Result<MeshTables<T>, Error> {
        let conv = (0..mesh)
            .map(|k| RationalTurn::new(k as i128, mesh).phase::<T>())
            .collect();
        let cell = std::f64::consts::TAU / mesh as f64;
        let classes = self
            .diffs
            .iter()
            .map(|(pairs, doubled)| {
                let lim = pairs.len() as f64 * cell + precision;
                DiffClass {
                    pairs: pairs.clone(),
                    weight: if *doubled { T::one() + T::one() } else { T::one() },
                    limit_sq: T::from(lim * lim).unwrap(),
                }
            })
            .collect();
        let g = num_integer::gcd(mesh, self.exponent);
        let l = (mesh / g)
            .checked_mul(self.exponent)
            .filter(|&l| l <= 1 << 26)
            .ok_or(Error::TooLarge {
                what: "phase table",
                size: u64::MAX,
                cap: 1 << 26,
            })?;
        let phase = (0..l).map(|j| RationalTurn::new(j as i128, l).phase::<T>()).collect();
        let scale = l / self.exponent;
        let offsets = self
            .char_turns
            .iter()
            .map(|row| row.iter().map(|&p| (l - (p * scale) % l) % l).collect())
            .collect();
        Ok(MeshTables {
            mesh,
            conv,
            classes,
            l,
            step: l / mesh,
            phase,
            offsets,
        })
    }
}

impl<T: Scalar> MeshTables<T> {
    /// Residual score, largest coefficient modulus squared, and whether every coefficient
    /// is within its per-coefficient limit.
    #[inline]
    fn convolution(&self, k: &[u32]) -> (T, T, bool) {
        let m = self.mesh as u32;
        let mut score = T::zero();
        let mut peak = T::zero();
        let mut within = true;
        for c in &self.classes {
            let mut s = Complex::new(T::zero(), T::zero());
            for &(a, b) in &c.pairs {
                let d = if k[a] >= k[b] { k[a] - k[b] } else { k[a] + m - k[b] };
                s = s + self.conv[d as usize];
            }
            score = score + c.weight * (s.re.abs() + s.im.abs());
            let q = s.norm_sqr();
            if q > peak {
                peak = q;
            }
            if q > c.limit_sq {
                within = false;
            }
        }
        (score, peak, within)
    }

    #[inline]
    fn transform_max(&self, k: &[u32]) -> T {
        let mut best = T::zero();
        for row in &self.offsets {
            let mut s = Complex::new(T::zero(), T::zero());
            for (a, &off) in row.iter().enumerate() {
                let mut j = k[a] as u64 * self.step + off;
                if j >= self.l {
                    j -= self.l;
                }
                s = s + self.phase[j as usize];
            }
            let q = s.norm_sqr();
            if q > best {
                best = q;
            }
        }
        best.sqrt()
    }
}

fn pack(digits: &[u32], mesh: u64) -> u128 {
    digits[1..].iter().fold(0u128, |acc, &d| acc * mesh as u128 + d as u128)
}

fn unpack(mut key: u128, mesh: u64, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    for slot in out[1..].iter_mut().rev() {
        *slot = (key % mesh as u128) as u32;
        key /= mesh as u128;
    }
    out
}

fn check_packable(mesh: u64, n: usize) -> Result<(), Error> {
    (mesh as u128).checked_pow(n as u32 - 1).ok_or(Error::TooLarge {
        what: "candidate key space",
        size: u64::MAX,
        cap: u64::MAX,
    })?;
    Ok(())
}

/// Per-worker pass accumulator.
struct Acc<T> {
    evaluated: u64,
    retained: u64,
    heap: BinaryHeap<Ranked<T>>,
    cap: usize,
    min_score: T,
    min_peak_sq: T,
    /// `min(score − L)` over candidates pruned by the bound (transform objective).
    min_pruned: T,
}

impl<T: Scalar> Acc<T> {
    fn new(cap: usize) -> Self {
        Acc {
            evaluated: 0,
            retained: 0,
            heap: BinaryHeap::new(),
            cap,
            min_score: T::infinity(),
            min_peak_sq: T::infinity(),
            min_pruned: T::infinity(),
        }
    }

    fn keep(&mut self, c: Candidate<T>) {
        self.retained += 1;
        if self.heap.len() < self.cap {
            self.heap.push(Ranked(c));
        } else if let Some(top) = self.heap.peek() {
            if cmp_candidates(&c, &top.0) == Ordering::Less {
                self.heap.pop();
                self.heap.push(Ranked(c));
            }
        }
    }

    fn merge(mut self, mut o: Self) -> Self {
        if o.heap.len() > self.heap.len() {
            std::mem::swap(&mut self.heap, &mut o.heap);
        }
        for c in o.heap.into_vec() {
            if self.heap.len() < self.cap {
                self.heap.push(c);
            } else if let Some(top) = self.heap.peek() {
                if c < *top {
                    self.heap.pop();
                    self.heap.push(c);
                }
            }
        }
        Acc {
            evaluated: self.evaluated + o.evaluated,
            retained: self.retained + o.retained,
            heap: self.heap,
            cap: self.cap,
            min_score: self.min_score.min(o.min_score),
            min_peak_sq: self.min_peak_sq.min(o.min_peak_sq),
            min_pruned: self.min_pruned.min(o.min_pruned),
        }
    }
}

/// What a pass keeps.
#[derive(Clone, Copy)]
enum Rule<T> {
    Window {
        limit: T,
    },
    PerCoefficient,
    /// Keep when `score − lipschitz < upper`.
    Bound {
        upper: T,
        lipschitz: T,
    },
}

/// Previous pass results used to seed a refinement.
pub struct Seeds<'a> {
    pub mesh: u64,
    /// Sorted by key.
    pub keys: &'a [u128],
}

/// Outcome of [`grid_pass`].
#[derive(Clone, Debug)]
pub struct PassOutcome<T> {
    /// Sorted by score, then key.
    pub kept: Vec<Candidate<T>>,
    pub stats: PassStats<T>,
    /// `min(score − L)` over candidates pruned by the bound (transform objective).
    pub min_pruned: T,
}

struct Walker<'a, T> {
    ev: &'a Evaluator,
    t: &'a MeshTables<T>,
    objective: Objective,
    rule: Rule<T>,
}

impl<T: Scalar> Walker<'_, T> {
    fn visit(&self, acc: &mut Acc<T>, k: &[u32]) {
        acc.evaluated += 1;
        match self.objective {
            Objective::ConvolutionResidual => {
                let (score, peak, within) = self.t.convolution(k);
                acc.min_score = acc.min_score.min(score);
                acc.min_peak_sq = acc.min_peak_sq.min(peak);
                let keep = match self.rule {
                    Rule::Window { limit } => score <= limit,
                    Rule::PerCoefficient => within,
                    _ => unreachable!(),
                };
                if keep {
                    acc.keep(Candidate {
                        key: pack(k, self.t.mesh),
                        score,
                    });
                }
            }
            Objective::TransformMax => {
                let score = self.t.transform_max(k);
                acc.min_score = acc.min_score.min(score);
                match self.rule {
                    Rule::Bound { upper, lipschitz } => {
                        if score - lipschitz < upper {
                            acc.keep(Candidate {
                                key: pack(k, self.t.mesh),
                                score,
                            });
                        } else {
                            acc.min_pruned = acc.min_pruned.min(score - lipschitz);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn run(&self, seeds: Option<&Seeds>, cap: usize) -> Acc<T> {
        let n = self.ev.n;
        let mesh = self.t.mesh as u32;
        match seeds {
            None => (0..mesh)
                .into_par_iter()
                .fold(
                    || Acc::new(cap),
                    |mut acc, first| {
                        let mut k = vec![0u32; n];
                        k[1] = first;
                        loop {
                            self.visit(&mut acc, &k);
                            // odometer over coordinates 2..n
                            let mut j = n;
                            loop {
                                j -= 1;
                                if j < 2 {
                                    return acc;
                                }
                                k[j] += 1;
                                if k[j] < mesh {
                                    break;
                                }
                                k[j] = 0;
                            }
                        }
                    },
                )
                .reduce(|| Acc::new(cap), Acc::merge),
            Some(s) => {
                let coarse = s.mesh;
                let r = (self.t.mesh / coarse) as i64;
                let rad = (r + 1) / 2;
                let fine = self.t.mesh as i64;
                // parents[f]: coarse values whose neighbourhood contains f, ascending
                let parents: Vec<Vec<u32>> = (0..fine)
                    .map(|f| {
                        let mut p: Vec<u32> = (0..coarse as i64)
                            .filter(|&c| {
                                let d = (c * r - f).rem_euclid(fine);
                                d.min(fine - d) <= rad
                            })
                            .map(|c| c as u32)
                            .collect();
                        p.sort_unstable();
                        p
                    })
                    .collect();
                let kept: FxHashSet<u128> = s.keys.iter().copied().collect();
                s.keys
                    .par_iter()
                    .fold(
                        || Acc::new(cap),
                        |mut acc, &seed| {
                            let c = unpack(seed, coarse, n);
                            let hood: Vec<Vec<u32>> = c
                                .iter()
                                .map(|&cj| {
                                    let mut v: Vec<u32> = (-rad..=rad)
                                        .map(|d| ((cj as i64 * r + d).rem_euclid(fine)) as u32)
                                        .collect();
                                    v.sort_unstable();
                                    v.dedup();
                                    v
                                })
                                .collect();
                            let mut idx = vec![0usize; n];
                            let mut scratch = vec![0usize; n];
                            let mut k: Vec<u32> = (0..n).map(|j| if j == 0 { 0 } else { hood[j][0] }).collect();
                            loop {
                                if Self::owns(&parents, &kept, seed, &k, coarse, &mut scratch) {
                                    self.visit(&mut acc, &k);
                                }
                                let mut j = n;
                                loop {
                                    j -= 1;
                                    if j < 1 {
                                        return acc;
                                    }
                                    idx[j] += 1;
                                    if idx[j] < hood[j].len() {
                                        k[j] = hood[j][idx[j]];
                                        break;
                                    }
                                    idx[j] = 0;
                                    k[j] = hood[j][0];
                                }
                            }
                        },
                    )
                    .reduce(|| Acc::new(cap), Acc::merge)
            }
        }
    }

    /// True when `seed` is the smallest kept seed whose neighbourhood contains `k`.
    fn owns(
        parents: &[Vec<u32>],
        kept: &FxHashSet<u128>,
        seed: u128,
        k: &[u32],
        coarse: u64,
        idx: &mut [usize],
    ) -> bool {
        let n = k.len();
        idx.iter_mut().for_each(|i| *i = 0);
        loop {
            let key = (1..n).fold(0u128, |acc, j| {
                acc * coarse as u128 + parents[k[j] as usize][idx[j]] as u128
            });
            if key == seed {
                return true;
            }
            if kept.contains(&key) {
                return false;
            }
            let mut j = n;
            loop {
                j -= 1;
                if j == 0 {
                    return false;
                }
                idx[j] += 1;
                if idx[j] < parents[k[j] as usize].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

fn capacity<T>(budget: usize) -> Result<usize, Error> {
    let per = std::mem::size_of::<Candidate<T>>();
    if budget < per {
        return Err(Error::InvalidMeasure(format!(
            "memory budget of {budget} bytes holds no candidate"
        )));
    }
    Ok(budget / per)
}

/// One pass at `mesh`: over the whole grid, or around `seeds` when given.
///
/// `upper` is the PSC bound carried over from earlier passes (transform objective only).
pub fn grid_pass<T: Scalar>(
    group: &GroupSpec,
    set: &[Element],
    mesh: u64,
    seeds: Option<&Seeds>,
    upper: Option<T>,
    config: &SearchConfig,
) -> Result<PassOutcome<T>, Error> {
    let ev = Evaluator::new(group, set)?;
    grid_pass_with(&ev, mesh, seeds, upper, config)
}

/// Score of one grid point under the convolution objective.
///
/// `digits[j]` is the turn of `set[j]` in units of `1/mesh`. Returns the score and whether the
/// point would be kept under the configured retention.
pub fn grid_point_score<T: Scalar>(
    group: &GroupSpec,
    set: &[Element],
    mesh: u64,
    digits: &[u64],
    config: &SearchConfig,
) -> Result<(T, bool), Error> {
    let ev = Evaluator::new(group, set)?;
    if digits.len() != set.len()
        || ev.n != set.len()
        || mesh < 2
        || digits.iter().any(|&d| d >= mesh)
        || mesh > u32::MAX as u64
    {
        return Err(Error::InvalidMeasure(format!("digits do not fit mesh {mesh}")));
    }
    let t = ev.tables::<T>(mesh, config.precision)?;
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set[a].cmp(&set[b]));
    let k: Vec<u32> = order
        .iter()
        .map(|&j| ((digits[j] + mesh - digits[order[0]]) % mesh) as u32)
        .collect();
    let (score, _, within) = t.convolution(&k);
    let keep = match config.retention {
        Retention::Window => {
            score <= T::from(window_epsilon(ev.n, mesh) * std::f64::consts::SQRT_2 + config.precision).unwrap()
        }
        Retention::PerCoefficient => within,
    };
    Ok((score, keep))
}

fn grid_pass_with<T: Scalar>(
    ev: &Evaluator,
    mesh: u64,
    seeds: Option<&Seeds>,
    upper: Option<T>,
    config: &SearchConfig,
) -> Result<PassOutcome<T>, Error> {
    if mesh < 2 {
        return Err(Error::InvalidMeasure(format!("mesh {mesh} below 2")));
    }
    if ev.n < 2 {
        return Err(Error::InvalidMeasure("grid passes need at least two points".into()));
    }
    if let Some(s) = seeds {
        if !mesh.is_multiple_of(s.mesh) || mesh == s.mesh {
            return Err(Error::InvalidMeasure(format!("mesh {mesh} does not refine {}", s.mesh)));
        }
    }
    check_packable(mesh, ev.n)?;
    let cap = capacity::<T>(config.memory_budget)?;
    let t = ev.tables::<T>(mesh, config.precision)?;
    let n = ev.n;
    let (rule, upper_out) = match config.objective {
        Objective::ConvolutionResidual => (
            match config.retention {
                Retention::Window => Rule::Window {
                    limit: T::from(window_epsilon(n, mesh) * std::f64::consts::SQRT_2 + config.precision).unwrap(),
                },
                Retention::PerCoefficient => Rule::PerCoefficient,
            },
            None,
        ),
        Objective::TransformMax => (
            Rule::Bound {
                upper: upper.unwrap_or_else(T::infinity),
                lipschitz: T::from(transform_lipschitz(n, mesh)).unwrap(),
            },
            upper,
        ),
    };
    let acc = Walker {
        ev,
        t: &t,
        objective: config.objective,
        rule,
    }
    .run(seeds, cap);
    let mut kept: Vec<Candidate<T>> = acc.heap.into_vec().into_iter().map(|r| r.0).collect();
    kept.sort_by(cmp_candidates);
    // memory losses are counted against the looser bound, which can only overstate them
    let discarded = acc.retained - kept.len() as u64;
    let mut retained = acc.retained;
    let mut min_pruned = acc.min_pruned;
    let mut upper_out = upper_out;
    if let Rule::Bound { lipschitz, .. } = rule {
        let u = upper_out.map_or(acc.min_score, |u: T| u.min(acc.min_score));
        upper_out = Some(u);
        let before = kept.len();
        kept.retain(|c| {
            let keep = c.score - lipschitz < u;
            if !keep {
                min_pruned = min_pruned.min(c.score - lipschitz);
            }
            keep
        });
        retained -= (before - kept.len()) as u64;
    }
    let kept_n = kept.len() as u64;
    Ok(PassOutcome {
        stats: PassStats {
            mesh,
            evaluated: acc.evaluated,
            retained,
            kept: kept_n,
            discarded,
            min_score: acc.min_score,
            min_peak_coefficient: (config.objective == Objective::ConvolutionResidual).then(|| acc.min_peak_sq.sqrt()),
            upper_bound: upper_out,
        },
        kept,
        min_pruned,
    })
}

/// Grids the retained phases are rounded onto besides the mesh-derived caps.
pub const SNAP_GRIDS: [u64; 24] = [
    2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15, 16, 18, 20, 21, 24, 28, 30, 36, 42, 48, 60, 120,
];

fn snap_attempts(mesh: u64) -> (Vec<u64>, Vec<u64>) {
    let l12 = num_integer::lcm(mesh, 12);
    let caps = vec![mesh, 2 * mesh, 3 * mesh, l12];
    (SNAP_GRIDS.to_vec(), caps)
}

fn residual_f64(ev: &Evaluator, turns: &[RationalTurn]) -> f64 {
    ev.diffs
        .iter()
        .map(|(pairs, doubled)| {
            let s: Complex<f64> = pairs.iter().map(|&(a, b)| (turns[a] - turns[b]).phase::<f64>()).sum();
            (if *doubled { 2.0 } else { 1.0 }) * s.norm()
        })
        .sum()
}

/// Rounds candidates onto rational grids and returns the first exact extreme measure.
fn try_snap<T: Scalar>(
    ev: &Evaluator,
    mesh: u64,
    kept: &[Candidate<T>],
    limit: usize,
) -> Result<Option<PhaseMeasure>, Error> {
    let (grids, caps) = snap_attempts(mesh);
    let mut tried: HashSet<Vec<RationalTurn>> = HashSet::new();
    for c in kept.iter().take(limit) {
        let k = unpack(c.key, mesh, ev.n);
        let x: Vec<f64> = k.iter().map(|&v| v as f64 / mesh as f64).collect();
        let mut options: Vec<Vec<RationalTurn>> = Vec::new();
        options.push(k.iter().map(|&v| RationalTurn::new(v as i128, mesh)).collect());
        for &d in &grids {
            options.push(
                x.iter()
                    .map(|&v| RationalTurn::new((v * d as f64).round() as i128, d))
                    .collect(),
            );
        }
        for &cap in &caps {
            if cap <= crate::turn::MAX_SNAP_DENOMINATOR {
                options.push(x.iter().map(|&v| snap_turn(v, cap)).collect());
            }
        }
        for turns in options {
            if !tried.insert(turns.clone()) {
                continue;
            }
            if residual_f64(ev, &turns) > 1e-6 {
                continue;
            }
            let mu = PhaseMeasure::unimodular(&ev.group, &ev.set, &turns)?;
            if exact_extremality_check(&mu)?.is_extreme() {
                return Ok(Some(mu));
            }
        }
    }
    Ok(None)
}

fn grid_measure<T>(ev: &Evaluator, c: &Candidate<T>, mesh: u64) -> Result<PhaseMeasure, Error> {
    let turns: Vec<RationalTurn> = unpack(c.key, mesh, ev.n)
        .iter()
        .map(|&v| RationalTurn::new(v as i128, mesh))
        .collect();
    PhaseMeasure::unimodular(&ev.group, &ev.set, &turns)
}

/// State carried between passes, and what a checkpoint stores.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub pass_index: u32,
    /// Mesh of `seeds`.
    pub mesh: u64,
    pub seeds: Vec<(u128, f64)>,
    pub upper: f64,
    pub min_pruned: f64,
    pub discarded: u64,
}

/// Runs passes from the starting mesh until `mesh_max`, an exact hit, or an empty pass.
pub fn run_search<T: Scalar>(
    group: &GroupSpec,
    set: &[Element],
    config: &SearchConfig,
) -> Result<SearchReport<T>, Error> {
    run_from::<T>(group, set, config, None)
}

/// Continues a search from a checkpoint written by an earlier run with the same inputs.
pub fn resume_search<T: Scalar>(
    group: &GroupSpec,
    set: &[Element],
    config: &SearchConfig,
    path: &Path,
) -> Result<SearchReport<T>, Error> {
    let ev = Evaluator::new(group, set)?;
    let state = read_checkpoint(path, &ev, config)?;
    run_from::<T>(group, set, config, Some(state))
}

fn run_from<T: Scalar>(
    group: &GroupSpec,
    set: &[Element],
    config: &SearchConfig,
    resume: Option<SearchState>,
) -> Result<SearchReport<T>, Error> {
    if config.refinement_factor < 2 {
        return Err(Error::InvalidMeasure("refinement factor must be at least 2".into()));
    }
    if config.precision.is_nan() || config.precision <= 0.0 {
        return Err(Error::InvalidMeasure("precision must be positive".into()));
    }
    let ev = Evaluator::new(group, set)?;
    let n = ev.n;
    if n == 1 {
        let mu = PhaseMeasure::unimodular(group, &ev.set, &[RationalTurn::ZERO])?;
        return Ok(SearchReport {
            set: ev.set.clone(),
            objective: config.objective,
            best_value: match config.objective {
                Objective::TransformMax => T::one(),
                Objective::ConvolutionResidual => T::zero(),
            },
            best_measure: Some(mu.clone()),
            kept: 1,
            discarded: 0,
            mesh_reached: 1,
            lower_bound: Some(T::one()),
            passes: Vec::new(),
            verdict: Verdict::ExtremeFound(mu),
        });
    }
    let sqrt_n = T::from(n).unwrap().sqrt();
    let precision = T::from(config.precision).unwrap();
    let (mut mesh, mut seeds, mut upper, mut min_pruned, mut discarded, mut pass_index) = match resume {
        Some(s) => (
            s.mesh * config.refinement_factor,
            Some((
                s.mesh,
                s.seeds
                    .iter()
                    .map(|&(key, score)| Candidate {
                        key,
                        score: T::from(score).unwrap(),
                    })
                    .collect::<Vec<_>>(),
            )),
            (s.upper.is_finite()).then(|| T::from(s.upper).unwrap()),
            T::from(s.min_pruned).unwrap(),
            s.discarded,
            s.pass_index + 1,
        ),
        None => (
            match config.mesh_start {
                Some(m) => m,
                None => default_mesh_start(group, set)?,
            },
            None,
            None,
            T::infinity(),
            0u64,
            0u32,
        ),
    };
    if mesh < 2 {
        return Err(Error::InvalidMeasure(format!("mesh {mesh} below 2")));
    }
    if mesh > config.mesh_max {
        return Err(Error::InvalidMeasure(format!(
            "starting mesh {mesh} exceeds mesh_max {}",
            config.mesh_max
        )));
    }
    let mut passes = Vec::new();
    let mut last: Option<PassOutcome<T>>;
    let mut mesh_reached;
    loop {
        let keys: Vec<u128>;
        let seed_ref = match &seeds {
            Some((m, cands)) => {
                let mut k: Vec<u128> = cands.iter().map(|c| c.key).collect();
                k.sort_unstable();
                keys = k;
                Some(Seeds { mesh: *m, keys: &keys })
            }
            None => None,
        };
        let out = grid_pass_with::<T>(&ev, mesh, seed_ref.as_ref(), upper, config)?;
        discarded += out.stats.discarded;
        min_pruned = min_pruned.min(out.min_pruned);
        upper = out.stats.upper_bound.or(upper);
        mesh_reached = mesh;
        passes.push(out.stats.clone());
        if let Some(path) = &config.checkpoint {
            write_checkpoint(
                path,
                &ev,
                config,
                &SearchState {
                    pass_index,
                    mesh,
                    seeds: out.kept.iter().map(|c| (c.key, c.score.to_f64().unwrap())).collect(),
                    upper: upper.map_or(f64::INFINITY, |u| u.to_f64().unwrap()),
                    min_pruned: min_pruned.to_f64().unwrap(),
                    discarded,
                },
            )?;
        }
        if let Some(mu) = try_snap(&ev, mesh, &out.kept, config.snap_limit)? {
            let best_value = match config.objective {
                Objective::TransformMax => sqrt_n,
                Objective::ConvolutionResidual => T::zero(),
            };
            return Ok(SearchReport {
                set: ev.set.clone(),
                objective: config.objective,
                best_value,
                best_measure: Some(mu.clone()),
                kept: out.stats.kept,
                discarded,
                mesh_reached,
                lower_bound: None,
                passes,
                verdict: Verdict::ExtremeFound(mu),
            });
        }
        let empty = out.kept.is_empty();
        seeds = Some((mesh, out.kept.clone()));
        last = Some(out);
        if empty {
            break;
        }
        match mesh.checked_mul(config.refinement_factor) {
            Some(m) if m <= config.mesh_max => mesh = m,
            _ => break,
        }
        pass_index += 1;
    }
    let out = last.expect("at least one pass");
    let best = out.kept.first().copied();
    let best_measure = best.map(|c| grid_measure(&ev, &c, mesh_reached)).transpose()?;
    let stats = &out.stats;
    let (best_value, lower_bound, verdict) = match config.objective {
        Objective::ConvolutionResidual => {
            let eps = match config.retention {
                Retention::Window => window_epsilon(n, mesh_reached),
                Retention::PerCoefficient => per_coefficient_bound(n, mesh_reached),
            };
            let certified = discarded == 0
                && match config.retention {
                    Retention::Window => certify_not_extreme(
                        stats.min_score.to_f64().unwrap(),
                        mesh_reached,
                        n,
                        discarded,
                        config.precision,
                    )
                    .is_some(),
                    Retention::PerCoefficient => stats.kept == 0,
                };
            let verdict = if certified {
                Verdict::CertifiedNotExtreme {
                    lower_bound: match config.retention {
                        Retention::Window => stats.min_score,
                        Retention::PerCoefficient => stats.min_peak_coefficient.unwrap(),
                    },
                    epsilon_used: T::from(eps).unwrap(),
                }
            } else if discarded > 0 {
                Verdict::Inconclusive(format!(
                    "{discarded} candidates discarded for memory; best residual {} at mesh {mesh_reached}",
                    stats.min_score
                ))
            } else {
                Verdict::Inconclusive(format!(
                    "{} candidates still in the window at mesh {mesh_reached}; best residual {}",
                    stats.kept, stats.min_score
                ))
            };
            (stats.min_score, None, verdict)
        }
        Objective::TransformMax => {
            let l = T::from(transform_lipschitz(n, mesh_reached)).unwrap();
            let lb = out.kept.iter().map(|c| c.score - l).fold(min_pruned, T::min);
            let u = upper.unwrap_or(stats.min_score);
            let verdict = if discarded == 0 && lb > sqrt_n + precision {
                Verdict::CertifiedNotExtreme {
                    lower_bound: lb,
                    epsilon_used: l,
                }
            } else if discarded > 0 {
                Verdict::Inconclusive(format!("{discarded} cells discarded for memory; PSC bound {u}"))
            } else {
                Verdict::Inconclusive(format!("PSC lies in [{lb}, {u}] at mesh {mesh_reached}"))
            };
            (u, (discarded == 0).then_some(lb), verdict)
        }
    };
    Ok(SearchReport {
        set: ev.set.clone(),
        objective: config.objective,
        best_value,
        best_measure,
        kept: stats.kept,
        discarded,
        mesh_reached,
        lower_bound,
        passes,
        verdict,
    })
}

/// Smallest `max_γ |ν̂(γ)|` found over the grids of a transform search.
pub fn psc_upper_bound<T: Scalar>(group: &GroupSpec, set: &[Element], config: &SearchConfig) -> Result<T, Error> {
    let mut c = config.clone();
    c.objective = Objective::TransformMax;
    Ok(run_search::<T>(group, set, &c)?.best_value)
}

const MAGIC: &[u8; 4] = b"PSCK";
const VERSION: u32 = 1;

fn objective_tag(o: Objective) -> u8 {
    match o {
        Objective::TransformMax => 0,
        Objective::ConvolutionResidual => 1,
    }
}

fn retention_tag(r: Retention) -> u8 {
    match r {
        Retention::Window => 0,
        Retention::PerCoefficient => 1,
    }
}

fn header(ev: &Evaluator, config: &SearchConfig) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.push(objective_tag(config.objective));
    b.push(retention_tag(config.retention));
    b.extend_from_slice(&config.refinement_factor.to_le_bytes());
    b.extend_from_slice(&config.precision.to_le_bytes());
    b.extend_from_slice(&(ev.group.rank() as u32).to_le_bytes());
    for o in ev.group.orders() {
        b.extend_from_slice(&o.to_le_bytes());
    }
    b.extend_from_slice(&(ev.n as u32).to_le_bytes());
    for e in &ev.set {
        b.extend_from_slice(&(ev.group.index_of(e) as u64).to_le_bytes());
    }
    b
}

fn write_checkpoint(path: &Path, ev: &Evaluator, config: &SearchConfig, s: &SearchState) -> Result<(), Error> {
    let mut b = header(ev, config);
    b.extend_from_slice(&s.pass_index.to_le_bytes());
    b.extend_from_slice(&s.mesh.to_le_bytes());
    b.extend_from_slice(&s.upper.to_le_bytes());
    b.extend_from_slice(&s.min_pruned.to_le_bytes());
    b.extend_from_slice(&s.discarded.to_le_bytes());
    b.extend_from_slice(&(s.seeds.len() as u64).to_le_bytes());
    for (k, sc) in &s.seeds {
        b.extend_from_slice(&k.to_le_bytes());
        b.extend_from_slice(&sc.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&b)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], Error> {
        let s = self
            .b
            .get(self.at..self.at + K)
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        self.at += K;
        Ok(s.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, Error> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn u128(&mut self) -> Result<u128, Error> {
        Ok(u128::from_le_bytes(self.take()?))
    }
}

/// Reads a checkpoint and checks it belongs to this set and configuration.
pub fn load_checkpoint(
    path: &Path,
    group: &GroupSpec,
    set: &[Element],
    config: &SearchConfig,
) -> Result<SearchState, Error> {
    let ev = Evaluator::new(group, set)?;
    read_checkpoint(path, &ev, config)
}

fn read_checkpoint(path: &Path, ev: &Evaluator, config: &SearchConfig) -> Result<SearchState, Error> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("not a search checkpoint".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let h = header(ev, config);
    if bytes.len() < h.len() || bytes[..h.len()] != h[..] {
        return Err(Error::Checkpoint("written for a different set or configuration".into()));
    }
    let mut r = Reader { b: &bytes, at: h.len() };
    let pass_index = r.u32()?;
    let mesh = r.u64()?;
    let upper = r.f64()?;
    let min_pruned = r.f64()?;
    let discarded = r.u64()?;
    let count = r.u64()?;
    let mut seeds = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let k = r.u128()?;
        let s = r.f64()?;
        seeds.push((k, s));
    }
    if r.at != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(SearchState {
        pass_index,
        mesh,
        seeds,
        upper,
        min_pruned,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u64]) -> Vec<Element> {
        v.iter().map(|&x| Element::from(x)).collect()
    }

    #[test]
    fn mesh_start_heuristic() {
        let z = |n| GroupSpec::cyclic(n).unwrap();
        assert_eq!(default_mesh_start(&z(7), &set(&[0, 1, 2, 4])).unwrap(), 2);
        assert_eq!(default_mesh_start(&z(5), &set(&[0, 1, 2, 3])).unwrap(), 3);
        assert_eq!(default_mesh_start(&z(12), &set(&[0, 2, 3, 4, 7])).unwrap(), 2);
        assert_eq!(default_mesh_start(&z(10), &set(&[0, 1, 2, 3, 4, 7])).unwrap(), 6);
        assert_eq!(default_mesh_start(&z(7), &set(&[0, 1, 2, 3, 4, 5])).unwrap(), 5);
        assert_eq!(default_mesh_start(&z(5), &set(&[0, 1, 2])).unwrap(), 2);
        assert_eq!(default_mesh_start(&z(8), &set(&[0, 1, 3])).unwrap(), 2);
    }

    #[test]
    fn epsilon_examples() {
        assert!((window_epsilon(6, 64) - 5.890486).abs() < 1e-6);
        assert!((per_coefficient_bound(6, 120) - 0.261799).abs() < 1e-6);
        assert!((per_coefficient_bound(2, 4) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(certify_not_extreme(100.0, 64, 6, 1, 1e-7).is_none());
        assert!(certify_not_extreme(0.0, 64, 6, 0, 1e-7).is_none());
        assert!(certify_not_extreme(9.0, 64, 6, 0, 1e-7).is_some());
    }

    #[test]
    fn pack_roundtrip() {
        let k = vec![0, 3, 0, 7, 1];
        assert_eq!(unpack(pack(&k, 8), 8, 5), k);
    }

    #[test]
    fn z7_pass_at_mesh_two() {
        let g = GroupSpec::cyclic(7).unwrap();
        let out = grid_pass::<f64>(&g, &set(&[0, 1, 2, 4]), 2, None, None, &SearchConfig::default()).unwrap();
        assert_eq!(out.stats.evaluated, 8);
        let best = out.kept[0];
        assert!(best.score.abs() < 1e-12);
        assert_eq!(unpack(best.key, 2, 4), vec![0, 1, 1, 1]);
    }

    #[test]
    fn refinement_visits_each_fine_point_once() {
        let g = GroupSpec::cyclic(5).unwrap();
        let s = set(&[0, 1, 3]);
        let cfg = SearchConfig::default();
        let coarse = grid_pass::<f64>(&g, &s, 4, None, None, &cfg).unwrap();
        assert_eq!(coarse.kept.len(), 16);
        let keys: Vec<u128> = coarse
            .kept
            .iter()
            .map(|c| c.key)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let fine = grid_pass::<f64>(&g, &s, 8, Some(&Seeds { mesh: 4, keys: &keys }), None, &cfg).unwrap();
        assert_eq!(fine.stats.evaluated, 64);
        let fine3 = grid_pass::<f64>(&g, &s, 12, Some(&Seeds { mesh: 4, keys: &keys }), None, &cfg).unwrap();
        assert_eq!(fine3.stats.evaluated, 144);
    }

    #[test]
    fn budget_overflow_counts_discards() {
        let g = GroupSpec::cyclic(5).unwrap();
        let cfg = SearchConfig {
            memory_budget: 10 * std::mem::size_of::<Candidate<f64>>(),
            ..SearchConfig::default()
        };
        let out = grid_pass::<f64>(&g, &set(&[0, 1, 3]), 4, None, None, &cfg).unwrap();
        assert_eq!(out.kept.len(), 10);
        assert_eq!(out.stats.discarded, 6);
    }
}
