//! Exact sums of roots of unity and the exact extremality test.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_traits::{Float, FloatConst, One, Signed, ToPrimitive, Zero};

use crate::group::Element;
use crate::measure::PhaseMeasure;
use crate::turn::RationalTurn;
use crate::Error;

/// Largest root-of-unity order accepted anywhere in this module.
pub const ORDER_CAP: u64 = 1_000_000;

/// Integer coefficients with overflow-aware arithmetic.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Zero + One + Signed + fmt::Display {
    fn c_add(&self, o: &Self) -> Option<Self>;
    fn c_sub(&self, o: &Self) -> Option<Self>;
    fn c_mul(&self, o: &Self) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn from_i64(v: i64) -> Self;
}

impl Coeff for i64 {
    fn c_add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn c_sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn c_mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_i64(v: i64) -> Self {
        v
    }
}

impl Coeff for BigInt {
    fn c_add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn c_sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn c_mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
}

fn check_order(m: u64) -> Result<(), Error> {
    if m == 0 {
        return Err(Error::InvalidMeasure("root of unity order must be positive".into()));
    }
    if m > ORDER_CAP {
        return Err(Error::TooLarge {
            what: "root of unity order",
            size: m,
            cap: ORDER_CAP,
        });
    }
    Ok(())
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, p| acc / p * (p - 1))
}

/// Coefficients of `Φ_M`, lowest degree first.
///
/// Uses `Φ_M(x) = Φ_r(x^{M/r})` with `r` the radical of `M`, and for squarefree `r > 1`
/// the truncated power series `Π_{d|r} (1 − x^d)^{μ(r/d)}`.
pub fn cyclotomic_polynomial(m: u64) -> Result<Vec<i64>, Error> {
    check_order(m)?;
    if m == 1 {
        return Ok(vec![-1, 1]);
    }
    let primes = prime_factors(m);
    let r: u64 = primes.iter().product();
    let deg = euler_phi(r) as usize;
    let mut series = vec![0i64; deg + 1];
    series[0] = 1;
    let overflow = || Error::Overflow(format!("cyclotomic polynomial {m}"));
    // divisors of r as subsets of its primes; μ(r/d) = (-1)^{#primes missing from d}
    let k = primes.len();
    let mut muls = Vec::new();
    let mut divs = Vec::new();
    for mask in 0u32..(1 << k) {
        let d: u64 = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| primes[i]).product();
        let missing = k - mask.count_ones() as usize;
        if missing.is_multiple_of(2) {
            muls.push(d as usize);
        } else {
            divs.push(d as usize);
        }
    }
    muls.sort_unstable();
    divs.sort_unstable();
    let (mut mi, mut di) = (0, 0);
    while mi < muls.len() || di < divs.len() {
        // alternate to keep intermediate coefficients small
        let take_mul = di >= divs.len() || (mi < muls.len() && mi <= di);
        if take_mul {
            let d = muls[mi];
            mi += 1;
            for i in (d..=deg).rev() {
                series[i] = series[i].checked_sub(series[i - d]).ok_or_else(overflow)?;
            }
        } else {
            let d = divs[di];
            di += 1;
            for i in d..=deg {
                series[i] = series[i].checked_add(series[i - d]).ok_or_else(overflow)?;
            }
        }
    }
    let stretch = (m / r) as usize;
    if stretch == 1 {
        return Ok(series);
    }
    let mut out = vec![0i64; deg * stretch + 1];
    for (i, c) in series.into_iter().enumerate() {
        out[i * stretch] = c;
    }
    Ok(out)
}

/// `Σ_j coeffs[j] ζ_M^j` with `ζ_M = e^{2πi/M}`.
#[derive(Clone, PartialEq, Debug)]
pub struct CycloSum<C> {
    order: u64,
    coeffs: Vec<C>,
}

impl<C: Coeff> CycloSum<C> {
    pub fn zero(order: u64) -> Result<Self, Error> {
        check_order(order)?;
        Ok(CycloSum {
            order,
            coeffs: vec![C::zero(); order as usize],
        })
    }

    /// Reduces exponents modulo `order`.
    pub fn from_coeffs(order: u64, coeffs: &[C]) -> Result<Self, Error> {
        let mut s = Self::zero(order)?;
        for (j, c) in coeffs.iter().enumerate() {
            s.add_term(j as u64, c)?;
        }
        Ok(s)
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Adds `c·ζ_M^j`.
    pub fn add_term(&mut self, j: u64, c: &C) -> Result<(), Error> {
        let slot = &mut self.coeffs[(j % self.order) as usize];
        *slot = slot.c_add(c).ok_or_else(|| Error::Overflow("cyclotomic sum".into()))?;
        Ok(())
    }

    /// Adds `c·e^{2πi t}`; `t` must have a denominator dividing the order.
    pub fn add_turn(&mut self, t: RationalTurn, c: &C) -> Result<(), Error> {
        let j = t.numerator_over(self.order).ok_or_else(|| {
            Error::InvalidMeasure(format!("turn {t} is not a power of a primitive {}-th root", self.order))
        })?;
        self.add_term(j, c)
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.same_order(other)?;
        let mut out = self.clone();
        for (j, c) in other.coeffs.iter().enumerate() {
            out.add_term(j as u64, c)?;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, Error> {
        self.same_order(other)?;
        let m = self.order as usize;
        let mut out = Self::zero(self.order)?;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let p = a.c_mul(b).ok_or_else(|| Error::Overflow("cyclotomic product".into()))?;
                out.add_term(((i + j) % m) as u64, &p)?;
            }
        }
        Ok(out)
    }

    fn same_order(&self, other: &Self) -> Result<(), Error> {
        if self.order != other.order {
            return Err(Error::InvalidMeasure(format!(
                "orders {} and {} differ",
                self.order, other.order
            )));
        }
        Ok(())
    }

    pub fn to_big(&self) -> CycloSum<BigInt> {
        CycloSum {
            order: self.order,
            coeffs: self.coeffs.iter().map(Coeff::to_big).collect(),
        }
    }

    pub fn eval<T: Float + FloatConst>(&self) -> Complex<T> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(Complex::zero(), |acc, (j, c)| {
                let w = RationalTurn::new(j as i128, self.order).phase::<T>();
                acc + w * T::from(c.to_big().to_f64().unwrap()).unwrap()
            })
    }

    /// Nonzero terms as (coefficient, turn), by increasing exponent.
    pub fn terms(&self) -> Vec<(C, RationalTurn)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (c.clone(), RationalTurn::new(j as i128, self.order)))
            .collect()
    }

    /// Remainder modulo `Φ_M`, or `None` when an intermediate coefficient overflows.
    fn reduce(&self, phi: &[i64]) -> Option<Vec<C>> {
        let deg = phi.len() - 1;
        let mut p = self.coeffs.clone();
        let taps: Vec<(usize, C)> = phi[..deg]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(k, c)| (k, C::from_i64(*c)))
            .collect();
        for i in (deg..p.len()).rev() {
            if p[i].is_zero() {
                continue;
            }
            let lead = std::mem::replace(&mut p[i], C::zero());
            for (k, c) in &taps {
                let t = lead.c_mul(c)?;
                let idx = i - deg + k;
                p[idx] = p[idx].c_sub(&t)?;
            }
        }
        p.truncate(deg);
        Some(p)
    }
}

impl CycloSum<i64> {
    /// Exact zero test by remainder modulo the monic `Φ_M`, widening to big integers on overflow.
    pub fn is_zero(&self) -> Result<bool, Error> {
        if self.coeffs.iter().all(|c| *c == 0) {
            return Ok(true);
        }
        let phi = cyclotomic_polynomial(self.order)?;
        match self.reduce(&phi) {
            Some(r) => Ok(r.iter().all(|c| *c == 0)),
            None => self.to_big().is_zero_with(&phi),
        }
    }
}

impl CycloSum<BigInt> {
    pub fn is_zero(&self) -> Result<bool, Error> {
        let phi = cyclotomic_polynomial(self.order)?;
        self.is_zero_with(&phi)
    }

    fn is_zero_with(&self, phi: &[i64]) -> Result<bool, Error> {
        let r = self.reduce(phi).expect("big integers do not overflow");
        Ok(r.iter().all(Zero::is_zero))
    }
}

impl<C: Coeff> fmt::Display for CycloSum<C> {
    /// Prints terms as `c·e(p/q)` where `e(t) = e^{2πi t}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, t)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if !a.is_one() {
                write!(f, "{a}")?;
            }
            write!(f, "e({t})")?;
        }
        Ok(())
    }
}

/// Outcome of [`exact_extremality_check`].
#[derive(Clone, PartialEq, Debug)]
pub enum ExactVerdict {
    Extreme,
    /// `(μ * μ̃)({witness})` is the nonzero `sum` (for the identity, minus `N`).
    NotExtreme {
        witness: Element,
        sum: CycloSum<i64>,
    },
}

impl ExactVerdict {
    pub fn is_extreme(&self) -> bool {
        matches!(self, ExactVerdict::Extreme)
    }
}

/// Least common multiple of the turn denominators of `μ`.
pub fn common_order(mu: &PhaseMeasure) -> Result<u64, Error> {
    let mut m: u64 = 1;
    for t in mu.turns() {
        m = m
            .checked_mul(t.den() / m.gcd(&t.den()))
            .filter(|&v| v <= ORDER_CAP)
            .ok_or(Error::TooLarge {
                what: "turn denominator lcm",
                size: u64::MAX,
                cap: ORDER_CAP,
            })?;
    }
    Ok(m)
}

/// Every coefficient of `μ * μ̃` as an exact cyclotomic sum, keyed by group element.
pub fn autocorrelation(mu: &PhaseMeasure) -> Result<BTreeMap<Element, CycloSum<i64>>, Error> {
    let m = common_order(mu)?;
    let g = mu.group();
    let mut out: BTreeMap<Element, CycloSum<i64>> = BTreeMap::new();
    let masses: Vec<(&Element, RationalTurn)> = mu.masses().iter().map(|(e, w)| (e, w.turn)).collect();
    for (a, ta) in &masses {
        for (b, tb) in &masses {
            let h = g.sub(a, b);
            let entry = match out.get_mut(&h) {
                Some(e) => e,
                None => out.entry(h).or_insert(CycloSum::zero(m)?),
            };
            entry.add_turn(*ta - *tb, &1)?;
        }
    }
    Ok(out)
}

/// Decides exactly whether the unimodular measure `μ` satisfies `μ * μ̃ = N·δ0`.
///
/// The witness is the first element, in enumeration order, whose coefficient is wrong.
pub fn exact_extremality_check(mu: &PhaseMeasure) -> Result<ExactVerdict, Error> {
    if !mu.is_unimodular() {
        return Err(Error::InvalidMeasure("exact check needs unimodular masses".into()));
    }
    let n = mu.len() as i64;
    let zero = mu.group().zero();
    for (h, mut s) in autocorrelation(mu)? {
        if h == zero {
            s.add_term(0, &-n)?;
        }
        if !s.is_zero()? {
            return Ok(ExactVerdict::NotExtreme { witness: h, sum: s });
        }
    }
    Ok(ExactVerdict::Extreme)
}
