//! Exact rational angles measured in full turns and reduced modulo 1.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex;
use num_integer::Integer;
use num_traits::{Float, FloatConst};

use crate::Error;

/// A rational number `num/den` in `[0, 1)`, always stored in lowest terms.
///
/// A turn `t` stands for the unit complex number `e^{2πi t}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct RationalTurn {
    num: u64,
    den: u64,
}

impl RationalTurn {
    pub const ZERO: RationalTurn = RationalTurn { num: 0, den: 1 };
    pub const HALF: RationalTurn = RationalTurn { num: 1, den: 2 };

    /// Builds `num/den mod 1`. Panics when `den == 0`.
    pub fn new(num: i128, den: u64) -> Self {
        assert!(den != 0, "turn denominator must be nonzero");
        let d = den as i128;
        let r = num.rem_euclid(d) as u64;
        let g = r.gcd(&den);
        RationalTurn {
            num: r / g,
            den: den / g,
        }
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        let l = self.den.lcm(&other.den);
        let a = self.num as u128 * (l / self.den) as u128 + other.num as u128 * (l / other.den) as u128;
        Some(RationalTurn::new(i128::try_from(a).ok()?, l))
    }

    /// Multiplies by an integer, still modulo 1.
    pub fn scale(self, k: i64) -> Self {
        let n = (self.num as i128 * k as i128).rem_euclid(self.den as i128);
        RationalTurn::new(n, self.den)
    }

    /// Numerator of this turn written over denominator `m`, or `None` when `den` does not divide `m`.
    pub fn numerator_over(self, m: u64) -> Option<u64> {
        if !m.is_multiple_of(self.den) {
            return None;
        }
        Some(self.num * (m / self.den))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The angle `2π·t` in radians.
    pub fn radians<T: Float + FloatConst>(self) -> T {
        let n = T::from(self.num).unwrap();
        let d = T::from(self.den).unwrap();
        T::TAU() * n / d
    }

    /// `e^{2πi t}`.
    pub fn phase<T: Float + FloatConst>(self) -> Complex<T> {
        Complex::from_polar(T::one(), self.radians())
    }
}

impl Default for RationalTurn {
    fn default() -> Self {
        RationalTurn::ZERO
    }
}

impl Add for RationalTurn {
    type Output = RationalTurn;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("turn denominator overflow")
    }
}

impl Neg for RationalTurn {
    type Output = RationalTurn;
    fn neg(self) -> Self {
        if self.num == 0 {
            self
        } else {
            RationalTurn {
                num: self.den - self.num,
                den: self.den,
            }
        }
    }
}

impl Sub for RationalTurn {
    type Output = RationalTurn;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Ord for RationalTurn {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for RationalTurn {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalTurn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for RationalTurn {
    type Err = Error;

    /// Accepts `p/q` or a bare integer, with an optional leading minus sign.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("bad turn `{s}`"));
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: i128 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(RationalTurn::new(n, d))
    }
}

/// Largest denominator cap accepted by [`snap_turn`].
pub const MAX_SNAP_DENOMINATOR: u64 = 1 << 31;

const SNAP_SCALE_BITS: u32 = 60;

/// Best rational approximation of `x mod 1` with denominator at most `max_den`.
///
/// Among equally close candidates the smaller denominator wins.
pub fn snap_turn(x: f64, max_den: u64) -> RationalTurn {
    assert!(
        (1..=MAX_SNAP_DENOMINATOR).contains(&max_den),
        "denominator cap out of range"
    );
    let frac = x - x.floor();
    // x as an exact fraction p / 2^60
    let scale: u128 = 1 << SNAP_SCALE_BITS;
    let p = (frac * scale as f64).round() as u128;
    if p >= scale {
        return RationalTurn::ZERO;
    }
    let (n, d) = limit_denominator(p, scale, max_den as u128);
    RationalTurn::new(n as i128, d as u64)
}

/// Continued-fraction best approximation of `p/q` with denominator at most `cap`.
fn limit_denominator(p: u128, q: u128, cap: u128) -> (u128, u128) {
    if q <= cap {
        let g = p.gcd(&q);
        return (p / g, q / g);
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let (mut n, mut d) = (p, q);
    loop {
        let a = n / d;
        let q2 = q0 + a * q1;
        if q2 > cap {
            break;
        }
        let p2 = p0 + a * p1;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let r = n - a * d;
        n = d;
        d = r;
        if d == 0 {
            break;
        }
    }
    // semiconvergent and last convergent
    let k = (cap - q0) / q1;
    let (sp, sq) = (p0 + k * p1, q0 + k * q1);
    let dist = |a: u128, b: u128| -> u128 {
        let lhs = a * q;
        let rhs = p * b;
        lhs.abs_diff(rhs)
    };
    // compare dist(s)/sq with dist(c)/q1
    let ds = dist(sp, sq) * q1;
    let dc = dist(p1, q1) * sq;
    match dc.cmp(&ds) {
        Ordering::Less => (p1, q1),
        Ordering::Greater => (sp, sq),
        Ordering::Equal => {
            if q1 <= sq {
                (p1, q1)
            } else {
                (sp, sq)
            }
        }
    }
}
