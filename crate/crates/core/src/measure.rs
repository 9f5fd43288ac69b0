//! Measures on finite abelian groups, their Fourier transforms and convolutions.
//!
//! The transform is `μ̂(γ) = Σ_g μ(g) e^{-2πi⟨γ,g⟩}` and the adjoint is
//! `μ̃({g}) = conj(μ({-g}))`, so that `(μ * μ̃)^ = |μ̂|²`.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{Float, FloatConst, One, Zero};

use crate::group::{Character, Element, GroupSpec};
use crate::turn::RationalTurn;
use crate::Error;

/// A point mass `magnitude · e^{2πi turn}` with an exact positive rational magnitude.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Mass {
    pub magnitude: Ratio<u64>,
    pub turn: RationalTurn,
}

impl Mass {
    pub fn unit(turn: RationalTurn) -> Self {
        Mass {
            magnitude: Ratio::one(),
            turn,
        }
    }

    pub fn is_unimodular(&self) -> bool {
        self.magnitude.is_one()
    }

    pub fn to_complex<T: Float + FloatConst>(&self) -> Complex<T> {
        let m = T::from(*self.magnitude.numer()).unwrap() / T::from(*self.magnitude.denom()).unwrap();
        self.turn.phase::<T>() * m
    }

    pub fn conj(&self) -> Self {
        Mass {
            magnitude: self.magnitude,
            turn: -self.turn,
        }
    }
}

/// A finitely supported measure whose masses have exact magnitude and phase.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PhaseMeasure {
    group: GroupSpec,
    masses: BTreeMap<Element, Mass>,
}

impl PhaseMeasure {
    pub fn new(group: &GroupSpec, entries: impl IntoIterator<Item = (Element, Mass)>) -> Result<Self, Error> {
        let mut masses = BTreeMap::new();
        for (g, m) in entries {
            group.check(&g)?;
            if m.magnitude.is_zero() {
                return Err(Error::InvalidMeasure(format!("zero mass at {g}")));
            }
            if masses.insert(g.clone(), m).is_some() {
                return Err(Error::InvalidMeasure(format!("{g} listed twice")));
            }
        }
        if masses.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        Ok(PhaseMeasure {
            group: group.clone(),
            masses,
        })
    }

    /// A measure with unit masses `e^{2πi t_j}` on the listed points.
    pub fn unimodular(group: &GroupSpec, set: &[Element], turns: &[RationalTurn]) -> Result<Self, Error> {
        if set.len() != turns.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} masses",
                set.len(),
                turns.len()
            )));
        }
        PhaseMeasure::new(group, set.iter().cloned().zip(turns.iter().map(|&t| Mass::unit(t))))
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn support(&self) -> Vec<Element> {
        self.masses.keys().cloned().collect()
    }

    pub fn masses(&self) -> &BTreeMap<Element, Mass> {
        &self.masses
    }

    pub fn get(&self, g: &Element) -> Option<&Mass> {
        self.masses.get(g)
    }

    pub fn is_unimodular(&self) -> bool {
        self.masses.values().all(Mass::is_unimodular)
    }

    /// Phases in support order.
    pub fn turns(&self) -> Vec<RationalTurn> {
        self.masses.values().map(|m| m.turn).collect()
    }

    pub fn adjoint(&self) -> PhaseMeasure {
        PhaseMeasure {
            group: self.group.clone(),
            masses: self.masses.iter().map(|(g, m)| (self.group.neg(g), m.conj())).collect(),
        }
    }

    /// `δ_t * μ`.
    pub fn translate(&self, t: &Element) -> PhaseMeasure {
        PhaseMeasure {
            group: self.group.clone(),
            masses: self.masses.iter().map(|(g, m)| (self.group.add(g, t), *m)).collect(),
        }
    }

    /// Multiplies every mass by the character value `e^{2πi⟨γ,g⟩}`.
    pub fn modulate(&self, gamma: &Character) -> PhaseMeasure {
        PhaseMeasure {
            group: self.group.clone(),
            masses: self
                .masses
                .iter()
                .map(|(g, m)| {
                    let t = m.turn + self.group.pairing_turn(gamma, g);
                    (
                        g.clone(),
                        Mass {
                            magnitude: m.magnitude,
                            turn: t,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn to_complex<T: Float + FloatConst>(&self) -> ComplexMeasure<T> {
        ComplexMeasure {
            group: self.group.clone(),
            masses: self.masses.iter().map(|(g, m)| (g.clone(), m.to_complex())).collect(),
        }
    }

    /// Fourier transform with every phase reduced exactly before conversion to floats.
    pub fn transform<T: Float + FloatConst>(&self) -> Result<Spectrum<T>, Error> {
        let chars = self.group.enumerate_elements()?;
        let values = chars
            .iter()
            .map(|gamma| {
                self.masses.iter().fold(Complex::zero(), |acc, (g, m)| {
                    let t = m.turn - self.group.pairing_turn(gamma, g);
                    let mag = T::from(*m.magnitude.numer()).unwrap() / T::from(*m.magnitude.denom()).unwrap();
                    acc + t.phase::<T>() * mag
                })
            })
            .collect();
        Ok(Spectrum {
            group: self.group.clone(),
            values,
        })
    }

    /// `Σ |μ(g)|`.
    pub fn total_variation<T: Float>(&self) -> T {
        self.masses
            .values()
            .map(|m| T::from(*m.magnitude.numer()).unwrap() / T::from(*m.magnitude.denom()).unwrap())
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn convolve<T: Float + FloatConst>(&self, other: &PhaseMeasure) -> Result<ComplexMeasure<T>, Error> {
        self.to_complex::<T>().convolve(&other.to_complex())
    }
}

/// A measure with floating point complex masses.
#[derive(Clone, PartialEq, Debug)]
pub struct ComplexMeasure<T> {
    group: GroupSpec,
    masses: BTreeMap<Element, Complex<T>>,
}

impl<T: Float + FloatConst> ComplexMeasure<T> {
    pub fn new(group: &GroupSpec, entries: impl IntoIterator<Item = (Element, Complex<T>)>) -> Result<Self, Error> {
        let mut masses = BTreeMap::new();
        for (g, m) in entries {
            group.check(&g)?;
            *masses.entry(g).or_insert_with(Complex::zero) = m;
        }
        Ok(ComplexMeasure {
            group: group.clone(),
            masses,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn masses(&self) -> &BTreeMap<Element, Complex<T>> {
        &self.masses
    }

    pub fn get(&self, g: &Element) -> Complex<T> {
        self.masses.get(g).copied().unwrap_or_else(Complex::zero)
    }

    /// Number of points with nonzero mass.
    pub fn support_size(&self) -> usize {
        self.masses.values().filter(|m| !m.is_zero()).count()
    }

    pub fn adjoint(&self) -> Self {
        ComplexMeasure {
            group: self.group.clone(),
            masses: self.masses.iter().map(|(g, m)| (self.group.neg(g), m.conj())).collect(),
        }
    }

    pub fn convolve(&self, other: &Self) -> Result<Self, Error> {
        if self.group != other.group {
            return Err(Error::InvalidMeasure(
                "convolution of measures on different groups".into(),
            ));
        }
        let mut out: BTreeMap<Element, Complex<T>> = BTreeMap::new();
        for (a, x) in &self.masses {
            for (b, y) in &other.masses {
                let s = self.group.add(a, b);
                let e = out.entry(s).or_insert_with(Complex::zero);
                *e = *e + *x * *y;
            }
        }
        Ok(ComplexMeasure {
            group: self.group.clone(),
            masses: out,
        })
    }

    pub fn transform(&self) -> Result<Spectrum<T>, Error> {
        let chars = self.group.enumerate_elements()?;
        let values = chars
            .iter()
            .map(|gamma| {
                self.masses.iter().fold(Complex::zero(), |acc, (g, m)| {
                    let t = -self.group.pairing_turn(gamma, g);
                    acc + *m * t.phase::<T>()
                })
            })
            .collect();
        Ok(Spectrum {
            group: self.group.clone(),
            values,
        })
    }

    pub fn total_variation(&self) -> T {
        self.masses.values().map(|m| m.norm()).fold(T::zero(), |a, b| a + b)
    }

    /// `Σ |μ(g)|²`.
    pub fn energy(&self) -> T {
        self.masses.values().map(|m| m.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    pub fn sup_transform(&self) -> Result<T, Error> {
        Ok(self.transform()?.sup_norm())
    }

    fn require_nonzero(&self) -> Result<(), Error> {
        if self.support_size() == 0 {
            return Err(Error::InvalidMeasure("zero measure".into()));
        }
        Ok(())
    }

    /// `|‖μ̂‖∞ − ‖μ‖/√N| ≤ tol` with `N` the support size.
    pub fn is_extreme_numeric(&self, tol: T) -> Result<bool, Error> {
        self.require_nonzero()?;
        let n = T::from(self.support_size()).unwrap();
        let sup = self.sup_transform()?;
        Ok((sup - self.total_variation() / n.sqrt()).abs() <= tol)
    }

    /// `max |μ̂| − min |μ̂|`.
    pub fn tcav_defect_spectral(&self) -> Result<T, Error> {
        self.require_nonzero()?;
        let s = self.transform()?;
        Ok(s.sup_norm() - s.min_modulus())
    }

    /// Total variation of `μ * μ̃ − (Σ|μ(g)|²)·δ0`.
    pub fn tcav_defect_convolution(&self) -> Result<T, Error> {
        self.require_nonzero()?;
        let c = self.convolve(&self.adjoint())?;
        let zero = self.group.zero();
        let e = self.energy();
        Ok(c.masses
            .iter()
            .map(|(g, m)| {
                if *g == zero {
                    (*m - Complex::new(e, T::zero())).norm()
                } else {
                    m.norm()
                }
            })
            .fold(T::zero(), |a, b| a + b))
    }

    /// `|μ̂|` constant within `tol`.
    pub fn is_tcav_numeric(&self, tol: T) -> Result<bool, Error> {
        Ok(self.tcav_defect_spectral()? <= tol)
    }

    /// `μ * μ̃ = c·δ0` within `tol`, the convolution form of [`Self::is_tcav_numeric`].
    pub fn is_tcav_numeric_convolution(&self, tol: T) -> Result<bool, Error> {
        Ok(self.tcav_defect_convolution()? <= tol)
    }
}

impl PhaseMeasure {
    pub fn is_extreme_numeric<T: Float + FloatConst>(&self, tol: T) -> Result<bool, Error> {
        self.to_complex::<T>().is_extreme_numeric(tol)
    }

    pub fn is_tcav_numeric<T: Float + FloatConst>(&self, tol: T) -> Result<bool, Error> {
        self.to_complex::<T>().is_tcav_numeric(tol)
    }

    pub fn sup_transform<T: Float + FloatConst>(&self) -> Result<T, Error> {
        Ok(self.transform::<T>()?.sup_norm())
    }
}

/// Default tolerance for numeric screening.
pub const SCREEN_TOL: f64 = 1e-9;

/// Values of a transform indexed by character in element order.
#[derive(Clone, PartialEq, Debug)]
pub struct Spectrum<T> {
    group: GroupSpec,
    values: Vec<Complex<T>>,
}

impl<T: Float> Spectrum<T> {
    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn get(&self, gamma: &Character) -> Complex<T> {
        self.values[self.group.index_of(gamma)]
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn min_modulus(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::infinity(), T::min)
    }
}

/// The transform of `μ` read as a measure on the dual group.
///
/// Masses are `μ̂(γ) · scale` with `scale = 1/√(Σ|μ(g)|²)`, which makes them unimodular
/// whenever `μ` is extreme with full support.
#[derive(Clone, Debug)]
pub struct DualMeasure<T> {
    pub measure: ComplexMeasure<T>,
    pub scale: T,
}

pub fn dual_measure<T: Float + FloatConst>(mu: &ComplexMeasure<T>) -> Result<DualMeasure<T>, Error> {
    if (mu.support_size() as u64) != mu.group().order() {
        return Err(Error::InvalidMeasure("dual measure needs full support".into()));
    }
    let spec = mu.transform()?;
    let e = mu.energy();
    if e.is_zero() {
        return Err(Error::InvalidMeasure("zero measure has no dual".into()));
    }
    let scale = T::one() / e.sqrt();
    let g = mu.group().clone();
    let entries: Vec<(Element, Complex<T>)> = spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (g.element_at(i), *v * scale))
        .collect();
    Ok(DualMeasure {
        measure: ComplexMeasure::new(&g, entries)?,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> GroupSpec {
        GroupSpec::cyclic(n).unwrap()
    }

    fn pts(v: &[u64]) -> Vec<Element> {
        v.iter().map(|&x| Element::from(x)).collect()
    }

    fn turns(v: &[(i128, u64)]) -> Vec<RationalTurn> {
        v.iter().map(|&(n, d)| RationalTurn::new(n, d)).collect()
    }

    #[test]
    fn z7_difference_set_is_flat() {
        let g = z(7);
        let mu = PhaseMeasure::unimodular(&g, &pts(&[0, 1, 2, 4]), &turns(&[(0, 1), (1, 2), (1, 2), (1, 2)])).unwrap();
        let s = mu.transform::<f64>().unwrap();
        for v in s.values() {
            assert!((v.norm() - 2.0).abs() < 1e-12);
        }
        assert!(mu.is_extreme_numeric(1e-9).unwrap());
    }

    #[test]
    fn tcav_but_not_extreme() {
        let g = z(3);
        let mu = PhaseMeasure::new(
            &g,
            vec![
                (Element::from(0), Mass::unit(RationalTurn::ZERO)),
                (
                    Element::from(1),
                    Mass {
                        magnitude: Ratio::from_integer(2),
                        turn: RationalTurn::new(1, 6),
                    },
                ),
                (
                    Element::from(2),
                    Mass {
                        magnitude: Ratio::from_integer(2),
                        turn: RationalTurn::new(5, 6),
                    },
                ),
            ],
        )
        .unwrap();
        let s = mu.transform::<f64>().unwrap();
        for v in s.values() {
            assert!((v.norm() - 3.0).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
        assert!(mu.is_tcav_numeric(1e-9).unwrap());
        assert!(!mu.is_extreme_numeric(1e-9).unwrap());
    }

    #[test]
    fn two_point_tcav() {
        let g = z(2);
        let mu = PhaseMeasure::new(
            &g,
            vec![
                (Element::from(0), Mass::unit(RationalTurn::ZERO)),
                (
                    Element::from(1),
                    Mass {
                        magnitude: Ratio::new(37, 100),
                        turn: RationalTurn::new(1, 4),
                    },
                ),
            ],
        )
        .unwrap();
        assert!(mu.is_tcav_numeric(1e-9).unwrap());
        assert!(mu.to_complex::<f64>().is_tcav_numeric_convolution(1e-9).unwrap());
    }

    #[test]
    fn adjoint_negates_support_and_conjugates() {
        let g = z(5);
        let mu = PhaseMeasure::unimodular(&g, &pts(&[0, 1, 3]), &turns(&[(0, 1), (1, 3), (1, 4)])).unwrap();
        let a = mu.adjoint();
        assert_eq!(a.get(&Element::from(4)).unwrap().turn, RationalTurn::new(2, 3));
        assert_eq!(a.get(&Element::from(2)).unwrap().turn, RationalTurn::new(3, 4));
    }

    #[test]
    fn dual_of_full_group_measure() {
        let g = z(3);
        let mu = PhaseMeasure::unimodular(&g, &pts(&[0, 1, 2]), &turns(&[(0, 1), (2, 3), (0, 1)])).unwrap();
        let d = dual_measure(&mu.to_complex::<f64>()).unwrap();
        for m in d.measure.masses().values() {
            assert!((m.norm() - 1.0).abs() < 1e-12);
        }
        assert!(d.measure.is_extreme_numeric(1e-9).unwrap());
    }
}
