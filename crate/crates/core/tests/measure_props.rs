mod common;

use common::{any_group, close, general_measure, phase_measure};
use extreme_core::catalog::{load_catalog, Status};
use extreme_core::{ComplexMeasure, Element, GroupSpec, Mass, PhaseMeasure, RationalTurn};
use num_complex::Complex64;
use proptest::prelude::*;

fn dense_measure() -> impl Strategy<Value = ComplexMeasure<f64>> {
    any_group(24).prop_flat_map(|g| {
        let n = g.order() as usize;
        (
            Just(g),
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, any::<bool>()), n),
        )
            .prop_map(|(g, v)| {
                let entries = v
                    .into_iter()
                    .enumerate()
                    .filter(|(_, (_, _, on))| *on)
                    .map(|(i, (re, im, _))| (g.element_at(i), Complex64::new(re, im)));
                ComplexMeasure::new(&g, entries).unwrap()
            })
    })
}

fn pair_on_same_group() -> impl Strategy<Value = (ComplexMeasure<f64>, ComplexMeasure<f64>)> {
    any_group(24).prop_flat_map(|g| {
        let n = g.order() as usize;
        let v = proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n);
        (Just(g), v.clone(), v).prop_map(|(g, a, b)| {
            let mk = |v: Vec<(f64, f64)>| {
                ComplexMeasure::new(
                    &g,
                    v.into_iter()
                        .enumerate()
                        .map(|(i, (re, im))| (g.element_at(i), Complex64::new(re, im))),
                )
                .unwrap()
            };
            (mk(a), mk(b))
        })
    })
}

fn catalog_measures() -> Vec<PhaseMeasure> {
    let cat = load_catalog(None).unwrap();
    cat.entries
        .iter()
        .flat_map(|e| {
            e.measures()
                .filter(|m| m.status == Status::Verified)
                .map(|m| e.phase_measure(m).unwrap())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Catalog measures, some scaled by a common magnitude and some with one magnitude changed.
fn near_extreme() -> impl Strategy<Value = PhaseMeasure> {
    (
        proptest::sample::select(catalog_measures()),
        1u64..4,
        0u64..3,
        any::<prop::sample::Index>(),
    )
        .prop_map(|(mu, scale, bump, at)| {
            let g = mu.group().clone();
            let k = at.index(mu.len());
            let entries: Vec<(Element, Mass)> = mu
                .masses()
                .iter()
                .enumerate()
                .map(|(i, (e, m))| {
                    let mag = num_rational::Ratio::from_integer(scale + if i == k { bump } else { 0 });
                    (
                        e.clone(),
                        Mass {
                            magnitude: mag,
                            turn: m.turn,
                        },
                    )
                })
                .collect();
            PhaseMeasure::new(&g, entries).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn plancherel(mu in dense_measure()) {
        let n = mu.group().order() as f64;
        let s = mu.transform().unwrap();
        let spectral: f64 = s.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        prop_assert!((mu.energy() - spectral).abs() <= 1e-9);
    }

    #[test]
    fn convolution_theorem((a, b) in pair_on_same_group()) {
        let c = a.convolve(&b).unwrap().transform().unwrap();
        let (ta, tb) = (a.transform().unwrap(), b.transform().unwrap());
        for ((x, y), z) in ta.values().iter().zip(tb.values()).zip(c.values()) {
            prop_assert!(close(x * y, *z, 1e-9 * (1.0 + z.norm())));
        }
    }

    #[test]
    fn adjoint_conjugates_transform(mu in dense_measure()) {
        let s = mu.transform().unwrap();
        let t = mu.adjoint().transform().unwrap();
        for (x, y) in s.values().iter().zip(t.values()) {
            prop_assert!(close(x.conj(), *y, 1e-12 * (1.0 + x.norm())));
        }
    }

    #[test]
    fn tcav_formulations_agree(mu in general_measure(24, 6)) {
        let c = mu.to_complex::<f64>();
        prop_assert_eq!(c.is_tcav_numeric(1e-8).unwrap(), c.is_tcav_numeric_convolution(1e-8).unwrap());
    }

    #[test]
    fn tcav_formulations_agree_near_extreme(mu in near_extreme()) {
        let c = mu.to_complex::<f64>();
        prop_assert_eq!(c.is_tcav_numeric(1e-8).unwrap(), c.is_tcav_numeric_convolution(1e-8).unwrap());
    }

    #[test]
    fn extreme_implies_tcav_and_flat_masses(mu in prop_oneof![near_extreme(), general_measure(24, 6)]) {
        let c = mu.to_complex::<f64>();
        if c.is_extreme_numeric(1e-9).unwrap() {
            prop_assert!(c.is_tcav_numeric(1e-9).unwrap());
            let mags: Vec<f64> = c.masses().values().map(|m| m.norm()).collect();
            let spread = mags.iter().cloned().fold(f64::MIN, f64::max) - mags.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(spread <= 1e-9);
        }
    }

    #[test]
    fn translation_and_modulation_preserve_objective(
        (mu, t, gamma) in phase_measure(24, 8).prop_flat_map(|mu| {
            let n = mu.group().order() as usize;
            (Just(mu), 0..n, 0..n)
        })
    ) {
        let g: GroupSpec = mu.group().clone();
        let (t, gamma) = (g.element_at(t), g.element_at(gamma));
        let base = mu.sup_transform::<f64>().unwrap();
        let verdict = mu.is_extreme_numeric::<f64>(1e-9).unwrap();
        for nu in [mu.translate(&t), mu.modulate(&gamma), mu.translate(&t).modulate(&gamma)] {
            prop_assert!((nu.sup_transform::<f64>().unwrap() - base).abs() <= 1e-12);
            prop_assert_eq!(nu.is_extreme_numeric::<f64>(1e-9).unwrap(), verdict);
        }
    }

    #[test]
    fn common_phase_is_invisible(mu in phase_measure(24, 8), k in 0i128..60) {
        let c = RationalTurn::new(k, 60);
        let g = mu.group().clone();
        let set = mu.support();
        let turns: Vec<RationalTurn> = mu.turns().into_iter().map(|t| t + c).collect();
        let nu = PhaseMeasure::unimodular(&g, &set, &turns).unwrap();
        prop_assert!((nu.sup_transform::<f64>().unwrap() - mu.sup_transform::<f64>().unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn plancherel_on_every_small_group() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for g in common::groups_up_to(24) {
        for _ in 0..200 {
            let mut entries: Vec<(Element, Complex64)> = Vec::new();
            for i in 0..g.order() as usize {
                if rng.gen_bool(0.7) {
                    entries.push((
                        g.element_at(i),
                        Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                    ));
                }
            }
            let mu = ComplexMeasure::new(&g, entries).unwrap();
            let n = g.order() as f64;
            let spectral: f64 = mu
                .transform()
                .unwrap()
                .values()
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                / n;
            assert!((mu.energy() - spectral).abs() <= 1e-9, "{g}");
        }
    }
}
