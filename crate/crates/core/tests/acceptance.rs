use std::time::{Duration, Instant};

use extreme_core::catalog::{load_catalog, verify_all, Status};
use extreme_core::equivalence::{are_equivalent, canonical_form, enumerate_class_representatives};
use extreme_core::literal::format_set;
use extreme_core::measure::dual_measure;
use extreme_core::search::{
    grid_point_score, per_coefficient_bound, psc_upper_bound, run_search, Objective, Retention, SearchConfig, Verdict,
};
use extreme_core::structure::{build_coset_union_measure, passes_difference_test, two_element_psc};
use extreme_core::{exact_extremality_check, ComplexMeasure, Element, GroupSpec, PhaseMeasure, RationalTurn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

/// Lower bound of PSC² for six points of Z7, and how far we may be from it.
const Z7_SIX_PSC_SQ: f64 = 6.74670307754671;
const Z7_SIX_TOL: f64 = 0.25;
const Z7_SIX_FLOOR: f64 = 6.5;
const TWO_POINT_TOL: f64 = 2e-3;
const NUMERIC_TOL: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    ok: bool,
    detail: String,
    budget: Duration,
}

fn z(n: u64) -> GroupSpec {
    GroupSpec::cyclic(n).unwrap()
}

fn pts(v: &[u64]) -> Vec<Element> {
    v.iter().map(|&x| Element::from(x)).collect()
}

fn verified_measures() -> Vec<(GroupSpec, Vec<Element>, PhaseMeasure)> {
    let cat = load_catalog(None).unwrap();
    let mut out = Vec::new();
    for e in &cat.entries {
        for m in e.measures().filter(|m| m.status == Status::Verified) {
            out.push((e.group.clone(), e.set.clone(), e.phase_measure(m).unwrap()));
        }
    }
    out
}

fn catalog_exactness() -> Outcome {
    let cat = load_catalog(None).unwrap();
    let summary = verify_all(&cat);
    let named: &[(&str, &[u64])] = &[
        ("7", &[0, 1, 2, 4]),
        ("10", &[0, 1, 2, 3, 4, 7]),
        ("12", &[0, 2, 3, 4, 7]),
        ("12", &[0, 1, 2, 5, 6, 8, 9]),
        ("12", &[0, 1, 3, 4, 6, 7, 9, 10]),
        ("16", &[0, 1, 2, 4, 5, 7, 11]),
        ("16", &[0, 1, 4, 5, 8, 9, 12, 13]),
        ("19", &[0, 1, 2, 5, 12, 13, 15]),
        ("13", &[0, 1, 2, 3, 4, 5, 7, 9, 10]),
    ];
    let mut missing = Vec::new();
    for (g, s) in named {
        let g: GroupSpec = g.parse().unwrap();
        let set = pts(s);
        let found = cat.entries.iter().any(|e| {
            e.group == g
                && e.set == set
                && e.measures().any(|m| {
                    m.status == Status::Verified
                        && exact_extremality_check(&e.phase_measure(m).unwrap())
                            .unwrap()
                            .is_extreme()
                })
        });
        if !found {
            missing.push(format!("{g} {{{}}}", format_set(&set)));
        }
    }
    for (g, n) in [
        ("17", 16),
        ("18", 17),
        ("3,3", 7),
        ("2,2,2", 5),
        ("2,2,2", 6),
        ("2,4", 0),
    ] {
        let g: GroupSpec = g.parse().unwrap();
        let found = cat
            .entries
            .iter()
            .any(|e| e.group == g && (n == 0 || e.set.len() == n) && e.status() == Status::Verified);
        if !found {
            missing.push(format!("{g} size {n}"));
        }
    }
    let entries = cat.entries.iter().filter(|e| e.status() == Status::Verified).count();
    Outcome {
        ok: summary.is_ok() && missing.is_empty() && entries >= 30,
        detail: format!(
            "{entries} verified entries, {} verified measures, {} recorded failures, {} unexpected, missing {missing:?}",
            summary.verified,
            summary.failed.len(),
            summary.unexpected.len()
        ),
        budget: Duration::from_secs(5),
    }
}

fn two_element() -> Outcome {
    let config = SearchConfig {
        mesh_start: Some(4096),
        mesh_max: 4096,
        objective: Objective::TransformMax,
        ..SearchConfig::default()
    };
    let u = psc_upper_bound::<f64>(&z(3), &pts(&[0, 1]), &config).unwrap();
    let err = (u - 3f64.sqrt()).abs();
    let mut prev = 0.0;
    let mut mono = true;
    let mut gap = true;
    for n in 2..=64u64 {
        let p = two_element_psc::<f64>(n).unwrap();
        mono &= p > prev;
        gap &= 2.0 - p < std::f64::consts::PI.powi(2) / (4.0 * (n * n) as f64) * 1.01;
        prev = p;
    }
    Outcome {
        ok: err <= TWO_POINT_TOL && mono && gap,
        detail: format!(
            "PSC({{0,1}}, Z3) at mesh 4096 = {u:.6}, |err| = {err:.2e}; increasing {mono}; gap bound {gap}"
        ),
        budget: Duration::from_secs(1),
    }
}

fn z7_six() -> Outcome {
    let g = z(7);
    let per = SearchConfig {
        mesh_start: Some(8),
        mesh_max: 128,
        retention: Retention::PerCoefficient,
        ..SearchConfig::default()
    };
    let bound = SearchConfig {
        mesh_start: Some(8),
        mesh_max: 512,
        objective: Objective::TransformMax,
        ..SearchConfig::default()
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for class in enumerate_class_representatives(&g, 6).unwrap() {
        let set = class.representative;
        let r = run_search::<f64>(&g, &set, &per).unwrap();
        let last = r.passes.last().unwrap();
        let peak = last.min_peak_coefficient.unwrap();
        let certified = matches!(r.verdict, Verdict::CertifiedNotExtreme { .. })
            && r.discarded == 0
            && peak > per_coefficient_bound(6, r.mesh_reached);
        let t = run_search::<f64>(&g, &set, &bound).unwrap();
        let lb_sq = match t.verdict {
            Verdict::CertifiedNotExtreme { lower_bound, .. } if t.discarded == 0 => lower_bound * lower_bound,
            _ => f64::NAN,
        };
        let in_band = lb_sq >= Z7_SIX_FLOOR && (lb_sq - Z7_SIX_PSC_SQ).abs() <= Z7_SIX_TOL;
        ok &= certified && in_band;
        notes.push(format!(
            "{{{}}}: per-coefficient certificate at mesh {} (min peak {peak:.4} > {:.4}), PSC² ≥ {lb_sq:.4} at mesh {} (best grid value² {:.4})",
            format_set(&set),
            r.mesh_reached,
            per_coefficient_bound(6, r.mesh_reached),
            t.mesh_reached,
            t.best_value * t.best_value
        ));
    }
    Outcome {
        ok,
        detail: notes.join("; "),
        budget: Duration::from_secs(3600),
    }
}

fn rediscovery() -> Outcome {
    let cases: &[(u64, &[u64], u64, u64)] = &[
        (7, &[0, 1, 2, 4], 2, 1),
        (5, &[0, 1, 2, 3], 3, 1),
        (10, &[0, 1, 2, 3, 4, 7], 12, 120),
        (12, &[0, 2, 3, 4, 7], 8, 300),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for &(n, s, mesh, secs) in cases {
        let t = Instant::now();
        let r = run_search::<f64>(&z(n), &pts(s), &SearchConfig::default()).unwrap();
        let found = match &r.verdict {
            Verdict::ExtremeFound(mu) => exact_extremality_check(mu).unwrap().is_extreme(),
            _ => false,
        };
        ok &= found && r.mesh_reached == mesh && t.elapsed() <= Duration::from_secs(secs);
        notes.push(format!(
            "Z{n}{{{}}} {} at mesh {} in {:.2?}",
            format_set(&pts(s)),
            r.verdict.name(),
            r.mesh_reached,
            t.elapsed()
        ));
    }
    Outcome {
        ok,
        detail: notes.join("; "),
        budget: Duration::from_secs(420),
    }
}

fn equivalence_counts() -> Outcome {
    let reps: Vec<Vec<Element>> = enumerate_class_representatives(&z(7), 3)
        .unwrap()
        .into_iter()
        .map(|c| c.representative)
        .collect();
    let classes_ok = reps == vec![pts(&[0, 1, 2]), pts(&[0, 1, 3])];
    let a = are_equivalent(&z(12), &pts(&[0, 2, 4, 6, 8]), &pts(&[0, 2, 3, 4, 7])).unwrap();
    let b = are_equivalent(&z(16), &pts(&[0, 2, 4, 6, 8, 10, 12]), &pts(&[0, 1, 2, 4, 5, 7, 11])).unwrap();
    Outcome {
        ok: classes_ok && !a.equivalent && a.exact && !b.equivalent && b.exact,
        detail: format!(
            "Z7 3-classes {}; Z12 pair equivalent {}; Z16 pair equivalent {}",
            reps.iter()
                .map(|r| format!("{{{}}}", format_set(r)))
                .collect::<Vec<_>>()
                .join(" "),
            a.equivalent,
            b.equivalent
        ),
        budget: Duration::from_secs(1),
    }
}

fn three_element_sweep() -> Outcome {
    let mut ok = true;
    let mut extreme = Vec::new();
    let mut wrong = Vec::new();
    let mut inconclusive = 0;
    let mut total = 0;
    for k in 3..=16u64 {
        let g = z(k);
        let mut special = Vec::new();
        if k % 3 == 0 {
            special.push(canonical_form(&g, &pts(&[0, k / 3, 2 * k / 3])).unwrap().representative);
        }
        if k % 4 == 0 {
            special.push(canonical_form(&g, &pts(&[0, k / 4, k / 2])).unwrap().representative);
        }
        for class in enumerate_class_representatives(&g, 3).unwrap() {
            total += 1;
            let set = class.representative;
            let expect = special.contains(&set);
            let r = run_search::<f64>(&g, &set, &SearchConfig::default()).unwrap();
            let found = match &r.verdict {
                Verdict::ExtremeFound(mu) => exact_extremality_check(mu).unwrap().is_extreme(),
                Verdict::Inconclusive(_) => {
                    inconclusive += 1;
                    false
                }
                _ => false,
            };
            if found {
                extreme.push(format!("Z{k}{{{}}}", format_set(&set)));
            }
            if found != expect {
                ok = false;
                wrong.push(format!("Z{k}{{{}}}: {}", format_set(&set), r.verdict.name()));
            }
        }
    }
    Outcome {
        ok,
        detail: format!("{total} classes, extreme {extreme:?}, {inconclusive} inconclusive, mismatches {wrong:?}"),
        budget: Duration::from_secs(600),
    }
}

fn difference_filter() -> Outcome {
    let a = passes_difference_test(&z(8), &pts(&[0, 1, 2])).unwrap();
    let b = passes_difference_test(&z(7), &pts(&[0, 1, 2, 4])).unwrap();
    let mut catalog_ok = true;
    let mut seen = std::collections::BTreeSet::new();
    for (g, set, _) in verified_measures() {
        if seen.insert((g.to_string(), set.clone())) {
            catalog_ok &= passes_difference_test(&g, &set).unwrap();
        }
    }
    let mut pairs_ok = true;
    for m in 2..=12u64 {
        let g = z(m);
        for k in 1..m {
            let pass = passes_difference_test(&g, &pts(&[0, k])).unwrap();
            pairs_ok &= pass == (g.element_order(&Element::from(k)) <= 2);
        }
    }
    Outcome {
        ok: !a && b && catalog_ok && pairs_ok,
        detail: format!(
            "Z8{{0,1,2}} passes {a}; Z7{{0,1,2,4}} passes {b}; {} catalog sets pass {catalog_ok}; pairs match {pairs_ok}",
            seen.len()
        ),
        budget: Duration::from_secs(1),
    }
}

fn coset_unions() -> Outcome {
    let mut built = 0;
    let mut bad = Vec::new();
    for order in 1..=36u64 {
        let groups = if order == 1 {
            vec![GroupSpec::trivial()]
        } else {
            GroupSpec::all_of_order(order)
        };
        for g in groups {
            for h in g.enumerate_subgroups(None).unwrap() {
                let n = h.order();
                if n * n > g.order() {
                    continue;
                }
                let q = g.quotient(&h).unwrap();
                let mut reps: Vec<Element> = Vec::new();
                let mut used = std::collections::BTreeSet::new();
                for x in g.enumerate_elements().unwrap() {
                    if reps.len() as u64 == n {
                        break;
                    }
                    if used.insert(q.project(&x)) {
                        reps.push(x);
                    }
                }
                let mu = build_coset_union_measure(&g, &h, &reps).unwrap();
                built += 1;
                if mu.len() as u64 != n * n || !exact_extremality_check(&mu).unwrap().is_extreme() {
                    bad.push(format!("{g} / order {n}"));
                }
            }
        }
    }
    Outcome {
        ok: bad.is_empty(),
        detail: format!("{built} constructions, failures {bad:?}"),
        budget: Duration::from_secs(30),
    }
}

fn random_complex_measure(rng: &mut impl Rng, g: &GroupSpec) -> ComplexMeasure<f64> {
    let mut entries = Vec::new();
    for i in 0..g.order() as usize {
        if rng.gen_bool(0.6) {
            entries.push((
                g.element_at(i),
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            ));
        }
    }
    if entries.is_empty() {
        entries.push((g.zero(), Complex64::new(1.0, 0.0)));
    }
    ComplexMeasure::new(g, entries).unwrap()
}

fn property_suites() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let groups: Vec<GroupSpec> = (2..=24).flat_map(GroupSpec::all_of_order).collect();
    let mut fails: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok && !fails.contains(&name) {
            fails.push(name);
        }
    };
    for g in &groups {
        for _ in 0..20 {
            let a = random_complex_measure(&mut rng, g);
            let b = random_complex_measure(&mut rng, g);
            let (sa, sb) = (a.transform().unwrap(), b.transform().unwrap());
            let n = g.order() as f64;
            let spectral: f64 = sa.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
            check("plancherel", (a.energy() - spectral).abs() <= 1e-9);
            let sc = a.convolve(&b).unwrap().transform().unwrap();
            check(
                "convolution theorem",
                sa.values()
                    .iter()
                    .zip(sb.values())
                    .zip(sc.values())
                    .all(|((x, y), w)| (x * y - w).norm() <= 1e-9 * (1.0 + w.norm())),
            );
            let adj = a.adjoint().transform().unwrap();
            check(
                "adjoint conjugation",
                sa.values()
                    .iter()
                    .zip(adj.values())
                    .all(|(x, y)| (x.conj() - y).norm() <= 1e-12 * (1.0 + x.norm())),
            );
            check(
                "TCAV equivalence",
                a.is_tcav_numeric(1e-8).unwrap() == a.is_tcav_numeric_convolution(1e-8).unwrap(),
            );
            let k = rng.gen_range(1..=6usize.min(g.order() as usize));
            let idx = rand::seq::index::sample(&mut rng, g.order() as usize, k);
            let set: Vec<Element> = idx.iter().map(|i| g.element_at(i)).collect();
            let turns: Vec<RationalTurn> = (0..k).map(|_| RationalTurn::new(rng.gen_range(0..12), 12)).collect();
            let shift = RationalTurn::new(rng.gen_range(0..60), 60);
            let mu = PhaseMeasure::unimodular(g, &set, &turns).unwrap();
            let rotated: Vec<RationalTurn> = turns.iter().map(|&t| t + shift).collect();
            let nu = PhaseMeasure::unimodular(g, &set, &rotated).unwrap();
            check(
                "anchor normalization",
                (mu.sup_transform::<f64>().unwrap() - nu.sup_transform::<f64>().unwrap()).abs() <= 1e-12,
            );
            if k >= 2 {
                let digits: Vec<u64> = turns.iter().map(|t| t.num() * (12 / t.den())).collect();
                let moved: Vec<u64> = digits.iter().map(|d| (d + 5) % 12).collect();
                let c = SearchConfig::default();
                let (x, _) = grid_point_score::<f64>(g, &set, 12, &digits, &c).unwrap();
                let (y, _) = grid_point_score::<f64>(g, &set, 12, &moved, &c).unwrap();
                check("anchor normalization", (x - y).abs() <= 1e-12);
            }
        }
    }
    let mut window_checked = 0;
    let mut dual_checked = 0;
    for (g, set, mu) in verified_measures() {
        let turns = mu.turns();
        let d = turns.iter().fold(2u64, |l, t| num_integer::lcm(l, t.den()));
        for mesh in [d, 2 * d] {
            let digits: Vec<u64> = turns.iter().map(|t| t.num() * (mesh / t.den())).collect();
            for retention in [Retention::Window, Retention::PerCoefficient] {
                let c = SearchConfig {
                    retention,
                    ..SearchConfig::default()
                };
                let (score, keep) = grid_point_score::<f64>(&g, &set, mesh, &digits, &c).unwrap();
                check("window soundness", score.abs() <= NUMERIC_TOL && keep);
                window_checked += 1;
            }
        }
        if set.len() as u64 == g.order() {
            let dual = dual_measure(&mu.to_complex::<f64>()).unwrap();
            let unimodular = dual
                .measure
                .masses()
                .values()
                .all(|v| (v.norm() - 1.0).abs() <= NUMERIC_TOL);
            check(
                "dual extremality",
                unimodular && dual.measure.is_extreme_numeric(NUMERIC_TOL).unwrap(),
            );
            dual_checked += 1;
        }
    }
    check("dual extremality", dual_checked > 0);
    Outcome {
        ok: fails.is_empty(),
        detail: format!(
            "{} groups × 20 samples, {window_checked} window checks, {dual_checked} full-group duals, failing {fails:?}",
            groups.len()
        ),
        budget: Duration::from_secs(120),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("catalog exactness", catalog_exactness),
        ("two-element closed form", two_element),
        ("Z7 six-element certificate", z7_six),
        ("rediscovery", rediscovery),
        ("equivalence counts", equivalence_counts),
        ("three-element sweep", three_element_sweep),
        ("difference-test filter", difference_filter),
        ("coset-union construction", coset_unions),
        ("property suites", property_suites),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let elapsed = t.elapsed();
        let ok = out.ok && elapsed <= out.budget;
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{elapsed:.2?}, budget {:?}]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            out.budget
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
