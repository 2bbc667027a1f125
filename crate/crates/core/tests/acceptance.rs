//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ffdistinct::energy::{self, GraphStats};
use ffdistinct::experiments::{self, ExperimentPlan};
use ffdistinct::geometry::{
    self, regularity_check, DiagonalPoly, Family, QuadraticForm, Thresholds,
};
use ffdistinct::spectra::{self, CayleyGraph, Spectrum, SPECTRUM_LIMIT};
use ffdistinct::{AffineSpace, FieldContext};
use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn space(f: &FieldContext, d: usize) -> AffineSpace<'_> {
    AffineSpace::new(f, d, SPECTRUM_LIMIT).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, universe: usize, max_size: usize) -> Vec<usize> {
    let size = rng.random_range(0..=max_size.min(universe));
    let mut set = BTreeSet::new();
    while set.len() < size {
        set.insert(rng.random_range(0..universe));
    }
    set.into_iter().collect()
}

/// Coordinates of an encoded point over a prime field, most significant first.
fn coords(x: usize, p: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    let mut x = x;
    for i in (0..d).rev() {
        out[i] = x % p;
        x /= p;
    }
    out
}

/// Calls `visit` on the coordinate sum of every tuple in E^k.
fn for_each_tuple_sum(
    points: &[Vec<usize>],
    k: usize,
    p: usize,
    mut visit: impl FnMut(&[usize], &[usize]),
) {
    if points.is_empty() {
        return;
    }
    let d = points[0].len();
    let mut idx = vec![0usize; k];
    loop {
        let mut first = vec![0usize; d];
        let mut second = vec![0usize; d];
        for (slot, &i) in idx.iter().enumerate() {
            let target = if slot < k / 2 {
                &mut first
            } else {
                &mut second
            };
            for c in 0..d {
                target[c] = (target[c] + points[i][c]) % p;
            }
        }
        visit(&first, &second);
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < points.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn oracle_energy(points: &[Vec<usize>], k: usize, p: usize) -> u128 {
    let mut count = 0u128;
    for_each_tuple_sum(points, k, p, |a, b| {
        if a == b {
            count += 1;
        }
    });
    count
}

fn oracle_nu(points: &[Vec<usize>], k: usize, p: usize) -> Vec<u128> {
    let mut nu = vec![0u128; p];
    for_each_tuple_sum(points, k, p, |a, b| {
        let t: usize = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x + y) % p)
            .map(|x| x * x)
            .sum::<usize>()
            % p;
        nu[t] += 1;
    });
    nu
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for (p, d) in [(3u64, 2usize), (5, 2), (3, 3)] {
        let f = FieldContext::new(p, 1).unwrap();
        let s = space(&f, d);
        let form = QuadraticForm::sum_of_squares(&f, d);
        for _ in 0..200 {
            let set = random_subset(&mut rng, s.size(), 6);
            let pts: Vec<Vec<usize>> = set.iter().map(|&x| coords(x, p as usize, d)).collect();
            for k in [2, 4] {
                let got = energy::lambda_k(&s, &set, k).unwrap();
                if got != BigUint::from(oracle_energy(&pts, k, p as usize)) {
                    return outcome(
                        false,
                        format!("Lambda_{k} mismatch at q={p} d={d} E={set:?}"),
                    );
                }
            }
            for k in [2, 3] {
                let nu = energy::nu_k(&s, &set, &form, k).unwrap();
                let want = oracle_nu(&pts, k, p as usize);
                if nu.values != want {
                    return outcome(false, format!("nu_{k} mismatch at q={p} d={d} E={set:?}"));
                }
                let delta = energy::delta_set(&s, &set, &form, k).unwrap();
                let want_delta: Vec<u32> =
                    (0..p as u32).filter(|&t| want[t as usize] > 0).collect();
                if delta.values != want_delta {
                    return outcome(
                        false,
                        format!("Delta_{k} mismatch at q={p} d={d} E={set:?}"),
                    );
                }
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} subsets, exact"))
}

const GRID: [(u64, usize); 8] = [
    (3, 2),
    (5, 2),
    (7, 2),
    (11, 2),
    (3, 3),
    (5, 3),
    (7, 3),
    (11, 3),
];

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut graphs = 0;
    for (p, d) in GRID {
        let f = FieldContext::new(p, 1).unwrap();
        let s = space(&f, d);
        let form = QuadraticForm::sum_of_squares(&f, d);
        let bound = 2.0 * (f.q() as f64).powf((d as f64 - 1.0) / 2.0);
        for t in 1..f.q() {
            let e = spectra::euclidean_spectrum(&s, &form, t).unwrap();
            let lambda = e.spectrum.max_nontrivial().0;
            worst = worst.max(lambda / bound);
            graphs += 1;
            if lambda > bound + TOL {
                return outcome(
                    false,
                    format!("p={p} d={d} t={t}: lambda={lambda:.6} > {bound:.6}"),
                );
            }
        }
    }
    outcome(
        true,
        format!("{graphs} graphs, max lambda/(2q^((d-1)/2)) = {worst:.4}"),
    )
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut log = Vec::new();
    for family in [
        Family::Sphere { j: 1 },
        Family::Paraboloid,
        Family::Minkowski { j: 1 },
    ] {
        let mut worst_c = 0.0f64;
        for (p, d) in GRID {
            let f = FieldContext::new(p, 1).unwrap();
            let s = space(&f, d);
            let v = geometry::builtin_variety(&s, family).unwrap();
            let lambda = spectra::cayley_spectrum(&s, &v.points)
                .unwrap()
                .max_nontrivial()
                .0;
            let scale = (f.q() as f64).powf((d as f64 - 1.0) / 2.0);
            let c = regularity_check(&s, &v, Thresholds::default())
                .unwrap()
                .fourier_constant;
            worst_c = worst_c.max(c);
            if lambda > 2.0 * scale + TOL {
                pass = false;
                log.push(format!(
                    "{} p={p} d={d}: lambda={lambda:.4} > {:.4}",
                    family.name(),
                    2.0 * scale
                ));
            }
        }
        log.push(format!("{} max c = {worst_c:.4}", family.name()));
    }
    outcome(pass, log.join("; "))
}

fn affine_lambda(p: u64, s: u32) -> f64 {
    let f = FieldContext::new(p, 1).unwrap();
    let poly = DiagonalPoly::new(&f, vec![1], s).unwrap();
    spectra::affine_cayley_spectrum(&f, &poly)
        .unwrap()
        .spectrum
        .lambda()
}

fn criterion_4(s: u32) -> Outcome {
    let mut pass = true;
    let mut log = Vec::new();
    for p in [3u64, 5, 7] {
        if (p as u32).is_multiple_of(s) {
            continue;
        }
        let lambda = affine_lambda(p, s);
        let bound = p as f64;
        let ok = lambda <= bound + TOL;
        pass &= ok;
        log.push(format!(
            "p={p}: lambda={lambda:.4} vs q^d={bound}{}",
            if ok { "" } else { " VIOLATED" }
        ));
    }
    if s == 2 {
        let lambda = affine_lambda(3, 2);
        let ok = (lambda - 3.0).abs() <= 1e-9;
        pass &= ok;
        log.push(format!("equality at (3,1,2): {lambda:.12}"));
    }
    outcome(pass, log.join("; "))
}

fn mixing_pairs(
    seed: u64,
    spectrum: &Spectrum,
    graph: &CayleyGraph,
    worst: &mut f64,
) -> Option<String> {
    let sweep = spectra::mixing_sweep(spectrum, graph, 1000, 40, seed);
    if let Some(g) = sweep.min_relative_gap {
        *worst = worst.min(g);
    }
    sweep
        .first_violation
        .map(|a| format!("gap {} with bound {}", a.gap, a.bound))
}

fn criterion_5() -> Outcome {
    let mut graphs = 0u64;
    let mut worst = f64::INFINITY;
    for (p, d) in GRID {
        let f = FieldContext::new(p, 1).unwrap();
        let s = space(&f, d);
        let form = QuadraticForm::sum_of_squares(&f, d);
        let mut sets: Vec<(String, Vec<usize>)> = (1..f.q())
            .map(|t| {
                (
                    format!("euclidean t={t}"),
                    spectra::euclidean_connection_set(&s, &form, t),
                )
            })
            .collect();
        for family in [
            Family::Sphere { j: 1 },
            Family::Paraboloid,
            Family::Minkowski { j: 1 },
        ] {
            sets.push((
                family.name(),
                geometry::builtin_variety(&s, family).unwrap().points,
            ));
        }
        for (name, set) in sets {
            let spectrum = spectra::cayley_spectrum(&s, &set).unwrap();
            let graph = CayleyGraph::new(s, &set).unwrap();
            if let Some(msg) = mixing_pairs(5000 + graphs, &spectrum, &graph, &mut worst) {
                return outcome(false, format!("p={p} d={d} {name}: {msg}"));
            }
            graphs += 1;
        }
    }
    for (p, e) in [(3u64, 2u32), (5, 2), (7, 2), (5, 3), (7, 3)] {
        let f = FieldContext::new(p, 1).unwrap();
        let poly = DiagonalPoly::new(&f, vec![1], e).unwrap();
        let s = spectra::affine_space(&f, &poly).unwrap();
        let set = spectra::affine_connection_set(&f, &poly).unwrap();
        let spectrum = spectra::affine_cayley_spectrum(&f, &poly).unwrap().spectrum;
        let graph = CayleyGraph::new(s, &set).unwrap();
        if let Some(msg) = mixing_pairs(5000 + graphs, &spectrum, &graph, &mut worst) {
            return outcome(false, format!("affine p={p} s={e}: {msg}"));
        }
        graphs += 1;
    }
    outcome(
        true,
        format!("{graphs} graphs x 1000 pairs, min gap/bound = {worst:.4}"),
    )
}

#[derive(Default)]
struct Ledger {
    checked: usize,
    violations: Vec<String>,
}

impl Ledger {
    fn record(&mut self, holds: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !holds {
            self.violations.push(what());
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ledgers: Vec<(&str, Ledger)> = [
        "distance count, even k",
        "distance count, odd k",
        "energy step",
        "second moment, even k",
        "second moment, odd k",
    ]
    .into_iter()
    .map(|n| (n, Ledger::default()))
    .collect();
    for (p, d) in [(5u64, 2usize), (5, 3), (7, 2)] {
        let f = FieldContext::new(p, 1).unwrap();
        let s = space(&f, d);
        let q = f.q();
        let form = QuadraticForm::sum_of_squares(&f, d);
        let graphs: Vec<GraphStats> = (1..q)
            .map(|t| GraphStats::of(&spectra::euclidean_spectrum(&s, &form, t).unwrap().spectrum))
            .collect();
        let variety = geometry::builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
        let variety_lambda = spectra::cayley_spectrum(&s, &variety.points)
            .unwrap()
            .max_nontrivial()
            .0;
        let poly = DiagonalPoly::new(&f, vec![1; d], 2).unwrap();
        let a_lambda = spectra::affine_cayley_spectrum(&f, &poly)
            .unwrap()
            .spectrum
            .max_nontrivial()
            .0;
        let max_e = if d == 3 { 30 } else { 20 };

        for _ in 0..100 {
            // distance counts: even k in {2, 4}, odd k = 3
            for (slot, k) in [(0usize, [2usize, 4][rng.random_range(0..2)]), (1, 3)] {
                let set = random_subset(&mut rng, s.size(), max_e);
                let t = rng.random_range(1..q);
                let folds = energy::fold_sequence(&s, &set, k.max(k / 2 + 1)).unwrap();
                let nu = energy::nu_from_fold(&s, &folds[k], &form).unwrap();
                let (lo, hi) = energy::paired_energies(&folds, k);
                let a = energy::audit_distance_count(
                    &nu,
                    t,
                    set.len(),
                    k,
                    graphs[t as usize - 1],
                    (&lo, &hi),
                );
                ledgers[slot].1.record(a.mixing.holds, || {
                    format!("p={p} d={d} k={k} t={t} |E|={}", set.len())
                });
            }
            // energy step inside the sphere
            let sub = random_subset(&mut rng, variety.len(), variety.len());
            let sub: Vec<usize> = sub.into_iter().map(|i| variety.points[i]).collect();
            let k = [4usize, 6][rng.random_range(0..2)];
            let a =
                energy::audit_energy_step(&s, &sub, &variety.points, k, variety_lambda).unwrap();
            ledgers[2]
                .1
                .record(a.holds, || format!("p={p} d={d} k={k} |E|={}", sub.len()));
            // second moments of the shifted counts
            for (slot, k) in [(3usize, 2usize), (4, 3)] {
                let set = random_subset(&mut rng, s.size(), max_e);
                let mut xs = random_subset(&mut rng, q as usize, q as usize);
                if xs.is_empty() {
                    xs.push(0);
                }
                let shifts: Vec<u32> = xs.iter().map(|&x| x as u32).collect();
                let folds = energy::fold_sequence(&s, &set, k.max(k / 2 + 1)).unwrap();
                let nu = energy::shifted_nu(&s, &folds[k], &shifts, &poly).unwrap();
                let expected = BigUint::from(shifts.len()) * BigUint::from(set.len()).pow(k as u32);
                let moment = energy::second_moment(&nu, &expected).unwrap();
                let (lo, hi) = energy::paired_energies(&folds, k);
                let a = energy::audit_second_moment(
                    &moment,
                    shifts.len(),
                    set.len(),
                    k,
                    q,
                    a_lambda,
                    (&lo, &hi),
                );
                let bound = energy::sumset_lower_bound(shifts.len(), set.len(), k, &moment);
                let cs = BigRational::from_integer(energy::sumset_size(&nu).into()) >= bound;
                ledgers[slot].1.record(a.audit.holds && cs, || {
                    format!("p={p} d={d} k={k} |E|={} |X|={}", set.len(), shifts.len())
                });
            }
        }
    }
    let pass = ledgers.iter().all(|(_, l)| l.violations.is_empty());
    let detail = ledgers
        .iter()
        .map(|(name, l)| match l.violations.first() {
            None => format!("{name}: {} ok", l.checked),
            Some(v) => format!(
                "{name}: {} of {} violated (first: {v})",
                l.violations.len(),
                l.checked
            ),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

struct CoverageRun {
    p: u64,
    size: usize,
    covered: usize,
    trials: usize,
    mean_deviation: f64,
    audits_pass: bool,
}

fn coverage_runs() -> &'static [CoverageRun] {
    static RUNS: OnceLock<Vec<CoverageRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [5u64, 7, 11, 13]
            .into_iter()
            .map(|p| {
                let size = (2.0 * (p as f64).powf(1.5)).round() as usize;
                let plan = ExperimentPlan::from_toml(&format!(
                    "p = {p}\nd = 3\nvariety = \"sphere\"\nj = 1\nk = 3\nsizes = [{size}]\ntrials = 20\nseed = 7\n"
                ))
                .unwrap();
                let report = experiments::coverage_experiment(&plan).unwrap();
                CoverageRun {
                    p,
                    size,
                    covered: report.records.iter().filter(|r| r.covers_fq_star).count(),
                    trials: report.records.len(),
                    mean_deviation: report.aggregates[0].mean_value.unwrap(),
                    audits_pass: report.audits_pass(),
                }
            })
            .collect()
    })
}

fn criterion_7a() -> Outcome {
    let runs = coverage_runs();
    let pass = runs
        .iter()
        .all(|r| r.covered * 100 >= 95 * r.trials && r.audits_pass);
    let log: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "p={} |E|={}: covered {}/{}",
                r.p, r.size, r.covered, r.trials
            )
        })
        .collect();
    outcome(pass, log.join("; "))
}

fn criterion_7b() -> Outcome {
    let runs = coverage_runs();
    let deviations: Vec<f64> = runs.iter().map(|r| r.mean_deviation).collect();
    let rises: Vec<f64> = deviations
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| w[1] / w[0] - 1.0)
        .collect();
    let pass = rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.10);
    let log: Vec<String> = runs
        .iter()
        .map(|r| format!("p={}: {:.4}", r.p, r.mean_deviation))
        .collect();
    let rises: Vec<String> = rises
        .iter()
        .map(|r| format!("+{:.1}%", 100.0 * r))
        .collect();
    outcome(
        pass,
        format!(
            "mean deviation {}; rises [{}]",
            log.join(", "),
            rises.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let f = FieldContext::new(3, 1).unwrap();
    let s = space(&f, 2);
    let v = geometry::builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
    let form = QuadraticForm::sum_of_squares(&f, 2);
    let pts: Vec<Vec<usize>> = v.points.iter().map(|&x| coords(x, 3, 2)).collect();
    let lambda4 = energy::lambda_k(&s, &v.points, 4).unwrap();
    let nu2 = energy::nu_k(&s, &v.points, &form, 2).unwrap();
    let delta = energy::delta_set(&s, &v.points, &form, 2).unwrap();
    let lambda = spectra::cayley_spectrum(&s, &v.points).unwrap().lambda();
    let checks = [
        ("|S_1| = 4", v.len() == 4),
        (
            "Lambda_4 = 36",
            lambda4 == BigUint::from(36u32) && oracle_energy(&pts, 4, 3) == 36,
        ),
        (
            "nu_2 = (4,4,8)",
            nu2.values == vec![4, 4, 8] && oracle_nu(&pts, 2, 3) == vec![4, 4, 8],
        ),
        ("Delta = F_3", delta.covers_fq),
        ("lambda = 2", (lambda - 2.0).abs() < 1e-9),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "all exact".into()
        } else {
            failed.join(", ")
        },
    )
}

fn main() {
    type Criterion = (&'static str, Option<u64>, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        ("1 oracle equivalence", Some(60), Box::new(criterion_1)),
        (
            "2 euclidean graph spectral bound",
            Some(120),
            Box::new(criterion_2),
        ),
        (
            "3 variety graph spectral bound",
            Some(120),
            Box::new(criterion_3),
        ),
        (
            "4 affine graph bound (s=2)",
            Some(60),
            Box::new(|| criterion_4(2)),
        ),
        (
            "4 affine graph bound (s=3)",
            Some(60),
            Box::new(|| criterion_4(3)),
        ),
        ("5 mixing inequality", Some(120), Box::new(criterion_5)),
        ("6 exact inequality ledger", None, Box::new(criterion_6)),
        ("7a coverage of F_q^*", Some(300), Box::new(criterion_7a)),
        ("7b deviation trend in p", Some(300), Box::new(criterion_7b)),
        ("8 worked fixtures", Some(60), Box::new(criterion_8)),
    ];
    let mut failures = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= Duration::from_secs(b));
        let pass = o.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {name:<36} {} ({:.1}s{}) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.map(|b| format!(" / {b}s")).unwrap_or_default(),
            o.detail
        );
    }
    if failures > 0 {
        println!("{failures} criterion line(s) failed");
        std::process::exit(1);
    }
}
