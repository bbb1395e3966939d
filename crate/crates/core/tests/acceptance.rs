//! Acceptance criteria. Each test prints one `[PASS]` or `[FAIL]` line; run
//! with `cargo test --test acceptance -- --nocapture` to see them.

use std::f64::consts::LN_2;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use segcoal::events::replicate_seed;
use segcoal::flow::{decompose, dust_is_empty, survivor_counts, verify_flow_property, Fate};
use segcoal::gwve::{GVerdict, GwveSpec};
use segcoal::phase::{classify_rates, dust_dimension_analytic, dust_dimension_empirical, PhaseLabel};
use segcoal::stats::{r_squared, Summary};
use segcoal::{Alphabet, EventStore, Extended, Geometry, Rates, SpaceConfig, Word};

fn verdict(id: &str, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {name}: {detail}");
    assert!(ok, "{id} {name}: {detail}");
}

fn rates(s: &str) -> Rates {
    s.parse().unwrap()
}

fn store(size: u32, geometry: Geometry, r: &Rates, depth: usize, horizon: f64, seed: u64) -> EventStore {
    let space = SpaceConfig::new(Alphabet::new(size).unwrap(), geometry, depth + 8).unwrap();
    EventStore::from_origin(space, r.clone(), depth, horizon, seed).unwrap()
}

fn cantor(size: u32, r: &Rates, depth: usize, horizon: f64, seed: u64) -> EventStore {
    store(size, Geometry::CantorSet, r, depth, horizon, seed)
}

/// Extinction limit for constant rates from the fixed point of the offspring
/// generating function, mixed with the root's Bernoulli law.
fn fixed_point_extinction(size: u32, p: f64) -> f64 {
    let mut q = 0.0f64;
    loop {
        let next = (1.0 - p + p * q).powi(size as i32);
        if (next - q).abs() < 1e-17 {
            break;
        }
        q = next;
    }
    1.0 - p + p * q
}

#[test]
fn ac01_critical_time() {
    let a = classify_rates(2, &Rates::Constant(1.0)).unwrap();
    let b = classify_rates(3, &Rates::Constant(2.0)).unwrap();
    let ok = a.label == PhaseLabel::Critical
        && b.label == PhaseLabel::Critical
        && a.critical_time == Some(LN_2)
        && b.critical_time == Some(3f64.ln() / 2.0);
    verdict("AC1", "critical time", ok, format!("t0(2,c=1)={:?} t0(3,c=2)={:?}", a.critical_time, b.critical_time));
}

#[test]
fn ac02_phase_table() {
    use PhaseLabel::*;
    let table = [
        ("geometric:1:0.125", LowerSubcritical),
        ("geometric:1:0.5", UpperSubcritical),
        ("harmonic:1", Semicritical),
        ("constant:1", Critical),
        ("linear:1", Supercritical),
    ];
    let mut wrong = Vec::new();
    for size in [2, 3, 5] {
        for (r, expected) in table {
            let got = classify_rates(size, &rates(r)).unwrap().label;
            if got != expected {
                wrong.push(format!("|S|={size} {r} -> {got}"));
            }
        }
    }
    verdict("AC2", "phase table", wrong.is_empty(), format!("15 cases, mismatches {wrong:?}"));
}

#[test]
fn ac03_extinction_probability() {
    let half = GwveSpec::new(2, Rates::Constant(1.0), LN_2 / 2.0).unwrap();
    let est = half.extinct_prob_limit(1e-10);
    let oracle = fixed_point_extinction(2, 2f64.powf(-0.5));
    let past = GwveSpec::new(2, Rates::Constant(1.0), 1.1 * LN_2).unwrap();
    let by_1000 = past.extinct_prob_by(1000);
    let ok = est.converged
        && (est.value - oracle).abs() < 1e-6
        && (oracle - (2f64.sqrt() - 1.0)).abs() < 1e-9
        && (by_1000 - 1.0).abs() < 1e-3;
    verdict(
        "AC3",
        "extinction probability",
        ok,
        format!("limit={:.9} oracle={oracle:.9} (n={}), P[B_1000=0] at 1.1 t0 = {by_1000:.9}", est.value, est.n),
    );
}

#[test]
fn ac04_degeneracy_flip() {
    let mut notes = Vec::new();
    let mut ok = true;
    for (size, c) in [(2u32, 1.0), (3, 2.0), (5, 0.5)] {
        let t0 = (size as f64).ln() / c;
        let below = GwveSpec::new(size, Rates::Constant(c), 0.9 * t0).unwrap().degeneracy_test(1000, 1e-9).unwrap();
        let above = GwveSpec::new(size, Rates::Constant(c), 1.1 * t0).unwrap().degeneracy_test(1000, 1e-9).unwrap();
        ok &= !below.degenerate && above.degenerate;
        notes.push(format!("|S|={size} c={c}: 0.9t0 {} 1.1t0 {}", below.degenerate, above.degenerate));
    }
    let spec = GwveSpec::new(2, Rates::Constant(1.0), LN_2).unwrap();
    let at = spec.degeneracy_test(1000, 1e-9).unwrap();
    let terms_quarter = (1..=100).all(|n| (spec.g_term(n) - 0.25).abs() < 1e-12);
    ok &= at.degenerate && at.inf_m_positive && matches!(at.g, GVerdict::Diverges { .. }) && terms_quarter;
    notes.push(format!("at t0: degenerate={} g={:?}", at.degenerate, at.g));
    verdict("AC4", "degeneracy flip", ok, notes.join("; "));
}

#[test]
fn ac05_gwve_coupling() {
    let grid = [
        (2u32, "constant:1", LN_2 / 2.0),
        (2, "constant:1", LN_2),
        (3, "constant:1", 0.8),
        (2, "harmonic:1", 1.0),
        (2, "linear:0.1", 0.5),
        (2, "geometric:1:0.5", 1.0),
    ];
    const REPS: usize = 10_000;
    const DEPTH: usize = 10;
    let mut failures = Vec::new();
    let mut checks = 0;
    for (g, &(size, r, t)) in grid.iter().enumerate() {
        let fam = rates(r);
        let spec = GwveSpec::new(size, fam.clone(), t).unwrap();
        let flow: Vec<Vec<u64>> = (0..REPS)
            .map(|i| survivor_counts(&cantor(size, &fam, DEPTH, t, replicate_seed(50_000 + g as u64, i as u64)), t).unwrap().counts)
            .collect();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(90_000 + g as u64);
        let direct: Vec<Vec<u64>> = (0..REPS).map(|_| spec.simulate(DEPTH, &mut rng).unwrap()).collect();
        for n in 1..=DEPTH {
            let a = Summary::of(flow.iter().map(|c| c[n] as f64));
            let b = Summary::of(direct.iter().map(|c| c[n] as f64));
            let formula = spec.mean_b(n);
            let se = a.std_error.hypot(b.std_error);
            let vse = a.variance_se.hypot(b.variance_se);
            checks += 3;
            if !a.mean_within(formula, 3.0) {
                failures.push(format!("{r} |S|={size} t={t:.3} n={n}: flow mean {:.4} vs {formula:.4}", a.mean));
            }
            if (a.mean - b.mean).abs() > 3.0 * se {
                failures.push(format!("{r} n={n}: flow mean {:.4} vs direct {:.4}", a.mean, b.mean));
            }
            if (a.variance - b.variance).abs() > 3.0 * vse {
                failures.push(format!("{r} n={n}: flow var {:.4} vs direct {:.4}", a.variance, b.variance));
            }
        }
    }
    verdict(
        "AC5",
        "GWVE coupling",
        failures.is_empty(),
        format!("{checks} comparisons over 6 settings x 10 levels, 1e4 replicates each; outside 3 SE: {failures:?}"),
    );
}

#[test]
fn ac06_dust_extinction_bridge() {
    const REPS: usize = 10_000;
    let t = LN_2 / 2.0;
    let fam = Rates::Constant(1.0);
    let empty = Summary::of((0..REPS).map(|i| {
        let s = cantor(2, &fam, 30, t, replicate_seed(606, i as u64));
        f64::from(u8::from(dust_is_empty(&s, t).unwrap()))
    }));
    let exact = GwveSpec::new(2, fam, t).unwrap().extinct_prob_by(30);
    let ok = empty.mean_within(exact, 3.0) && (empty.mean - 0.4142).abs() < 0.015;
    verdict(
        "AC6",
        "dust-extinction bridge",
        ok,
        format!("frequency {:.4} ± {:.4} vs P[B_30=0] = {exact:.6}", empty.mean, empty.std_error),
    );
}

#[test]
fn ac07_dust_measure() {
    let mut notes = Vec::new();
    let mut ok = true;
    let cases = [
        ("geometric:1:0.125", 1.0, 12, 4000usize, Some((-8.0f64 / 7.0).exp())),
        ("constant:1", 0.3, 12, 4000, None),
        ("harmonic:1", 1.0, 12, 4000, None),
    ];
    for (k, (r, t, depth, reps, closed)) in cases.into_iter().enumerate() {
        let fam = rates(r);
        let target = closed.unwrap_or_else(|| (-t * fam.partial_sum(0, depth)).exp());
        let alphabet = Alphabet::new(2).unwrap();
        let m = Summary::of((0..reps).map(|i| {
            let s = cantor(2, &fam, depth, t, replicate_seed(700 + k as u64, i as u64));
            survivor_counts(&s, t).unwrap().dust_measure(alphabet)
        }));
        let pass = m.mean_within(target, 3.0);
        ok &= pass;
        notes.push(format!("{r} t={t}: {:.4} ± {:.4} vs {target:.4}", m.mean, m.std_error));
    }
    verdict("AC7", "mean dust measure", ok, notes.join("; "));
}

#[test]
fn ac08_flow_property() {
    let mut notes = Vec::new();
    let mut ok = true;
    for geometry in [Geometry::CantorSet, Geometry::HalfOpenInterval] {
        for (k, r) in ["constant:1", "harmonic:1", "geometric:1:0.5"].into_iter().enumerate() {
            let fam = rates(r);
            let mut violations = 0;
            for seed in 0..4u64 {
                let s = store(2, geometry, &fam, 14, 2.0, replicate_seed(800 + k as u64, seed));
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
                violations += verify_flow_property(&s, 250, &mut rng).unwrap().violations;
            }
            ok &= violations == 0;
            notes.push(format!("{geometry}/{r}: {violations}"));
        }
    }
    let s = cantor(2, &Rates::Constant(1.0), 14, 2.0, 81);
    s.inject_fault(&Word::root());
    let caught = verify_flow_property(&s, 1000, &mut Xoshiro256PlusPlus::seed_from_u64(1)).unwrap();
    ok &= caught.violations > 0;
    notes.push(format!("corrupted store: {} violations", caught.violations));
    verdict("AC8", "flow property", ok, format!("1000 checks per case; {}", notes.join(", ")));
}

#[test]
fn ac09_genealogy_invariance() {
    let mut compared = 0;
    let mut mismatches = 0;
    for r in ["constant:1", "harmonic:1", "geometric:1:0.5"] {
        let fam = rates(r);
        for seed in 0..40u64 {
            let a = store(2, Geometry::CantorSet, &fam, 10, 1.0, seed);
            let b = store(2, Geometry::HalfOpenInterval, &fam, 10, 1.0, seed);
            for t in [0.2, 0.6, 1.0] {
                let da = decompose::<BigRational>(&a, t).unwrap();
                let db = decompose::<BigRational>(&b, t).unwrap();
                compared += 1;
                if da != db {
                    mismatches += 1;
                }
            }
        }
    }
    verdict(
        "AC9",
        "genealogy invariance",
        mismatches == 0,
        format!("{compared} decompositions compared word for word, {mismatches} differ"),
    );
}

#[test]
fn ac10_dimension() {
    let fam = Rates::Constant(1.0);
    let t0 = LN_2;
    let mut points = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for (k, frac, tol) in [(0u64, 0.25, 0.05), (1, 0.5, 0.05), (2, 0.75, 0.08)] {
        let t = frac * t0;
        let mut counts = Vec::new();
        let mut survivors = 0;
        let mut i = 0u64;
        while survivors < 200 {
            let c = survivor_counts(&cantor(2, &fam, 25, t, replicate_seed(1000 + k, i)), t).unwrap();
            survivors += usize::from(!c.dust_is_empty());
            counts.push(c);
            i += 1;
        }
        let est = dust_dimension_empirical(2, Geometry::CantorSet, &counts).unwrap();
        let analytic = dust_dimension_analytic(2, Geometry::CantorSet, Extended::Finite(1.0), t).unwrap();
        ok &= (est.estimate - analytic).abs() <= tol;
        if frac == 0.5 {
            ok &= (est.estimate - 0.3155).abs() <= 0.05;
        }
        notes.push(format!(
            "t={frac}t0: {:.4} ± {:.4} vs {analytic:.4} ({} of {} survived)",
            est.estimate, est.std_error, est.replicates_used, est.replicates_total
        ));
        points.push((est.estimate, analytic));
    }
    let observed: Vec<f64> = points.iter().map(|p| p.0).collect();
    let predicted: Vec<f64> = points.iter().map(|p| p.1).collect();
    let r2 = r_squared(&observed, &predicted);
    ok &= r2 > 0.95;
    verdict("AC10", "dust dimension", ok, format!("{}; R² = {r2:.4}", notes.join("; ")));
}

/// Law of `B_n` by pushing the full distribution through binomial offspring.
fn exhaustive_law(size: usize, survival: &dyn Fn(usize) -> f64, n: usize) -> Vec<f64> {
    let choose = |m: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
    let p0 = survival(0);
    let mut dist = vec![1.0 - p0, p0];
    for k in 1..=n {
        let p = survival(k);
        let mut next = vec![0.0; (dist.len() - 1) * size + 1];
        for (b, &mass) in dist.iter().enumerate() {
            let trials = b * size;
            for j in 0..=trials {
                next[j] += mass * choose(trials, j) * p.powi(j as i32) * (1.0 - p).powi((trials - j) as i32);
            }
        }
        dist = next;
    }
    dist
}

#[test]
fn ac11_small_instance_oracle() {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for size in 2..=3u32 {
        for r in ["constant:1", "constant:0.3", "geometric:2:0.5", "harmonic:1", "linear:0.7", "table:0.2,1.5,0.1,0.9,3"] {
            for t in [0.05, 0.5, 1.0, 2.5] {
                let fam = rates(r);
                let spec = GwveSpec::new(size, fam.clone(), t).unwrap();
                let survival = |k: usize| (-t * fam.rate(k)).exp();
                for n in 0..=4 {
                    let law = exhaustive_law(size as usize, &survival, n);
                    worst = worst.max((spec.extinct_prob_by(n) - law[0]).abs());
                    cases += 1;
                }
            }
        }
    }
    verdict("AC11", "small-instance oracle", worst < 1e-12, format!("{cases} cases, max |pgf - enumeration| = {worst:.2e}"));
}

#[test]
fn ac12_block_structure() {
    let mut problems = Vec::new();
    let mut realizations = 0;
    let mut points = 0;
    for r in ["constant:1", "harmonic:2", "geometric:3:0.5"] {
        let fam = rates(r);
        for seed in 0..60u64 {
            let s = cantor(2, &fam, 9, 1.0, replicate_seed(1200, seed));
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            for t in [0.25, 1.0] {
                realizations += 1;
                let d = decompose::<BigRational>(&s, t).unwrap();
                if !d.total_mass().is_one() {
                    problems.push(format!("{r} seed {seed}: total mass {}", d.total_mass()));
                }
                let mut atoms: Vec<&Word> = d.blocks.iter().map(|b| &b.atom).collect();
                atoms.sort();
                atoms.dedup();
                if atoms.len() != d.blocks.len() {
                    problems.push(format!("{r} seed {seed}: repeated atom"));
                }
                for (i, b) in d.blocks.iter().enumerate() {
                    if !b.word.is_ancestor_of(&b.atom) {
                        problems.push(format!("{r} seed {seed}: atom outside block {}", b.word));
                    }
                    for _ in 0..4 {
                        let x = s.space().sample_point(&b.word, &mut rng).unwrap();
                        points += 1;
                        if d.fate(&x) != Fate::Block(i) || segcoal::flow::apply_flow(&s, &x, 0.0, t).unwrap() != b.atom {
                            problems.push(format!("{r} seed {seed}: point {x} of {} misplaced", b.word));
                        }
                    }
                }
                for w in d.dust_words.iter().take(8) {
                    let x = s.space().sample_point(w, &mut rng).unwrap();
                    points += 1;
                    if segcoal::flow::apply_flow(&s, &x, 0.0, t).unwrap() != x || d.fate(&x) != Fate::Dust {
                        problems.push(format!("{r} seed {seed}: dust point {x} moved"));
                    }
                }
                let leaf = BigRational::new(1.into(), (1u64 << 9).into());
                let dust_words = BigRational::from_integer((d.dust_words.len() as u64).into());
                if d.dust_measure != leaf * dust_words || (d.dust_words.is_empty() != d.dust_measure.is_zero()) {
                    problems.push(format!("{r} seed {seed}: dust measure mismatch"));
                }
            }
        }
    }
    verdict(
        "AC12",
        "block structure",
        problems.is_empty(),
        format!("{realizations} realizations, {points} points traced, problems {problems:?}"),
    );
}
