//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits nonzero if any failed.
//!
//! Select criteria by number: `cargo test --test acceptance -- 1 4 7`.
//! The full-scale track (9) only runs with `SHAPESR_FULL_SCALE=1` and
//! reports medians without a pass/fail verdict.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_ranks, compositions, dual_eval, random_expr, ALL_UNARY, SMOOTH_UNARY};
use shapesr::bench::{self, generate_dataset, ProblemInstance};
use shapesr::experiment::{median, run_single, RunResult};
use shapesr::genetics::GpConfig;
use shapesr::interval::ia_eval;
use shapesr::moea::{self, generate_reference_points, nondominated_sort, Algorithm, MoeaConfig, RunOutcome};
use shapesr::objectives::{
    constraint_penalty, interval_penalty, nmse, sample_constraint, Evaluator, ShapeConstraint,
};
use shapesr::{Expr, Interval, VariableBox};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut desk_runs = DeskRuns::default();
    let criteria: [(u32, &str, &dyn Fn(&mut DeskRuns) -> Verdict); 9] = [
        (1, "interval soundness", &|_| interval_soundness()),
        (2, "symbolic derivatives", &|_| derivatives()),
        (3, "MOEA oracles", &|_| moea_oracles()),
        (4, "NMSE convention", &|_| nmse_convention()),
        (5, "penalty examples", &|_| penalty_examples()),
        (6, "catalog fidelity", &|_| catalog_fidelity()),
        (7, "desk-scale feasibility", &feasibility_run),
        (8, "beats the mean predictor", &sanity_bound),
        (10, "determinism", &|_| determinism()),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !wants(n) {
            continue;
        }
        let start = Instant::now();
        let v = check(&mut desk_runs);
        failed += usize::from(!v.pass);
        println!(
            "criterion {n:>2} {} {name} ({:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if wants(9) {
        if std::env::var("SHAPESR_FULL_SCALE").is_ok_and(|v| v == "1") {
            let start = Instant::now();
            let detail = full_scale();
            println!("criterion  9 REPORT full-scale I.6.20 ({:.0}s): {detail}", start.elapsed().as_secs_f64());
        } else {
            println!("criterion  9 SKIP full-scale track (set SHAPESR_FULL_SCALE=1)");
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn random_box<R: Rng>(rng: &mut R, arity: usize) -> VariableBox {
    let pairs: Vec<(f64, f64)> = (0..arity)
        .map(|_| {
            let lo = rng.random_range(-5.0..5.0);
            let width = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..4.0) };
            (lo, lo + width)
        })
        .collect();
    VariableBox::from_pairs(&pairs).unwrap()
}

fn sample_point<R: Rng>(rng: &mut R, domain: &VariableBox, point: &mut [f64]) {
    for (x, b) in point.iter_mut().zip(domain.bounds()) {
        *x = match rng.random_range(0..10) {
            0 => b.lo(),
            1 => b.hi(),
            _ if b.lo() == b.hi() => b.lo(),
            _ => rng.random_range(b.lo()..=b.hi()),
        };
    }
}

fn interval_soundness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut violations) = (0usize, Vec::new());
    let mut point = [0.0; 3];
    for i in 0..500 {
        let size = rng.random_range(1..=25);
        let expr = random_expr(&mut rng, size, 3, &ALL_UNARY, 5.0);
        let domain = random_box(&mut rng, 3);
        let enclosure = ia_eval(&expr, &domain);
        for _ in 0..1000 {
            sample_point(&mut rng, &domain, &mut point);
            let v = expr.eval(&point);
            if v.is_nan() {
                continue;
            }
            checked += 1;
            if !enclosure.contains(v) && violations.len() < 3 {
                violations.push(format!("#{i} {expr} at {point:?} = {v:e} not in {enclosure:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed < Duration::from_secs(30) && checked > 100_000;
    verdict(pass, format!("{checked} defined points checked, violations: {violations:?}"))
}

fn derivatives() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut compared, mut unresolved, mut worst_fd, mut worst_dual) = (0usize, 0usize, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for t in 0..200 {
        let size = rng.random_range(1..=20);
        let expr = random_expr(&mut rng, size, 3, &SMOOTH_UNARY, 3.0);
        let var = rng.random_range(0..3);
        let d = expr.differentiate(var);
        let mut points = 0;
        let mut attempts = 0;
        while points < 50 && attempts < 5000 {
            attempts += 1;
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let sym = d.eval(&x);
            let f0 = expr.eval(&x);
            if sym.is_nan() || f0.is_nan() {
                continue;
            }
            points += 1;
            // dual-number oracle: exact to rounding
            let dual = dual_eval(&expr, &x, var).d;
            if dual.is_finite() {
                let err = (sym - dual).abs() / dual.abs().max(1.0);
                worst_dual = worst_dual.max(err);
            }
            // central differences with a Richardson step
            let fd = |h: f64| {
                let (mut lo, mut hi) = (x.clone(), x.clone());
                lo[var] -= h;
                hi[var] += h;
                (expr.eval(&hi) - expr.eval(&lo)) / (2.0 * h)
            };
            let h = 1e-4 * x[var].abs().max(1.0);
            let (d1, d2) = (fd(h), fd(h / 2.0));
            let richardson = (4.0 * d2 - d1) / 3.0;
            if !richardson.is_finite() || (d1 - d2).abs() > 1e-3 * d2.abs().max(1e-8) {
                unresolved += 1;
                continue;
            }
            compared += 1;
            let scale = sym.abs().max(richardson.abs()).max(1e-6 * f0.abs().max(1.0));
            let err = (sym - richardson).abs() / scale;
            worst_fd = worst_fd.max(err);
            if err > 1e-4 && failures.len() < 3 {
                failures.push(format!("tree {t} {expr} d/dx{var} at {x:?}: {sym} vs {richardson}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && worst_dual < 1e-9 && elapsed < Duration::from_secs(10) && compared > 5000;
    verdict(
        pass,
        format!(
            "{compared} points vs finite differences (worst rel err {worst_fd:.1e}, {unresolved} non-smooth at step scale skipped), \
             worst vs dual numbers {worst_dual:.1e}, failures: {failures:?}"
        ),
    )
}

fn moea_oracles() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let m = rng.random_range(2..=6);
        let coarse = rng.random_bool(0.5);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| if coarse { rng.random_range(0..4) as f64 } else { rng.random_range(0.0..1.0) })
                    .collect()
            })
            .collect();
        let expected = brute_force_ranks(&points);
        let fronts = nondominated_sort(&points);
        let mut got = vec![usize::MAX; n];
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                got[i] = r;
            }
        }
        mismatches += usize::from(got != expected);
    }
    let mut count_errors = Vec::new();
    for m in 1..=6 {
        for p in 1..=6 {
            let refs = generate_reference_points(m, p);
            let want = compositions(m, p);
            let on_simplex = refs.iter().all(|r| {
                r.len() == m
                    && (r.iter().sum::<f64>() - 1.0).abs() < 1e-12
                    && r.iter().all(|v| (v * p as f64 - (v * p as f64).round()).abs() < 1e-9)
            });
            if refs.len() as u128 != want || !on_simplex {
                count_errors.push((m, p, refs.len(), want));
            }
        }
    }
    let pass = mismatches == 0 && count_errors.is_empty() && start.elapsed() < Duration::from_secs(10);
    verdict(pass, format!("{mismatches}/200 sort mismatches; reference count errors: {count_errors:?}"))
}

fn nmse_convention() -> Verdict {
    let mut worst = 0.0f64;
    let mut exact_zero = true;
    for inst in bench::catalog() {
        for seed in 0..3 {
            let data = generate_dataset(&inst, seed).unwrap();
            let (_, y) = data.train_columns();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let v = nmse(&y, &vec![mean; y.len()]).unwrap();
            worst = worst.max((v - 100.0).abs());
            exact_zero &= nmse(&y, &y).unwrap() == 0.0;
            let evaluator = Evaluator::new(&inst, &data).unwrap();
            let via_model = evaluator.evaluate(&Expr::constant(mean)).nmse();
            worst = worst.max((via_model - 100.0).abs());
        }
    }
    verdict(worst <= 1e-9 && exact_zero, format!("max |NMSE(mean) - 100| = {worst:.1e}, NMSE(y,y) = 0: {exact_zero}"))
}

fn penalty_examples() -> Verdict {
    let positive = Interval::new(0.0, f64::INFINITY);
    let a = interval_penalty(Interval::new(-2.0, 5.0), positive);
    let b = interval_penalty(Interval::new(1.0, 3.0), Interval::new(0.0, 5.0));
    let region = VariableBox::from_pairs(&[(1.0, 3.0), (0.0, 1.0)]).unwrap();
    let linear: Expr = "(add (mul 2.0 x0) x1)".parse().unwrap();
    let c = constraint_penalty(&linear, &ShapeConstraint::increasing(0, region));
    verdict(a == 2.0 && b == 0.0 && c == 0.0, format!("[-2,5] vs [0,inf] -> {a}; contained -> {b}; linear monotone -> {c}"))
}

fn catalog_fidelity() -> Verdict {
    let expected = [
        ("I.6.20", 2),
        ("I.9.18", 10),
        ("I.30.5", 4),
        ("I.32.17", 7),
        ("I.41.16", 5),
        ("I.48.20", 4),
        ("II.35.21", 6),
        ("III.9.52", 4),
        ("III.10.19", 5),
        ("Pagie-1", 5),
    ];
    let mut problems = Vec::new();
    let catalog = bench::catalog();
    if catalog.len() != expected.len() {
        problems.push(format!("{} instances", catalog.len()));
    }
    for (name, count) in expected {
        match bench::instance(name) {
            Ok(inst) if inst.constraints.len() == count && inst.num_objectives() == count + 1 => {}
            Ok(inst) => problems.push(format!("{name}: {} constraints", inst.constraints.len())),
            Err(e) => problems.push(e.to_string()),
        }
    }
    let i918 = bench::instance("I.9.18").unwrap();
    let data = generate_dataset(&i918, 0).unwrap();
    let dims = Evaluator::new(&i918, &data).unwrap().evaluate(&Expr::var(0)).len();
    let pagie = bench::instance("Pagie-1").unwrap();
    let rows = generate_dataset(&pagie, 0).unwrap().count(bench::Split::Train);
    let round_trip = bench::catalog_from_json(&bench::catalog_to_json(&catalog).unwrap()).unwrap() == catalog;
    let pass = problems.is_empty() && dims == 11 && rows == 676 && round_trip;
    verdict(
        pass,
        format!("I.9.18 objective vector {dims}-dim, Pagie-1 training rows {rows}, JSON round trip {round_trip}, problems {problems:?}"),
    )
}

const DESK_POP: usize = 200;
const DESK_EVALS: usize = 50_000;
const DESK_SEEDS: u64 = 10;

#[derive(Default)]
struct DeskRuns {
    runs: Vec<(String, Algorithm, RunResult)>,
}

impl DeskRuns {
    fn results(&self, instance: &str, algorithm: Algorithm) -> Vec<&RunResult> {
        self.runs.iter().filter(|(i, a, _)| i == instance && *a == algorithm).map(|(_, _, r)| r).collect()
    }
}

fn desk_config(algorithm: Algorithm) -> MoeaConfig {
    MoeaConfig { algorithm, population_size: DESK_POP, max_evaluations: DESK_EVALS, threads: 1, ..MoeaConfig::default() }
}

fn desk_run(instance: &ProblemInstance, algorithm: Algorithm, seed: u64) -> (RunResult, RunOutcome) {
    run_single(instance, algorithm, seed, &GpConfig::default(), &desk_config(algorithm)).expect("run")
}

fn feasibility_run(store: &mut DeskRuns) -> Verdict {
    let start = Instant::now();
    let inst = bench::instance("I.6.20").unwrap();
    let mut mc_rng = ChaCha8Rng::seed_from_u64(7);
    let (mut with_feasible, mut confirmed, mut undefined) = (0, 0, 0usize);
    let mut notes = Vec::new();
    for seed in 0..DESK_SEEDS {
        let (result, outcome) = desk_run(&inst, Algorithm::Nsga3, seed);
        store.runs.push((inst.name.clone(), Algorithm::Nsga3, result));
        let Some(best) = outcome.feasible().min_by(|a, b| a.objectives.nmse().total_cmp(&b.objectives.nmse())) else {
            continue;
        };
        with_feasible += 1;
        let checks: Vec<_> =
            inst.constraints.iter().map(|c| sample_constraint(&best.genotype, c, 1000, &mut mc_rng)).collect();
        undefined += checks.iter().map(|c| c.undefined).sum::<usize>();
        if checks.iter().all(|c| c.violations == 0) {
            confirmed += 1;
        } else {
            notes.push(format!("seed {seed}: {} {checks:?}", best.genotype));
        }
    }
    let elapsed = start.elapsed();
    let pass = with_feasible >= 8 && confirmed == with_feasible && elapsed < Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "feasible final population in {with_feasible}/{DESK_SEEDS} seeds, sampling confirms {confirmed}/{with_feasible} \
             ({undefined} undefined sample points), {:.0}s; {notes:?}",
            elapsed.as_secs_f64()
        ),
    )
}

fn sanity_bound(store: &mut DeskRuns) -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["I.6.20", "I.30.5", "III.10.19"] {
        let inst = bench::instance(name).unwrap();
        for algorithm in [Algorithm::Nsga2, Algorithm::Nsga3] {
            if store.results(name, algorithm).len() < DESK_SEEDS as usize {
                for seed in 0..DESK_SEEDS {
                    let (result, _) = desk_run(&inst, algorithm, seed);
                    store.runs.push((name.to_string(), algorithm, result));
                }
            }
            let test: Vec<f64> = store.results(name, algorithm).iter().map(|r| r.test_nmse).collect();
            let m = median(&test).unwrap();
            pass &= m < 100.0;
            lines.push(format!("{name} {}: {m:.2}", algorithm.name()));
        }
    }
    verdict(pass, format!("median test NMSE {}", lines.join(", ")))
}

fn determinism() -> Verdict {
    let inst = bench::instance("I.30.5").unwrap();
    let config = MoeaConfig {
        population_size: 100,
        max_evaluations: 5_000,
        threads: 1,
        ..MoeaConfig::default()
    };
    let mut same = true;
    for algorithm in [Algorithm::Nsga2, Algorithm::Nsga3] {
        let config = MoeaConfig { algorithm, ..config.clone() };
        let data = generate_dataset(&inst, 11).unwrap();
        let evaluator = Evaluator::new(&inst, &data).unwrap();
        let a = moea::run(&evaluator, &GpConfig::default(), &config, 11).unwrap();
        let b = moea::run(&evaluator, &GpConfig::default(), &config, 11).unwrap();
        same &= a.best.genotype.to_string() == b.best.genotype.to_string()
            && a.best.objectives.values() == b.best.objectives.values()
            && a.population.len() == b.population.len()
            && a.population.iter().zip(&b.population).all(|(x, y)| {
                x.genotype == y.genotype && x.objectives.values() == y.objectives.values()
            });
    }
    let (r1, _) = run_single(&inst, Algorithm::Nsga3, 5, &GpConfig::default(), &config).unwrap();
    let (r2, _) = run_single(&inst, Algorithm::Nsga3, 5, &GpConfig::default(), &config).unwrap();
    same &= r1.model == r2.model && r1.test_nmse == r2.test_nmse && r1.penalties == r2.penalties;
    verdict(same, format!("identical models and objective values across repeated runs: {same}"))
}

fn full_scale() -> String {
    let inst = bench::instance("I.6.20").unwrap();
    let mut medians = Vec::new();
    for algorithm in [Algorithm::Nsga2, Algorithm::Nsga3] {
        let config = MoeaConfig { algorithm, threads: 0, ..MoeaConfig::default() };
        let test: Vec<f64> = (0..10)
            .map(|seed| run_single(&inst, algorithm, seed, &GpConfig::default(), &config).expect("run").0.test_nmse)
            .collect();
        medians.push(median(&test).unwrap());
    }
    let ordering = if medians[1] < medians[0] { "NSGA-III better, as reported" } else { "NSGA-III not better" };
    format!(
        "median test NMSE NSGA-II {:.2} (paper 20.88), NSGA-III {:.2} (paper 19.14); {ordering}",
        medians[0], medians[1]
    )
}
