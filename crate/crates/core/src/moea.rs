//! Evolutionary main loop with NSGA-II and NSGA-III survival.
//!
//! Both backends share the same generational scheme: `N` offspring are bred
//! by tournament selection, crossover and mutation, evaluated, merged with
//! the `N` parents and cut back to `N` by the configured environmental
//! selection. The run stops once the evaluation budget is used up.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::genetics::{self, GpConfig, GpConfigError};
use crate::objectives::{Evaluator, ObjectiveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Nsga3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "NSGA-II",
            Algorithm::Nsga3 => "NSGA-III",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Nsga3 => "nsga3",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nsga2" | "nsgaii" => Ok(Algorithm::Nsga2),
            "nsga3" | "nsgaiii" => Ok(Algorithm::Nsga3),
            _ => Err(format!("unknown algorithm `{s}` (expected nsga2 or nsga3)")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoeaConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub max_evaluations: usize,
    pub tournament_group_size: usize,
    /// NSGA-III lattice divisions; `None` picks the largest lattice with at
    /// most `2 * population_size` points.
    pub reference_divisions: Option<usize>,
    /// Break NSGA-III tournament ties by niche count (otherwise uniformly).
    pub niche_tiebreak: bool,
    /// Evaluation threads; 0 uses the ambient rayon pool.
    pub threads: usize,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nsga3,
            population_size: 1000,
            max_evaluations: 500_000,
            tournament_group_size: 5,
            reference_divisions: None,
            niche_tiebreak: true,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoeaError {
    #[error("population size must be even and at least 2, got {0}")]
    PopulationSize(usize),
    #[error("tournament group size must be at least 2, got {0}")]
    GroupSize(usize),
    #[error("evaluation budget must cover the initial population ({budget} < {population})")]
    Budget { budget: usize, population: usize },
    #[error("reference divisions must be at least 1")]
    Divisions,
    #[error("at least two objectives are required, got {0}")]
    Objectives(usize),
    #[error(transparent)]
    Gp(#[from] GpConfigError),
    #[error("could not build evaluation thread pool: {0}")]
    ThreadPool(String),
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<(), MoeaError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(MoeaError::PopulationSize(self.population_size));
        }
        if self.tournament_group_size < 2 {
            return Err(MoeaError::GroupSize(self.tournament_group_size));
        }
        if self.max_evaluations < self.population_size {
            return Err(MoeaError::Budget { budget: self.max_evaluations, population: self.population_size });
        }
        if self.reference_divisions == Some(0) {
            return Err(MoeaError::Divisions);
        }
        Ok(())
    }
}

/// A genotype with its objectives and selection bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Expr,
    pub objectives: ObjectiveVector,
    /// Index of the non-dominated front (0 = best).
    pub rank: usize,
    /// NSGA-II crowding distance.
    pub crowding: f64,
    /// NSGA-III associated reference point and its niche count among survivors.
    pub reference: Option<usize>,
    pub niche_count: usize,
}

impl Individual {
    pub fn new(genotype: Expr, objectives: ObjectiveVector) -> Self {
        Self { genotype, objectives, rank: 0, crowding: 0.0, reference: None, niche_count: 0 }
    }

    /// Lexicographic quality used to pick the reported model: total
    /// penalty first (zero for feasible models), then NMSE.
    pub fn report_key(&self) -> (f64, f64) {
        (self.objectives.penalty_sum(), self.objectives.nmse())
    }

    fn better_report_than(&self, other: &Individual) -> bool {
        self.report_key() < other.report_key()
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        self.values()
    }
}

/// Pareto dominance for minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sorting. Returns fronts of indices into `points`,
/// each front in ascending index order.
pub fn nondominated_sort<V: AsRef<[f64]>>(points: &[V]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n == 0 {
        return distance;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a].as_ref()[k].total_cmp(&front[b].as_ref()[k]).then(a.cmp(&b)));
        let lo = front[order[0]].as_ref()[k];
        let hi = front[order[n - 1]].as_ref()[k];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]].as_ref()[k] - front[order[w - 1]].as_ref()[k];
            distance[order[w]] += gap / range;
        }
    }
    distance
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of Das-Dennis points for `m` objectives and `p` divisions.
pub fn reference_point_count(m: usize, p: usize) -> u128 {
    binomial(m + p - 1, p)
}

/// Largest `p` whose lattice has at most `2 * population_size` points (at least 1).
pub fn default_divisions(num_objectives: usize, population_size: usize) -> usize {
    let cap = 2 * population_size as u128;
    let mut p = 1;
    while reference_point_count(num_objectives, p + 1) <= cap {
        p += 1;
    }
    p
}

/// Das-Dennis simplex lattice: every vector of non-negative multiples of
/// `1/p` summing to one.
pub fn generate_reference_points(m: usize, p: usize) -> Vec<Vec<f64>> {
    fn fill(m: usize, p: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == m - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / p as f64).collect());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            fill(m, p, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    fill(m, p, p, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 1e-12) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Translates by the ideal point and scales by hyperplane intercepts of the
/// extreme points, falling back to per-objective maxima when the
/// intercepts are degenerate.
pub fn normalize_objectives(points: &[&[f64]]) -> Vec<Vec<f64>> {
    if points.is_empty() {
        return Vec::new();
    }
    let m = points[0].len();
    let ideal: Vec<f64> = (0..m).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let translated: Vec<Vec<f64>> =
        points.iter().map(|p| p.iter().zip(&ideal).map(|(v, z)| v - z).collect()).collect();

    let extremes: Vec<Vec<f64>> = (0..m)
        .map(|axis| {
            let asf = |p: &Vec<f64>| {
                p.iter()
                    .enumerate()
                    .map(|(k, v)| v / if k == axis { 1.0 } else { 1e-6 })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            translated
                .iter()
                .min_by(|a, b| asf(a).total_cmp(&asf(b)))
                .expect("nonempty")
                .clone()
        })
        .collect();

    let maxima: Vec<f64> =
        (0..m).map(|k| translated.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let intercepts = solve_linear(extremes, vec![1.0; m])
        .map(|plane| plane.iter().map(|a| 1.0 / a).collect::<Vec<f64>>())
        .filter(|ic| ic.iter().all(|v| v.is_finite() && *v > 1e-10))
        .unwrap_or_else(|| maxima.clone());
    let scale: Vec<f64> = intercepts.iter().map(|v| if *v > 1e-12 && v.is_finite() { *v } else { 1.0 }).collect();

    translated
        .into_iter()
        .map(|p| p.iter().zip(&scale).map(|(v, s)| v / s).collect())
        .collect()
}

/// Nearest reference direction by perpendicular distance.
pub fn associate(point: &[f64], references: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, w) in references.iter().enumerate() {
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        let dot: f64 = w.iter().zip(point).map(|(a, b)| a * b).sum();
        let t = dot / norm2;
        let d2: f64 = point.iter().zip(w).map(|(p, wv)| (p - t * wv) * (p - t * wv)).sum();
        let d = d2.sqrt();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// NSGA-II survival: whole fronts, then the splitting front by descending
/// crowding distance. Survivors carry rank and crowding.
pub fn nsga2_environmental_selection(mut population: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = nondominated_sort(&population.iter().map(|i| &i.objectives).collect::<Vec<_>>());
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for (rank, front) in fronts.iter().enumerate() {
        if keep.len() >= n {
            break;
        }
        let objs: Vec<&ObjectiveVector> = front.iter().map(|&i| &population[i].objectives).collect();
        let dist = crowding_distance(&objs);
        for (&i, d) in front.iter().zip(&dist) {
            population[i].rank = rank;
            population[i].crowding = *d;
        }
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            keep.extend(order.iter().take(n - keep.len()).map(|&k| front[k]));
        }
    }
    take_indices(population, &keep)
}

fn take_indices(population: Vec<Individual>, keep: &[usize]) -> Vec<Individual> {
    let mut slots: Vec<Option<Individual>> = population.into_iter().map(Some).collect();
    keep.iter().map(|&i| slots[i].take().expect("index selected once")).collect()
}

/// NSGA-III survival with reference-point niching. Survivors carry rank,
/// associated reference point and that point's niche count.
pub fn nsga3_environmental_selection<R: Rng + ?Sized>(
    mut population: Vec<Individual>,
    references: &[Vec<f64>],
    n: usize,
    rng: &mut R,
) -> Vec<Individual> {
    let fronts = nondominated_sort(&population.iter().map(|i| &i.objectives).collect::<Vec<_>>());
    let mut selected: Vec<usize> = Vec::with_capacity(n);
    let mut last: Vec<usize> = Vec::new();
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            population[i].rank = rank;
        }
        if selected.len() + front.len() <= n {
            selected.extend(front);
            if selected.len() == n {
                break;
            }
        } else {
            last = front.clone();
            break;
        }
    }

    let considered: Vec<usize> = selected.iter().chain(&last).copied().collect();
    let objs: Vec<&[f64]> = considered.iter().map(|&i| population[i].objectives.values()).collect();
    let normalized = normalize_objectives(&objs);
    let mut assoc = vec![(0usize, 0.0f64); population.len()];
    for (&i, p) in considered.iter().zip(&normalized) {
        assoc[i] = associate(p, references);
    }

    let mut niche = vec![0usize; references.len()];
    for &i in &selected {
        niche[assoc[i].0] += 1;
    }

    let mut remaining = n - selected.len();
    let mut excluded = vec![false; references.len()];
    let mut pool = last;
    while remaining > 0 && !pool.is_empty() {
        let min_count = (0..references.len())
            .filter(|&j| !excluded[j])
            .map(|j| niche[j])
            .min()
            .expect("a reference point with candidates remains");
        let candidates: Vec<usize> =
            (0..references.len()).filter(|&j| !excluded[j] && niche[j] == min_count).collect();
        let j = candidates[rng.random_range(0..candidates.len())];
        let members: Vec<usize> = (0..pool.len()).filter(|&k| assoc[pool[k]].0 == j).collect();
        if members.is_empty() {
            excluded[j] = true;
            continue;
        }
        let pick = if niche[j] == 0 {
            *members
                .iter()
                .min_by(|&&a, &&b| assoc[pool[a]].1.total_cmp(&assoc[pool[b]].1).then(a.cmp(&b)))
                .unwrap()
        } else {
            members[rng.random_range(0..members.len())]
        };
        selected.push(pool.swap_remove(pick));
        niche[j] += 1;
        remaining -= 1;
    }

    for &i in &selected {
        let (j, _) = assoc[i];
        population[i].reference = Some(j);
        population[i].niche_count = niche[j];
        population[i].crowding = 0.0;
    }
    take_indices(population, &selected)
}

/// Tournament with replacement. Lower rank wins, then larger crowding
/// distance (NSGA-II) or smaller niche count (NSGA-III); remaining ties
/// are broken uniformly. Returns an index into `population`.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[Individual],
    group_size: usize,
    algorithm: Algorithm,
    niche_tiebreak: bool,
    rng: &mut R,
) -> usize {
    let better = |a: &Individual, b: &Individual| -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let by_rank = b.rank.cmp(&a.rank);
        if by_rank != Ordering::Equal {
            return by_rank;
        }
        match algorithm {
            Algorithm::Nsga2 => a.crowding.total_cmp(&b.crowding),
            Algorithm::Nsga3 if niche_tiebreak => b.niche_count.cmp(&a.niche_count),
            Algorithm::Nsga3 => Ordering::Equal,
        }
    };
    let mut winner = rng.random_range(0..population.len());
    let mut ties = 1u32;
    for _ in 1..group_size {
        let c = rng.random_range(0..population.len());
        match better(&population[c], &population[winner]) {
            std::cmp::Ordering::Greater => {
                winner = c;
                ties = 1;
            }
            std::cmp::Ordering::Equal => {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    winner = c;
                }
            }
            std::cmp::Ordering::Less => {}
        }
    }
    winner
}

/// One line of the per-generation run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub evaluations: usize,
    /// Best NMSE among feasible models seen so far (empty if none yet).
    pub best_feasible_nmse: Option<f64>,
    /// Best NMSE among feasible members of the current population.
    pub population_feasible_nmse: Option<f64>,
    pub min_penalty_sum: f64,
    pub front0_size: usize,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub population: Vec<Individual>,
    /// Best model evaluated during the run: lowest NMSE among feasible ones,
    /// or lowest penalty sum (then NMSE) when none was feasible.
    pub best: Individual,
    pub evaluations: usize,
    pub generations: usize,
    pub runtime: Duration,
    pub reference_divisions: Option<usize>,
    pub log: Vec<GenerationRecord>,
}

impl RunOutcome {
    /// Feasible members of the final population.
    pub fn feasible(&self) -> impl Iterator<Item = &Individual> {
        self.population.iter().filter(|i| i.objectives.is_feasible())
    }

    /// Best member of the final population by the reporting key.
    pub fn final_best(&self) -> &Individual {
        self.population
            .iter()
            .min_by(|a, b| a.report_key().partial_cmp(&b.report_key()).unwrap())
            .expect("population is nonempty")
    }

    /// The run log as CSV.
    pub fn write_log_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["generation", "evaluations", "best_feasible_nmse", "population_feasible_nmse", "min_penalty_sum", "front0_size"])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
        for r in &self.log {
            w.write_record([
                r.generation.to_string(),
                r.evaluations.to_string(),
                opt(r.best_feasible_nmse),
                opt(r.population_feasible_nmse),
                format!("{:?}", r.min_penalty_sum),
                r.front0_size.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Survival {
    algorithm: Algorithm,
    references: Vec<Vec<f64>>,
}

impl Survival {
    fn select(&self, population: Vec<Individual>, n: usize, rng: &mut ChaCha8Rng) -> Vec<Individual> {
        match self.algorithm {
            Algorithm::Nsga2 => nsga2_environmental_selection(population, n),
            Algorithm::Nsga3 => nsga3_environmental_selection(population, &self.references, n, rng),
        }
    }
}

fn evaluate_all(evaluator: &Evaluator, genotypes: Vec<Expr>) -> Vec<Individual> {
    genotypes
        .into_par_iter()
        .map(|g| {
            let objectives = evaluator.evaluate(&g);
            Individual::new(g, objectives)
        })
        .collect()
}

fn record(generation: usize, evaluations: usize, population: &[Individual], best: &Individual) -> GenerationRecord {
    let population_feasible_nmse = population
        .iter()
        .filter(|i| i.objectives.is_feasible())
        .map(|i| i.objectives.nmse())
        .reduce(f64::min);
    GenerationRecord {
        generation,
        evaluations,
        best_feasible_nmse: best.objectives.is_feasible().then(|| best.objectives.nmse()),
        population_feasible_nmse,
        min_penalty_sum: population.iter().map(|i| i.objectives.penalty_sum()).fold(f64::INFINITY, f64::min),
        front0_size: population.iter().filter(|i| i.rank == 0).count(),
    }
}

/// Runs one seeded search against `evaluator`.
///
/// Results depend only on the inputs and `seed`: variation is sequential
/// on one seeded stream and parallel evaluation is order-independent.
pub fn run(evaluator: &Evaluator, gp: &GpConfig, config: &MoeaConfig, seed: u64) -> Result<RunOutcome, MoeaError> {
    gp.validate()?;
    config.validate()?;
    let m = evaluator.num_objectives();
    if m < 2 {
        return Err(MoeaError::Objectives(m));
    }
    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| MoeaError::ThreadPool(e.to_string()))?;
        return pool.install(|| run_inner(evaluator, gp, config, seed));
    }
    run_inner(evaluator, gp, config, seed)
}

fn run_inner(evaluator: &Evaluator, gp: &GpConfig, config: &MoeaConfig, seed: u64) -> Result<RunOutcome, MoeaError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.population_size;
    let arity = evaluator.arity();
    let m = evaluator.num_objectives();

    let divisions = match config.algorithm {
        Algorithm::Nsga2 => None,
        Algorithm::Nsga3 => Some(config.reference_divisions.unwrap_or_else(|| default_divisions(m, n))),
    };
    let survival = Survival {
        algorithm: config.algorithm,
        references: divisions.map(|p| generate_reference_points(m, p)).unwrap_or_default(),
    };

    let budget_start = evaluator.evaluations();
    let used = || evaluator.evaluations() - budget_start;

    let initial: Vec<Expr> = (0..n).map(|_| genetics::random_tree(gp, arity, &mut rng)).collect();
    let evaluated = evaluate_all(evaluator, initial);
    let mut best = best_of(&evaluated).clone();
    let mut population = survival.select(evaluated, n, &mut rng);
    let mut log = vec![record(0, used(), &population, &best)];
    let mut generation = 0;

    while used() < config.max_evaluations {
        generation += 1;
        let offspring: Vec<Expr> = (0..n).map(|_| breed(&population, arity, gp, config, &mut rng)).collect();
        let offspring = evaluate_all(evaluator, offspring);
        let candidate = best_of(&offspring);
        if candidate.better_report_than(&best) {
            best = candidate.clone();
        }
        let mut merged = population;
        merged.extend(offspring);
        population = survival.select(merged, n, &mut rng);
        log.push(record(generation, used(), &population, &best));
    }

    Ok(RunOutcome {
        algorithm: config.algorithm,
        population,
        best,
        evaluations: used(),
        generations: generation,
        runtime: started.elapsed(),
        reference_divisions: divisions,
        log,
    })
}

fn best_of(individuals: &[Individual]) -> &Individual {
    individuals
        .iter()
        .reduce(|a, b| if b.better_report_than(a) { b } else { a })
        .expect("nonempty batch")
}

/// One offspring. A child that went through neither crossover nor mutation
/// is mutated so no evaluation is spent on an exact copy.
fn breed(population: &[Individual], arity: usize, gp: &GpConfig, config: &MoeaConfig, rng: &mut ChaCha8Rng) -> Expr {
    let pick = |rng: &mut ChaCha8Rng| {
        tournament_select(population, config.tournament_group_size, config.algorithm, config.niche_tiebreak, rng)
    };
    let first = &population[pick(rng)].genotype;
    let mut varied = false;
    let mut child = if rng.random_bool(gp.crossover_prob) {
        varied = true;
        let second = &population[pick(rng)].genotype;
        genetics::crossover(first, second, gp, rng)
    } else {
        first.clone()
    };
    if !varied || rng.random_bool(gp.mutation_prob) {
        child = genetics::mutate(&child, arity, gp, rng);
    }
    child
}
