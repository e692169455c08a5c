//! Batch experiments: seeded runs over instances and algorithms, medians,
//! and the comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchError, ProblemInstance};
use crate::genetics::GpConfig;
use crate::moea::{self, Algorithm, MoeaConfig, MoeaError, RunOutcome};
use crate::objectives::{Evaluator, ObjectiveError, TrainingTarget};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Moea(#[from] MoeaError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("no algorithms selected")]
    NoAlgorithms,
    #[error("no results to report")]
    NoResults,
}

/// What to run. Deserializable from the `--config` JSON file; every field
/// has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Instance names, or `["all"]`.
    pub instances: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub gp: GpConfig,
    /// Algorithm-independent settings; `algorithm` is overridden per run.
    pub moea: MoeaConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            instances: vec!["all".into()],
            algorithms: vec![Algorithm::Nsga2, Algorithm::Nsga3],
            repetitions: 10,
            base_seed: 0,
            gp: GpConfig::default(),
            moea: MoeaConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn resolve_instances(&self) -> Result<Vec<ProblemInstance>, ExperimentError> {
        if self.instances.is_empty() || self.instances.iter().any(|s| s.eq_ignore_ascii_case("all")) {
            return Ok(bench::catalog());
        }
        Ok(self.instances.iter().map(|n| bench::instance(n)).collect::<Result<_, _>>()?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::NoRepetitions);
        }
        if self.algorithms.is_empty() {
            return Err(ExperimentError::NoAlgorithms);
        }
        self.gp.validate().map_err(MoeaError::from)?;
        self.moea.validate()?;
        self.resolve_instances()?;
        Ok(())
    }
}

/// One finished run, reduced to what the reports need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub instance: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub train_nmse: f64,
    pub test_nmse: f64,
    /// Constraint penalties of the reported model, `;`-separated in CSV.
    #[serde(with = "penalty_list")]
    pub penalties: Vec<f64>,
    pub feasible: bool,
    pub runtime_s: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub model: String,
}

mod penalty_list {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let joined: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        s.serialize_str(&joined.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';').map(|p| p.parse().map_err(serde::de::Error::custom)).collect()
    }
}

/// Runs one seeded search on `instance`. The dataset is generated from the
/// same seed, so both algorithms see identical data for a given repetition.
pub fn run_single(
    instance: &ProblemInstance,
    algorithm: Algorithm,
    seed: u64,
    gp: &GpConfig,
    moea_config: &MoeaConfig,
) -> Result<(RunResult, RunOutcome), ExperimentError> {
    let data = bench::generate_dataset(instance, seed)?;
    let evaluator = Evaluator::new(instance, &data)?;
    let config = MoeaConfig { algorithm, ..moea_config.clone() };
    let outcome = moea::run(&evaluator, gp, &config, seed)?;

    let (test_columns, test_y) = data.test_columns();
    let test_target = TrainingTarget::new(test_y)?;
    let rows = test_target.values().len();
    let test_nmse = test_target.nmse(&outcome.best.genotype.eval_columns(&test_columns, rows))?;

    let result = RunResult {
        instance: instance.name.clone(),
        algorithm,
        seed,
        train_nmse: outcome.best.objectives.nmse(),
        test_nmse,
        penalties: outcome.best.objectives.penalties().to_vec(),
        feasible: outcome.best.objectives.is_feasible(),
        runtime_s: outcome.runtime.as_secs_f64(),
        evaluations: outcome.evaluations,
        generations: outcome.generations,
        model: outcome.best.genotype.to_string(),
    };
    Ok((result, outcome))
}

#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub results: Vec<RunResult>,
    /// `(run label, error)` for every run or file that failed.
    pub failures: Vec<(String, String)>,
    pub report: Option<Report>,
}

impl ExperimentOutput {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Executes every (instance, algorithm, repetition) combination with seeds
/// `base_seed + repetition`. A failing run is recorded and the batch
/// continues. When `output_dir` is set, writes `results.csv`,
/// `summary.csv`, `summary.txt` and one generation log per run under `logs/`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, ExperimentError> {
    spec.validate()?;
    let instances = spec.resolve_instances()?;
    let mut out = ExperimentOutput::default();
    if let Some(dir) = &spec.output_dir {
        create_dir(&dir.join("logs"))?;
    }
    for instance in &instances {
        for &algorithm in &spec.algorithms {
            for rep in 0..spec.repetitions {
                let seed = spec.base_seed.wrapping_add(rep as u64);
                let label = format!("{}/{}/seed {}", instance.name, algorithm.key(), seed);
                match run_single(instance, algorithm, seed, &spec.gp, &spec.moea) {
                    Ok((result, outcome)) => {
                        if let Some(dir) = &spec.output_dir {
                            let path = dir.join("logs").join(log_file_name(&instance.name, algorithm, seed));
                            if let Err(e) = write_log(&path, &outcome) {
                                out.failures.push((path.display().to_string(), e.to_string()));
                            }
                        }
                        out.results.push(result);
                    }
                    Err(e) => out.failures.push((label, e.to_string())),
                }
            }
        }
    }
    if out.results.is_empty() {
        return Ok(out);
    }
    let report = report(&out.results)?;
    if let Some(dir) = &spec.output_dir {
        let files = [
            ("results.csv", results_csv(&out.results)),
            ("summary.csv", Ok(report.csv.clone())),
            ("summary.txt", Ok(report.text.clone())),
        ];
        for (name, content) in files {
            let path = dir.join(name);
            let written = content.and_then(|c| {
                fs::write(&path, c).map_err(|source| ExperimentError::Io { path: path.clone(), source })
            });
            if let Err(e) = written {
                out.failures.push((path.display().to_string(), e.to_string()));
            }
        }
    }
    out.report = Some(report);
    Ok(out)
}

fn create_dir(path: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(path).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

fn log_file_name(instance: &str, algorithm: Algorithm, seed: u64) -> String {
    format!("{}_{}_{}.csv", instance.replace(['.', '/'], "_"), algorithm.key(), seed)
}

fn write_log(path: &Path, outcome: &RunOutcome) -> Result<(), ExperimentError> {
    let file = fs::File::create(path).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
    outcome.write_log_csv(file)?;
    Ok(())
}

/// Per-run rows as CSV.
pub fn results_csv(results: &[RunResult]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<RunResult>, ExperimentError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub algorithm: Algorithm,
    pub median_test_nmse: f64,
    pub median_runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    /// Aligned text: median test NMSE table then median runtime table.
    pub text: String,
    /// `instance,algorithm,median_test_nmse,median_runtime_s`.
    pub csv: String,
}

/// Medians per (instance, algorithm) in first-seen order.
pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, Algorithm)> = Vec::new();
    let mut groups: BTreeMap<(String, Algorithm), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in results {
        let key = (r.instance.clone(), r.algorithm);
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(r.test_nmse);
        entry.1.push(r.runtime_s);
    }
    order
        .into_iter()
        .map(|key| {
            let (nmse, runtime) = &groups[&key];
            SummaryRow {
                instance: key.0,
                algorithm: key.1,
                median_test_nmse: median(nmse).unwrap(),
                median_runtime_s: median(runtime).unwrap(),
            }
        })
        .collect()
}

impl PartialOrd for Algorithm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Algorithm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(other.key())
    }
}

/// Text tables mirroring the NMSE and runtime comparison layout. In the
/// NMSE table the lowest median per instance is marked with `*`; tied
/// algorithms are all marked.
pub fn report(results: &[RunResult]) -> Result<Report, ExperimentError> {
    if results.is_empty() {
        return Err(ExperimentError::NoResults);
    }
    let rows = summarize(results);
    let mut algorithms: Vec<Algorithm> = rows.iter().map(|r| r.algorithm).collect();
    algorithms.sort();
    algorithms.dedup();
    let mut instances: Vec<String> = Vec::new();
    for r in &rows {
        if !instances.contains(&r.instance) {
            instances.push(r.instance.clone());
        }
    }
    let lookup = |inst: &str, alg: Algorithm| rows.iter().find(|r| r.instance == inst && r.algorithm == alg);

    let mut text = String::new();
    let nmse_cells = |inst: &str| -> Vec<String> {
        let best = algorithms
            .iter()
            .filter_map(|a| lookup(inst, *a).map(|r| r.median_test_nmse))
            .fold(f64::INFINITY, f64::min);
        algorithms
            .iter()
            .map(|a| match lookup(inst, *a) {
                Some(r) if r.median_test_nmse == best => format!("*{:.2}", r.median_test_nmse),
                Some(r) => format!("{:.2}", r.median_test_nmse),
                None => "-".into(),
            })
            .collect()
    };
    let runtime_cells = |inst: &str| -> Vec<String> {
        algorithms
            .iter()
            .map(|a| lookup(inst, *a).map_or_else(|| "-".into(), |r| format!("{:.2}", r.median_runtime_s)))
            .collect()
    };
    write_table(&mut text, "Median test error (NMSE in %)", &algorithms, &instances, nmse_cells);
    text.push('\n');
    write_table(&mut text, "Median runtime (in seconds)", &algorithms, &instances, runtime_cells);

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("utf-8");
    Ok(Report { rows, text, csv })
}

fn write_table(
    out: &mut String,
    title: &str,
    algorithms: &[Algorithm],
    instances: &[String],
    cells: impl Fn(&str) -> Vec<String>,
) {
    let body: Vec<Vec<String>> = instances.iter().map(|i| cells(i)).collect();
    let first = instances.iter().map(String::len).chain(["Instance".len()]).max().unwrap();
    let widths: Vec<usize> = algorithms
        .iter()
        .enumerate()
        .map(|(k, a)| body.iter().map(|row| row[k].len()).chain([a.name().len()]).max().unwrap())
        .collect();
    let _ = writeln!(out, "{title}");
    let mut header = format!("{:<first$}", "Instance");
    for (a, w) in algorithms.iter().zip(&widths) {
        let _ = write!(header, "  {:>w$}", a.name());
    }
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "{}", "-".repeat(header.len()));
    for (inst, row) in instances.iter().zip(&body) {
        let mut line = format!("{inst:<first$}");
        for (cell, w) in row.iter().zip(&widths) {
            let _ = write!(line, "  {cell:>w$}");
        }
        let _ = writeln!(out, "{line}");
    }
}
