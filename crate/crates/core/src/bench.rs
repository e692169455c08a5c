//! Built-in problem instances and their data generators.
//!
//! Nine Feynman equations plus Pagie-1. Feynman data: 300 uniform points in
//! the input box, sorted by the first variable, with the first and last 30
//! rows held out so the test set lies outside the hull of the training set.
//! Pagie-1 data: the 26x26 grid with spacing 0.4 on `[-5, 5]^2` for
//! training and the 25x25 grid offset by 0.2 for testing.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, VariableBox};
use crate::interval::Interval;
use crate::objectives::{ObjectiveError, ShapeConstraint};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("instance {name}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("instance {name}: {source}")]
    Constraint {
        name: String,
        #[source]
        source: ObjectiveError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How training and test data are produced for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataProtocol {
    /// `points` uniform samples, sorted by the first variable; the first and
    /// last `test_fraction` of the rows form the test set.
    UniformRandom { points: usize, test_fraction: f64 },
    /// Training grid `lo + step * k` per axis; test grid offset by `test_offset`.
    Grid { step: f64, test_offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Interval,
}

/// A benchmark problem: ground truth, input space and shape constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct ProblemInstance {
    pub name: String,
    pub ground_truth: Expr,
    pub variables: Vec<String>,
    pub input_space: VariableBox,
    /// Model bounds first, then monotonicity constraints in variable order.
    pub constraints: Vec<ShapeConstraint>,
    pub protocol: DataProtocol,
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    name: String,
    expression: Expr,
    variables: Vec<Variable>,
    constraints: Vec<ShapeConstraint>,
    protocol: DataProtocol,
}

impl From<ProblemInstance> for InstanceRecord {
    fn from(p: ProblemInstance) -> Self {
        let variables = p
            .variables
            .into_iter()
            .zip(p.input_space.bounds().iter().copied())
            .map(|(name, domain)| Variable { name, domain })
            .collect();
        InstanceRecord {
            name: p.name,
            expression: p.ground_truth,
            variables,
            constraints: p.constraints,
            protocol: p.protocol,
        }
    }
}

impl TryFrom<InstanceRecord> for ProblemInstance {
    type Error = BenchError;

    fn try_from(r: InstanceRecord) -> Result<Self, Self::Error> {
        let input_space = VariableBox::new(r.variables.iter().map(|v| v.domain).collect())
            .map_err(|e| BenchError::Invalid { name: r.name.clone(), reason: e.to_string() })?;
        let instance = ProblemInstance {
            name: r.name,
            ground_truth: r.expression,
            variables: r.variables.into_iter().map(|v| v.name).collect(),
            input_space,
            constraints: r.constraints,
            protocol: r.protocol,
        };
        instance.validate()?;
        Ok(instance)
    }
}

impl ProblemInstance {
    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    /// Length of the objective vector: NMSE plus one entry per constraint.
    pub fn num_objectives(&self) -> usize {
        1 + self.constraints.len()
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(String::as_str).collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |reason: String| BenchError::Invalid { name: self.name.clone(), reason };
        if self.variables.len() != self.input_space.arity() {
            return Err(invalid(format!(
                "{} variable names for a {}-dimensional input space",
                self.variables.len(),
                self.input_space.arity()
            )));
        }
        if self.ground_truth.arity() > self.arity() {
            return Err(invalid("ground truth references an undeclared variable".into()));
        }
        for b in self.input_space.bounds() {
            if !b.lo().is_finite() || !b.hi().is_finite() {
                return Err(invalid("input space must be bounded".into()));
            }
        }
        for c in &self.constraints {
            c.validate(&self.input_space)
                .map_err(|source| BenchError::Constraint { name: self.name.clone(), source })?;
        }
        Ok(())
    }
}

/// Builds the constraint list from a catalog tuple: model bounds first, then
/// one sign per variable (0 none, 1 increasing, -1 decreasing).
pub fn constraints_from_tuple(bounds: (f64, f64), signs: &[i8], space: &VariableBox) -> Vec<ShapeConstraint> {
    let mut out = vec![ShapeConstraint::bounds(bounds.0, bounds.1, space.clone())];
    for (v, &sign) in signs.iter().enumerate() {
        match sign {
            1 => out.push(ShapeConstraint::increasing(v, space.clone())),
            -1 => out.push(ShapeConstraint::decreasing(v, space.clone())),
            _ => {}
        }
    }
    out
}

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

/// Left-nested product of factors.
fn product(factors: Vec<Expr>) -> Expr {
    factors.into_iter().reduce(Expr::mul).expect("at least one factor")
}

fn feynman(
    name: &str,
    variables: &[&str],
    domains: &[(f64, f64)],
    ground_truth: Expr,
    signs: &[i8],
) -> ProblemInstance {
    let space = VariableBox::from_pairs(domains).expect("catalog domains are valid");
    ProblemInstance {
        name: name.into(),
        ground_truth,
        variables: variables.iter().map(|s| s.to_string()).collect(),
        constraints: constraints_from_tuple((0.0, f64::INFINITY), signs, &space),
        input_space: space,
        protocol: DataProtocol::UniformRandom { points: 300, test_fraction: 0.1 },
    }
}

fn pagie1() -> ProblemInstance {
    let space = VariableBox::from_pairs(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap();
    let negative_x = VariableBox::from_pairs(&[(-5.0, 0.0), (-5.0, 5.0)]).unwrap();
    let positive_x = VariableBox::from_pairs(&[(0.0, 5.0), (-5.0, 5.0)]).unwrap();
    let negative_y = VariableBox::from_pairs(&[(-5.0, 5.0), (-5.0, 0.0)]).unwrap();
    let positive_y = VariableBox::from_pairs(&[(-5.0, 5.0), (0.0, 5.0)]).unwrap();
    // 1/(1 + v^-4) written as v^4 / (1 + v^4), its continuous extension to v = 0
    let term = |v: usize| {
        let fourth = Expr::square(Expr::square(x(v)));
        Expr::div(fourth.clone(), Expr::add(c(1.0), fourth))
    };
    ProblemInstance {
        name: "Pagie-1".into(),
        ground_truth: Expr::add(term(0), term(1)),
        variables: vec!["x".into(), "y".into()],
        constraints: vec![
            ShapeConstraint::bounds(0.0, 2.0, space.clone()),
            ShapeConstraint::decreasing(0, negative_x),
            ShapeConstraint::increasing(0, positive_x),
            ShapeConstraint::decreasing(1, negative_y),
            ShapeConstraint::increasing(1, positive_y),
        ],
        input_space: space,
        protocol: DataProtocol::Grid { step: 0.4, test_offset: 0.2 },
    }
}

/// All ten built-in instances, in catalog order.
pub fn catalog() -> Vec<ProblemInstance> {
    vec![
        // (sigma, theta)
        feynman(
            "I.6.20",
            &["sigma", "theta"],
            &[(1.0, 3.0), (1.0, 3.0)],
            Expr::mul(
                Expr::exp(Expr::div(Expr::neg(Expr::square(Expr::div(x(1), x(0)))), c(2.0))),
                Expr::div(c(1.0), Expr::mul(Expr::sqrt(Expr::mul(c(2.0), c(PI))), x(0))),
            ),
            &[0, -1],
        ),
        // (x1, y1, z1, m1, m2, G, x2, y2, z2)
        feynman(
            "I.9.18",
            &["x1", "y1", "z1", "m1", "m2", "G", "x2", "y2", "z2"],
            &[
                (3.0, 4.0),
                (3.0, 4.0),
                (3.0, 4.0),
                (1.0, 2.0),
                (1.0, 2.0),
                (1.0, 2.0),
                (1.0, 2.0),
                (1.0, 2.0),
                (1.0, 2.0),
            ],
            Expr::div(
                product(vec![x(5), x(3), x(4)]),
                Expr::add(
                    Expr::add(Expr::square(Expr::sub(x(6), x(0))), Expr::square(Expr::sub(x(7), x(1)))),
                    Expr::square(Expr::sub(x(8), x(2))),
                ),
            ),
            &[-1, -1, -1, 1, 1, 1, 1, 1, 1],
        ),
        // (lambd, n, d); lambd in [1, 2] keeps lambd / (n d) <= 1
        feynman(
            "I.30.5",
            &["lambd", "n", "d"],
            &[(1.0, 2.0), (1.0, 5.0), (2.0, 5.0)],
            Expr::asin(Expr::div(x(0), Expr::mul(x(1), x(2)))),
            &[1, -1, -1],
        ),
        // (epsilon, c, Ef, r, omega, omega0)
        feynman(
            "I.32.17",
            &["epsilon", "c", "Ef", "r", "omega", "omega0"],
            &[(1.0, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0), (3.0, 5.0)],
            product(vec![
                c(0.5),
                x(0),
                x(1),
                Expr::square(x(2)),
                Expr::div(product(vec![c(8.0), c(PI), Expr::square(x(3))]), c(3.0)),
                Expr::div(
                    Expr::square(Expr::square(x(4))),
                    Expr::square(Expr::sub(Expr::square(x(4)), Expr::square(x(5)))),
                ),
            ]),
            &[1, 1, 1, 1, 1, -1],
        ),
        // (omega, T, h, kb, c)
        feynman(
            "I.41.16",
            &["omega", "T", "h", "kb", "c"],
            &[(1.0, 5.0); 5],
            Expr::div(
                Expr::mul(x(2), Expr::mul(Expr::square(x(0)), x(0))),
                product(vec![
                    Expr::square(c(PI)),
                    Expr::square(x(4)),
                    Expr::sub(Expr::exp(Expr::div(Expr::mul(x(2), x(0)), Expr::mul(x(3), x(1)))), c(1.0)),
                ]),
            ),
            &[0, 1, -1, 1, -1],
        ),
        // (m, v, c)
        feynman(
            "I.48.20",
            &["m", "v", "c"],
            &[(1.0, 5.0), (1.0, 2.0), (3.0, 20.0)],
            Expr::div(
                Expr::mul(x(0), Expr::square(x(2))),
                Expr::sqrt(Expr::sub(c(1.0), Expr::div(Expr::square(x(1)), Expr::square(x(2))))),
            ),
            &[1, 1, 1],
        ),
        // (n_rho, mom, B, kb, T)
        feynman(
            "II.35.21",
            &["n_rho", "mom", "B", "kb", "T"],
            &[(1.0, 5.0); 5],
            product(vec![
                x(0),
                x(1),
                Expr::tanh(Expr::div(Expr::mul(x(1), x(2)), Expr::mul(x(3), x(4)))),
            ]),
            &[1, 1, 1, -1, -1],
        ),
        // (p_d, Ef, t, h, omega, omega0)
        feynman(
            "III.9.52",
            &["p_d", "Ef", "t", "h", "omega", "omega0"],
            &[(1.0, 3.0), (1.0, 3.0), (1.0, 3.0), (1.0, 3.0), (1.0, 5.0), (1.0, 5.0)],
            Expr::mul(
                Expr::div(product(vec![x(0), x(1), x(2)]), x(3)),
                Expr::square(Expr::sin(Expr::div(Expr::mul(Expr::sub(x(4), x(5)), x(2)), c(2.0)))),
            ),
            &[1, 1, 0, -1, 0, 0],
        ),
        // (mom, Bx, By, Bz)
        feynman(
            "III.10.19",
            &["mom", "Bx", "By", "Bz"],
            &[(1.0, 5.0); 4],
            Expr::mul(
                x(0),
                Expr::sqrt(Expr::add(
                    Expr::add(Expr::square(x(1)), Expr::square(x(2))),
                    Expr::square(x(3)),
                )),
            ),
            &[1, 1, 1, 1],
        ),
        pagie1(),
    ]
}

/// Looks an instance up by name, ignoring ASCII case.
pub fn instance(name: &str) -> Result<ProblemInstance, BenchError> {
    catalog()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| BenchError::UnknownInstance(name.into()))
}

pub fn catalog_to_json(instances: &[ProblemInstance]) -> Result<String, BenchError> {
    Ok(serde_json::to_string_pretty(instances)?)
}

/// Parses and validates a catalog document.
pub fn catalog_from_json(json: &str) -> Result<Vec<ProblemInstance>, BenchError> {
    Ok(serde_json::from_str(json)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Input rows, targets and the train/test assignment of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn count(&self, which: Split) -> usize {
        self.split.iter().filter(|s| **s == which).count()
    }

    /// Column-major inputs and the targets of the rows in `which`.
    pub fn columns(&self, which: Split) -> (Vec<Vec<f64>>, Vec<f64>) {
        let arity = self.inputs.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); arity];
        let mut y = Vec::new();
        for ((row, target), s) in self.inputs.iter().zip(&self.targets).zip(&self.split) {
            if *s == which {
                for (col, v) in columns.iter_mut().zip(row) {
                    col.push(*v);
                }
                y.push(*target);
            }
        }
        (columns, y)
    }

    pub fn train_columns(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.columns(Split::Train)
    }

    pub fn test_columns(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.columns(Split::Test)
    }

    /// CSV with a header of the variable names, `target` and `split`.
    pub fn write_csv<W: Write>(&self, names: &[&str], out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = names.to_vec();
        header.extend(["target", "split"]);
        w.write_record(&header)?;
        for ((row, target), s) in self.inputs.iter().zip(&self.targets).zip(&self.split) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{target:?}"));
            rec.push(s.as_str().into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates the data for `instance`. Grid protocols ignore the seed.
pub fn generate_dataset(instance: &ProblemInstance, seed: u64) -> Result<Dataset, BenchError> {
    let data = match &instance.protocol {
        DataProtocol::UniformRandom { points, test_fraction } => {
            uniform_dataset(instance, *points, *test_fraction, seed)
        }
        DataProtocol::Grid { step, test_offset } => grid_dataset(instance, *step, *test_offset),
    };
    if let Some(row) = data.targets.iter().position(|t| !t.is_finite()) {
        return Err(BenchError::Invalid {
            name: instance.name.clone(),
            reason: format!("ground truth is undefined at generated row {row}: {:?}", data.inputs[row]),
        });
    }
    Ok(data)
}

fn uniform_dataset(instance: &ProblemInstance, points: usize, test_fraction: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs: Vec<Vec<f64>> = (0..points)
        .map(|_| {
            instance
                .input_space
                .bounds()
                .iter()
                .map(|b| if b.lo() == b.hi() { b.lo() } else { rng.random_range(b.lo()..=b.hi()) })
                .collect()
        })
        .collect();
    inputs.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let held_out = (points as f64 * test_fraction).round() as usize;
    let split = (0..points)
        .map(|i| if i < held_out || i >= points - held_out { Split::Test } else { Split::Train })
        .collect();
    let targets = inputs.iter().map(|p| instance.ground_truth.eval(p)).collect();
    Dataset { inputs, targets, split }
}

fn axis(lo: f64, hi: f64, step: f64, offset: f64) -> Vec<f64> {
    let count = ((hi - lo - 2.0 * offset) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| lo + offset + step * k as f64).collect()
}

fn grid_points(space: &VariableBox, step: f64, offset: f64) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = space.bounds().iter().map(|b| axis(b.lo(), b.hi(), step, offset)).collect();
    let mut rows = vec![Vec::new()];
    for values in &axes {
        rows = rows
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut r = prefix.clone();
                    r.push(*v);
                    r
                })
            })
            .collect();
    }
    rows
}

fn grid_dataset(instance: &ProblemInstance, step: f64, test_offset: f64) -> Dataset {
    let train = grid_points(&instance.input_space, step, 0.0);
    let test = grid_points(&instance.input_space, step, test_offset);
    let split = std::iter::repeat_n(Split::Train, train.len())
        .chain(std::iter::repeat_n(Split::Test, test.len()))
        .collect();
    let inputs: Vec<Vec<f64>> = train.into_iter().chain(test).collect();
    let targets = inputs.iter().map(|p| instance.ground_truth.eval(p)).collect();
    Dataset { inputs, targets, split }
}
