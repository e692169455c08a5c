//! The 1+n objective vector: NMSE on the training data plus one
//! interval-arithmetic penalty per shape constraint.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{Dataset, ProblemInstance};
use crate::expr::{Expr, VariableBox};
use crate::interval::{ia_eval, Interval};

/// Worst value an objective can take. Used for undefined predictions,
/// Empty enclosures and unbounded violations.
pub const SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Positivity,
    Negativity,
    ModelBounds,
    MonotoneIncreasing,
    MonotoneDecreasing,
}

impl ConstraintKind {
    pub fn is_monotone(self) -> bool {
        matches!(self, ConstraintKind::MonotoneIncreasing | ConstraintKind::MonotoneDecreasing)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("target vector has zero variance")]
    ZeroVariance,
    #[error("need at least two targets, got {0}")]
    TooFewTargets(usize),
    #[error("target vector contains a non-finite value at row {0}")]
    NonFiniteTarget(usize),
    #[error("length mismatch: {targets} targets vs {predictions} predictions")]
    LengthMismatch { targets: usize, predictions: usize },
    #[error("monotone constraint needs a variable index")]
    MissingVariable,
    #[error("constraint target must be a proper interval")]
    InvalidTarget,
    #[error("constraint region does not lie inside the input space")]
    RegionOutsideInputSpace,
    #[error("constraint variable {variable} out of range for arity {arity}")]
    VariableOutOfRange { variable: usize, arity: usize },
}

/// One shape requirement on the model or on one of its partial derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeConstraint {
    pub kind: ConstraintKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<usize>,
    pub target: Interval,
    pub region: VariableBox,
}

impl ShapeConstraint {
    pub fn positivity(region: VariableBox) -> Self {
        Self::unchecked(ConstraintKind::Positivity, None, Interval::new(0.0, f64::INFINITY), region)
    }

    pub fn negativity(region: VariableBox) -> Self {
        Self::unchecked(ConstraintKind::Negativity, None, Interval::new(f64::NEG_INFINITY, 0.0), region)
    }

    pub fn bounds(lo: f64, hi: f64, region: VariableBox) -> Self {
        Self::unchecked(ConstraintKind::ModelBounds, None, Interval::new(lo, hi), region)
    }

    /// Non-strict `d f / d x_v >= 0`.
    pub fn increasing(variable: usize, region: VariableBox) -> Self {
        Self::unchecked(
            ConstraintKind::MonotoneIncreasing,
            Some(variable),
            Interval::new(0.0, f64::INFINITY),
            region,
        )
    }

    /// Non-strict `d f / d x_v <= 0`.
    pub fn decreasing(variable: usize, region: VariableBox) -> Self {
        Self::unchecked(
            ConstraintKind::MonotoneDecreasing,
            Some(variable),
            Interval::new(f64::NEG_INFINITY, 0.0),
            region,
        )
    }

    fn unchecked(kind: ConstraintKind, variable: Option<usize>, target: Interval, region: VariableBox) -> Self {
        Self { kind, variable, target, region }
    }

    /// Checks the invariants against the instance input space.
    pub fn validate(&self, input_space: &VariableBox) -> Result<(), ObjectiveError> {
        if self.target.is_empty() {
            return Err(ObjectiveError::InvalidTarget);
        }
        if !self.region.is_subset_of(input_space) {
            return Err(ObjectiveError::RegionOutsideInputSpace);
        }
        match (self.kind.is_monotone(), self.variable) {
            (true, None) => Err(ObjectiveError::MissingVariable),
            (true, Some(v)) if v >= input_space.arity() => Err(ObjectiveError::VariableOutOfRange {
                variable: v,
                arity: input_space.arity(),
            }),
            _ => Ok(()),
        }
    }

    /// The function whose range the target applies to: the model itself or
    /// its simplified partial derivative.
    pub fn constrained_function(&self, expr: &Expr) -> Expr {
        match (self.kind.is_monotone(), self.variable) {
            (true, Some(v)) => expr.differentiate(v).simplified(),
            _ => expr.clone(),
        }
    }
}

/// `[nmse, P_1, ..., P_n]`, all minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Self {
        ObjectiveVector(values.into_iter().map(sanitize).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn nmse(&self) -> f64 {
        self.0[0]
    }

    pub fn penalties(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn penalty_sum(&self) -> f64 {
        self.penalties().iter().sum()
    }

    /// Every constraint penalty is exactly zero.
    pub fn is_feasible(&self) -> bool {
        self.penalties().iter().all(|&p| p == 0.0)
    }
}

impl std::ops::Index<usize> for ObjectiveVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() || v > SENTINEL {
        SENTINEL
    } else {
        v.max(0.0)
    }
}

/// Population variance (divisor N).
pub fn population_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Normalized mean squared error in percent, `100 / (var(y) N) * sum (y - yhat)^2`.
///
/// `var` is the population variance, so predicting the mean scores exactly
/// 100. Any non-finite prediction scores [`SENTINEL`].
pub fn nmse(y: &[f64], yhat: &[f64]) -> Result<f64, ObjectiveError> {
    let target = TrainingTarget::new(y.to_vec())?;
    target.nmse(yhat)
}

/// A validated target vector with its variance cached.
#[derive(Debug, Clone)]
pub struct TrainingTarget {
    y: Vec<f64>,
    variance: f64,
}

impl TrainingTarget {
    pub fn new(y: Vec<f64>) -> Result<Self, ObjectiveError> {
        if y.len() < 2 {
            return Err(ObjectiveError::TooFewTargets(y.len()));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFiniteTarget(row));
        }
        let variance = population_variance(&y);
        if !(variance > 0.0) {
            return Err(ObjectiveError::ZeroVariance);
        }
        Ok(Self { y, variance })
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn nmse(&self, yhat: &[f64]) -> Result<f64, ObjectiveError> {
        if yhat.len() != self.y.len() {
            return Err(ObjectiveError::LengthMismatch { targets: self.y.len(), predictions: yhat.len() });
        }
        Ok(self.nmse_unchecked(yhat))
    }

    fn nmse_unchecked(&self, yhat: &[f64]) -> f64 {
        let mut sse = 0.0;
        for (y, p) in self.y.iter().zip(yhat) {
            if !p.is_finite() {
                return SENTINEL;
            }
            sse += (y - p) * (y - p);
        }
        sanitize(100.0 / (self.variance * self.y.len() as f64) * sse)
    }
}

/// Violation of `target` by the enclosure `range`: `|min(inf I - inf c, 0)| + |max(sup I - sup c, 0)|`.
///
/// An infinite side of the target never contributes. An Empty enclosure,
/// or an infinite enclosure bound against a finite target side, scores
/// [`SENTINEL`].
pub fn interval_penalty(range: Interval, target: Interval) -> f64 {
    if range.is_empty() {
        return SENTINEL;
    }
    let lower = if target.lo() == f64::NEG_INFINITY {
        0.0
    } else if range.lo() == f64::NEG_INFINITY {
        return SENTINEL;
    } else {
        (range.lo() - target.lo()).min(0.0).abs()
    };
    let upper = if target.hi() == f64::INFINITY {
        0.0
    } else if range.hi() == f64::INFINITY {
        return SENTINEL;
    } else {
        (range.hi() - target.hi()).max(0.0).abs()
    };
    sanitize(lower + upper)
}

/// Penalty of one constraint for one model.
pub fn constraint_penalty(expr: &Expr, constraint: &ShapeConstraint) -> f64 {
    let f = constraint.constrained_function(expr);
    interval_penalty(ia_eval(&f, &constraint.region), constraint.target)
}

/// Outcome of checking a constraint by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleCheck {
    pub samples: usize,
    /// Points where the constrained function was outside the target.
    pub violations: usize,
    /// Points where the constrained function was undefined.
    pub undefined: usize,
}

impl SampleCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.undefined == 0
    }
}

/// Point-samples `constraint` at `samples` uniform points of its region,
/// evaluating the model (or its symbolic derivative) directly. This does not
/// use interval arithmetic, so it is an independent check of a zero penalty.
pub fn sample_constraint<R: Rng + ?Sized>(
    expr: &Expr,
    constraint: &ShapeConstraint,
    samples: usize,
    rng: &mut R,
) -> SampleCheck {
    let f = match (constraint.kind.is_monotone(), constraint.variable) {
        (true, Some(v)) => expr.differentiate(v),
        _ => expr.clone(),
    };
    let mut check = SampleCheck { samples, ..SampleCheck::default() };
    let mut point = vec![0.0; constraint.region.arity()];
    for _ in 0..samples {
        for (x, b) in point.iter_mut().zip(constraint.region.bounds()) {
            *x = if b.lo() == b.hi() { b.lo() } else { rng.random_range(b.lo()..=b.hi()) };
        }
        let v = f.eval(&point);
        if v.is_nan() {
            check.undefined += 1;
        } else if !constraint.target.contains(v) {
            check.violations += 1;
        }
    }
    check
}

/// Evaluates models against one instance's training data and constraints,
/// counting evaluations against a shared budget.
#[derive(Debug)]
pub struct Evaluator {
    columns: Vec<Vec<f64>>,
    target: TrainingTarget,
    constraints: Vec<ShapeConstraint>,
    arity: usize,
    evaluations: AtomicUsize,
}

impl Evaluator {
    /// Uses the training rows of `data`.
    pub fn new(instance: &ProblemInstance, data: &Dataset) -> Result<Self, ObjectiveError> {
        let (columns, y) = data.train_columns();
        Self::from_parts(columns, y, instance.constraints.clone(), instance.arity())
    }

    pub fn from_parts(
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
        constraints: Vec<ShapeConstraint>,
        arity: usize,
    ) -> Result<Self, ObjectiveError> {
        let target = TrainingTarget::new(y)?;
        for col in &columns {
            if col.len() != target.values().len() {
                return Err(ObjectiveError::LengthMismatch {
                    targets: target.values().len(),
                    predictions: col.len(),
                });
            }
        }
        Ok(Self { columns, target, constraints, arity, evaluations: AtomicUsize::new(0) })
    }

    pub fn num_objectives(&self) -> usize {
        1 + self.constraints.len()
    }

    pub fn constraints(&self) -> &[ShapeConstraint] {
        &self.constraints
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn predict(&self, expr: &Expr) -> Vec<f64> {
        expr.eval_columns(&self.columns, self.target.values().len())
    }

    pub fn data_loss(&self, expr: &Expr) -> f64 {
        self.target.nmse_unchecked(&self.predict(expr))
    }

    /// Full objective vector; increments the evaluation counter once.
    pub fn evaluate(&self, expr: &Expr) -> ObjectiveVector {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let mut values = Vec::with_capacity(self.num_objectives());
        values.push(self.data_loss(expr));
        let mut derivatives: Vec<Option<Expr>> = vec![None; self.arity];
        for c in &self.constraints {
            let range = match (c.kind.is_monotone(), c.variable) {
                (true, Some(v)) if v < derivatives.len() => {
                    let d = derivatives[v].get_or_insert_with(|| expr.differentiate(v).simplified());
                    ia_eval(d, &c.region)
                }
                _ => ia_eval(&c.constrained_function(expr), &c.region),
            };
            values.push(interval_penalty(range, c.target));
        }
        ObjectiveVector::new(values)
    }
}

/// `[nmse, P_1..P_n]` of `expr` on the training rows of `data`.
pub fn evaluate_individual(
    expr: &Expr,
    instance: &ProblemInstance,
    data: &Dataset,
) -> Result<ObjectiveVector, ObjectiveError> {
    Ok(Evaluator::new(instance, data)?.evaluate(expr))
}
