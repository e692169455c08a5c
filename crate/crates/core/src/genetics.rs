//! Tree creation and variation operators.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::expr::{BinaryOp, Expr, UnaryOp};

/// Attempts before a variation operator gives up and returns its input.
pub const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub max_length: usize,
    pub max_depth: usize,
    /// Closed range constants are drawn from.
    pub constant_range: (f64, f64),
    /// Share of mutations that are point mutations (the rest replace a subtree).
    pub mutation_point_prob: f64,
    /// Probability an offspring is produced by crossover rather than copied.
    pub crossover_prob: f64,
    /// Probability an offspring is mutated after crossover/copy.
    pub mutation_prob: f64,
    /// Probability a random leaf is a variable rather than a constant.
    pub variable_leaf_prob: f64,
    pub rng_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            max_length: 50,
            max_depth: 12,
            constant_range: (-20.0, 20.0),
            mutation_point_prob: 0.5,
            crossover_prob: 0.9,
            mutation_prob: 0.25,
            variable_leaf_prob: 0.5,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpConfigError {
    #[error("max_length must be at least 3, got {0}")]
    MaxLength(usize),
    #[error("max_depth must be at least 2, got {0}")]
    MaxDepth(usize),
    #[error("{name} must be a probability, got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("constant range must be finite with lo <= hi")]
    ConstantRange,
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpConfigError> {
        if self.max_length < 3 {
            return Err(GpConfigError::MaxLength(self.max_length));
        }
        if self.max_depth < 2 {
            return Err(GpConfigError::MaxDepth(self.max_depth));
        }
        for (name, value) in [
            ("mutation_point_prob", self.mutation_point_prob),
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("variable_leaf_prob", self.variable_leaf_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GpConfigError::Probability { name, value });
            }
        }
        let (lo, hi) = self.constant_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(GpConfigError::ConstantRange);
        }
        Ok(())
    }

    pub fn within_limits(&self, expr: &Expr) -> bool {
        expr.size() <= self.max_length && expr.depth() <= self.max_depth
    }

    fn random_constant<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.constant_range;
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

fn random_leaf<R: Rng + ?Sized>(config: &GpConfig, arity: usize, rng: &mut R) -> Expr {
    if rng.random_bool(config.variable_leaf_prob) {
        Expr::Var(rng.random_range(0..arity))
    } else {
        Expr::Const(config.random_constant(rng))
    }
}

/// Grows a tree of at most `budget` nodes and `depth` levels.
fn grow<R: Rng + ?Sized>(config: &GpConfig, arity: usize, budget: usize, depth: usize, rng: &mut R) -> Expr {
    if budget <= 1 || depth <= 1 {
        return random_leaf(config, arity, rng);
    }
    // binary nodes are twice as likely as unary ones when both fit
    if budget >= 3 && rng.random_bool(2.0 / 3.0) {
        let op = *BinaryOp::ALL.choose(rng).unwrap();
        let left_budget = rng.random_range(1..=budget - 2);
        let left = grow(config, arity, left_budget, depth - 1, rng);
        let right = grow(config, arity, budget - 1 - left.size(), depth - 1, rng);
        Expr::binary(op, left, right)
    } else {
        let op = *UnaryOp::ALL.choose(rng).unwrap();
        Expr::unary(op, grow(config, arity, budget - 1, depth - 1, rng))
    }
}

/// A random tree within `max_length` nodes and `max_depth` levels. The
/// target size is drawn uniformly from `1..=max_length`, so a population
/// covers small and large trees alike.
pub fn random_tree_within<R: Rng + ?Sized>(
    config: &GpConfig,
    arity: usize,
    max_length: usize,
    max_depth: usize,
    rng: &mut R,
) -> Expr {
    let arity = arity.max(1);
    let budget = rng.random_range(1..=max_length.max(1));
    grow(config, arity, budget, max_depth.max(1), rng)
}

/// A random tree within the configured genotype limits.
pub fn random_tree<R: Rng + ?Sized>(config: &GpConfig, arity: usize, rng: &mut R) -> Expr {
    random_tree_within(config, arity, config.max_length, config.max_depth, rng)
}

/// Single-subtree crossover: a uniformly chosen subtree of `parent_a` is
/// replaced by a uniformly chosen subtree of `parent_b`.
pub fn crossover<R: Rng + ?Sized>(parent_a: &Expr, parent_b: &Expr, config: &GpConfig, rng: &mut R) -> Expr {
    let (na, nb) = (parent_a.size(), parent_b.size());
    for _ in 0..MAX_ATTEMPTS {
        let cut = rng.random_range(0..na);
        let graft = parent_b.subtree(rng.random_range(0..nb)).expect("index in range").clone();
        let child = parent_a.replace_subtree(cut, graft);
        if config.within_limits(&child) {
            return child;
        }
    }
    parent_a.clone()
}

/// Point mutation with probability `mutation_point_prob`, else subtree
/// replacement with a fresh random subtree.
pub fn mutate<R: Rng + ?Sized>(expr: &Expr, arity: usize, config: &GpConfig, rng: &mut R) -> Expr {
    if rng.random_bool(config.mutation_point_prob) {
        point_mutation(expr, arity, config, rng)
    } else {
        subtree_mutation(expr, arity, config, rng)
    }
}

/// Changes one node in place; the tree shape is unchanged.
pub fn point_mutation<R: Rng + ?Sized>(expr: &Expr, arity: usize, config: &GpConfig, rng: &mut R) -> Expr {
    let index = rng.random_range(0..expr.size());
    let node = expr.subtree(index).expect("index in range");
    let replacement = match node {
        Expr::Const(c) => {
            let (lo, hi) = config.constant_range;
            let value = if rng.random_bool(0.5) {
                let noise = Normal::new(0.0, 1.0).unwrap().sample(rng);
                (c + noise).clamp(lo, hi)
            } else {
                config.random_constant(rng)
            };
            Expr::Const(value)
        }
        Expr::Var(_) => Expr::Var(rng.random_range(0..arity.max(1))),
        Expr::Unary(op, a) => {
            let others: Vec<UnaryOp> = UnaryOp::ALL.iter().copied().filter(|o| o != op).collect();
            Expr::Unary(*others.choose(rng).unwrap(), a.clone())
        }
        Expr::Binary(op, a, b) => {
            let others: Vec<BinaryOp> = BinaryOp::ALL.iter().copied().filter(|o| o != op).collect();
            Expr::Binary(*others.choose(rng).unwrap(), a.clone(), b.clone())
        }
    };
    expr.replace_subtree(index, replacement)
}

/// Replaces one subtree with a random tree sized to fit the remaining limits.
pub fn subtree_mutation<R: Rng + ?Sized>(expr: &Expr, arity: usize, config: &GpConfig, rng: &mut R) -> Expr {
    let size = expr.size();
    for _ in 0..MAX_ATTEMPTS {
        let index = rng.random_range(0..size);
        let old = expr.subtree(index).expect("index in range").size();
        let level = expr.level_of(index).expect("index in range");
        let length_room = config.max_length.saturating_sub(size - old);
        let depth_room = (config.max_depth + 1).saturating_sub(level);
        if length_room == 0 || depth_room == 0 {
            continue;
        }
        let fresh = random_tree_within(config, arity, length_room, depth_room, rng);
        let child = expr.replace_subtree(index, fresh);
        if config.within_limits(&child) {
            return child;
        }
    }
    expr.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn vars(e: &Expr, out: &mut Vec<usize>) {
        match e {
            Expr::Var(i) => out.push(*i),
            Expr::Const(_) => {}
            Expr::Unary(_, a) => vars(a, out),
            Expr::Binary(_, a, b) => {
                vars(a, out);
                vars(b, out);
            }
        }
    }

    #[test]
    fn random_trees_respect_limits() {
        let cfg = GpConfig::default();
        let mut r = rng(1);
        let mut max_seen = 0;
        for _ in 0..10_000 {
            let t = random_tree(&cfg, 3, &mut r);
            assert!(cfg.within_limits(&t));
            let mut vs = Vec::new();
            vars(&t, &mut vs);
            assert!(vs.iter().all(|v| *v < 3));
            max_seen = max_seen.max(t.size());
        }
        assert!(max_seen > 30, "sizes should span the allowed range, max {max_seen}");
    }

    #[test]
    fn random_tree_is_seeded() {
        let cfg = GpConfig::default();
        assert_eq!(random_tree(&cfg, 4, &mut rng(9)), random_tree(&cfg, 4, &mut rng(9)));
    }

    #[test]
    fn crossover_of_leaves_returns_donor() {
        let cfg = GpConfig::default();
        let child = crossover(&Expr::var(0), &Expr::constant(2.5), &cfg, &mut rng(0));
        assert_eq!(child, Expr::constant(2.5));
    }

    #[test]
    fn crossover_falls_back_to_parent() {
        let cfg = GpConfig { max_length: 3, max_depth: 2, ..GpConfig::default() };
        let a = Expr::add(Expr::var(0), Expr::var(1));
        let big = Expr::sin(Expr::sin(Expr::sin(Expr::var(0))));
        // every cut of `a` except the root gets a subtree too deep unless the
        // graft is a leaf, so children must stay within limits regardless
        for seed in 0..50 {
            let c = crossover(&a, &big, &cfg, &mut rng(seed));
            assert!(cfg.within_limits(&c));
        }
    }

    #[test]
    fn point_mutation_of_constant_stays_in_range() {
        let cfg = GpConfig { mutation_point_prob: 1.0, ..GpConfig::default() };
        let mut r = rng(5);
        for _ in 0..1000 {
            match mutate(&Expr::constant(19.5), 2, &cfg, &mut r) {
                Expr::Const(v) => assert!((-20.0..=20.0).contains(&v)),
                other => panic!("expected a constant, got {other}"),
            }
        }
    }

    #[test]
    fn point_mutation_keeps_shape() {
        let cfg = GpConfig::default();
        let e = Expr::mul(Expr::exp(Expr::var(0)), Expr::add(Expr::var(1), Expr::constant(1.0)));
        let mut r = rng(2);
        for _ in 0..200 {
            let m = point_mutation(&e, 2, &cfg, &mut r);
            assert_eq!((m.size(), m.depth()), (e.size(), e.depth()));
            let differing = (0..e.size())
                .filter(|&i| {
                    let (a, b) = (e.subtree(i).unwrap(), m.subtree(i).unwrap());
                    std::mem::discriminant(a) != std::mem::discriminant(b) || node_label(a) != node_label(b)
                })
                .count();
            assert!(differing <= 1);
        }
    }

    fn node_label(e: &Expr) -> String {
        match e {
            Expr::Const(c) => format!("{c:?}"),
            Expr::Var(i) => format!("x{i}"),
            Expr::Unary(op, _) => op.name().into(),
            Expr::Binary(op, _, _) => op.name().into(),
        }
    }

    #[test]
    fn subtree_mutation_respects_limits() {
        let cfg = GpConfig { max_length: 15, max_depth: 5, ..GpConfig::default() };
        let mut r = rng(11);
        let mut e = random_tree(&cfg, 2, &mut r);
        for _ in 0..5000 {
            e = subtree_mutation(&e, 2, &cfg, &mut r);
            assert!(cfg.within_limits(&e), "{e}");
        }
    }

    #[test]
    fn mutation_is_seeded() {
        let cfg = GpConfig::default();
        let e = random_tree(&cfg, 3, &mut rng(4));
        assert_eq!(mutate(&e, 3, &cfg, &mut rng(8)), mutate(&e, 3, &cfg, &mut rng(8)));
    }

    #[test]
    fn config_validation() {
        assert!(GpConfig::default().validate().is_ok());
        assert_eq!(GpConfig { max_length: 2, ..GpConfig::default() }.validate(), Err(GpConfigError::MaxLength(2)));
        assert!(GpConfig { mutation_prob: 1.5, ..GpConfig::default() }.validate().is_err());
        assert!(GpConfig { constant_range: (1.0, 0.0), ..GpConfig::default() }.validate().is_err());
    }
}
