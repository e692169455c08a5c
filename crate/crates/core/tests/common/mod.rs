//! Test-local generators and oracles, independent of the library's own
//! GP operators.

#![allow(dead_code)]

use rand::Rng;
use shapesr::{BinaryOp, Expr, UnaryOp};

pub const ALL_UNARY: [UnaryOp; 9] = [
    UnaryOp::Neg,
    UnaryOp::Exp,
    UnaryOp::Log,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tanh,
    UnaryOp::Sqrt,
    UnaryOp::Square,
    UnaryOp::Asin,
];

pub const SMOOTH_UNARY: [UnaryOp; 7] = [
    UnaryOp::Neg,
    UnaryOp::Exp,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tanh,
    UnaryOp::Sqrt,
    UnaryOp::Square,
];

pub const ALL_BINARY: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

/// Random tree with at most `budget` nodes.
pub fn random_expr<R: Rng>(rng: &mut R, budget: usize, arity: usize, unary: &[UnaryOp], const_range: f64) -> Expr {
    let roll = rng.random_range(0..10);
    if budget >= 3 && roll < 5 {
        let op = ALL_BINARY[rng.random_range(0..ALL_BINARY.len())];
        let left = rng.random_range(1..budget - 1);
        let a = random_expr(rng, left, arity, unary, const_range);
        let b = random_expr(rng, budget - 1 - left, arity, unary, const_range);
        Expr::binary(op, a, b)
    } else if budget >= 2 && roll < 7 {
        let op = unary[rng.random_range(0..unary.len())];
        Expr::unary(op, random_expr(rng, budget - 1, arity, unary, const_range))
    } else if rng.random_bool(0.6) {
        Expr::var(rng.random_range(0..arity))
    } else {
        Expr::constant(rng.random_range(-const_range..const_range))
    }
}

/// Forward-mode dual number `v + d·ε`.
#[derive(Clone, Copy, Debug)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

pub fn dual_eval(expr: &Expr, point: &[f64], var: usize) -> Dual {
    match expr {
        Expr::Const(c) => Dual { v: *c, d: 0.0 },
        Expr::Var(i) => Dual { v: point[*i], d: if *i == var { 1.0 } else { 0.0 } },
        Expr::Unary(op, a) => {
            let a = dual_eval(a, point, var);
            let (v, dv) = match op {
                UnaryOp::Neg => (-a.v, -1.0),
                UnaryOp::Exp => (a.v.exp(), a.v.exp()),
                UnaryOp::Log => (a.v.ln(), 1.0 / a.v),
                UnaryOp::Sin => (a.v.sin(), a.v.cos()),
                UnaryOp::Cos => (a.v.cos(), -a.v.sin()),
                UnaryOp::Tanh => (a.v.tanh(), 1.0 - a.v.tanh().powi(2)),
                UnaryOp::Sqrt => (a.v.sqrt(), 0.5 / a.v.sqrt()),
                UnaryOp::Square => (a.v * a.v, 2.0 * a.v),
                UnaryOp::Asin => (a.v.asin(), 1.0 / (1.0 - a.v * a.v).sqrt()),
            };
            Dual { v, d: dv * a.d }
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (dual_eval(a, point, var), dual_eval(b, point, var));
            match op {
                BinaryOp::Add => Dual { v: a.v + b.v, d: a.d + b.d },
                BinaryOp::Sub => Dual { v: a.v - b.v, d: a.d - b.d },
                BinaryOp::Mul => Dual { v: a.v * b.v, d: a.d * b.v + a.v * b.d },
                BinaryOp::Div => Dual { v: a.v / b.v, d: (a.d * b.v - a.v * b.d) / (b.v * b.v) },
            }
        }
    }
}

/// Brute-force front ranks: a point's rank is the length of the longest
/// chain of points dominating it.
pub fn brute_force_ranks(points: &[Vec<f64>]) -> Vec<usize> {
    fn dom(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
    }
    fn rank(i: usize, points: &[Vec<f64>], memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(r) = memo[i] {
            return r;
        }
        let mut r = 0;
        for j in 0..points.len() {
            if dom(&points[j], &points[i]) {
                r = r.max(rank(j, points, memo) + 1);
            }
        }
        memo[i] = Some(r);
        r
    }
    let mut memo = vec![None; points.len()];
    (0..points.len()).map(|i| rank(i, points, &mut memo)).collect()
}

/// Number of compositions of `p` into `m` non-negative parts, by direct
/// recursion.
pub fn compositions(m: usize, p: usize) -> u128 {
    if m == 1 {
        return 1;
    }
    (0..=p).map(|k| compositions(m - 1, p - k)).sum()
}
