//! Expression trees: the genotype of the search.
//!
//! An [`Expr`] is an immutable tree over a fixed primitive set. Point
//! evaluation never panics and never returns a non-finite number other than
//! NaN, which is the in-band "undefined" marker.
//!
//! The canonical text form (used for model strings, the catalog file and
//! golden tests) is a prefix S-expression:
//!
//! ```text
//! (mul (exp (neg x1)) 2.5)
//! ```
//!
//! Variables are written `x<index>` and constants use Rust's shortest
//! round-trip float formatting, so `parse(e.to_string()) == e` bit for bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Square,
    Asin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 9] = [
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

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
            UnaryOp::Asin => "asin",
        }
    }

    /// Raw real-valued application. Domain errors surface as NaN.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => {
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NAN
                }
            }
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Square => x * x,
            UnaryOp::Asin => x.asin(),
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    f64::NAN
                } else {
                    a / b
                }
            }
        }
    }
}

#[inline]
fn finite_or_nan(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

/// An expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

// Builder helpers. They keep catalog transcription and tests readable.
impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Expr {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, a, b)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Neg, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Exp, a)
    }

    pub fn log(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Log, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Cos, a)
    }

    pub fn tanh(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Tanh, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sqrt, a)
    }

    pub fn square(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Square, a)
    }

    pub fn asin(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Asin, a)
    }
}

impl Expr {
    /// Evaluates the expression at a single point.
    ///
    /// Any non-finite intermediate result becomes NaN and propagates.
    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Unary(op, a) => finite_or_nan(op.apply(a.eval(point))),
            Expr::Binary(op, a, b) => finite_or_nan(op.apply(a.eval(point), b.eval(point))),
        }
    }

    /// Evaluates over many points at once. `columns[v][row]` holds the value
    /// of variable `v` at `row`; every column must have `rows` entries.
    pub fn eval_columns(&self, columns: &[Vec<f64>], rows: usize) -> Vec<f64> {
        match self {
            Expr::Const(c) => vec![*c; rows],
            Expr::Var(i) => match columns.get(*i) {
                Some(col) => col[..rows].to_vec(),
                None => vec![f64::NAN; rows],
            },
            Expr::Unary(op, a) => {
                let mut out = a.eval_columns(columns, rows);
                for v in &mut out {
                    *v = finite_or_nan(op.apply(*v));
                }
                out
            }
            Expr::Binary(op, a, b) => {
                let mut out = a.eval_columns(columns, rows);
                let rhs = b.eval_columns(columns, rows);
                for (v, r) in out.iter_mut().zip(rhs) {
                    *v = finite_or_nan(op.apply(*v, r));
                }
                out
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// One past the largest variable index, or 0 for a variable-free tree.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Unary(_, a) => a.arity(),
            Expr::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Interval evaluation over a box; see [`crate::interval::ia_eval`].
    pub fn eval_interval(&self, domain: &VariableBox) -> Interval {
        crate::interval::ia_eval(self, domain)
    }
}

// Preorder node addressing used by the variation operators.
impl Expr {
    /// The subtree rooted at preorder position `index` (root = 0).
    pub fn subtree(&self, index: usize) -> Option<&Expr> {
        let mut remaining = index;
        self.subtree_inner(&mut remaining)
    }

    fn subtree_inner(&self, remaining: &mut usize) -> Option<&Expr> {
        if *remaining == 0 {
            return Some(self);
        }
        *remaining -= 1;
        match self {
            Expr::Const(_) | Expr::Var(_) => None,
            Expr::Unary(_, a) => a.subtree_inner(remaining),
            Expr::Binary(_, a, b) => a
                .subtree_inner(remaining)
                .or_else(|| b.subtree_inner(remaining)),
        }
    }

    /// Level of the node at preorder position `index` (root = 1).
    pub fn level_of(&self, index: usize) -> Option<usize> {
        fn walk(e: &Expr, remaining: &mut usize, level: usize) -> Option<usize> {
            if *remaining == 0 {
                return Some(level);
            }
            *remaining -= 1;
            match e {
                Expr::Const(_) | Expr::Var(_) => None,
                Expr::Unary(_, a) => walk(a, remaining, level + 1),
                Expr::Binary(_, a, b) => {
                    walk(a, remaining, level + 1).or_else(|| walk(b, remaining, level + 1))
                }
            }
        }
        let mut remaining = index;
        walk(self, &mut remaining, 1)
    }

    /// A copy of `self` with the subtree at preorder position `index`
    /// replaced by `replacement`. Out-of-range indices return an unchanged copy.
    pub fn replace_subtree(&self, index: usize, replacement: Expr) -> Expr {
        fn walk(e: &Expr, remaining: &mut usize, replacement: &mut Option<Expr>) -> Expr {
            if *remaining == 0 {
                *remaining = usize::MAX;
                if let Some(r) = replacement.take() {
                    return r;
                }
            }
            if *remaining != usize::MAX {
                *remaining -= 1;
            }
            match e {
                Expr::Const(_) | Expr::Var(_) => e.clone(),
                Expr::Unary(op, a) => Expr::Unary(*op, Box::new(walk(a, remaining, replacement))),
                Expr::Binary(op, a, b) => {
                    let left = walk(a, remaining, replacement);
                    let right = walk(b, remaining, replacement);
                    Expr::Binary(*op, Box::new(left), Box::new(right))
                }
            }
        }
        let mut remaining = index;
        let mut replacement = Some(replacement);
        walk(self, &mut remaining, &mut replacement)
    }
}

impl Expr {
    /// Symbolic partial derivative with respect to variable `var`.
    ///
    /// The result is simplified locally as it is built, so derivatives of
    /// variable-free subtrees collapse to `0` instead of growing.
    pub fn differentiate(&self, var: usize) -> Expr {
        use Expr::*;
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Unary(op, a) => {
                let da = a.differentiate(var);
                if da.as_const() == Some(0.0) {
                    return Const(0.0);
                }
                let a = (**a).clone();
                let outer = match op {
                    UnaryOp::Neg => return simplify(&Expr::neg(da)),
                    UnaryOp::Exp => Expr::exp(a),
                    UnaryOp::Log => Expr::div(Const(1.0), a),
                    UnaryOp::Sin => Expr::cos(a),
                    UnaryOp::Cos => Expr::neg(Expr::sin(a)),
                    UnaryOp::Tanh => Expr::sub(Const(1.0), Expr::square(Expr::tanh(a))),
                    UnaryOp::Sqrt => Expr::div(Const(0.5), Expr::sqrt(a)),
                    UnaryOp::Square => Expr::mul(Const(2.0), a),
                    UnaryOp::Asin => {
                        Expr::div(Const(1.0), Expr::sqrt(Expr::sub(Const(1.0), Expr::square(a))))
                    }
                };
                simplify(&Expr::mul(outer, da))
            }
            Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                let d = match op {
                    BinaryOp::Add => Expr::add(da, db),
                    BinaryOp::Sub => Expr::sub(da, db),
                    BinaryOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                    BinaryOp::Div => {
                        if db.as_const() == Some(0.0) {
                            // (a/b)' = a'/b when b does not depend on var
                            Expr::div(da, b)
                        } else {
                            Expr::div(
                                Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                                Expr::square(b),
                            )
                        }
                    }
                };
                simplify(&d)
            }
        }
    }

    /// Shorthand for [`simplify`].
    pub fn simplified(&self) -> Expr {
        simplify(self)
    }
}

/// Semantics-preserving cleanup: constant folding plus identity and
/// annihilator rules.
///
/// `x*0 -> 0` and `0/x -> 0` are only applied when `x` cannot produce NaN
/// on its own (no partial ops inside), so the set of points where the
/// expression is defined never grows.
pub fn simplify(expr: &Expr) -> Expr {
    use Expr::*;
    match expr {
        Const(_) | Var(_) => expr.clone(),
        Unary(op, a) => {
            let a = simplify(a);
            if let Const(c) = a {
                let v = op.apply(c);
                if v.is_finite() {
                    return Const(v);
                }
            }
            match (op, &a) {
                // neg(neg(x)) -> x
                (UnaryOp::Neg, Unary(UnaryOp::Neg, inner)) => (**inner).clone(),
                _ => Expr::unary(*op, a),
            }
        }
        Binary(op, a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            if let (Const(x), Const(y)) = (&a, &b) {
                let v = op.apply(*x, *y);
                if v.is_finite() {
                    return Const(v);
                }
            }
            match op {
                BinaryOp::Add => {
                    if a.as_const() == Some(0.0) {
                        b
                    } else if b.as_const() == Some(0.0) {
                        a
                    } else {
                        Expr::add(a, b)
                    }
                }
                BinaryOp::Sub => {
                    if b.as_const() == Some(0.0) {
                        a
                    } else if a.as_const() == Some(0.0) {
                        simplify(&Expr::neg(b))
                    } else if a == b && is_total(&a) {
                        Const(0.0)
                    } else {
                        Expr::sub(a, b)
                    }
                }
                BinaryOp::Mul => {
                    let (ca, cb) = (a.as_const(), b.as_const());
                    if (ca == Some(0.0) && is_total(&b)) || (cb == Some(0.0) && is_total(&a)) {
                        Const(0.0)
                    } else if ca == Some(1.0) {
                        b
                    } else if cb == Some(1.0) {
                        a
                    } else if ca == Some(-1.0) {
                        simplify(&Expr::neg(b))
                    } else if cb == Some(-1.0) {
                        simplify(&Expr::neg(a))
                    } else {
                        Expr::mul(a, b)
                    }
                }
                BinaryOp::Div => {
                    if b.as_const() == Some(1.0) {
                        a
                    } else if a.as_const() == Some(0.0) && is_total(&b) && !may_vanish(&b) {
                        Const(0.0)
                    } else {
                        Expr::div(a, b)
                    }
                }
            }
        }
    }
}

/// True when the tree contains no operation that can yield NaN on finite
/// input (division, log, sqrt, asin, and exp/square/mul which can overflow).
fn is_total(expr: &Expr) -> bool {
    match expr {
        Expr::Const(_) | Expr::Var(_) => true,
        Expr::Unary(op, a) => {
            matches!(op, UnaryOp::Neg | UnaryOp::Sin | UnaryOp::Cos | UnaryOp::Tanh) && is_total(a)
        }
        Expr::Binary(op, a, b) => {
            matches!(op, BinaryOp::Add | BinaryOp::Sub) && is_total(a) && is_total(b)
        }
    }
}

fn may_vanish(expr: &Expr) -> bool {
    !matches!(expr, Expr::Const(c) if *c != 0.0)
}

/// A closed axis-aligned box: one interval per input variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableBox {
    bounds: Vec<Interval>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BoxError {
    #[error("a variable box needs at least one variable")]
    Empty,
    #[error("variable {index}: lower bound {lo} exceeds upper bound {hi}")]
    Inverted { index: usize, lo: f64, hi: f64 },
    #[error("variable {index}: bounds must be real numbers")]
    NotANumber { index: usize },
}

impl VariableBox {
    pub fn new(bounds: Vec<Interval>) -> Result<Self, BoxError> {
        if bounds.is_empty() {
            return Err(BoxError::Empty);
        }
        for (index, b) in bounds.iter().enumerate() {
            if b.is_empty() {
                return Err(BoxError::NotANumber { index });
            }
            if b.lo() > b.hi() {
                return Err(BoxError::Inverted { index, lo: b.lo(), hi: b.hi() });
            }
        }
        Ok(Self { bounds })
    }

    /// Convenience constructor from `(lo, hi)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, BoxError> {
        for (index, &(lo, hi)) in pairs.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() {
                return Err(BoxError::NotANumber { index });
            }
            if lo > hi {
                return Err(BoxError::Inverted { index, lo, hi });
            }
        }
        Self::new(pairs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect())
    }

    pub fn arity(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn get(&self, index: usize) -> Option<Interval> {
        self.bounds.get(index).copied()
    }

    pub fn contains_point(&self, point: &[f64]) -> bool {
        point.len() == self.bounds.len()
            && point.iter().zip(&self.bounds).all(|(x, b)| b.contains(*x))
    }

    /// True when every interval of `self` lies inside the matching interval of `outer`.
    pub fn is_subset_of(&self, outer: &VariableBox) -> bool {
        self.arity() == outer.arity()
            && self
                .bounds
                .iter()
                .zip(&outer.bounds)
                .all(|(a, b)| a.lo() >= b.lo() && a.hi() <= b.hi())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Unary(op, a) => write!(f, "({} {a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({} {a} {b})", op.name()),
        }
    }
}

impl Expr {
    /// Conventional infix rendering with the given variable names. Meant for
    /// people; the [`Display`](fmt::Display) prefix form is the canonical one.
    pub fn to_infix(&self, names: &[&str]) -> String {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    format!("({c})")
                } else {
                    format!("{c}")
                }
            }
            Expr::Var(i) => names.get(*i).map_or_else(|| format!("x{i}"), |n| n.to_string()),
            Expr::Unary(UnaryOp::Neg, a) => format!("-({})", a.to_infix(names)),
            Expr::Unary(UnaryOp::Square, a) => format!("({})^2", a.to_infix(names)),
            Expr::Unary(op, a) => format!("{}({})", op.name(), a.to_infix(names)),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                };
                format!("({} {sym} {})", a.to_infix(names), b.to_infix(names))
            }
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("invalid constant `{0}`")]
    InvalidConstant(String),
    #[error("trailing input after expression: `{0}`")]
    Trailing(String),
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = tokenize(s);
        let mut pos = 0;
        let expr = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(ParseError::Trailing(tokens[pos..].join(" ")));
        }
        Ok(expr)
    }
}

fn tokenize(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | ')' => {
                if let Some(st) = start.take() {
                    out.push(&s[st..i]);
                }
                out.push(&s[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(st) = start.take() {
                    out.push(&s[st..i]);
                }
            }
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    if let Some(st) = start {
        out.push(&s[st..]);
    }
    out
}

fn parse_tokens(tokens: &[&str], pos: &mut usize) -> Result<Expr, ParseError> {
    let tok = *tokens.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
    *pos += 1;
    if tok == ")" {
        return Err(ParseError::UnexpectedToken(tok.into()));
    }
    if tok != "(" {
        return parse_atom(tok);
    }
    let head = *tokens.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
    *pos += 1;
    let expr = if let Some(op) = UnaryOp::ALL.iter().find(|op| op.name() == head) {
        Expr::unary(*op, parse_tokens(tokens, pos)?)
    } else if let Some(op) = BinaryOp::ALL.iter().find(|op| op.name() == head) {
        let a = parse_tokens(tokens, pos)?;
        let b = parse_tokens(tokens, pos)?;
        Expr::binary(*op, a, b)
    } else {
        return Err(ParseError::UnknownOperator(head.into()));
    };
    match tokens.get(*pos) {
        Some(&")") => {
            *pos += 1;
            Ok(expr)
        }
        Some(t) => Err(ParseError::UnexpectedToken((*t).into())),
        None => Err(ParseError::UnexpectedEnd),
    }
}

fn parse_atom(tok: &str) -> Result<Expr, ParseError> {
    if let Some(idx) = tok.strip_prefix('x') {
        return idx
            .parse::<usize>()
            .map(Expr::Var)
            .map_err(|_| ParseError::UnexpectedToken(tok.into()));
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
        _ => Err(ParseError::InvalidConstant(tok.into())),
    }
}
