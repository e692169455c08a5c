//! Pessimistic interval arithmetic over [`Expr`] trees.
//!
//! Endpoints are rounded outward. For the correctly rounded IEEE operations
//! (add, sub, mul, div, sqrt) an endpoint moves by one ulp only when the
//! operation was inexact; libm transcendental results are only faithfully
//! rounded and are widened by [`LIBM_ULPS`] ulps. The enclosure therefore
//! always contains the value a floating-point [`Expr::eval`] returns at any
//! point of the box.
//!
//! Empty is encoded as `(NaN, NaN)`. It marks a subexpression that is
//! undefined on the whole box and propagates to the root.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::expr::{BinaryOp, Expr, UnaryOp, VariableBox};

/// Widening applied to libm results.
pub const LIBM_ULPS: u32 = 2;

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// A closed interval `[lo, hi]` over the extended reals, or Empty.
///
/// Serializes as a two-element array; infinite bounds are written as the
/// strings `"-inf"` / `"inf"` so the value survives JSON.
#[derive(Clone, Copy)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: f64::NAN, hi: f64::NAN };
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    /// Builds `[lo, hi]`. NaN bounds or `lo > hi` give Empty.
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Interval::EMPTY;
        }
        Interval::normalized(lo, hi)
    }

    pub fn point(v: f64) -> Interval {
        Interval::new(v, v)
    }

    /// Keeps `lo != +inf` and `hi != -inf` by clamping to the largest finite
    /// magnitude. Such sets contain no finite value, so the clamp is sound.
    fn normalized(lo: f64, hi: f64) -> Interval {
        let lo = if lo == f64::INFINITY { f64::MAX } else { lo };
        let hi = if hi == f64::NEG_INFINITY { f64::MIN } else { hi };
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_nan()
    }

    pub fn is_entire(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn contains(&self, v: f64) -> bool {
        !self.is_empty() && self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Interval::EMPTY;
        }
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

impl PartialEq for Interval {
    /// Empty compares unequal to everything, itself included.
    fn eq(&self, other: &Self) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo == other.lo && self.hi == other.hi
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "Empty")
        } else {
            write!(f, "[{:?}, {:?}]", self.lo, self.hi)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Bound {
    Finite(f64),
    Named(String),
}

impl Bound {
    fn from_f64(v: f64) -> Bound {
        if v == f64::INFINITY {
            Bound::Named("inf".into())
        } else if v == f64::NEG_INFINITY {
            Bound::Named("-inf".into())
        } else if v.is_nan() {
            Bound::Named("nan".into())
        } else {
            Bound::Finite(v)
        }
    }

    fn to_f64(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Named(s) => match s.as_str() {
                "inf" | "+inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                "nan" => Some(f64::NAN),
                _ => None,
            },
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [Bound::from_f64(self.lo), Bound::from_f64(self.hi)].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[Bound; 2]>::deserialize(deserializer)?;
        match (lo.to_f64(), hi.to_f64()) {
            (Some(lo), Some(hi)) => Ok(Interval::new(lo, hi)),
            _ => Err(serde::de::Error::custom("interval bounds must be numbers, \"inf\" or \"-inf\"")),
        }
    }
}

// Directed rounding. IEEE add/mul/div/sqrt are correctly rounded, so the
// sign of the exact residual (recovered with an error-free transform) says
// which way the rounded result moved. Exact results are left untouched.

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

/// `0 * inf = 0`, the limit interval multiplication needs.
fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let err = a.mul_add(b, -p);
    if err < 0.0 || (p == 0.0 && (a < 0.0) != (b < 0.0)) {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

fn recip_down(b: f64) -> f64 {
    let q = 1.0 / b;
    if !q.is_finite() || q == 0.0 {
        return if q == 0.0 && b < 0.0 { (-0.0f64).next_down() } else { q };
    }
    // exact residual 1 - q*b, quotient error has the sign of residual / b
    let r = (-q).mul_add(b, 1.0);
    if (r < 0.0) != (b < 0.0) && r != 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn recip_up(b: f64) -> f64 {
    -recip_down(-b)
}

fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if !s.is_finite() || s == 0.0 {
        return s;
    }
    if (-s).mul_add(s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if !s.is_finite() {
        return s;
    }
    if (-s).mul_add(s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul(a: Interval, b: Interval) -> Interval {
    let lo = mul_down(a.lo, b.lo)
        .min(mul_down(a.lo, b.hi))
        .min(mul_down(a.hi, b.lo))
        .min(mul_down(a.hi, b.hi));
    let hi = mul_up(a.lo, b.lo)
        .max(mul_up(a.lo, b.hi))
        .max(mul_up(a.hi, b.lo))
        .max(mul_up(a.hi, b.hi));
    Interval::new(lo, hi)
}

/// Interval image of a binary primitive.
pub fn ia_apply_binary(op: BinaryOp, a: Interval, b: Interval) -> Interval {
    if a.is_empty() || b.is_empty() {
        return Interval::EMPTY;
    }
    match op {
        BinaryOp::Add => Interval::new(add_down(a.lo, b.lo), add_up(a.hi, b.hi)),
        BinaryOp::Sub => Interval::new(add_down(a.lo, -b.hi), add_up(a.hi, -b.lo)),
        BinaryOp::Mul => mul(a, b),
        BinaryOp::Div => {
            if b.contains(0.0) {
                Interval::ENTIRE
            } else if b.lo == b.hi && b.lo.is_finite() && a.lo.is_finite() && a.hi.is_finite() {
                // scalar divisor: one rounding per endpoint
                let (x, y) = if b.lo > 0.0 { (a.lo, a.hi) } else { (a.hi, a.lo) };
                Interval::new(div_down(x, b.lo), div_up(y, b.lo))
            } else {
                mul(a, Interval::new(recip_down(b.hi), recip_up(b.lo)))
            }
        }
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if q == 0.0 {
        return if a != 0.0 && (a < 0.0) != (b < 0.0) { (-0.0f64).next_down() } else { 0.0 };
    }
    let r = (-q).mul_add(b, a);
    if r != 0.0 && (r < 0.0) != (b < 0.0) {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    -div_down(-a, b)
}

/// `f(x)` widened by [`LIBM_ULPS`] unless `x` is one of the points where
/// the result is exact.
fn libm_down(f: fn(f64) -> f64, x: f64, exact_at_zero: bool) -> f64 {
    let v = f(x);
    if exact_at_zero && x == 0.0 {
        return v;
    }
    let mut v = v;
    for _ in 0..LIBM_ULPS {
        v = v.next_down();
    }
    v
}

fn libm_up(f: fn(f64) -> f64, x: f64, exact_at_zero: bool) -> f64 {
    let v = f(x);
    if exact_at_zero && x == 0.0 {
        return v;
    }
    let mut v = v;
    for _ in 0..LIBM_ULPS {
        v = v.next_up();
    }
    v
}

/// Interval image of a unary primitive.
pub fn ia_apply_unary(op: UnaryOp, a: Interval) -> Interval {
    if a.is_empty() {
        return Interval::EMPTY;
    }
    match op {
        UnaryOp::Neg => Interval::new(-a.hi, -a.lo),
        UnaryOp::Exp => Interval::new(
            libm_down(f64::exp, a.lo, true).max(0.0),
            libm_up(f64::exp, a.hi, true),
        ),
        UnaryOp::Log => {
            if a.hi <= 0.0 {
                return Interval::EMPTY;
            }
            let lo = if a.lo <= 0.0 { f64::NEG_INFINITY } else { log_down(a.lo) };
            Interval::new(lo, log_up(a.hi))
        }
        UnaryOp::Tanh => Interval::new(
            libm_down(f64::tanh, a.lo, true).max(-1.0),
            libm_up(f64::tanh, a.hi, true).min(1.0),
        ),
        UnaryOp::Sqrt => {
            if a.hi < 0.0 {
                return Interval::EMPTY;
            }
            Interval::new(sqrt_down(a.lo.max(0.0)), sqrt_up(a.hi))
        }
        UnaryOp::Square => {
            if a.lo >= 0.0 {
                Interval::new(mul_down(a.lo, a.lo), mul_up(a.hi, a.hi))
            } else if a.hi <= 0.0 {
                Interval::new(mul_down(a.hi, a.hi), mul_up(a.lo, a.lo))
            } else {
                Interval::new(0.0, mul_up(a.lo, a.lo).max(mul_up(a.hi, a.hi)))
            }
        }
        UnaryOp::Asin => {
            let d = a.intersect(&Interval::new(-1.0, 1.0));
            if d.is_empty() {
                return Interval::EMPTY;
            }
            let cap = HALF_PI.next_up();
            Interval::new(
                libm_down(f64::asin, d.lo, true).max(-cap),
                libm_up(f64::asin, d.hi, true).min(cap),
            )
        }
        UnaryOp::Sin => periodic_range(a, f64::sin, HALF_PI, true),
        UnaryOp::Cos => periodic_range(a, f64::cos, 0.0, false),
    }
}

fn log_down(x: f64) -> f64 {
    if x == 1.0 {
        0.0
    } else {
        libm_down(f64::ln, x, false)
    }
}

fn log_up(x: f64) -> f64 {
    if x == 1.0 {
        0.0
    } else {
        libm_up(f64::ln, x, false)
    }
}

/// Range of sin/cos over `a`. `peak` is the phase of a maximum; minima sit
/// half a period later. Extrema near an endpoint are counted as contained,
/// which can only widen the result.
fn periodic_range(a: Interval, f: fn(f64) -> f64, peak: f64, exact_at_zero: bool) -> Interval {
    let full = Interval::new(-1.0, 1.0);
    if !a.lo.is_finite() || !a.hi.is_finite() || a.width() >= TWO_PI || a.lo.abs().max(a.hi.abs()) > 1e15 {
        return full;
    }
    let contains_phase = |phase: f64| {
        let slack = 1e-9 * (1.0 + a.lo.abs().max(a.hi.abs()));
        let k = ((a.lo - slack - phase) / TWO_PI).ceil();
        phase + k * TWO_PI <= a.hi + slack
    };
    let lo_end = (libm_down(f, a.lo, exact_at_zero), libm_up(f, a.lo, exact_at_zero));
    let hi_end = (libm_down(f, a.hi, exact_at_zero), libm_up(f, a.hi, exact_at_zero));
    let hi = if contains_phase(peak) { 1.0 } else { lo_end.1.max(hi_end.1).min(1.0) };
    let lo = if contains_phase(peak + PI) { -1.0 } else { lo_end.0.min(hi_end.0).max(-1.0) };
    Interval::new(lo, hi)
}

/// Bottom-up interval evaluation of `expr` over `domain`.
///
/// Variables outside the box arity evaluate to Empty.
pub fn ia_eval(expr: &Expr, domain: &VariableBox) -> Interval {
    match expr {
        Expr::Const(c) => Interval::point(*c),
        Expr::Var(i) => domain.get(*i).unwrap_or(Interval::EMPTY),
        Expr::Unary(op, a) => ia_apply_unary(*op, ia_eval(a, domain)),
        Expr::Binary(op, a, b) => {
            let left = ia_eval(a, domain);
            if left.is_empty() {
                return Interval::EMPTY;
            }
            ia_apply_binary(*op, left, ia_eval(b, domain))
        }
    }
}
