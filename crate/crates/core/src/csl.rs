//! CSL formulae: abstract syntax, a concrete-syntax parser, and the
//! exploration shortcut predicate.
//!
//! Concrete syntax (derived forms are desugared while parsing):
//!
//! ```text
//! state    := state "|" state | state "&" state | "!" state | "(" state ")"
//!           | "true" | "false" | label | ap
//!           | "P" cmp prob "[" path "]"
//!           | "S" cmp prob "[" state ("|" state)? "]"
//! path     := "X" interval? state | "F" interval? state | state "U" interval? state
//! interval := "[" num "," (num | "inf") "]" | "<=" num
//! cmp      := "<" | "<=" | ">" | ">="
//! ap       := poly ("<" | "<=" | "=" | ">=" | ">") poly
//! ```
//!
//! Inside `S[...]` a top-level `|` separates the condition of a conditional
//! steady-state operator; disjunctions there must be parenthesized.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lexer::{Cursor, Tok};
use crate::poly::{parse_sum, Binding, Poly, Rational};
use crate::ternary::Ternary;
use crate::Error;

/// Probability bound comparison `⋈`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    /// Whether `value ⋈ bound`, compared exactly.
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            CmpOp::Lt => value < bound,
            CmpOp::Le => value <= bound,
            CmpOp::Gt => value > bound,
            CmpOp::Ge => value >= bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

/// Relation of an atomic proposition `poly ⋈ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl RelOp {
    fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "=",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
        }
    }

    fn from_symbol(s: &str) -> Option<RelOp> {
        Some(match s {
            "<" => RelOp::Lt,
            "<=" => RelOp::Le,
            "=" => RelOp::Eq,
            ">=" => RelOp::Ge,
            ">" => RelOp::Gt,
            _ => return None,
        })
    }

    fn test<T: PartialOrd + Default>(self, v: T) -> bool {
        let zero = T::default();
        match self {
            RelOp::Lt => v < zero,
            RelOp::Le => v <= zero,
            RelOp::Eq => v == zero,
            RelOp::Ge => v >= zero,
            RelOp::Gt => v > zero,
        }
    }
}

/// Atomic proposition: a polynomial comparison `poly ⋈ 0` over population
/// counts. The polynomial is kept with coprime integer coefficients, so the
/// label of a state is an exact integer comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ApExpr {
    poly: Poly<Rational>,
    op: RelOp,
}

impl ApExpr {
    pub fn new(lhs: &Poly<Rational>, op: RelOp, rhs: &Poly<Rational>) -> Result<ApExpr, Error> {
        let poly = lhs.sub(rhs).to_primitive_integer().ok_or(Error::Overflow)?;
        Ok(ApExpr { poly, op })
    }

    pub fn poly(&self) -> &Poly<Rational> {
        &self.poly
    }

    pub fn op(&self) -> RelOp {
        self.op
    }

    /// Exact two-valued evaluation at a population vector.
    pub fn eval(&self, x: &[i64]) -> bool {
        match self.poly.eval_exact(x) {
            Some(v) => self.op.test(v),
            // Out of i128 range; fall back to floating evaluation.
            None => self.op.test(self.poly.eval_int(x)),
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DisplayWith(move |f: &mut fmt::Formatter<'_>| {
            write!(f, "{} {} 0", self.poly.display(names), self.op.symbol())
        })
    }
}

/// Time interval `[lo, hi]`; `hi` may be `f64::INFINITY` only when `lo = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeInterval {
    lo: f64,
    hi: f64,
}

impl TimeInterval {
    pub const UNBOUNDED: TimeInterval = TimeInterval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<TimeInterval, Error> {
        let ok = lo >= 0.0
            && !lo.is_nan()
            && !hi.is_nan()
            && lo <= hi
            && lo.is_finite()
            && (hi.is_finite() || lo == 0.0);
        if ok {
            Ok(TimeInterval { lo, hi })
        } else {
            Err(Error::MalformedInterval { lo, hi })
        }
    }

    pub fn upto(hi: f64) -> Result<TimeInterval, Error> {
        TimeInterval::new(0.0, hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi.is_infinite()
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, "[{:?},inf]", self.lo)
        } else {
            write!(f, "[{:?},{:?}]", self.lo, self.hi)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateFormula {
    Const(bool),
    Atomic(ApExpr),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Prob {
        op: CmpOp,
        bound: f64,
        path: Box<PathFormula>,
    },
    /// Steady-state operator; with a condition it is the conditional form
    /// `S(body | condition)`.
    Steady {
        op: CmpOp,
        bound: f64,
        body: Box<StateFormula>,
        condition: Option<Box<StateFormula>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathFormula {
    Next {
        interval: TimeInterval,
        body: StateFormula,
    },
    Until {
        interval: TimeInterval,
        left: StateFormula,
        right: StateFormula,
    },
}

impl StateFormula {
    pub fn not(f: StateFormula) -> StateFormula {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    /// Disjunction, desugared to `!(!a & !b)`.
    pub fn or(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::not(StateFormula::and(StateFormula::not(a), StateFormula::not(b)))
    }

    /// Whether a steady-state operator occurs anywhere in the formula.
    pub fn has_steady(&self) -> bool {
        match self {
            StateFormula::Const(_) | StateFormula::Atomic(_) => false,
            StateFormula::Not(f) => f.has_steady(),
            StateFormula::And(a, b) => a.has_steady() || b.has_steady(),
            StateFormula::Prob { path, .. } => match path.as_ref() {
                PathFormula::Next { body, .. } => body.has_steady(),
                PathFormula::Until { left, right, .. } => left.has_steady() || right.has_steady(),
            },
            StateFormula::Steady { .. } => true,
        }
    }

    /// Ternary value at a concrete state, using only its atomic labels.
    /// Probabilistic and steady-state sub-formulae are `Unknown`.
    pub fn eval_local(&self, x: &[i64]) -> Ternary {
        match self {
            StateFormula::Const(b) => Ternary::from(*b),
            StateFormula::Atomic(ap) => Ternary::from(ap.eval(x)),
            StateFormula::Not(f) => f.eval_local(x).complement(),
            StateFormula::And(a, b) => {
                let l = a.eval_local(x);
                if l == Ternary::False {
                    return l;
                }
                l.and(b.eval_local(x))
            }
            StateFormula::Prob { .. } | StateFormula::Steady { .. } => Ternary::Unknown,
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DisplayWith(move |f: &mut fmt::Formatter<'_>| write_state(f, self, names))
    }
}

/// All atomic propositions of a formula, without duplicates, in order of
/// first occurrence.
pub fn formula_aps(phi: &StateFormula) -> Vec<ApExpr> {
    fn walk(f: &StateFormula, out: &mut Vec<ApExpr>) {
        match f {
            StateFormula::Const(_) => {}
            StateFormula::Atomic(ap) => {
                if !out.contains(ap) {
                    out.push(ap.clone());
                }
            }
            StateFormula::Not(g) => walk(g, out),
            StateFormula::And(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            StateFormula::Prob { path, .. } => match path.as_ref() {
                PathFormula::Next { body, .. } => walk(body, out),
                PathFormula::Until { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            },
            StateFormula::Steady {
                body, condition, ..
            } => {
                walk(body, out);
                if let Some(c) = condition {
                    walk(c, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(phi, &mut out);
    out
}

/// States at which exploration may stop: along any path, the value of the
/// path formula does not depend on anything visited after such a state.
///
/// Membership is decided from the state's own atomic labels; nested
/// probabilistic operators count as unknown, so a state only qualifies when
/// the predicate is definitely true.
#[derive(Clone, Debug, PartialEq)]
pub struct StopPredicate(Option<StateFormula>);

impl StopPredicate {
    pub fn never() -> StopPredicate {
        StopPredicate(None)
    }

    pub fn from_formula(f: StateFormula) -> StopPredicate {
        StopPredicate(Some(f))
    }

    pub fn is_never(&self) -> bool {
        self.0.is_none()
    }

    pub fn formula(&self) -> Option<&StateFormula> {
        self.0.as_ref()
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        match &self.0 {
            None => false,
            Some(f) => f.eval_local(x) == Ternary::True,
        }
    }
}

/// Shortcut predicate for a path formula evaluated from time zero.
///
/// For `Φ₁ U[0,a] Φ₂` this is `Φ₂ ∨ (¬Φ₁ ∧ ¬Φ₂)`. Next and until formulae
/// whose interval starts after zero have no sound state-level shortcut.
pub fn can_stop(path: &PathFormula) -> StopPredicate {
    match path {
        PathFormula::Next { .. } => StopPredicate::never(),
        PathFormula::Until {
            interval,
            left,
            right,
        } => {
            if interval.lo() > 0.0 {
                return StopPredicate::never();
            }
            until_stop(left, right)
        }
    }
}

/// Shortcut for the second phase `[0, t'-t]` of an until with `t > 0`.
pub fn can_stop_second_phase(path: &PathFormula) -> StopPredicate {
    match path {
        PathFormula::Next { .. } => StopPredicate::never(),
        PathFormula::Until { left, right, .. } => until_stop(left, right),
    }
}

fn until_stop(left: &StateFormula, right: &StateFormula) -> StopPredicate {
    if *left == StateFormula::Const(true) {
        return StopPredicate::from_formula(right.clone());
    }
    StopPredicate::from_formula(StateFormula::or(
        right.clone(),
        StateFormula::and(
            StateFormula::not(left.clone()),
            StateFormula::not(right.clone()),
        ),
    ))
}

struct DisplayWith<F>(F);

impl<F: Fn(&mut fmt::Formatter<'_>) -> fmt::Result> fmt::Display for DisplayWith<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        (self.0)(f)
    }
}

fn write_state(f: &mut fmt::Formatter<'_>, phi: &StateFormula, names: &[String]) -> fmt::Result {
    match phi {
        StateFormula::Const(b) => write!(f, "{b}"),
        StateFormula::Atomic(ap) => write!(f, "{}", ap.display(names)),
        StateFormula::Not(g) => {
            f.write_str("!(")?;
            write_state(f, g, names)?;
            f.write_str(")")
        }
        StateFormula::And(a, b) => {
            f.write_str("(")?;
            write_state(f, a, names)?;
            f.write_str(") & (")?;
            write_state(f, b, names)?;
            f.write_str(")")
        }
        StateFormula::Prob { op, bound, path } => {
            write!(f, "P{}{:?} [ ", op.symbol(), bound)?;
            match path.as_ref() {
                PathFormula::Next { interval, body } => {
                    write!(f, "X{interval} (")?;
                    write_state(f, body, names)?;
                    f.write_str(")")?;
                }
                PathFormula::Until {
                    interval,
                    left,
                    right,
                } => {
                    f.write_str("(")?;
                    write_state(f, left, names)?;
                    write!(f, ") U{interval} (")?;
                    write_state(f, right, names)?;
                    f.write_str(")")?;
                }
            }
            f.write_str(" ]")
        }
        StateFormula::Steady {
            op,
            bound,
            body,
            condition,
        } => {
            write!(f, "S{}{:?} [ (", op.symbol(), bound)?;
            write_state(f, body, names)?;
            f.write_str(")")?;
            if let Some(c) = condition {
                f.write_str(" | (")?;
                write_state(f, c, names)?;
                f.write_str(")")?;
            }
            f.write_str(" ]")
        }
    }
}

/// Parses a formula over the given population names.
pub fn parse_formula(text: &str, populations: &[String]) -> Result<StateFormula, Error> {
    parse_formula_with_labels(text, populations, &[])
}

/// Parses a formula; bare identifiers may also refer to named labels.
pub fn parse_formula_with_labels(
    text: &str,
    populations: &[String],
    labels: &[(String, StateFormula)],
) -> Result<StateFormula, Error> {
    let mut p = FormulaParser {
        cur: Cursor::new(text)?,
        populations,
        labels,
    };
    let f = p.state_or()?;
    if !p.cur.at_end() {
        return Err(p.cur.error("unexpected trailing input".to_string()));
    }
    Ok(f)
}

struct FormulaParser<'a> {
    cur: Cursor,
    populations: &'a [String],
    labels: &'a [(String, StateFormula)],
}

impl FormulaParser<'_> {
    fn state_or(&mut self) -> Result<StateFormula, Error> {
        let mut lhs = self.state_and()?;
        while self.cur.eat_sym("|") {
            let rhs = self.state_and()?;
            lhs = StateFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn state_and(&mut self) -> Result<StateFormula, Error> {
        let mut lhs = self.state_unary()?;
        while self.cur.eat_sym("&") {
            let rhs = self.state_unary()?;
            lhs = StateFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn state_unary(&mut self) -> Result<StateFormula, Error> {
        if self.cur.eat_sym("!") {
            return Ok(StateFormula::not(self.state_unary()?));
        }
        self.state_primary()
    }

    fn is_operator_head(&self) -> Option<char> {
        let head = match self.cur.peek() {
            Some(Tok::Ident(s)) if s == "P" || s == "S" => s.chars().next(),
            _ => return None,
        };
        let cmp = matches!(self.cur.peek_at(1), Some(Tok::Sym(s)) if CmpOp::from_symbol(s).is_some());
        let num = matches!(self.cur.peek_at(2), Some(Tok::Num(_)));
        let bracket = matches!(self.cur.peek_at(3), Some(Tok::Sym("[")));
        (cmp && num && bracket).then_some(head?)
    }

    fn state_primary(&mut self) -> Result<StateFormula, Error> {
        if let Some(head) = self.is_operator_head() {
            self.cur.next();
            let op = match self.cur.next() {
                Some(Tok::Sym(s)) => CmpOp::from_symbol(s).unwrap(),
                _ => unreachable!(),
            };
            let bound = self.probability()?;
            self.cur.expect_sym("[")?;
            let f = if head == 'P' {
                let path = self.path()?;
                StateFormula::Prob {
                    op,
                    bound,
                    path: Box::new(path),
                }
            } else {
                let body = self.state_and()?;
                let condition = if self.cur.eat_sym("|") {
                    Some(Box::new(self.state_and()?))
                } else {
                    None
                };
                StateFormula::Steady {
                    op,
                    bound,
                    body: Box::new(body),
                    condition,
                }
            };
            self.cur.expect_sym("]")?;
            return Ok(f);
        }
        if let Some(Tok::Ident(name)) = self.cur.peek() {
            let follows_arith = matches!(
                self.cur.peek_at(1),
                Some(Tok::Sym("+" | "-" | "*" | "/" | "^" | "<" | "<=" | "=" | ">=" | ">"))
            );
            if !follows_arith {
                if name == "true" || name == "false" {
                    let b = name == "true";
                    self.cur.next();
                    return Ok(StateFormula::Const(b));
                }
                if let Some((_, f)) = self.labels.iter().find(|(n, _)| n == name) {
                    let f = f.clone();
                    self.cur.next();
                    return Ok(f);
                }
            }
        }
        if self.cur.is_sym("(") {
            let save = self.cur.pos;
            if let Ok(ap) = self.atomic() {
                return Ok(ap);
            }
            self.cur.pos = save;
            self.cur.next();
            let f = self.state_or()?;
            self.cur.expect_sym(")")?;
            return Ok(f);
        }
        self.atomic()
    }

    fn atomic(&mut self) -> Result<StateFormula, Error> {
        let pops = self.populations;
        let resolve = move |s: &str| pops.iter().position(|n| n == s).map(Binding::Var);
        let n = pops.len();
        let lhs = parse_sum(&mut self.cur, &resolve)?.expand(n)?;
        let op = match self.cur.peek() {
            Some(Tok::Sym(s)) if RelOp::from_symbol(s).is_some() => RelOp::from_symbol(s).unwrap(),
            _ => return Err(self.cur.error("expected comparison operator".to_string())),
        };
        self.cur.next();
        let rhs = parse_sum(&mut self.cur, &resolve)?.expand(n)?;
        Ok(StateFormula::Atomic(ApExpr::new(&lhs, op, &rhs)?))
    }

    fn probability(&mut self) -> Result<f64, Error> {
        let pos = self.cur.offset();
        match self.cur.next() {
            Some(Tok::Num(s)) => {
                let p: f64 = s.parse().map_err(|_| Error::Syntax {
                    pos,
                    msg: format!("invalid number `{s}`"),
                })?;
                if (0.0..=1.0).contains(&p) {
                    Ok(p)
                } else {
                    Err(Error::ProbabilityOutOfRange(p))
                }
            }
            _ => Err(Error::Syntax {
                pos,
                msg: "expected probability bound".to_string(),
            }),
        }
    }

    fn number(&mut self) -> Result<f64, Error> {
        let pos = self.cur.offset();
        match self.cur.next() {
            Some(Tok::Num(s)) => s.parse().map_err(|_| Error::Syntax {
                pos,
                msg: format!("invalid number `{s}`"),
            }),
            Some(Tok::Ident(s)) if s == "inf" => Ok(f64::INFINITY),
            _ => Err(Error::Syntax {
                pos,
                msg: "expected number".to_string(),
            }),
        }
    }

    fn interval(&mut self) -> Result<TimeInterval, Error> {
        if self.cur.eat_sym("[") {
            let lo = self.number()?;
            self.cur.expect_sym(",")?;
            let hi = self.number()?;
            self.cur.expect_sym("]")?;
            TimeInterval::new(lo, hi)
        } else if self.cur.eat_sym("<=") {
            let hi = self.number()?;
            TimeInterval::upto(hi)
        } else {
            Ok(TimeInterval::UNBOUNDED)
        }
    }

    fn path(&mut self) -> Result<PathFormula, Error> {
        if self.cur.is_ident("X") {
            self.cur.next();
            let interval = self.interval()?;
            let body = self.state_or()?;
            return Ok(PathFormula::Next { interval, body });
        }
        if self.cur.is_ident("F") {
            self.cur.next();
            let interval = self.interval()?;
            let body = self.state_or()?;
            return Ok(PathFormula::Until {
                interval,
                left: StateFormula::Const(true),
                right: body,
            });
        }
        let left = self.state_or()?;
        if !self.cur.is_ident("U") {
            return Err(self.cur.error("expected `U`".to_string()));
        }
        self.cur.next();
        let interval = self.interval()?;
        let right = self.state_or()?;
        Ok(PathFormula::Until {
            interval,
            left,
            right,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ap(text: &str, pops: &[String]) -> StateFormula {
        parse_formula(text, pops).unwrap()
    }

    #[test]
    fn nested_steady_until() {
        let pops = names(&["A", "B"]);
        let labels = vec![
            ("phi".to_string(), ap("A >= 1", &pops)),
            ("psi".to_string(), ap("B < 3", &pops)),
        ];
        let f = parse_formula_with_labels(
            "S>=0.4 [ P>0.98 [ phi U[6.5,8.5] psi ] ]",
            &pops,
            &labels,
        )
        .unwrap();
        let expected = StateFormula::Steady {
            op: CmpOp::Ge,
            bound: 0.4,
            body: Box::new(StateFormula::Prob {
                op: CmpOp::Gt,
                bound: 0.98,
                path: Box::new(PathFormula::Until {
                    interval: TimeInterval::new(6.5, 8.5).unwrap(),
                    left: labels[0].1.clone(),
                    right: labels[1].1.clone(),
                }),
            }),
            condition: None,
        };
        assert_eq!(f, expected);
    }

    #[test]
    fn eventually_desugars() {
        let pops = names(&["G", "P"]);
        let f = parse_formula("P>0.9 [ F[0,60] (P <= 20) ]", &pops).unwrap();
        match f {
            StateFormula::Prob { path, .. } => match *path {
                PathFormula::Until {
                    interval,
                    left,
                    right,
                } => {
                    assert_eq!(interval, TimeInterval::new(0.0, 60.0).unwrap());
                    assert_eq!(left, StateFormula::Const(true));
                    assert_eq!(right, ap("P <= 20", &pops));
                }
                _ => panic!("expected until"),
            },
            _ => panic!("expected P operator"),
        }
    }

    #[test]
    fn next_defaults_to_unbounded_interval() {
        let pops = names(&["x"]);
        let f = parse_formula("P>0.5 [ X x >= 1 ]", &pops).unwrap();
        assert_eq!(
            f,
            StateFormula::Prob {
                op: CmpOp::Gt,
                bound: 0.5,
                path: Box::new(PathFormula::Next {
                    interval: TimeInterval::UNBOUNDED,
                    body: ap("x >= 1", &pops),
                }),
            }
        );
    }

    #[test]
    fn conditional_steady_and_short_interval() {
        let pops = names(&["G", "P"]);
        let f = parse_formula("S>0.5 [ P>0.9 [ F<=10 P <= 20 ] | P > 20 ]", &pops).unwrap();
        match f {
            StateFormula::Steady { condition, .. } => {
                assert_eq!(*condition.unwrap(), ap("P > 20", &pops));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn disjunction_is_desugared() {
        let pops = names(&["x"]);
        let f = parse_formula("x < 1 | x > 5", &pops).unwrap();
        assert_eq!(
            f,
            StateFormula::or(ap("x < 1", &pops), ap("x > 5", &pops))
        );
    }

    #[test]
    fn parse_errors() {
        let pops = names(&["x"]);
        assert!(matches!(
            parse_formula("P>1.5 [ F x > 1 ]", &pops),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        assert!(matches!(
            parse_formula("P>0.5 [ F[3,1] x > 1 ]", &pops),
            Err(Error::MalformedInterval { .. })
        ));
        assert!(matches!(
            parse_formula("P>0.5 [ F[1,inf] x > 1 ]", &pops),
            Err(Error::MalformedInterval { .. })
        ));
        assert!(matches!(
            parse_formula("y > 1", &pops),
            Err(Error::UnknownName(_))
        ));
        match parse_formula("x > 1 &", &pops) {
            Err(Error::Syntax { pos, ref msg }) => assert_eq!(pos, 7, "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polynomial_atoms() {
        let pops = names(&["P1", "P2"]);
        let f = parse_formula("(P1-10)^2+(P2-0)^2 <= 4", &pops).unwrap();
        match &f {
            StateFormula::Atomic(a) => {
                assert!(a.eval(&[10, 2]));
                assert!(a.eval(&[9, 1]));
                assert!(!a.eval(&[0, 10]));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn labels_follow_population_values() {
        let pops = names(&["A", "B"]);
        assert!(ap("A + B <= 7", &pops).eval_local(&[3, 4]).definitely());
        assert!(ap("A^2 + B^2 < 30", &pops).eval_local(&[3, 4]).definitely());
        assert_eq!(ap("A >= 1", &pops).eval_local(&[0, 0]), Ternary::False);
    }

    #[test]
    fn aps_are_collected_once() {
        let pops = names(&["a", "b"]);
        let f = parse_formula("S>=0.4 [ P>0.98 [ a > 0 U b > 0 ] ]", &pops).unwrap();
        assert_eq!(formula_aps(&f).len(), 2);
        let g = parse_formula("a > 0 & !(a > 0)", &pops).unwrap();
        assert_eq!(formula_aps(&g).len(), 1);
        let m = names(&["M", "P"]);
        let w = "M>5 & M<20 & P>5 & P<20";
        let labels = vec![("W".to_string(), ap(w, &m))];
        let h = parse_formula_with_labels("S>0.5 [ P>0.9 [ F<=4 !W ] | W ]", &m, &labels).unwrap();
        assert_eq!(formula_aps(&h), formula_aps(&ap(w, &m)));
        assert_eq!(formula_aps(&h).len(), 4);
    }

    #[test]
    fn stop_predicates() {
        let m = names(&["M", "P"]);
        let w = ap("M>5 & M<20 & P>5 & P<20", &m);
        let until = PathFormula::Until {
            interval: TimeInterval::upto(8.0).unwrap(),
            left: w.clone(),
            right: StateFormula::not(w.clone()),
        };
        let stop = can_stop(&until);
        for x in [[0, 0], [6, 6], [19, 19], [20, 10], [10, 5]] {
            let inside = w.eval_local(&x).definitely();
            assert_eq!(stop.holds(&x), !inside, "{x:?}");
        }

        let p = names(&["G", "P"]);
        let f = parse_formula("P>0.9 [ F<=10 P <= 20 ]", &p).unwrap();
        let StateFormula::Prob { path, .. } = f else {
            panic!()
        };
        let stop = can_stop(&path);
        assert_eq!(stop, StopPredicate::from_formula(ap("P <= 20", &p)));

        let next = PathFormula::Next {
            interval: TimeInterval::upto(1.0).unwrap(),
            body: w.clone(),
        };
        assert!(can_stop(&next).is_never());
        let late = PathFormula::Until {
            interval: TimeInterval::new(1.0, 2.0).unwrap(),
            left: StateFormula::Const(true),
            right: w,
        };
        assert!(can_stop(&late).is_never());
        assert!(!can_stop_second_phase(&late).is_never());
    }

    #[test]
    fn rendering_reparses() {
        let pops = names(&["G", "P"]);
        for text in [
            "S>0.5 [ P>0.9 [ F[0,10] P <= 20 ] | P > 20 ]",
            "P>=0 [ F true ]",
            "!(P < 3) & P<=0.25 [ X[1,2] G = 1 ]",
            "P<0.1 [ G >= 1 U<=3.5 2*P - G/2 > 7 ]",
        ] {
            let f = parse_formula(text, &pops).unwrap();
            let rendered = alloc::format!("{}", f.display(&pops));
            let g = parse_formula(&rendered, &pops)
                .unwrap_or_else(|e| panic!("{rendered}: {e}"));
            assert_eq!(f, g, "{rendered}");
        }
    }
}
