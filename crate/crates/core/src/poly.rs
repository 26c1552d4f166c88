//! Sparse multivariate polynomials and their textual expression syntax.
//!
//! Propensities, Lyapunov functions and drifts are [`Poly<f64>`]; atomic
//! propositions keep exact [`Rational`] coefficients so that state labels are
//! computed without rounding.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lexer::{Cursor, Tok};
use crate::Error;

/// Coefficient ring of a polynomial.
pub trait Coef: Copy + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn neg(self) -> Self;
    fn is_zero(self) -> bool;
    fn to_f64(self) -> f64;
    fn from_i64(v: i64) -> Self;
}

impl Coef for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn neg(self) -> Self {
        -self
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact rational with `i128` parts.
///
/// Arithmetic never panics: an overflowing operation produces the sticky
/// [`Rational::OVERFLOW`] marker (denominator zero), which callers check
/// once after a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub const OVERFLOW: Rational = Rational { num: 0, den: 0 };

    pub fn new(num: i128, den: i128) -> Rational {
        if den == 0 {
            return Rational::OVERFLOW;
        }
        let g = gcd(num, den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            match (n.checked_neg(), d.checked_neg()) {
                (Some(a), Some(b)) => {
                    n = a;
                    d = b;
                }
                _ => return Rational::OVERFLOW,
            }
        }
        Rational { num: n, den: d }
    }

    pub fn integer(v: i128) -> Rational {
        Rational { num: v, den: 1 }
    }

    pub fn num(self) -> i128 {
        self.num
    }

    pub fn den(self) -> i128 {
        self.den
    }

    pub fn is_overflow(self) -> bool {
        self.den == 0
    }

    pub fn checked_div(self, other: Rational) -> Option<Rational> {
        if other.num == 0 || self.is_overflow() || other.is_overflow() {
            return None;
        }
        let n = self.num.checked_mul(other.den)?;
        let d = self.den.checked_mul(other.num)?;
        let r = Rational::new(n, d);
        (!r.is_overflow()).then_some(r)
    }

    /// Parses a decimal literal such as `12`, `0.02` or `2.5e-3` exactly.
    pub fn parse_decimal(text: &str) -> Option<Rational> {
        let (mantissa, exp) = match text.find(['e', 'E']) {
            Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if frac_part.contains('.') {
            return None;
        }
        let mut num: i128 = 0;
        for ch in int_part.chars().chain(frac_part.chars()) {
            let d = ch.to_digit(10)? as i128;
            num = num.checked_mul(10)?.checked_add(d)?;
        }
        let scale = exp - frac_part.len() as i32;
        let pow10 = |k: u32| 10i128.checked_pow(k);
        let r = if scale >= 0 {
            Rational::new(num.checked_mul(pow10(scale as u32)?)?, 1)
        } else {
            Rational::new(num, pow10((-scale) as u32)?)
        };
        (!r.is_overflow()).then_some(r)
    }
}

impl Coef for Rational {
    fn zero() -> Self {
        Rational::integer(0)
    }
    fn one() -> Self {
        Rational::integer(1)
    }
    fn add(self, other: Self) -> Self {
        if self.is_overflow() || other.is_overflow() {
            return Rational::OVERFLOW;
        }
        let g = gcd(self.den, other.den);
        let lhs = self.num.checked_mul(other.den / g);
        let rhs = other.num.checked_mul(self.den / g);
        let den = (self.den / g).checked_mul(other.den);
        match (lhs, rhs, den) {
            (Some(a), Some(b), Some(d)) => match a.checked_add(b) {
                Some(n) => Rational::new(n, d),
                None => Rational::OVERFLOW,
            },
            _ => Rational::OVERFLOW,
        }
    }
    fn mul(self, other: Self) -> Self {
        if self.is_overflow() || other.is_overflow() {
            return Rational::OVERFLOW;
        }
        let g1 = gcd(self.num, other.den).max(1);
        let g2 = gcd(other.num, self.den).max(1);
        match (
            (self.num / g1).checked_mul(other.num / g2),
            (self.den / g2).checked_mul(other.den / g1),
        ) {
            (Some(n), Some(d)) => Rational::new(n, d),
            _ => Rational::OVERFLOW,
        }
    }
    fn neg(self) -> Self {
        match self.num.checked_neg() {
            Some(n) if !self.is_overflow() => Rational { num: n, den: self.den },
            _ => Rational::OVERFLOW,
        }
    }
    fn is_zero(self) -> bool {
        self.num == 0 && self.den != 0
    }
    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
    fn from_i64(v: i64) -> Self {
        Rational::integer(v as i128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term<C> {
    pub coef: C,
    pub exps: Vec<u16>,
}

/// Polynomial in `nvars` variables, stored as a list of monomials sorted by
/// exponent vector with no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C> {
    nvars: usize,
    terms: Vec<Term<C>>,
}

impl<C: Coef> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.push(Term {
                coef: c,
                exps: vec![0; nvars],
            });
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Poly {
            nvars,
            terms: vec![Term { coef: C::one(), exps }],
        }
    }

    /// Builds a polynomial from raw terms, merging duplicates.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (C, Vec<u16>)>) -> Self {
        let mut p = Poly {
            nvars,
            terms: terms
                .into_iter()
                .map(|(coef, exps)| {
                    assert_eq!(exps.len(), nvars, "exponent vector length");
                    Term { coef, exps }
                })
                .collect(),
        };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        let mut merged: Vec<Term<C>> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coef = last.coef.add(t.coef),
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coef.is_zero());
        self.terms = merged;
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term<C>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.exps.iter().all(|&e| e == 0))
    }

    pub fn constant_term(&self) -> C {
        self.terms
            .iter()
            .find(|t| t.exps.iter().all(|&e| e == 0))
            .map_or(C::zero(), |t| t.coef)
    }

    /// Total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().map(|&e| e as u32).sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps[var] as u32)
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut p = Poly {
            nvars: self.nvars,
            terms: self.terms.iter().chain(other.terms.iter()).cloned().collect(),
        };
        p.normalize();
        p
    }

    pub fn neg(&self) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: t.coef.neg(),
                    exps: t.exps.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: C) -> Self {
        let mut p = Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: t.coef.mul(c),
                    exps: t.exps.clone(),
                })
                .collect(),
        };
        p.normalize();
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coef: a.coef.mul(b.coef),
                    exps: a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect(),
                });
            }
        }
        let mut p = Poly {
            nvars: self.nvars,
            terms,
        };
        p.normalize();
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Poly::constant(self.nvars, C::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut p = Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|t| t.exps[var] > 0)
                .map(|t| {
                    let mut exps = t.exps.clone();
                    let e = exps[var];
                    exps[var] -= 1;
                    Term {
                        coef: t.coef.mul(C::from_i64(e as i64)),
                        exps,
                    }
                })
                .collect(),
        };
        p.normalize();
        p
    }

    /// The polynomial `x ↦ p(x + shift)`.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        debug_assert_eq!(shift.len(), self.nvars);
        let lin: Vec<Poly<C>> = (0..self.nvars)
            .map(|i| Poly::var(self.nvars, i).add(&Poly::constant(self.nvars, C::from_i64(shift[i]))))
            .collect();
        let mut out = Poly::zero(self.nvars);
        for t in &self.terms {
            let mut prod = Poly::constant(self.nvars, t.coef);
            for (i, &e) in t.exps.iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&lin[i].pow(e as u32));
                }
            }
            out = out.add(&prod);
        }
        out
    }

    /// Substitutes the constant `value` for variable `var`.
    pub fn fix_var(&self, var: usize, value: C) -> Self {
        let mut p = Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut coef = t.coef;
                    for _ in 0..t.exps[var] {
                        coef = coef.mul(value);
                    }
                    let mut exps = t.exps.clone();
                    exps[var] = 0;
                    Term { coef, exps }
                })
                .collect(),
        };
        p.normalize();
        p
    }

    pub fn map<D: Coef>(&self, f: impl Fn(C) -> D) -> Poly<D> {
        let mut p = Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: f(t.coef),
                    exps: t.exps.clone(),
                })
                .collect(),
        };
        p.normalize();
        p
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map(|c| c.to_f64())
    }

    /// Evaluates at a real point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut sum = 0.0;
        for t in &self.terms {
            let mut v = t.coef.to_f64();
            for (i, &e) in t.exps.iter().enumerate() {
                for _ in 0..e {
                    v *= x[i];
                }
            }
            sum += v;
        }
        sum
    }

    /// Evaluates at an integer point.
    pub fn eval_int(&self, x: &[i64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut sum = 0.0;
        for t in &self.terms {
            let mut v = t.coef.to_f64();
            for (i, &e) in t.exps.iter().enumerate() {
                for _ in 0..e {
                    v *= x[i] as f64;
                }
            }
            sum += v;
        }
        sum
    }

    /// Renders with the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a, C> {
        PolyDisplay { poly: self, names }
    }
}

impl Poly<Rational> {
    /// Exact evaluation at an integer point; `None` on `i128` overflow or a
    /// non-integer coefficient.
    pub fn eval_exact(&self, x: &[i64]) -> Option<i128> {
        let mut sum: i128 = 0;
        for t in &self.terms {
            if t.coef.den() != 1 {
                return None;
            }
            let mut v = t.coef.num();
            for (i, &e) in t.exps.iter().enumerate() {
                for _ in 0..e {
                    v = v.checked_mul(x[i] as i128)?;
                }
            }
            sum = sum.checked_add(v)?;
        }
        Some(sum)
    }

    /// Scales by a positive factor so that all coefficients are coprime
    /// integers. The sign of every value is preserved.
    pub fn to_primitive_integer(&self) -> Option<Poly<Rational>> {
        let mut lcm: i128 = 1;
        for t in &self.terms {
            let d = t.coef.den();
            lcm = lcm.checked_mul(d / gcd(lcm, d))?;
        }
        let scaled = self.scale(Rational::integer(lcm));
        if scaled.terms.iter().any(|t| t.coef.is_overflow()) {
            return None;
        }
        let g = scaled
            .terms
            .iter()
            .fold(0i128, |acc, t| gcd(acc, t.coef.num()));
        if g > 1 {
            Some(scaled.map(|c| Rational::new(c.num() / g, 1)))
        } else {
            Some(scaled)
        }
    }
}

pub struct PolyDisplay<'a, C> {
    poly: &'a Poly<C>,
    names: &'a [String],
}

impl<C: Coef + fmt::Display> fmt::Display for PolyDisplay<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.terms.is_empty() {
            return f.write_str("0");
        }
        // Highest degree first reads more naturally.
        let mut terms: Vec<&Term<C>> = self.poly.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.exps.iter().map(|&e| e as u32).sum();
            let db: u32 = b.exps.iter().map(|&e| e as u32).sum();
            db.cmp(&da).then_with(|| b.exps.cmp(&a.exps))
        });
        for (k, t) in terms.iter().enumerate() {
            let negative = t.coef.to_f64() < 0.0;
            let mag = if negative { t.coef.neg() } else { t.coef };
            if k == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = t.exps.iter().all(|&e| e == 0);
            if is_const || mag != C::one() {
                factors.push(format!("{mag}"));
            }
            for (i, &e) in t.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.names[i].clone()),
                    _ => factors.push(format!("{}^{}", self.names[i], e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

/// Parsed arithmetic expression, prior to expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// What a name in an expression refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Binding {
    Var(usize),
    Const(Rational),
}

impl Expr {
    /// Expands into a polynomial with exact coefficients.
    pub fn expand(&self, nvars: usize) -> Result<Poly<Rational>, Error> {
        let p = self.expand_inner(nvars)?;
        if p.terms.iter().any(|t| t.coef.is_overflow()) {
            return Err(Error::Overflow);
        }
        Ok(p)
    }

    fn expand_inner(&self, n: usize) -> Result<Poly<Rational>, Error> {
        Ok(match self {
            Expr::Num(r) => Poly::constant(n, *r),
            Expr::Var(i) => Poly::var(n, *i),
            Expr::Neg(e) => e.expand_inner(n)?.neg(),
            Expr::Add(a, b) => a.expand_inner(n)?.add(&b.expand_inner(n)?),
            Expr::Sub(a, b) => a.expand_inner(n)?.sub(&b.expand_inner(n)?),
            Expr::Mul(a, b) => a.expand_inner(n)?.mul(&b.expand_inner(n)?),
            Expr::Pow(a, k) => a.expand_inner(n)?.pow(*k),
            Expr::Div(a, b) => {
                let den = b.expand_inner(n)?;
                if !den.is_constant() || den.is_zero() {
                    return Err(Error::NotPolynomial(
                        "division is only allowed by non-zero constants".to_string(),
                    ));
                }
                let inv = Rational::one()
                    .checked_div(den.constant_term())
                    .ok_or(Error::Overflow)?;
                a.expand_inner(n)?.scale(inv)
            }
        })
    }
}

/// Parses a full arithmetic expression such as `0.02*P` or
/// `(P1-10)^2 + P2^2`.
pub fn parse_expr(text: &str, resolve: &dyn Fn(&str) -> Option<Binding>) -> Result<Expr, Error> {
    let mut cur = Cursor::new(text)?;
    let e = parse_sum(&mut cur, resolve)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected trailing input".to_string()));
    }
    Ok(e)
}

/// Parses and expands a polynomial over the given variable names.
pub fn parse_poly(text: &str, names: &[String]) -> Result<Poly<Rational>, Error> {
    let resolve = |s: &str| names.iter().position(|n| n == s).map(Binding::Var);
    parse_expr(text, &resolve)?.expand(names.len())
}

pub(crate) fn parse_sum(
    cur: &mut Cursor,
    resolve: &dyn Fn(&str) -> Option<Binding>,
) -> Result<Expr, Error> {
    let mut lhs = parse_product(cur, resolve)?;
    loop {
        if cur.eat_sym("+") {
            let rhs = parse_product(cur, resolve)?;
            lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
        } else if cur.eat_sym("-") {
            let rhs = parse_product(cur, resolve)?;
            lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_product(
    cur: &mut Cursor,
    resolve: &dyn Fn(&str) -> Option<Binding>,
) -> Result<Expr, Error> {
    let mut lhs = parse_unary(cur, resolve)?;
    loop {
        if cur.eat_sym("*") {
            let rhs = parse_unary(cur, resolve)?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        } else if cur.eat_sym("/") {
            let rhs = parse_unary(cur, resolve)?;
            lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_unary(cur: &mut Cursor, resolve: &dyn Fn(&str) -> Option<Binding>) -> Result<Expr, Error> {
    if cur.eat_sym("-") {
        return Ok(Expr::Neg(Box::new(parse_unary(cur, resolve)?)));
    }
    if cur.eat_sym("+") {
        return parse_unary(cur, resolve);
    }
    let base = parse_atom(cur, resolve)?;
    if cur.eat_sym("^") {
        match cur.next() {
            Some(Tok::Num(s)) => {
                let k: u32 = s
                    .parse()
                    .map_err(|_| cur_error_at(cur, "exponent must be a small natural number"))?;
                if k > 64 {
                    return Err(cur_error_at(cur, "exponent too large"));
                }
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => Err(cur_error_at(cur, "expected natural-number exponent")),
        }
    } else {
        Ok(base)
    }
}

fn cur_error_at(cur: &Cursor, msg: &str) -> Error {
    cur.error(msg.to_string())
}

fn parse_atom(cur: &mut Cursor, resolve: &dyn Fn(&str) -> Option<Binding>) -> Result<Expr, Error> {
    let offset = cur.offset();
    match cur.next() {
        Some(Tok::Num(s)) => Rational::parse_decimal(&s)
            .map(Expr::Num)
            .ok_or(Error::Syntax {
                pos: offset,
                msg: format!("invalid or out-of-range number `{s}`"),
            }),
        Some(Tok::Ident(name)) => match resolve(&name) {
            Some(Binding::Var(i)) => Ok(Expr::Var(i)),
            Some(Binding::Const(c)) => Ok(Expr::Num(c)),
            None => Err(Error::UnknownName(name)),
        },
        Some(Tok::Sym("(")) => {
            let e = parse_sum(cur, resolve)?;
            cur.expect_sym(")")?;
            Ok(e)
        }
        Some(_) => {
            cur.pos -= 1;
            Err(cur.error("expected number, name or `(`".to_string()))
        }
        None => Err(cur.error("expected number, name or `(`".to_string())),
    }
}
