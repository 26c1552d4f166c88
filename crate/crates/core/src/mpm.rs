//! Markov population models given by polynomial transition classes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::csl::ApExpr;
use crate::poly::{parse_expr, Binding, Coef, Poly, Rational};
use crate::Error;

/// A population vector in ℕ^d.
pub type State = Vec<i64>;

/// Transition class `(α, v)`: fires `x → x + v` at rate `α(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionClass {
    propensity: Poly<Rational>,
    fast: Poly<f64>,
    change: Vec<i64>,
}

impl TransitionClass {
    pub fn new(propensity: Poly<Rational>, change: Vec<i64>) -> Result<Self, Error> {
        if change.len() != propensity.nvars() {
            return Err(Error::InvalidModel(format!(
                "change vector has {} entries, expected {}",
                change.len(),
                propensity.nvars()
            )));
        }
        if change.iter().all(|&c| c == 0) {
            return Err(Error::InvalidModel("change vector must be non-zero".into()));
        }
        let fast = propensity.to_f64();
        Ok(TransitionClass {
            propensity,
            fast,
            change,
        })
    }

    pub fn propensity(&self) -> &Poly<Rational> {
        &self.propensity
    }

    pub fn change(&self) -> &[i64] {
        &self.change
    }

    pub fn rate(&self, x: &[i64]) -> f64 {
        self.fast.eval_int(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    names: Vec<String>,
    classes: Vec<TransitionClass>,
    init: State,
    lyapunov: Option<Poly<Rational>>,
}

impl ModelSpec {
    pub fn new(names: Vec<String>, classes: Vec<TransitionClass>, init: State) -> Result<Self, Error> {
        let d = names.len();
        if d == 0 {
            return Err(Error::InvalidModel("no populations declared".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidModel(format!("population `{n}` declared twice")));
            }
        }
        if init.len() != d || init.iter().any(|&v| v < 0) {
            return Err(Error::InvalidModel(
                "initial state must give a natural number for every population".into(),
            ));
        }
        if let Some(c) = classes.iter().find(|c| c.change.len() != d) {
            return Err(Error::InvalidModel(format!(
                "transition class over {} populations in a model with {d}",
                c.change.len()
            )));
        }
        Ok(ModelSpec {
            names,
            classes,
            init,
            lyapunov: None,
        })
    }

    pub fn with_lyapunov(mut self, g: Poly<Rational>) -> Result<Self, Error> {
        if g.nvars() != self.dim() {
            return Err(Error::InvalidModel("Lyapunov function has wrong arity".into()));
        }
        self.lyapunov = Some(g);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn classes(&self) -> &[TransitionClass] {
        &self.classes
    }

    pub fn init(&self) -> &[i64] {
        &self.init
    }

    /// The user-supplied Lyapunov function, if any.
    pub fn lyapunov(&self) -> Option<&Poly<Rational>> {
        self.lyapunov.as_ref()
    }

    /// The Lyapunov function to use: the supplied one or `Σ xᵢ²`.
    pub fn lyapunov_or_default(&self) -> Poly<Rational> {
        self.lyapunov.clone().unwrap_or_else(|| {
            let d = self.dim();
            (0..d).fold(Poly::zero(d), |acc, i| acc.add(&Poly::var(d, i).pow(2)))
        })
    }

    /// Outgoing transitions of `x`, aggregated per distinct change vector in
    /// order of first appearance. Zero-rate moves are omitted.
    pub fn successors(&self, x: &[i64]) -> Result<Vec<(State, f64)>, Error> {
        let mut out: Vec<(State, f64)> = Vec::with_capacity(self.classes.len());
        let mut changes: Vec<&[i64]> = Vec::with_capacity(self.classes.len());
        for (j, c) in self.classes.iter().enumerate() {
            let a = c.rate(x);
            if a < 0.0 || a.is_nan() {
                return Err(Error::NegativePropensity {
                    state: x.to_vec(),
                    class: j,
                    value: a,
                });
            }
            if a == 0.0 {
                continue;
            }
            if let Some(k) = changes.iter().position(|v| *v == c.change.as_slice()) {
                out[k].1 += a;
                continue;
            }
            let y: State = x.iter().zip(&c.change).map(|(a, b)| a + b).collect();
            if y.iter().any(|&v| v < 0) {
                return Err(Error::WellFormednessViolation {
                    state: x.to_vec(),
                    class: j,
                });
            }
            changes.push(&c.change);
            out.push((y, a));
        }
        Ok(out)
    }

    /// Off-diagonal generator entries of row `x` and the diagonal `-E(x)`.
    pub fn generator_row(&self, x: &[i64]) -> Result<(Vec<(State, f64)>, f64), Error> {
        let succ = self.successors(x)?;
        let exit: f64 = succ.iter().map(|(_, r)| r).sum();
        Ok((succ, -exit))
    }

    pub fn label(&self, x: &[i64], ap: &ApExpr) -> bool {
        ap.eval(x)
    }

    /// Structural invariants that hold on every state reachable from the
    /// initial state.
    pub fn invariants(&self) -> Invariants {
        Invariants::infer(self)
    }
}

/// Linear conservation laws and per-population upper bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Invariants {
    /// Upper bound of each population on reachable states, when one exists.
    pub upper: Vec<Option<i64>>,
    /// Pairs `(w, k)` with `w ≥ 0` and `w·x = k` on all reachable states.
    pub laws: Vec<(Vec<i64>, i64)>,
}

impl Invariants {
    pub fn none(d: usize) -> Invariants {
        Invariants {
            upper: vec![None; d],
            laws: Vec::new(),
        }
    }

    fn infer(spec: &ModelSpec) -> Invariants {
        let d = spec.dim();
        let mut upper = vec![None; d];
        let mut laws = Vec::new();

        let rows: Vec<&[i64]> = spec.classes.iter().map(|c| c.change()).collect();
        for w in integer_kernel(&rows, d) {
            let w = if w.iter().all(|&v| v <= 0) {
                w.iter().map(|v| -v).collect()
            } else {
                w
            };
            if w.iter().any(|&v| v < 0) {
                continue;
            }
            let k: i64 = w.iter().zip(&spec.init).map(|(a, b)| a * b).sum();
            for i in 0..d {
                if w[i] > 0 {
                    let b = k / w[i];
                    upper[i] = Some(upper[i].map_or(b, |u: i64| u.min(b)));
                }
            }
            laws.push((w, k));
        }

        // A population whose every increasing class moves it by one and has
        // a propensity vanishing at a common level c never passes c.
        for i in 0..d {
            if upper[i].is_some() {
                continue;
            }
            let inc: Vec<&TransitionClass> = spec.classes.iter().filter(|c| c.change[i] > 0).collect();
            if inc.is_empty() {
                upper[i] = Some(spec.init[i]);
                continue;
            }
            if inc.iter().any(|c| c.change[i] != 1) {
                continue;
            }
            let level = vanishing_level(inc[0].propensity(), i);
            if let Some(c) = level {
                let all = inc
                    .iter()
                    .all(|t| t.propensity().fix_var(i, Rational::from_i64(c)).is_zero());
                if all && spec.init[i] <= c {
                    upper[i] = Some(c);
                }
            }
        }
        Invariants { upper, laws }
    }

    pub fn admits(&self, x: &[i64]) -> bool {
        x.iter().all(|&v| v >= 0)
            && x
                .iter()
                .zip(&self.upper)
                .all(|(&v, u)| u.is_none_or(|u| v <= u))
            && self
                .laws
                .iter()
                .all(|(w, k)| w.iter().zip(x).map(|(a, b)| a * b).sum::<i64>() == *k)
    }

    /// Indices of bounded populations.
    pub fn bounded(&self) -> Vec<usize> {
        (0..self.upper.len()).filter(|&i| self.upper[i].is_some()).collect()
    }
}

/// Smallest natural `c ≤ 64` with `p|_{x_i = c} ≡ 0`.
fn vanishing_level(p: &Poly<Rational>, var: usize) -> Option<i64> {
    let deg = p.degree_in(var) as i64;
    if deg == 0 {
        return None;
    }
    (0..=64i64).find(|&c| p.fix_var(var, Rational::from_i64(c)).is_zero())
}

/// Integer basis of `{w ∈ ℤ^d | r·w = 0 for every row r}`.
fn integer_kernel(rows: &[&[i64]], d: usize) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| Rational::from_i64(v)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..d {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Rational::one().checked_div(m[row][col]).unwrap_or(Rational::one());
        for c in 0..d {
            m[row][c] = m[row][c].mul(inv);
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col];
                for c in 0..d {
                    let v = m[row][c].mul(f);
                    m[r][c] = m[r][c].add(v.neg());
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..d).filter(|c| !pivots.contains(c)) {
        let mut w = vec![Rational::zero(); d];
        w[free] = Rational::one();
        for (r, &pc) in pivots.iter().enumerate() {
            w[pc] = m[r][free].neg();
        }
        let lcm = w.iter().fold(1i128, |acc, v| lcm(acc, v.den()));
        let ints: Vec<i128> = w.iter().map(|v| v.num() * (lcm / v.den())).collect();
        let g = ints.iter().fold(0i128, |acc, &v| gcd(acc, v));
        if g == 0 || w.iter().any(|v| v.is_overflow()) {
            continue;
        }
        basis.push(ints.iter().map(|&v| (v / g) as i64).collect());
    }
    basis
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: i128, b: i128) -> i128 {
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / gcd(a, b) * b
}

/// Parses a model file.
///
/// ```text
/// # comment
/// const delta = 0.02
/// population G = 0
/// population P = 0
/// 1 - G   ; G+=1
/// delta*P ; P-=1
/// lyapunov = G^2 + P^2
/// ```
///
/// Populations must be declared before the first class line. Constants may
/// refer to earlier constants.
pub fn parse_model(text: &str) -> Result<ModelSpec, Error> {
    let mut names: Vec<String> = Vec::new();
    let mut init: Vec<i64> = Vec::new();
    let mut consts: Vec<(String, Rational)> = Vec::new();
    let mut classes: Vec<TransitionClass> = Vec::new();
    let mut lyapunov = None;
    for (no, raw) in text.lines().enumerate() {
        let at = |e: Error| Error::InvalidModel(format!("line {}: {e}", no + 1));
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let constant = |n: &str| consts.iter().find(|c| c.0 == n).map(|c| Binding::Const(c.1));
        let resolve = |n: &str| names.iter().position(|p| p == n).map(Binding::Var).or_else(|| constant(n));
        if let Some(rest) = keyword(line, "const") {
            let (name, expr) = assignment(rest).map_err(at)?;
            let v = constant_value(expr, &constant).map_err(at)?;
            check_fresh(name, &names, &consts).map_err(at)?;
            consts.push((name.to_string(), v));
        } else if let Some(rest) = keyword(line, "population") {
            if !classes.is_empty() || lyapunov.is_some() {
                return Err(at(Error::InvalidModel("populations must be declared first".into())));
            }
            let (name, expr) = assignment(rest).map_err(at)?;
            let v = constant_value(expr, &constant).map_err(at)?;
            if v.den() != 1 || v.num() < 0 || v.num() > i64::MAX as i128 {
                return Err(at(Error::InvalidModel(format!(
                    "initial count of `{name}` must be a natural number"
                ))));
            }
            check_fresh(name, &names, &consts).map_err(at)?;
            names.push(name.to_string());
            init.push(v.num() as i64);
        } else if let Some(rest) = keyword(line, "lyapunov") {
            let expr = rest
                .trim_start()
                .strip_prefix('=')
                .ok_or_else(|| at(Error::InvalidModel("expected `lyapunov = <polynomial>`".into())))?;
            lyapunov = Some(parse_expr(expr, &resolve).and_then(|e| e.expand(names.len())).map_err(at)?);
        } else {
            let (rate, change) = line
                .split_once(';')
                .ok_or_else(|| at(Error::InvalidModel("expected `rate ; change`".into())))?;
            let alpha = parse_expr(rate, &resolve)
                .and_then(|e| e.expand(names.len()))
                .map_err(at)?;
            let v = change_vector(change, &names).map_err(at)?;
            classes.push(TransitionClass::new(alpha, v).map_err(at)?);
        }
    }
    let spec = ModelSpec::new(names, classes, init)?;
    match lyapunov {
        Some(g) => spec.with_lyapunov(g),
        None => Ok(spec),
    }
}

fn keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(kw)?;
    rest.starts_with(char::is_whitespace).then_some(rest)
}

fn assignment(rest: &str) -> Result<(&str, &str), Error> {
    let (name, expr) = rest
        .split_once('=')
        .ok_or_else(|| Error::InvalidModel("expected `name = value`".into()))?;
    let name = name.trim();
    let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if !valid {
        return Err(Error::InvalidModel(format!("invalid name `{name}`")));
    }
    Ok((name, expr))
}

fn check_fresh(name: &str, names: &[String], consts: &[(String, Rational)]) -> Result<(), Error> {
    if names.iter().any(|n| n == name) || consts.iter().any(|c| c.0 == name) {
        return Err(Error::InvalidModel(format!("`{name}` is declared twice")));
    }
    Ok(())
}

fn constant_value(expr: &str, resolve: &dyn Fn(&str) -> Option<Binding>) -> Result<Rational, Error> {
    Ok(parse_expr(expr, resolve)?.expand(0)?.constant_term())
}

/// `A+=1, B-=2`; unnamed populations do not change.
fn change_vector(text: &str, names: &[String]) -> Result<Vec<i64>, Error> {
    let mut v = vec![0i64; names.len()];
    for part in text.split(',') {
        let part = part.trim();
        let (name, sign, amount) = if let Some((n, a)) = part.split_once("+=") {
            (n, 1, a)
        } else if let Some((n, a)) = part.split_once("-=") {
            (n, -1, a)
        } else {
            return Err(Error::InvalidModel(format!("bad change `{part}`, expected `X+=k` or `X-=k`")));
        };
        let name = name.trim();
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))?;
        let k: i64 = amount
            .trim()
            .parse()
            .map_err(|_| Error::InvalidModel(format!("bad amount in `{part}`")))?;
        v[i] += sign * k;
    }
    Ok(v)
}
