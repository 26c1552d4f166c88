//! Ternary CSL evaluation over a truncation.
//!
//! Every probabilistic operator yields an interval `[lo, hi]`: `lo` counts
//! paths that definitely satisfy the path formula, `hi` those that do not
//! definitely violate it. Frontier states are unknown for every label, so
//! truncation error only ever widens the interval.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::csl::{CmpOp, PathFormula, StateFormula, TimeInterval};
use crate::steady::LyapunovCertificate;
use crate::transient::{backward, unbounded_reach_bounds, TransientConfig};
use crate::trunc::Truncation;
use crate::ternary::Ternary;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ProbInterval {
    pub const FULL: ProbInterval = ProbInterval { lo: 0.0, hi: 1.0 };

    /// Clamps both ends to `[0, 1]` and `lo` to at most `hi`.
    pub fn new(lo: f64, hi: f64) -> ProbInterval {
        let hi = hi.clamp(0.0, 1.0);
        let lo = lo.clamp(0.0, 1.0).min(hi);
        ProbInterval { lo, hi }
    }

    pub fn point(v: f64) -> ProbInterval {
        ProbInterval::new(v, v)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn overlaps(&self, other: &ProbInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6}, {:.6}]", self.lo, self.hi)
    }
}

/// True when both ends satisfy the bound, false when neither does.
pub fn compare(iv: ProbInterval, op: CmpOp, p: f64) -> Ternary {
    match (op.holds(iv.lo, p), op.holds(iv.hi, p)) {
        (true, true) => Ternary::True,
        (false, false) => Ternary::False,
        _ => Ternary::Unknown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub value: Ternary,
    /// Present when the formula is a probabilistic or steady-state operator.
    pub interval: Option<ProbInterval>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// The condition of a conditional steady-state operator has a zero lower
    /// bound, so the upper bound of the ratio is 1.
    DegenerateCondition,
}

/// Values of a formula on every state of a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub values: Vec<Ternary>,
    /// Per-state intervals when the formula is a `P` or `S` operator.
    pub intervals: Option<Vec<ProbInterval>>,
    pub warnings: Vec<Warning>,
}

/// `P(X^I Φ)` for every state, given the values of `Φ`.
pub fn prob_next(tr: &Truncation, interval: TimeInterval, body: &[Ternary]) -> Vec<ProbInterval> {
    (0..tr.len())
        .map(|s| {
            if !tr.is_explored(s) {
                return ProbInterval::FULL;
            }
            let e = tr.exit_rate(s);
            if e == 0.0 {
                return ProbInterval::point(0.0);
            }
            let far = if interval.hi().is_infinite() {
                0.0
            } else {
                libm::exp(-e * interval.hi())
            };
            let window = libm::exp(-e * interval.lo()) - far;
            let (mut yes, mut maybe) = (0.0, 0.0);
            for &(j, r) in tr.row(s) {
                if body[j] == Ternary::True {
                    yes += r;
                }
                if body[j] != Ternary::False {
                    maybe += r;
                }
            }
            ProbInterval::new(window * yes / e, window * maybe / e)
        })
        .collect()
}

/// One side of an until computation.
struct Side {
    /// Left operand acceptable.
    ok: Vec<bool>,
    target: Vec<bool>,
    fail: Vec<bool>,
    upper: bool,
}

impl Side {
    fn new(left: &[Ternary], right: &[Ternary], upper: bool) -> Side {
        let n = left.len();
        let accept = |v: Ternary| if upper { v != Ternary::False } else { v == Ternary::True };
        let ok: Vec<bool> = left.iter().map(|&v| accept(v)).collect();
        let target: Vec<bool> = right.iter().map(|&v| accept(v)).collect();
        let fail = (0..n).map(|i| !target[i] && !ok[i]).collect();
        Side {
            ok,
            target,
            fail,
            upper,
        }
    }

    fn adjust(&self, v: f64, err: f64) -> f64 {
        if self.upper {
            (v + err).min(1.0)
        } else {
            (v - err).max(0.0)
        }
    }

    /// Probability of `Φ₁ U[0,t] Φ₂` on this side.
    fn bounded(&self, tr: &Truncation, t: f64, cfg: &TransientConfig) -> Result<Vec<f64>, Error> {
        let n = tr.len();
        let absorbing: Vec<bool> = (0..n).map(|i| self.target[i] || self.fail[i]).collect();
        let m = tr.make_absorbing(&absorbing).csr();
        if t.is_infinite() {
            let (lo, hi) = unbounded_reach_bounds(&m, &self.target);
            return Ok(if self.upper { hi.values } else { lo.values });
        }
        let f: Vec<f64> = self.target.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let r = backward(&m, &f, t, cfg)?;
        Ok((0..n)
            .map(|i| match (self.target[i], self.fail[i]) {
                (true, _) => 1.0,
                (_, true) => 0.0,
                _ => self.adjust(r.values[i], r.error),
            })
            .collect())
    }

    /// Weights `after` by the probability of staying in `Φ₁` up to `t`.
    fn stay(&self, tr: &Truncation, t: f64, after: &[f64], cfg: &TransientConfig) -> Result<Vec<f64>, Error> {
        let absorbing: Vec<bool> = self.ok.iter().map(|&b| !b).collect();
        let m = tr.make_absorbing(&absorbing).csr();
        let f: Vec<f64> = (0..tr.len()).map(|i| if self.ok[i] { after[i] } else { 0.0 }).collect();
        let r = backward(&m, &f, t, cfg)?;
        Ok(r.values.iter().map(|&v| self.adjust(v, r.error)).collect())
    }
}

/// `P(Φ₁ U^I Φ₂)` for every state, given the values of both operands.
pub fn prob_until(
    tr: &Truncation,
    interval: TimeInterval,
    left: &[Ternary],
    right: &[Ternary],
    cfg: &TransientConfig,
) -> Result<Vec<ProbInterval>, Error> {
    let (t1, t2) = (interval.lo(), interval.hi());
    let mut bounds = Vec::with_capacity(2);
    for upper in [false, true] {
        let side = Side::new(left, right, upper);
        let second = side.bounded(tr, t2 - t1, cfg)?;
        bounds.push(if t1 > 0.0 {
            side.stay(tr, t1, &second, cfg)?
        } else {
            second
        });
    }
    Ok((0..tr.len())
        .map(|i| ProbInterval::new(bounds[0][i], bounds[1][i]))
        .collect())
}

/// Bounds on the stationary probability of a set given by per-window-state
/// values.
fn steady_sums(cert: &LyapunovCertificate, values: &[Ternary]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (k, &v) in values.iter().enumerate() {
        if v == Ternary::True {
            lo += cert.lower[k];
        }
        if v != Ternary::False {
            hi += cert.upper[k];
        }
    }
    (lo.min(1.0), (hi + cert.epsilon).min(1.0))
}

/// Interval of `S(Φ)` or `S(Φ₁ | Φ₂)` from values on the certificate
/// window, in window order.
pub fn steady_op(
    cert: &LyapunovCertificate,
    body: &[Ternary],
    condition: Option<&[Ternary]>,
) -> (ProbInterval, Option<Warning>) {
    match condition {
        None => {
            let (lo, hi) = steady_sums(cert, body);
            (ProbInterval::new(lo, hi), None)
        }
        Some(cond) => {
            let both: Vec<Ternary> = body.iter().zip(cond).map(|(&a, &b)| a.and(b)).collect();
            let (both_lo, both_hi) = steady_sums(cert, &both);
            let (cond_lo, cond_hi) = steady_sums(cert, cond);
            let lo = if cond_hi > 0.0 { both_lo / cond_hi } else { 0.0 };
            if cond_lo > 0.0 {
                (ProbInterval::new(lo, (both_hi / cond_lo).min(1.0)), None)
            } else {
                (ProbInterval::new(lo, 1.0), Some(Warning::DegenerateCondition))
            }
        }
    }
}

/// Evaluates formulae over a truncation.
pub struct Checker<'a> {
    tr: &'a Truncation,
    cert: Option<&'a LyapunovCertificate>,
    window: Vec<Option<usize>>,
    cfg: TransientConfig,
}

impl<'a> Checker<'a> {
    pub fn new(tr: &'a Truncation, cert: Option<&'a LyapunovCertificate>, cfg: TransientConfig) -> Checker<'a> {
        let window = cert
            .map(|c| c.window.iter().map(|x| tr.index_of(x)).collect())
            .unwrap_or_default();
        Checker {
            tr,
            cert,
            window,
            cfg,
        }
    }

    pub fn eval(&self, phi: &StateFormula) -> Result<Evaluation, Error> {
        let mut warnings = Vec::new();
        let (values, intervals) = self.walk(phi, &mut warnings)?;
        Ok(Evaluation {
            values,
            intervals,
            warnings,
        })
    }

    /// Verdict at the state with index `s`.
    pub fn verdict(&self, phi: &StateFormula, s: usize) -> Result<Verdict, Error> {
        let ev = self.eval(phi)?;
        Ok(Verdict {
            value: ev.values[s],
            interval: ev.intervals.map(|iv| iv[s]),
        })
    }

    fn on_window(&self, values: &[Ternary]) -> Vec<Ternary> {
        self.window
            .iter()
            .map(|i| i.map_or(Ternary::Unknown, |i| values[i]))
            .collect()
    }

    fn walk(
        &self,
        phi: &StateFormula,
        warnings: &mut Vec<Warning>,
    ) -> Result<(Vec<Ternary>, Option<Vec<ProbInterval>>), Error> {
        let tr = self.tr;
        let n = tr.len();
        Ok(match phi {
            StateFormula::Const(b) => (vec![Ternary::from(*b); n], None),
            StateFormula::Atomic(ap) => ((0..n).map(|i| tr.label_of(i, ap)).collect(), None),
            StateFormula::Not(f) => {
                let (v, _) = self.walk(f, warnings)?;
                (v.into_iter().map(Ternary::complement).collect(), None)
            }
            StateFormula::And(a, b) => {
                let (va, _) = self.walk(a, warnings)?;
                let (vb, _) = self.walk(b, warnings)?;
                (va.iter().zip(&vb).map(|(&x, &y)| x.and(y)).collect(), None)
            }
            StateFormula::Prob { op, bound, path } => {
                let iv = match path.as_ref() {
                    PathFormula::Next { interval, body } => {
                        let (vb, _) = self.walk(body, warnings)?;
                        prob_next(tr, *interval, &vb)
                    }
                    PathFormula::Until {
                        interval,
                        left,
                        right,
                    } => {
                        let (vl, _) = self.walk(left, warnings)?;
                        let (vr, _) = self.walk(right, warnings)?;
                        prob_until(tr, *interval, &vl, &vr, &self.cfg)?
                    }
                };
                let values = iv.iter().map(|&i| compare(i, *op, *bound)).collect();
                (values, Some(iv))
            }
            StateFormula::Steady {
                op,
                bound,
                body,
                condition,
            } => {
                let cert = self.cert.ok_or_else(|| {
                    Error::MissingCertificate("steady-state operator without a certificate".into())
                })?;
                let (vb, _) = self.walk(body, warnings)?;
                let body_w = self.on_window(&vb);
                let cond_w = match condition {
                    Some(c) => Some(self.on_window(&self.walk(c, warnings)?.0)),
                    None => None,
                };
                let (iv, warn) = steady_op(cert, &body_w, cond_w.as_deref());
                warnings.extend(warn);
                (vec![compare(iv, *op, *bound); n], Some(vec![iv; n]))
            }
        })
    }
}
