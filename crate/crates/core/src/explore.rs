//! Formula-driven state-space exploration.
//!
//! [`transient_trunc`] grows a truncation until, from every source state,
//! the probability of hitting a frontier state that matters within the time
//! bound drops below `ε`. [`truncate_for`] drives it recursively over a CSL
//! formula. [`fsp_explore`] is the breadth-first baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::csl::{can_stop, can_stop_second_phase, CmpOp, PathFormula, StateFormula, StopPredicate};
use crate::mpm::ModelSpec;
use crate::steady::{certify, LyapunovCertificate, SteadyConfig};
use crate::transient::{absorption_dist, backward, forward, unbounded_reach_bounds, TransientConfig};
use crate::trunc::Truncation;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Worst-source driven exploration in batches of frontier states.
    Advanced,
    /// Expand the whole frontier each round.
    Fsp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploreConfig {
    pub epsilon: f64,
    /// Fraction of the frontier mass a batch must cover.
    pub batch_quantile: f64,
    pub max_states: usize,
    pub strategy: Strategy,
    /// Stop at states where the value of the path formula is already fixed.
    pub ap_shortcut: bool,
    pub transient: TransientConfig,
    pub steady: SteadyConfig,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            epsilon: 1e-6,
            batch_quantile: 0.9,
            max_states: 2_000_000,
            strategy: Strategy::Advanced,
            ap_shortcut: true,
            transient: TransientConfig::default(),
            steady: SteadyConfig::default(),
        }
    }
}

impl ExploreConfig {
    fn validate(&self) -> Result<(), Error> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidTolerance(self.epsilon));
        }
        if !(self.batch_quantile > 0.0 && self.batch_quantile <= 1.0) {
            return Err(Error::InvalidTolerance(self.batch_quantile));
        }
        Ok(())
    }
}

/// `ε = min(1e-6, |p − 0.5|/100)` over the probability bounds of `phi`.
pub fn auto_epsilon(phi: &StateFormula) -> f64 {
    fn walk(f: &StateFormula, eps: &mut f64) {
        match f {
            StateFormula::Const(_) | StateFormula::Atomic(_) => {}
            StateFormula::Not(g) => walk(g, eps),
            StateFormula::And(a, b) => {
                walk(a, eps);
                walk(b, eps);
            }
            StateFormula::Prob { bound, path, .. } => {
                let e = (bound - 0.5).abs() / 100.0;
                if e > 0.0 {
                    *eps = eps.min(e);
                }
                match path.as_ref() {
                    PathFormula::Next { body, .. } => walk(body, eps),
                    PathFormula::Until { left, right, .. } => {
                        walk(left, eps);
                        walk(right, eps);
                    }
                }
            }
            StateFormula::Steady {
                body, condition, ..
            } => {
                walk(body, eps);
                if let Some(c) = condition {
                    walk(c, eps);
                }
            }
        }
    }
    let mut eps = 1e-6;
    walk(phi, &mut eps);
    eps
}

/// One call of the truncation loop, kept for re-checking its guarantee.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakRecord {
    /// Source states, as indices into the final truncation.
    pub sources: Vec<usize>,
    pub stop: StopPredicate,
    pub t: f64,
    /// Upper estimate of the worst leak when the loop ended.
    pub leak: f64,
    /// Length of the exploration order when the loop ended.
    pub explored: usize,
    /// The state cap stopped the loop before the leak fell below `ε`.
    pub capped: bool,
}

/// Frontier states reached from `s`, with their probability mass.
struct FrontierMass {
    mass: Vec<(usize, f64)>,
    total: f64,
}

fn stop_mask(tr: &Truncation, stop: &StopPredicate) -> Vec<bool> {
    (0..tr.len())
        .map(|i| !tr.is_explored(i) && stop.holds(tr.state(i)))
        .collect()
}

fn leak_targets(tr: &Truncation, stop: &StopPredicate) -> Vec<bool> {
    let mask = stop_mask(tr, stop);
    (0..tr.len()).map(|i| !tr.is_explored(i) && !mask[i]).collect()
}

/// Mass on leaking frontier states at time `t` from `s`, plus the solver
/// error.
fn frontier_mass(
    tr: &Truncation,
    s: usize,
    stop: &StopPredicate,
    t: f64,
    cfg: &TransientConfig,
) -> Result<FrontierMass, Error> {
    let target = leak_targets(tr, stop);
    if !target.contains(&true) {
        return Ok(FrontierMass {
            mass: Vec::new(),
            total: 0.0,
        });
    }
    let m = tr.csr();
    let dist = if t.is_infinite() {
        absorption_dist(&m, s)
    } else {
        let mut init = vec![0.0; tr.len()];
        init[s] = 1.0;
        forward(&m, &init, t, cfg)?
    };
    let mass: Vec<(usize, f64)> = (0..tr.len())
        .filter(|&i| target[i] && dist.values[i] > 0.0)
        .map(|i| (i, dist.values[i]))
        .collect();
    let total = mass.iter().map(|e| e.1).sum::<f64>() + dist.error;
    Ok(FrontierMass { mass, total })
}

/// Upper estimates of `reach(s, t, W̄ \ Ŵ)` for every state.
pub fn leak_vector(tr: &Truncation, stop: &StopPredicate, t: f64, cfg: &TransientConfig) -> Result<Vec<f64>, Error> {
    let target = leak_targets(tr, stop);
    if !target.contains(&true) {
        return Ok(vec![0.0; tr.len()]);
    }
    let m = tr.csr();
    if t.is_infinite() {
        let (_, hi) = unbounded_reach_bounds(&m, &target);
        return Ok(hi.values);
    }
    let f: Vec<f64> = target.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let r = backward(&m, &f, t, cfg)?;
    Ok(r.values.iter().map(|v| (v + r.error).min(1.0)).collect())
}

/// Source with the largest leak, and that leak.
fn worst_source(
    tr: &Truncation,
    sources: &[usize],
    stop: &StopPredicate,
    t: f64,
    cfg: &TransientConfig,
) -> Result<(usize, f64), Error> {
    if let [s] = sources {
        if t.is_finite() {
            return Ok((*s, frontier_mass(tr, *s, stop, t, cfg)?.total));
        }
    }
    let leak = leak_vector(tr, stop, t, cfg)?;
    let mut best = (sources[0], f64::NEG_INFINITY);
    for &s in sources {
        if leak[s] > best.1 {
            best = (s, leak[s]);
        }
    }
    Ok(best)
}

/// Smallest prefix, by descending mass, covering
/// `max(ε, quantile × total)`.
fn select_batch(mut mass: Vec<(usize, f64)>, eps: f64, quantile: f64) -> Vec<usize> {
    mass.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: f64 = mass.iter().map(|e| e.1).sum();
    let need = eps.max(quantile * total).min(total);
    let mut acc = 0.0;
    let mut out = Vec::new();
    for (i, m) in mass {
        out.push(i);
        acc += m;
        if acc >= need {
            break;
        }
    }
    out
}

fn ensure_explored(spec: &ModelSpec, tr: &mut Truncation, sources: &[usize]) -> Result<(), Error> {
    let todo: Vec<usize> = sources.iter().copied().filter(|&i| !tr.is_explored(i)).collect();
    tr.extend_indices(spec, &todo)
}

fn check_time(t: f64) -> Result<(), Error> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// Grows `tr` until `max_{s ∈ sources} reach(s, t, W̄ \ Ŵ) < ε`, then also
/// explores the frontier states in `Ŵ`.
pub fn transient_trunc(
    spec: &ModelSpec,
    tr: &mut Truncation,
    sources: &[usize],
    stop: &StopPredicate,
    t: f64,
    cfg: &ExploreConfig,
) -> Result<LeakRecord, Error> {
    cfg.validate()?;
    check_time(t)?;
    ensure_explored(spec, tr, sources)?;
    let eps = cfg.epsilon;
    let mut capped = false;
    let mut leak = 0.0;
    if !sources.is_empty() {
        'outer: loop {
            let (s, worst) = worst_source(tr, sources, stop, t, &cfg.transient)?;
            leak = worst;
            if worst < eps {
                break;
            }
            loop {
                let fm = frontier_mass(tr, s, stop, t, &cfg.transient)?;
                if fm.total < eps {
                    break;
                }
                let batch = select_batch(fm.mass, eps, cfg.batch_quantile);
                if batch.is_empty() {
                    // Only solver error is left; nothing to explore.
                    leak = fm.total;
                    break 'outer;
                }
                if tr.explored_len() + batch.len() > cfg.max_states {
                    capped = true;
                    leak = fm.total.max(leak);
                    break 'outer;
                }
                tr.extend_indices(spec, &batch)?;
            }
        }
    }
    let explored = tr.exploration_order().len();
    let stops: Vec<usize> = tr.frontier().filter(|&i| stop.holds(tr.state(i))).collect();
    tr.extend_indices(spec, &stops)?;
    Ok(LeakRecord {
        sources: sources.to_vec(),
        stop: stop.clone(),
        t,
        leak,
        explored,
        capped,
    })
}

/// Breadth-first baseline: explores the whole frontier each round until
/// `max_{s ∈ sources} reach(s, t, W̄) < ε`.
pub fn fsp_explore(
    spec: &ModelSpec,
    tr: &mut Truncation,
    sources: &[usize],
    t: f64,
    cfg: &ExploreConfig,
) -> Result<LeakRecord, Error> {
    cfg.validate()?;
    check_time(t)?;
    ensure_explored(spec, tr, sources)?;
    let never = StopPredicate::never();
    let mut capped = false;
    let mut leak = 0.0;
    if !sources.is_empty() {
        loop {
            let lv = leak_vector(tr, &never, t, &cfg.transient)?;
            leak = sources.iter().map(|&s| lv[s]).fold(0.0, f64::max);
            if leak < cfg.epsilon {
                break;
            }
            let layer: Vec<usize> = tr.frontier().collect();
            if layer.is_empty() {
                break;
            }
            if tr.explored_len() + layer.len() > cfg.max_states {
                capped = true;
                break;
            }
            tr.extend_indices(spec, &layer)?;
        }
    }
    Ok(LeakRecord {
        sources: sources.to_vec(),
        stop: never,
        t,
        leak,
        explored: tr.exploration_order().len(),
        capped,
    })
}

/// A truncation sufficient for a formula together with what was needed to
/// build it.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub truncation: Truncation,
    pub certificate: Option<LyapunovCertificate>,
    pub log: Vec<LeakRecord>,
}

impl Exploration {
    pub fn capped(&self) -> bool {
        self.log.iter().any(|r| r.capped)
    }
}

/// Builds a truncation for `phi` from the initial state, computing a
/// Lyapunov certificate when `phi` has a steady-state operator.
pub fn truncate_for(spec: &ModelSpec, phi: &StateFormula, cfg: &ExploreConfig) -> Result<Exploration, Error> {
    let cert = if phi.has_steady() {
        Some(certify(spec, &cfg.steady)?)
    } else {
        None
    };
    truncate_with(spec, phi, cfg, cert)
}

/// As [`truncate_for`] with a certificate computed beforehand.
pub fn truncate_with(
    spec: &ModelSpec,
    phi: &StateFormula,
    cfg: &ExploreConfig,
    certificate: Option<LyapunovCertificate>,
) -> Result<Exploration, Error> {
    cfg.validate()?;
    if phi.has_steady() && certificate.is_none() {
        return Err(Error::MissingCertificate(
            "the formula has a steady-state operator; supply a Lyapunov function".into(),
        ));
    }
    let mut ex = Exploration {
        truncation: Truncation::new(),
        certificate,
        log: Vec::new(),
    };
    ex.truncation.extend(spec, [spec.init().to_vec()])?;
    let s0 = vec![0];
    trunc(spec, &mut ex, &s0, phi, cfg)?;
    Ok(ex)
}

fn union(a: Vec<usize>, b: Vec<usize>, n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(a.len() + b.len());
    for i in a.into_iter().chain(b) {
        if !seen[i] {
            seen[i] = true;
            out.push(i);
        }
    }
    out
}

fn trunc(
    spec: &ModelSpec,
    ex: &mut Exploration,
    w: &[usize],
    phi: &StateFormula,
    cfg: &ExploreConfig,
) -> Result<Vec<usize>, Error> {
    match phi {
        StateFormula::Const(_) | StateFormula::Atomic(_) => Ok(w.to_vec()),
        StateFormula::Not(f) => trunc(spec, ex, w, f, cfg),
        StateFormula::And(a, b) => {
            let wa = trunc(spec, ex, w, a, cfg)?;
            let wb = trunc(spec, ex, w, b, cfg)?;
            Ok(union(wa, wb, ex.truncation.len()))
        }
        StateFormula::Prob { op, bound, .. } if vacuous_bound(*op, *bound) => Ok(w.to_vec()),
        StateFormula::Prob { path, .. } => match path.as_ref() {
            PathFormula::Next { body, .. } => {
                let tr = &mut ex.truncation;
                let mut post = Vec::new();
                for &i in w {
                    post.extend(tr.row(i).iter().map(|e| e.0));
                }
                let all = union(w.to_vec(), post, tr.len());
                ensure_explored(spec, tr, &all)?;
                trunc(spec, ex, &all, body, cfg)
            }
            PathFormula::Until {
                interval,
                left,
                right,
            } => {
                let (t1, t2) = (interval.lo(), interval.hi());
                let stop = |p: StopPredicate| if cfg.ap_shortcut { p } else { StopPredicate::never() };
                let mut sources = w.to_vec();
                if t1 > 0.0 {
                    sources = phase(spec, ex, &sources, &StopPredicate::never(), t1, cfg)?;
                    let rest = t2 - t1;
                    phase(spec, ex, &sources, &stop(can_stop_second_phase(path)), rest, cfg)?;
                } else {
                    phase(spec, ex, &sources, &stop(can_stop(path)), t2, cfg)?;
                }
                let explored: Vec<usize> = ex.truncation.explored().collect();
                let wl = trunc(spec, ex, &explored, left, cfg)?;
                let wr = trunc(spec, ex, &explored, right, cfg)?;
                Ok(union(wl, wr, ex.truncation.len()))
            }
        },
        StateFormula::Steady { body, condition, .. } => {
            let cert = ex.certificate.as_ref().ok_or_else(|| {
                Error::MissingCertificate("steady-state operator without a certificate".into())
            })?;
            let window = cert.window.clone();
            let tr = &mut ex.truncation;
            tr.extend(spec, window.iter().cloned())?;
            let mut ws: Vec<usize> = window.iter().map(|x| tr.index_of(x).unwrap()).collect();
            ws = union(w.to_vec(), ws, tr.len());
            let mut out = trunc(spec, ex, &ws, body, cfg)?;
            if let Some(c) = condition {
                let wc = trunc(spec, ex, &ws, c, cfg)?;
                out = union(out, wc, ex.truncation.len());
            }
            Ok(out)
        }
    }
}

/// One exploration phase; returns the explored states afterwards.
fn phase(
    spec: &ModelSpec,
    ex: &mut Exploration,
    sources: &[usize],
    stop: &StopPredicate,
    t: f64,
    cfg: &ExploreConfig,
) -> Result<Vec<usize>, Error> {
    let rec = match cfg.strategy {
        Strategy::Advanced => transient_trunc(spec, &mut ex.truncation, sources, stop, t, cfg)?,
        Strategy::Fsp => fsp_explore(spec, &mut ex.truncation, sources, t, cfg)?,
    };
    ex.log.push(rec);
    Ok(ex.truncation.explored().collect())
}

/// Recomputes the leak of a record on a fresh truncation holding exactly
/// the states explored when its loop ended.
pub fn recheck_leak(
    spec: &ModelSpec,
    ex: &Exploration,
    rec: &LeakRecord,
    cfg: &TransientConfig,
) -> Result<f64, Error> {
    let base = &ex.truncation;
    let mut fresh = Truncation::new();
    let states = base.exploration_order()[..rec.explored].iter().map(|&i| base.state(i).to_vec());
    fresh.extend(spec, states)?;
    let lv = leak_vector(&fresh, &rec.stop, rec.t, cfg)?;
    let mut worst: f64 = 0.0;
    for &s in &rec.sources {
        let i = fresh
            .index_of(base.state(s))
            .ok_or_else(|| Error::StateNotExplored(base.state(s).to_vec()))?;
        worst = worst.max(lv[i]);
    }
    Ok(worst)
}

/// Whether `op` makes every probability satisfy the bound, so that no
/// exploration can change the verdict.
pub fn vacuous_bound(op: CmpOp, p: f64) -> bool {
    match op {
        CmpOp::Ge => p <= 0.0,
        CmpOp::Gt => p < 0.0,
        CmpOp::Le => p >= 1.0,
        CmpOp::Lt => p > 1.0,
    }
}
