//! Transient analysis of finite truncations by uniformization.

use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::Csr;
use crate::trunc::AbsorbingView;
use crate::Error;

/// Uniformization rate as a multiple of the largest exit rate.
pub const UNIFORMIZATION_MARGIN: f64 = 1.02;

/// Poisson probabilities `poi_k(qt)` for `k ∈ [left, right]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<f64>,
    /// Upper bound on the Poisson mass outside `[left, right]`.
    pub tail: f64,
}

impl PoissonWeights {
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.left || k > self.right {
            0.0
        } else {
            self.weights[k - self.left]
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn log_pmf(k: usize, qt: f64) -> f64 {
    let k = k as f64;
    -qt + k * libm::log(qt) - libm::lgamma(k + 1.0)
}

/// Truncated Poisson distribution with total tail mass at most `delta`.
///
/// Truncation points come from geometric tail bounds on each side of the
/// mode; the retained weights are normalized to sum to one.
pub fn poisson_weights(qt: f64, delta: f64) -> Result<PoissonWeights, Error> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidTolerance(delta));
    }
    if !(qt >= 0.0) || !qt.is_finite() {
        return Err(Error::NegativeTime(qt));
    }
    if qt == 0.0 {
        return Ok(PoissonWeights {
            left: 0,
            right: 0,
            weights: vec![1.0],
            tail: 0.0,
        });
    }
    let half = delta / 2.0;
    let mode = libm::floor(qt) as usize;

    // Right: Σ_{i>k} p_i ≤ p_{k+1} / (1 - qt/(k+2)) once k+2 > qt.
    let mut right = mode;
    let right_tail = loop {
        let next = libm::exp(log_pmf(right + 1, qt));
        let ratio = qt / (right as f64 + 2.0);
        if ratio < 1.0 {
            let bound = next / (1.0 - ratio);
            if bound <= half {
                break bound;
            }
        }
        right += 1;
    };

    // Left: Σ_{i<k} p_i ≤ p_{k-1} / (1 - (k-1)/qt).
    let mut left = mode;
    let left_tail = loop {
        if left == 0 {
            break 0.0;
        }
        let prev = libm::exp(log_pmf(left - 1, qt));
        let bound = prev / (1.0 - (left as f64 - 1.0) / qt);
        if bound <= half {
            break bound;
        }
        left -= 1;
    };

    // Ratios from the mode avoid the cancellation in log-space evaluation
    // for large qt; normalizing moves at most the tail mass.
    let mut rel = vec![0.0; right - left + 1];
    rel[mode - left] = 1.0;
    for k in mode + 1..=right {
        rel[k - left] = rel[k - 1 - left] * qt / k as f64;
    }
    for k in (left..mode).rev() {
        rel[k - left] = rel[k + 1 - left] * (k + 1) as f64 / qt;
    }
    let total: f64 = rel.iter().sum();
    let weights = rel.iter().map(|w| w / total).collect();
    Ok(PoissonWeights {
        left,
        right,
        weights,
        tail: left_tail + right_tail,
    })
}

/// Tolerances for uniformization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransientConfig {
    /// Poisson truncation error per solve.
    pub delta: f64,
    /// Stop early once iterates become stationary.
    pub steady_detection: bool,
}

impl Default for TransientConfig {
    fn default() -> Self {
        TransientConfig {
            delta: 1e-10,
            steady_detection: false,
        }
    }
}

/// A probability vector with an upper bound on its missing mass.
#[derive(Clone, Debug, PartialEq)]
pub struct DistVector {
    pub values: Vec<f64>,
    /// Upper bound on the numerical error of every entry.
    pub error: f64,
}

impl DistVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `1 - Σ values`, clamped at zero.
    pub fn deficit(&self) -> f64 {
        (1.0 - self.sum()).max(0.0)
    }
}

fn check_time(t: f64) -> Result<(), Error> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

fn uniformization_rate(m: &Csr) -> f64 {
    UNIFORMIZATION_MARGIN * m.max_exit()
}

/// Forward transient distribution `π₀ e^{Qt}`.
pub fn forward(m: &Csr, init: &[f64], t: f64, cfg: &TransientConfig) -> Result<DistVector, Error> {
    check_time(t)?;
    let q = uniformization_rate(m);
    if t == 0.0 || q == 0.0 {
        return Ok(DistVector {
            values: init.to_vec(),
            error: 0.0,
        });
    }
    let w = poisson_weights(q * t, cfg.delta)?;
    let n = m.n();
    let mut cur = init.to_vec();
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut k = 0;
    loop {
        let wk = w.weight(k);
        if wk > 0.0 {
            for i in 0..n {
                acc[i] += wk * cur[i];
            }
        }
        if k == w.right {
            break;
        }
        m.uniformized_mul_left(q, &cur, &mut next);
        if cfg.steady_detection && converged(&cur, &next, cfg.delta) {
            let rest: f64 = (k + 1..=w.right).map(|j| w.weight(j)).sum();
            for i in 0..n {
                acc[i] += rest * next[i];
            }
            break;
        }
        core::mem::swap(&mut cur, &mut next);
        k += 1;
    }
    clamp(&mut acc);
    Ok(DistVector {
        values: acc,
        error: w.tail,
    })
}

/// Backward transient values `e^{Qt} f` for `f` with entries in `[0, 1]`.
pub fn backward(m: &Csr, f: &[f64], t: f64, cfg: &TransientConfig) -> Result<DistVector, Error> {
    check_time(t)?;
    let q = uniformization_rate(m);
    if t == 0.0 || q == 0.0 {
        return Ok(DistVector {
            values: f.to_vec(),
            error: 0.0,
        });
    }
    let w = poisson_weights(q * t, cfg.delta)?;
    let n = m.n();
    let mut cur = f.to_vec();
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut k = 0;
    loop {
        let wk = w.weight(k);
        if wk > 0.0 {
            for i in 0..n {
                acc[i] += wk * cur[i];
            }
        }
        if k == w.right {
            break;
        }
        m.uniformized_mul(q, &cur, &mut next);
        if cfg.steady_detection && converged(&cur, &next, cfg.delta) {
            let rest: f64 = (k + 1..=w.right).map(|j| w.weight(j)).sum();
            for i in 0..n {
                acc[i] += rest * next[i];
            }
            break;
        }
        core::mem::swap(&mut cur, &mut next);
        k += 1;
    }
    clamp(&mut acc);
    Ok(DistVector {
        values: acc,
        error: w.tail,
    })
}

fn converged(a: &[f64], b: &[f64], delta: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= delta / 4.0)
}

fn clamp(v: &mut [f64]) {
    for x in v {
        *x = x.clamp(0.0, 1.0);
    }
}

/// `transient(s, t, ·)` in the view.
pub fn transient_dist(
    view: &AbsorbingView<'_>,
    s: usize,
    t: f64,
    cfg: &TransientConfig,
) -> Result<DistVector, Error> {
    if view.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    let mut init = vec![0.0; view.len()];
    init[s] = 1.0;
    forward(&view.csr(), &init, t, cfg)
}

/// `reach(·, t, B)` for every source state; `t` may be infinite.
pub fn reach_prob(
    view: &AbsorbingView<'_>,
    target: &[bool],
    t: f64,
    cfg: &TransientConfig,
) -> Result<DistVector, Error> {
    if view.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    if let Some(i) = (0..view.len()).find(|&i| target[i] && !view.is_absorbing(i)) {
        return Err(Error::NotAbsorbing(i));
    }
    let m = view.csr();
    if t.is_infinite() && t > 0.0 {
        return Ok(unbounded_reach(&m, target));
    }
    let f: Vec<f64> = target.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    backward(&m, &f, t, cfg)
}

/// Relative residual at which Gauss–Seidel stops.
pub const GS_TOLERANCE: f64 = 1e-12;
const GS_MAX_SWEEPS: usize = 1_000_000;

/// Probability of eventually reaching the absorbing set `target`.
///
/// States that cannot reach the target are fixed at zero first; the rest is
/// solved by Gauss–Seidel from below, so iterates never overshoot.
pub fn unbounded_reach(m: &Csr, target: &[bool]) -> DistVector {
    let n = m.n();
    let pred = m.predecessors();
    let mut can = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&i| target[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &pred[j] {
            let i = i as usize;
            if !can[i] {
                can[i] = true;
                stack.push(i);
            }
        }
    }
    let mut x: Vec<f64> = target.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let active: Vec<usize> = (0..n).filter(|&i| can[i] && !target[i]).collect();
    let mut residual = 0.0;
    for _ in 0..GS_MAX_SWEEPS {
        let mut max_diff: f64 = 0.0;
        let mut max_val: f64 = 0.0;
        for &i in &active {
            let e = m.exit()[i];
            let mut acc = 0.0;
            for (j, r) in m.row(i) {
                acc += r * x[j];
            }
            let v = acc / e;
            max_diff = max_diff.max((v - x[i]).abs());
            max_val = max_val.max(v);
            x[i] = v;
        }
        residual = if max_val > 0.0 { max_diff / max_val } else { 0.0 };
        if residual <= GS_TOLERANCE {
            break;
        }
    }
    clamp(&mut x);
    DistVector {
        values: x,
        error: residual,
    }
}

/// Lower and upper bounds on the probability of eventually reaching the
/// absorbing set `target`.
///
/// The lower bound is [`unbounded_reach`]. The upper bound is one minus the
/// probability, again computed from below, of reaching the remaining
/// absorbing states or a state from which `target` is unreachable.
pub fn unbounded_reach_bounds(m: &Csr, target: &[bool]) -> (DistVector, DistVector) {
    let lo = unbounded_reach(m, target);
    let n = m.n();
    let pred = m.predecessors();
    let mut can = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&i| target[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &pred[j] {
            let i = i as usize;
            if !can[i] {
                can[i] = true;
                stack.push(i);
            }
        }
    }
    let other: Vec<bool> = (0..n)
        .map(|i| !target[i] && (!can[i] || m.exit()[i] == 0.0))
        .collect();
    let miss = unbounded_reach(m, &other);
    let hi: Vec<f64> = (0..n)
        .map(|i| if target[i] { 1.0 } else { (1.0 - miss.values[i]).max(lo.values[i]) })
        .collect();
    let error = lo.error.max(miss.error);
    (
        lo,
        DistVector {
            values: hi,
            error,
        },
    )
}

/// Distribution over absorbing states when started in `s`, from expected
/// visit counts of the embedded jump chain.
pub fn absorption_dist(m: &Csr, s: usize) -> DistVector {
    let n = m.n();
    let pred = m.predecessors();
    let e = m.exit();
    let mut visits = vec![0.0; n];
    let mut residual = 0.0;
    for _ in 0..10_000 {
        let mut max_diff: f64 = 0.0;
        let mut max_val: f64 = 0.0;
        for j in 0..n {
            if e[j] == 0.0 {
                continue;
            }
            let mut v = if j == s { 1.0 } else { 0.0 };
            for &i in &pred[j] {
                let i = i as usize;
                if let Some((_, r)) = m.row(i).find(|&(k, _)| k == j) {
                    v += visits[i] * r / e[i];
                }
            }
            max_diff = max_diff.max((v - visits[j]).abs());
            max_val = max_val.max(v);
            visits[j] = v;
        }
        residual = if max_val > 0.0 { max_diff / max_val } else { 0.0 };
        if residual <= 1e-10 {
            break;
        }
    }
    let mut out = vec![0.0; n];
    if e[s] == 0.0 {
        out[s] = 1.0;
    }
    for i in 0..n {
        if e[i] == 0.0 || visits[i] == 0.0 {
            continue;
        }
        for (j, r) in m.row(i) {
            if e[j] == 0.0 {
                out[j] += visits[i] * r / e[i];
            }
        }
    }
    clamp(&mut out);
    DistVector {
        values: out,
        error: residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trunc::Truncation;

    fn poisson_tail_beyond(r: usize, lambda: f64) -> f64 {
        let mut p = libm::exp(-lambda);
        let mut cdf = p;
        for k in 1..=r {
            p *= lambda / k as f64;
            cdf += p;
        }
        1.0 - cdf
    }

    #[test]
    fn poisson_examples() {
        let w = poisson_weights(0.0, 1e-6).unwrap();
        assert_eq!((w.left, w.right, w.weights.clone()), (0, 0, vec![1.0]));
        let w = poisson_weights(1.0, 1e-6).unwrap();
        assert!(w.right == 9 || w.right == 10, "{}", w.right);
        assert!(poisson_tail_beyond(w.right, 1.0) < 1e-6);
        for qt in [0.5, 3.0, 40.0, 1234.5, 1e6] {
            let w = poisson_weights(qt, 1e-10).unwrap();
            let s = w.sum();
            assert!(s >= 1.0 - 1e-10 - 1e-12 && s <= 1.0 + 1e-12, "{qt}: {s}");
            assert!(w.weights.iter().all(|&x| x >= 0.0));
            assert!(w.tail <= 1e-10);
        }
        assert!(poisson_weights(1.0, 0.0).is_err());
        assert!(poisson_weights(-1.0, 1e-6).is_err());
    }

    fn chain(n: usize, edges: &[(usize, usize, f64)]) -> Truncation {
        let mut rows = vec![Vec::new(); n];
        for &(a, b, r) in edges {
            rows[a].push((b, r));
        }
        Truncation::from_rows(rows)
    }

    #[test]
    fn two_state_closed_form() {
        let t = chain(2, &[(0, 1, 1.0)]);
        let v = t.view();
        let (a, b) = (0, 1);
        let d = transient_dist(&v, a, 1.0, &TransientConfig::default()).unwrap();
        assert!((d.values[b] - (1.0 - libm::exp(-1.0))).abs() < 1e-9);
        let d0 = transient_dist(&v, a, 0.0, &TransientConfig::default()).unwrap();
        assert_eq!(d0.values[a], 1.0);
        let mut target = vec![false; 2];
        target[b] = true;
        let r = reach_prob(&v, &target, 1.0, &TransientConfig::default()).unwrap();
        assert!((r.values[a] - (1.0 - libm::exp(-1.0))).abs() < 1e-9);
        assert!((r.values[b] - 1.0).abs() < 1e-12);
        assert!(transient_dist(&v, a, -1.0, &TransientConfig::default()).is_err());
        let not_absorbing = vec![true, false];
        assert!(matches!(
            reach_prob(&v, &not_absorbing, 1.0, &TransientConfig::default()),
            Err(Error::NotAbsorbing(_))
        ));
    }

    #[test]
    fn birth_death_absorption() {
        let t = chain(3, &[(1, 0, 1.0), (1, 2, 2.0)]);
        let v = t.view();
        let target = [false, false, true];
        let r = reach_prob(&v, &target, f64::INFINITY, &TransientConfig::default()).unwrap();
        assert!((r.values[1] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.values[0], 0.0);
    }

    #[test]
    fn reach_is_monotone_in_time() {
        let t = chain(4, &[(0, 1, 1.0), (1, 0, 0.5), (1, 2, 2.0), (2, 1, 3.0), (2, 3, 0.7)]);
        let v = t.view();
        let target = [false, false, false, true];
        let mut last = 0.0;
        for k in 0..20 {
            let r = reach_prob(&v, &target, k as f64 * 0.5, &TransientConfig::default()).unwrap();
            assert!(r.values[0] + 1e-12 >= last);
            last = r.values[0];
        }
        let inf = reach_prob(&v, &target, f64::INFINITY, &TransientConfig::default()).unwrap();
        assert!((inf.values[0] - 1.0).abs() < 1e-10);
    }
    #[test]
    fn unbounded_bounds_and_absorption() {
        // 0 <-> 1 -> 2 (target), 1 -> 3 (other absorbing)
        let rows: [&[(usize, f64)]; 4] = [&[(1, 1.0)], &[(0, 1.0), (2, 2.0), (3, 1.0)], &[], &[]];
        let m = Csr::from_rows(4, rows);
        let target = [false, false, true, false];
        let (lo, hi) = unbounded_reach_bounds(&m, &target);
        for i in 0..2 {
            assert!((lo.values[i] - 2.0 / 3.0).abs() < 1e-10);
            assert!((hi.values[i] - 2.0 / 3.0).abs() < 1e-10);
            assert!(lo.values[i] <= hi.values[i]);
        }
        let a = absorption_dist(&m, 0);
        assert!((a.values[2] - 2.0 / 3.0).abs() < 1e-9);
        assert!((a.values[3] - 1.0 / 3.0).abs() < 1e-9);
    }
}
