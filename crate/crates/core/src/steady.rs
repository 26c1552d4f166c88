//! Steady-state bounds from a Lyapunov drift certificate.
//!
//! For a Lyapunov function `g` the drift `d*(x) = Σ_j α_j(x)(g(x+v_j) − g(x))`
//! is a polynomial. Its maximum `c` over the reachable part of the
//! non-negative orthant yields the window `W = {x | (ε/c)·d*(x) > ε − 1}`
//! carrying more than `1 − ε` of the stationary mass. State-wise bounds on
//! `W` follow from the stationary distributions of the column-completed
//! matrices `U_j`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mpm::{Invariants, ModelSpec, State};
use crate::poly::{Coef, Poly, Rational};
use crate::Error;

/// The drift polynomial `d*` of `g`.
pub fn drift_poly(spec: &ModelSpec, g: &Poly<Rational>) -> Poly<Rational> {
    let d = spec.dim();
    let mut acc = Poly::zero(d);
    for c in spec.classes() {
        let delta = g.shifted(c.change()).sub(g);
        acc = acc.add(&c.propensity().mul(&delta));
    }
    acc
}

/// `d*(x)` evaluated directly from its definition.
pub fn drift(spec: &ModelSpec, g: &Poly<Rational>, x: &[i64]) -> f64 {
    let gx = g.eval_int(x);
    spec.classes()
        .iter()
        .map(|c| {
            let y: Vec<i64> = x.iter().zip(c.change()).map(|(a, b)| a + b).collect();
            c.rate(x) * (g.eval_int(&y) - gx)
        })
        .sum()
}

/// Upper bound on the drift together with where it was attained.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftBound {
    pub c: f64,
    pub argmax: Vec<f64>,
    /// Whether every face system was solved in closed form.
    pub exact: bool,
}

/// Assignments of the bounded populations consistent with the invariants,
/// or a single empty assignment when there are none or too many.
fn bounded_assignments(inv: &Invariants) -> Vec<Vec<(usize, i64)>> {
    const LIMIT: usize = 4096;
    let bounded = inv.bounded();
    let mut size: usize = 1;
    for &i in &bounded {
        size = size.saturating_mul(inv.upper[i].unwrap() as usize + 1);
    }
    if bounded.is_empty() || size > LIMIT {
        return vec![Vec::new()];
    }
    let mut out = vec![Vec::new()];
    for &i in &bounded {
        let mut next = Vec::new();
        for a in &out {
            for v in 0..=inv.upper[i].unwrap() {
                let mut b: Vec<(usize, i64)> = a.clone();
                b.push((i, v));
                next.push(b);
            }
        }
        out = next;
    }
    out.retain(|a| {
        inv.laws.iter().all(|(w, k)| {
            let partial: i64 = a.iter().map(|&(i, v)| w[i] * v).sum();
            let closed = (0..w.len()).all(|i| w[i] == 0 || a.iter().any(|e| e.0 == i));
            if closed {
                partial == *k
            } else {
                partial <= *k
            }
        })
    });
    out
}

fn fix_all(p: &Poly<Rational>, fixed: &[(usize, i64)]) -> Poly<Rational> {
    fixed
        .iter()
        .fold(p.clone(), |acc, &(i, v)| acc.fix_var(i, Rational::from_i64(v)))
}

/// Maximum of `d*` over the reachable orthant, using the inferred
/// invariants of the model.
pub fn max_drift(spec: &ModelSpec, g: &Poly<Rational>) -> Result<DriftBound, Error> {
    max_drift_with(spec, g, &spec.invariants())
}

pub fn max_drift_with(spec: &ModelSpec, g: &Poly<Rational>, inv: &Invariants) -> Result<DriftBound, Error> {
    check_radially_unbounded(spec, g, inv)?;
    let dstar = drift_poly(spec, g);
    let d = spec.dim();
    let mut best = DriftBound {
        c: f64::NEG_INFINITY,
        argmax: vec![0.0; d],
        exact: true,
    };
    for fixed in bounded_assignments(inv) {
        let q = fix_all(&dstar, &fixed);
        let free: Vec<usize> = (0..d).filter(|i| !fixed.iter().any(|e| e.0 == *i)).collect();
        let (value, at, exact) = maximize_on_orthant(&q, &free)?;
        if value > best.c {
            let mut arg = at;
            for &(i, v) in &fixed {
                arg[i] = v as f64;
            }
            best.c = value;
            best.argmax = arg;
        }
        best.exact &= exact;
    }
    Ok(best)
}

fn check_radially_unbounded(spec: &ModelSpec, g: &Poly<Rational>, inv: &Invariants) -> Result<(), Error> {
    for i in 0..spec.dim() {
        if inv.upper[i].is_some() {
            continue;
        }
        let deg = g.degree_in(i);
        let lead: f64 = g
            .terms()
            .iter()
            .filter(|t| t.exps[i] as u32 == deg && t.exps.iter().enumerate().all(|(k, &e)| k == i || e == 0))
            .map(|t| t.coef.to_f64())
            .sum();
        if deg == 0 || !(lead > 0.0) {
            return Err(Error::NotRadiallyUnbounded(spec.names()[i].clone()));
        }
    }
    Ok(())
}

/// Homogeneous part of the highest degree.
fn top_form(q: &Poly<f64>) -> Poly<f64> {
    let deg = q.degree();
    Poly::from_terms(
        q.nvars(),
        q.terms()
            .iter()
            .filter(|t| t.exps.iter().map(|&e| e as u32).sum::<u32>() == deg)
            .map(|t| (t.coef, t.exps.clone())),
    )
}

/// Maximum of `q` over `{x | x_i ≥ 0 for i ∈ free, other coordinates 0}`.
fn maximize_on_orthant(q: &Poly<Rational>, free: &[usize]) -> Result<(f64, Vec<f64>, bool), Error> {
    let qf = q.to_f64();
    let n = q.nvars();
    let deg = qf.degree();
    if deg == 0 || free.is_empty() {
        return Ok((qf.constant_term(), vec![0.0; n], true));
    }
    let top = top_form(&qf);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for k in 0..512 {
        let mut y = vec![0.0; n];
        if k < free.len() {
            y[free[k]] = 1.0;
        } else {
            for &i in free {
                y[i] = unit(&mut rng);
            }
        }
        if top.eval(&y) > 0.0 {
            return Err(Error::NoFiniteMaximum);
        }
    }
    if deg == 1 {
        // Non-positive slopes along every free axis: maximal at the origin.
        return Ok((qf.eval(&vec![0.0; n]), vec![0.0; n], true));
    }
    let quadratic = deg == 2 && negative_definite(&top, free);
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut consider = |p: Vec<f64>| {
        if p.iter().all(|&v| v >= -1e-9) {
            let p: Vec<f64> = p.iter().map(|&v| v.max(0.0)).collect();
            let v = qf.eval(&p);
            if v > best.0 {
                best = (v, p);
            }
        }
    };
    for mask in 0u32..(1 << free.len()) {
        let face: Vec<usize> = (0..free.len()).filter(|b| mask >> b & 1 == 1).map(|b| free[b]).collect();
        let mut r = qf.clone();
        for &i in free {
            if !face.contains(&i) {
                r = r.fix_var(i, 0.0);
            }
        }
        if face.is_empty() {
            consider(vec![0.0; n]);
            continue;
        }
        let grad: Vec<Poly<f64>> = face.iter().map(|&i| r.derivative(i)).collect();
        if quadratic {
            if let Some(p) = solve_affine(&grad, &face, n) {
                consider(p);
            }
        } else {
            for p in newton_starts(&r, &grad, &face, n, &mut rng) {
                consider(p);
            }
        }
    }
    if quadratic {
        return Ok((best.0, best.1, true));
    }
    let c = verify_by_sweep(&qf, free, best.0);
    Ok((c, best.1, false))
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Whether the quadratic form restricted to `free` is negative definite.
fn negative_definite(top: &Poly<f64>, free: &[usize]) -> bool {
    let k = free.len();
    let mut h = vec![vec![0.0; k]; k];
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            let dij = top.derivative(i).derivative(j);
            h[a][b] = -dij.constant_term();
        }
    }
    // Cholesky of -H.
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = h[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = libm::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Solves the affine system `grad = 0` in the face variables; other
/// coordinates are zero.
fn solve_affine(grad: &[Poly<f64>], face: &[usize], n: usize) -> Option<Vec<f64>> {
    let k = face.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, gp) in grad.iter().enumerate() {
        for t in gp.terms() {
            match face.iter().position(|&i| t.exps[i] == 1) {
                Some(col) if t.exps.iter().map(|&e| e as u32).sum::<u32>() == 1 => a[r][col] += t.coef,
                None if t.exps.iter().all(|&e| e == 0) => a[r][k] -= t.coef,
                _ => return None,
            }
        }
    }
    let y = gauss(a)?;
    let mut p = vec![0.0; n];
    for (c, &i) in face.iter().enumerate() {
        p[i] = y[c];
    }
    Some(p)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

const NEWTON_STARTS: usize = 64;

/// Stationary points of `r` on a face found by damped Newton iteration from
/// deterministic pseudo-random starts.
fn newton_starts(
    r: &Poly<f64>,
    grad: &[Poly<f64>],
    face: &[usize],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let k = face.len();
    let hess: Vec<Vec<Poly<f64>>> = grad
        .iter()
        .map(|gp| face.iter().map(|&j| gp.derivative(j)).collect())
        .collect();
    let mut out = Vec::new();
    for s in 0..NEWTON_STARTS {
        let scale = libm::pow(10.0, (s % 8) as f64 / 2.0);
        let mut x = vec![0.0; n];
        for &i in face {
            x[i] = unit(rng) * scale;
        }
        for _ in 0..200 {
            let gv: Vec<f64> = grad.iter().map(|p| p.eval(&x)).collect();
            let norm = gv.iter().map(|v| v * v).sum::<f64>();
            if norm < 1e-20 {
                break;
            }
            let mut a = vec![vec![0.0; k + 1]; k];
            for i in 0..k {
                for j in 0..k {
                    a[i][j] = hess[i][j].eval(&x);
                }
                a[i][k] = -gv[i];
            }
            let Some(step) = gauss(a) else { break };
            let f0 = r.eval(&x);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let mut y = x.clone();
                for (c, &i) in face.iter().enumerate() {
                    y[i] += t * step[c];
                }
                let gy: f64 = grad.iter().map(|p| p.eval(&y)).map(|v| v * v).sum();
                if gy < norm || r.eval(&y) > f0 {
                    x = y;
                    moved = true;
                    break;
                }
                t /= 2.0;
            }
            if !moved {
                break;
            }
        }
        out.push(x);
    }
    out
}

/// Checks the candidate maximum on expanding grids and inflates it by 10%
/// whenever a larger value is found.
fn verify_by_sweep(q: &Poly<f64>, free: &[usize], c: f64) -> f64 {
    let n = q.nvars();
    let mut c = c;
    for _round in 0..8 {
        let mut worst = f64::NEG_INFINITY;
        for e in 0..24 {
            let radius = libm::pow(2.0, e as f64 / 2.0);
            let steps = 16usize;
            let mut idx = vec![0usize; free.len()];
            loop {
                let mut x = vec![0.0; n];
                for (a, &i) in free.iter().enumerate() {
                    x[i] = radius * idx[a] as f64 / steps as f64;
                }
                worst = worst.max(q.eval(&x));
                let mut a = 0;
                loop {
                    if a == idx.len() {
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] <= steps {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == idx.len() {
                    break;
                }
            }
        }
        if worst <= c {
            return c;
        }
        c = if worst > 0.0 { 1.1 * worst } else { worst / 1.1 };
    }
    c
}

/// Lattice points of the window `{x | (ε/c)·d*(x) > ε − 1}` that satisfy the
/// invariants, in lexicographic order of bounded then free coordinates.
pub fn window(
    spec: &ModelSpec,
    g: &Poly<Rational>,
    c: f64,
    epsilon: f64,
    cap: usize,
) -> Result<Vec<State>, Error> {
    window_with(spec, g, c, epsilon, cap, &spec.invariants())
}

pub fn window_with(
    spec: &ModelSpec,
    g: &Poly<Rational>,
    c: f64,
    epsilon: f64,
    cap: usize,
    inv: &Invariants,
) -> Result<Vec<State>, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidTolerance(epsilon));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::NoFiniteMaximum);
    }
    let dstar = drift_poly(spec, g);
    let d = spec.dim();
    // d*(x) > c (ε - 1) / ε, relaxed by a relative 1e-12 so that rounding
    // can only add states.
    let thr = c * (epsilon - 1.0) / epsilon;
    let thr = thr - 1e-12 * thr.abs();
    let mut out = Vec::new();
    for fixed in bounded_assignments(inv) {
        let q = fix_all(&dstar, &fixed).to_f64();
        let free: Vec<usize> = (0..d).filter(|i| !fixed.iter().any(|e| e.0 == *i)).collect();
        let inside = |x: &[i64]| q.eval_int(x) > thr;
        let mut base = vec![0i64; d];
        for &(i, v) in &fixed {
            base[i] = v;
        }
        let bounds = grow_box(&inside, &base, &free, inv, cap)?;
        let mut idx = vec![0i64; free.len()];
        let mut x = base.clone();
        loop {
            for (a, &i) in free.iter().enumerate() {
                x[i] = idx[a];
            }
            if inside(&x) && inv.admits(&x) {
                out.push(x.clone());
                if out.len() > cap {
                    return Err(Error::WindowTooLarge {
                        size: out.len(),
                        cap,
                    });
                }
            }
            let mut a = free.len();
            for k in (0..free.len()).rev() {
                if idx[k] < bounds[k] {
                    idx[k] += 1;
                    for r in idx.iter_mut().skip(k + 1) {
                        *r = 0;
                    }
                    a = k;
                    break;
                }
            }
            if a == free.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Per-axis extents of a box containing the window slice, grown until
/// every outer face is free of window points.
fn grow_box(
    inside: &dyn Fn(&[i64]) -> bool,
    base: &[i64],
    free: &[usize],
    inv: &Invariants,
    cap: usize,
) -> Result<Vec<i64>, Error> {
    let k = free.len();
    let mut b: Vec<i64> = free
        .iter()
        .map(|&i| inv.upper[i].unwrap_or(1).max(1))
        .collect();
    let limit = (cap as i64).saturating_mul(4).max(64);
    loop {
        let mut grown = false;
        for a in 0..k {
            if inv.upper[free[a]].is_some_and(|u| b[a] >= u) {
                continue;
            }
            if face_hits(inside, base, free, &b, a) {
                b[a] = b[a].saturating_mul(2);
                if b[a] > limit {
                    return Err(Error::WindowShellViolation);
                }
                grown = true;
            }
        }
        if !grown {
            break;
        }
    }
    for a in 0..k {
        if let Some(u) = inv.upper[free[a]] {
            b[a] = b[a].min(u);
        }
    }
    // Shrink each extent while the next face stays empty.
    for a in 0..k {
        let (mut lo, mut hi) = (0i64, b[a]);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let mut t = b.clone();
            t[a] = mid;
            if slab_empty(inside, base, free, &t, a, mid + 1, b[a]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        b[a] = lo;
    }
    Ok(b)
}

/// Whether the face `x_a = b_a + 1` of the box contains a window point.
fn face_hits(inside: &dyn Fn(&[i64]) -> bool, base: &[i64], free: &[usize], b: &[i64], a: usize) -> bool {
    !slab_empty(inside, base, free, b, a, b[a] + 1, b[a] + 1)
}

/// Whether no point with `x_a ∈ [from, to]` and the other free coordinates
/// within `b` lies in the window.
fn slab_empty(
    inside: &dyn Fn(&[i64]) -> bool,
    base: &[i64],
    free: &[usize],
    b: &[i64],
    a: usize,
    from: i64,
    to: i64,
) -> bool {
    let k = free.len();
    let mut x = base.to_vec();
    let mut idx = vec![0i64; k];
    idx[a] = from;
    loop {
        for (m, &i) in free.iter().enumerate() {
            x[i] = idx[m];
        }
        if inside(&x) {
            return false;
        }
        let mut done = true;
        for m in (0..k).rev() {
            let hi = if m == a { to } else { b[m] };
            if idx[m] < hi {
                idx[m] += 1;
                for r in m + 1..k {
                    idx[r] = if r == a { from } else { 0 };
                }
                done = false;
                break;
            }
        }
        if done {
            return true;
        }
    }
}

/// The generator restricted to a window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowMatrices {
    /// Off-diagonal rates inside the window, per row.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Total exit rate of each state, including rates leaving the window.
    pub exit: Vec<f64>,
    /// Rate leaving the window from each state.
    pub outflow: Vec<f64>,
    /// Uniformization constant `α > max exit`.
    pub alpha: f64,
}

impl WindowMatrices {
    pub fn from_model(spec: &ModelSpec, states: &[State]) -> Result<Self, Error> {
        let index: HashMap<&[i64], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut rows = Vec::with_capacity(states.len());
        let mut exit = Vec::with_capacity(states.len());
        let mut outflow = Vec::with_capacity(states.len());
        for x in states {
            let mut row = Vec::new();
            let (mut e, mut o) = (0.0, 0.0);
            for (y, r) in spec.successors(x)? {
                e += r;
                match index.get(y.as_slice()) {
                    Some(&j) => row.push((j, r)),
                    None => o += r,
                }
            }
            rows.push(row);
            exit.push(e);
            outflow.push(o);
        }
        let max = exit.iter().fold(0.0f64, |m, &e| m.max(e));
        Ok(WindowMatrices {
            rows,
            exit,
            outflow,
            alpha: if max > 0.0 { 1.02 * max } else { 1.0 },
        })
    }

    /// From a substochastic matrix `U`; the implied generator is `U - I`.
    pub fn from_substochastic(u: &[Vec<f64>]) -> Self {
        let n = u.len();
        let mut rows = Vec::with_capacity(n);
        let mut exit = Vec::with_capacity(n);
        let mut outflow = Vec::with_capacity(n);
        for (i, r) in u.iter().enumerate() {
            let row: Vec<(usize, f64)> = (0..n).filter(|&j| j != i && r[j] > 0.0).map(|j| (j, r[j])).collect();
            let inside: f64 = row.iter().map(|e| e.1).sum();
            let total: f64 = r.iter().sum();
            let o = (1.0 - total).max(0.0);
            exit.push(inside + o);
            outflow.push(o);
            rows.push(row);
        }
        WindowMatrices {
            rows,
            exit,
            outflow,
            alpha: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row deficits `1 - rowsum(U)` of `U = I + C/α`.
    pub fn row_deficit(&self) -> Vec<f64> {
        self.outflow.iter().map(|o| o / self.alpha).collect()
    }

    /// Dense `U = I + C/α`; for tests and small windows.
    pub fn dense_u(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut u = vec![vec![0.0; n]; n];
        for i in 0..n {
            u[i][i] = 1.0 - self.exit[i] / self.alpha;
            for &(j, r) in &self.rows[i] {
                u[i][j] += r / self.alpha;
            }
        }
        u
    }

    /// Whether `−C` is non-singular (every state reaches an outflow) or, for
    /// a closed window, whether the window is strongly connected. Returns the
    /// number of states that pass.
    fn well_posed(&self) -> (bool, usize) {
        let n = self.len();
        let mut pred = vec![Vec::new(); n];
        for i in 0..n {
            for &(j, _) in &self.rows[i] {
                pred[j].push(i);
            }
        }
        let closed = self.outflow.iter().all(|&o| o == 0.0);
        let seeds: Vec<usize> = if closed {
            vec![0]
        } else {
            (0..n).filter(|&i| self.outflow[i] > 0.0).collect()
        };
        let mut bwd = vec![false; n];
        let mut stack = seeds.clone();
        for &i in &seeds {
            bwd[i] = true;
        }
        while let Some(i) = stack.pop() {
            for &j in &pred[i] {
                if !bwd[j] {
                    bwd[j] = true;
                    stack.push(j);
                }
            }
        }
        if !closed {
            let ok = bwd.iter().filter(|&&b| b).count();
            return (ok == n, ok);
        }
        let mut fwd = vec![false; n];
        fwd[0] = true;
        stack.push(0);
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.rows[i] {
                if !fwd[j] {
                    fwd[j] = true;
                    stack.push(j);
                }
            }
        }
        let ok = (0..n).filter(|&i| fwd[i] && bwd[i]).count();
        (ok == n, ok)
    }
}

/// Which columns `j` the bounds range over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Columns {
    /// Every state of the window.
    All,
    /// Only the given states; they must include every state that can be
    /// entered from outside the window.
    Subset(Vec<usize>),
}

/// States of the window with a positive-rate predecessor outside it.
pub fn entry_states(spec: &ModelSpec, states: &[State], inv: &Invariants) -> Vec<usize> {
    let index: HashMap<&[i64], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut out = Vec::new();
    for (i, x) in states.iter().enumerate() {
        let entered = spec.classes().iter().any(|c| {
            let y: Vec<i64> = x.iter().zip(c.change()).map(|(a, v)| a - v).collect();
            inv.admits(&y) && !index.contains_key(y.as_slice()) && c.rate(&y) > 0.0
        });
        if entered {
            out.push(i);
        }
    }
    out
}

/// Element-wise minimum and maximum of `π^{U_j}` over the selected columns.
///
/// `π^{U_j}` is the normalized row `j` of `(−C)^{-1}`, computed from one
/// banded LU factorization in reverse Cuthill–McKee order. Elimination keeps
/// explicit row sums so that pivots are formed without cancellation.
pub fn courtois_semal(w: &WindowMatrices, columns: &Columns) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let n = w.len();
    if n == 0 {
        return Err(Error::EmptyTruncation);
    }
    let (ok, reached) = w.well_posed();
    if !ok {
        return Err(Error::ReducibleWindow { reached, size: n });
    }
    let perm = reverse_cuthill_mckee(&w.rows);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let lu = BandLu::factor(w, &perm, &inv);
    let closed = w.outflow.iter().all(|&o| o == 0.0);
    let cols: Vec<usize> = match columns {
        _ if closed => vec![0],
        Columns::All => (0..n).collect(),
        Columns::Subset(c) => c.clone(),
    };
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![0.0f64; n];
    for &j in &cols {
        let y = if closed {
            lu.null_vector()
        } else {
            lu.solve_transposed_unit(inv[j])
        };
        let s: f64 = y.iter().sum();
        for new in 0..n {
            let v = y[new] / s;
            let old = perm[new];
            lo[old] = lo[old].min(v);
            hi[old] = hi[old].max(v);
        }
    }
    Ok((lo, hi))
}

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern.
fn reverse_cuthill_mckee(rows: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = rows.len();
    let mut adj = vec![Vec::new(); n];
    for (i, r) in rows.iter().enumerate() {
        for &(j, _) in r {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !seen[i])
            .min_by_key(|&i| (adj[i].len(), i))
            .unwrap();
        let start = pseudo_peripheral(&adj, start);
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut next: Vec<usize> = adj[i].iter().copied().filter(|&j| !seen[j]).collect();
            next.sort_by_key(|&j| (adj[j].len(), j));
            for j in next {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut node = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_far(adj, node);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        node = far;
    }
    node
}

fn bfs_far(adj: &[Vec<usize>], s: usize) -> (usize, usize) {
    let mut dist: HashMap<usize, usize> = HashMap::new();
    dist.insert(s, 0);
    let mut queue = VecDeque::from([s]);
    let mut best = (s, 0);
    while let Some(i) = queue.pop_front() {
        let d = dist[&i];
        if d > best.1 || (d == best.1 && adj[i].len() < adj[best.0].len()) {
            best = (i, d);
        }
        for &j in &adj[i] {
            if !dist.contains_key(&j) {
                dist.insert(j, d + 1);
                queue.push_back(j);
            }
        }
    }
    best
}

/// Banded LU factors of `A = −C` in a permuted order, with unit lower
/// triangle `L` and upper triangle `U` sharing storage.
struct BandLu {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row-major band: entry `(i, j)` at `i * width + (j + lower - i)`.
    band: Vec<f64>,
}

impl BandLu {
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width() + j + self.lower - i]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let w = self.width();
        &mut self.band[i * w + j + self.lower - i]
    }

    fn factor(w: &WindowMatrices, perm: &[usize], inv: &[usize]) -> BandLu {
        let n = w.len();
        let (mut lower, mut upper) = (0usize, 0usize);
        for (i, r) in w.rows.iter().enumerate() {
            for &(j, _) in r {
                let (a, b) = (inv[i], inv[j]);
                if b > a {
                    upper = upper.max(b - a);
                } else {
                    lower = lower.max(a - b);
                }
            }
        }
        let mut lu = BandLu {
            n,
            lower,
            upper,
            band: vec![0.0; n * (lower + upper + 1)],
        };
        // Row sums of A are the outflow rates; they stay non-negative.
        let mut sums = vec![0.0; n];
        for new in 0..n {
            let old = perm[new];
            sums[new] = w.outflow[old];
            for &(j, r) in &w.rows[old] {
                *lu.at_mut(new, inv[j]) -= r;
            }
        }
        for k in 0..n {
            let hi = (k + upper).min(n - 1);
            let mut off = 0.0;
            for j in k + 1..=hi {
                off -= lu.at(k, j);
            }
            let pivot = sums[k] + off;
            *lu.at_mut(k, k) = pivot;
            let last = (k + lower).min(n - 1);
            for i in k + 1..=last {
                let a = lu.at(i, k);
                if a == 0.0 {
                    continue;
                }
                let l = if pivot > 0.0 { a / pivot } else { 0.0 };
                *lu.at_mut(i, k) = l;
                for j in k + 1..=hi {
                    let u = lu.at(k, j);
                    if u != 0.0 {
                        *lu.at_mut(i, j) -= l * u;
                    }
                }
                sums[i] -= l * sums[k];
            }
        }
        lu
    }

    /// Solves `Aᵀ y = e_j` up to a positive factor.
    ///
    /// Pivots may underflow when the window is nearly closed; the solution
    /// is then dominated by the component through that pivot, so the
    /// substitution restarts from it. Large intermediates are rescaled.
    fn solve_transposed_unit(&self, j: usize) -> Vec<f64> {
        let n = self.n;
        // Uᵀ z = e_j: forward substitution over columns of U.
        let mut z = vec![0.0; n];
        z[j] = 1.0;
        let mut start = j;
        for k in j..n {
            let mut s = z[k];
            let lo = k.saturating_sub(self.upper).max(start);
            for i in lo..k {
                s -= self.at(i, k) * z[i];
            }
            let v = s / self.at(k, k);
            if s > 0.0 && !v.is_finite() {
                z[start..k].fill(0.0);
                z[k] = 1.0;
                start = k;
            } else if v.is_finite() {
                z[k] = v;
                if v.abs() > RESCALE {
                    let f = 1.0 / v.abs();
                    z[start..=k].iter_mut().for_each(|x| *x *= f);
                }
            } else {
                z[k] = 0.0;
            }
        }
        self.back_substitute_l(z)
    }

    /// Left null vector of a singular `A`, from `Uᵀ z = 0` with `z = e_n`.
    fn null_vector(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        z[self.n - 1] = 1.0;
        self.back_substitute_l(z)
    }

    /// Solves `Lᵀ y = z` in place, up to a positive factor.
    fn back_substitute_l(&self, mut y: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        for k in (0..n).rev() {
            let mut s = y[k];
            let hi = (k + self.lower).min(n - 1);
            for i in k + 1..=hi {
                s -= self.at(i, k) * y[i];
            }
            y[k] = s;
            if s.abs() > RESCALE {
                let f = 1.0 / s.abs();
                y.iter_mut().for_each(|x| *x *= f);
            }
        }
        y
    }
}

const RESCALE: f64 = 1e200;

/// `l(x) = (1 − ε)·lower(x)` and `u(x) = upper(x)`.
pub fn steady_bounds(lower: &[f64], upper: &[f64], epsilon: f64) -> (Vec<f64>, Vec<f64>) {
    (
        lower.iter().map(|v| (1.0 - epsilon) * v).collect(),
        upper.to_vec(),
    )
}

/// Stationary distribution of a dense stochastic matrix by power iteration;
/// an independent route used to cross-check the bounds.
pub fn power_stationary(p: &[Vec<f64>], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = p.len();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                y[j] += x[i] * p[i][j];
            }
        }
        let s: f64 = y.iter().sum();
        for v in &mut y {
            *v /= s;
        }
        let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if diff <= tol {
            break;
        }
    }
    x
}

/// Settings for building a certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyConfig {
    /// Tail bound `ε` of the window.
    pub epsilon: f64,
    /// Manual drift bound; skips the maximization when present.
    pub drift_c: Option<f64>,
    /// Range over every window state instead of the entry states.
    pub all_columns: bool,
    pub max_states: usize,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig {
            epsilon: 1e-6,
            drift_c: None,
            all_columns: false,
            max_states: 2_000_000,
        }
    }
}

/// A Lyapunov certificate with state-wise stationary bounds on its window.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovCertificate {
    pub g: Poly<Rational>,
    pub c: f64,
    pub epsilon: f64,
    /// `γ = c(1 − ε)/ε`; it also serves as the constant `λ` of the drift
    /// condition outside the window.
    pub gamma: f64,
    pub window: Vec<State>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LyapunovCertificate {
    pub fn index(&self) -> HashMap<State, usize> {
        self.window.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()
    }
}

/// Runs the whole steady-state pipeline for a model.
pub fn certify(spec: &ModelSpec, cfg: &SteadyConfig) -> Result<LyapunovCertificate, Error> {
    let eps = cfg.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidTolerance(eps));
    }
    let g = spec.lyapunov_or_default();
    let inv = spec.invariants();
    let c = match cfg.drift_c {
        Some(c) => c,
        None => max_drift_with(spec, &g, &inv)?.c,
    };
    // A non-positive maximum already bounds the drift by any small positive c.
    let c = if c > 0.0 { c } else { f64::MIN_POSITIVE.max(1e-9) };
    let states = window_with(spec, &g, c, eps, cfg.max_states, &inv)?;
    if states.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    let w = WindowMatrices::from_model(spec, &states)?;
    let columns = if cfg.all_columns {
        Columns::All
    } else {
        Columns::Subset(entry_states(spec, &states, &inv))
    };
    let (lo, hi) = courtois_semal(&w, &columns)?;
    let (lower, upper) = steady_bounds(&lo, &hi, eps);
    Ok(LyapunovCertificate {
        g,
        c,
        epsilon: eps,
        gamma: c * (1.0 - eps) / eps,
        window: states,
        lower,
        upper,
    })
}

/// Outcome of checking the drift conditions for a candidate function.
#[derive(Clone, Debug, PartialEq)]
pub enum WitnessReport {
    Found { c: f64, lambda: f64 },
    Failed { condition: u8, reason: String },
}

/// Semi-decision of ergodicity: succeeds when `g` has a finite maximal
/// drift and finite sublevel sets.
pub fn check_ergodicity_witness(spec: &ModelSpec, g: &Poly<Rational>) -> WitnessReport {
    let inv = spec.invariants();
    if let Err(e) = check_radially_unbounded(spec, g, &inv) {
        return WitnessReport::Failed {
            condition: 3,
            reason: format!("{e}"),
        };
    }
    match max_drift_with(spec, g, &inv) {
        Ok(b) => {
            // With ε = 1/2 the drift outside the window is at most -c.
            let c = b.c.max(1e-9);
            WitnessReport::Found { c, lambda: c }
        }
        Err(e) => WitnessReport::Failed {
            condition: 1,
            reason: format!("{e}"),
        },
    }
}
