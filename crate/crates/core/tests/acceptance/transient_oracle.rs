//! Uniformization against dense matrix exponentials and direct solves.

use mpmc_core::transient::{reach_prob, transient_dist, unbounded_reach_bounds, TransientConfig};
use mpmc_core::trunc::Truncation;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::Outcome;

const TOL: f64 = 1e-8;

struct Chain {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Chain {
    fn random(rng: &mut StdRng) -> Chain {
        let n = rng.random_range(1..=12);
        let density = rng.random_range(0.1..0.7);
        let mut rows = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in 0..n {
                if j != i && rng.random_bool(density) {
                    // (0, 10]
                    row.push((j, 10.0 * (1.0 - rng.random::<f64>())));
                }
            }
        }
        Chain { rows }
    }

    fn n(&self) -> usize {
        self.rows.len()
    }

    /// Generator with the given states made absorbing.
    fn generator(&self, absorbing: &[bool]) -> DMatrix<f64> {
        let n = self.n();
        let mut q = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            if absorbing[i] {
                continue;
            }
            for &(j, rate) in r {
                q[(i, j)] += rate;
                q[(i, i)] -= rate;
            }
        }
        q
    }
}

fn max_abs(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst deviation of forward and bounded reach solves from `exp(Qt)`.
fn transient_deviation() -> f64 {
    let mut rng = StdRng::seed_from_u64(0xc7a1);
    let cfg = TransientConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let chain = Chain::random(&mut rng);
        let n = chain.n();
        let tr = Truncation::from_rows(chain.rows.clone());
        let absorbing: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
        let view = tr.make_absorbing(&absorbing);
        let t = rng.random_range(0.0..3.0);
        let p = (chain.generator(&absorbing) * t).exp();

        let s = rng.random_range(0..n);
        let got = transient_dist(&view, s, t, &cfg).unwrap();
        worst = worst.max(max_abs(&got.values, p.row(s).iter().copied()));

        let target: Vec<bool> = (0..n).map(|i| absorbing[i] && rng.random_bool(0.7)).collect();
        let got = reach_prob(&view, &target, t, &cfg).unwrap();
        let want = (0..n).map(|i| (0..n).filter(|&j| target[j]).map(|j| p[(i, j)]).sum::<f64>());
        worst = worst.max(max_abs(&got.values, want));
    }
    worst
}

/// Eventual absorption in `target` via `(I - P) x = b` on the states that can
/// reach it.
fn reach_by_solve(chain: &Chain, absorbing: &[bool], target: &[bool]) -> Vec<f64> {
    let n = chain.n();
    let mut can = target.to_vec();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !can[i] && !absorbing[i] && chain.rows[i].iter().any(|&(j, _)| can[j]) {
                can[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&i| can[i] && !target[i]).collect();
    let mut x = vec![0.0; n];
    for i in 0..n {
        if target[i] {
            x[i] = 1.0;
        }
    }
    if unknown.is_empty() {
        return x;
    }
    let pos = |i: usize| unknown.iter().position(|&u| u == i);
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, &i) in unknown.iter().enumerate() {
        let exit: f64 = chain.rows[i].iter().map(|e| e.1).sum();
        for &(j, r) in &chain.rows[i] {
            if target[j] {
                b[k] += r / exit;
            } else if let Some(l) = pos(j) {
                a[(k, l)] -= r / exit;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("nonsingular");
    for (k, &i) in unknown.iter().enumerate() {
        x[i] = sol[k];
    }
    x
}

/// Worst deviation of unbounded reach from a direct solve, and whether the
/// two-sided bounds always enclose it.
fn unbounded_deviation() -> (f64, bool) {
    let mut rng = StdRng::seed_from_u64(0x5017e);
    let cfg = TransientConfig::default();
    let mut worst: f64 = 0.0;
    let mut enclosed = true;
    for _ in 0..200 {
        let chain = Chain::random(&mut rng);
        let n = chain.n();
        let tr = Truncation::from_rows(chain.rows.clone());
        let absorbing: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let view = tr.make_absorbing(&absorbing);
        let target: Vec<bool> = (0..n)
            .map(|i| view.is_absorbing(i) && rng.random_bool(0.6))
            .collect();
        let want = reach_by_solve(&chain, &(0..n).map(|i| view.is_absorbing(i)).collect::<Vec<_>>(), &target);
        let got = reach_prob(&view, &target, f64::INFINITY, &cfg).unwrap();
        worst = worst.max(max_abs(&got.values, want.iter().copied()));

        let (lo, hi) = unbounded_reach_bounds(&view.csr(), &target);
        for i in 0..n {
            enclosed &= lo.values[i] <= want[i] + 1e-12 && want[i] <= hi.values[i] + 1e-12;
            worst = worst.max(hi.values[i] - lo.values[i]);
        }
    }
    (worst, enclosed)
}

pub fn check() -> Outcome {
    let bounded = transient_deviation();
    let (unbounded, enclosed) = unbounded_deviation();
    Outcome::new(
        bounded < TOL && unbounded < TOL && enclosed,
        format!("200+200 random chains, max deviation {bounded:.1e} bounded, {unbounded:.1e} unbounded"),
    )
}
