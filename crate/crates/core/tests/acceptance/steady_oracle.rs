//! Stationary bounds against distributions known in closed form or solved
//! densely.

use mpmc_core::mpm::parse_model;
use mpmc_core::steady::{certify, SteadyConfig};
use nalgebra::{DMatrix, DVector};

use crate::Outcome;

fn poisson_pmf(k: i64, lambda: f64) -> f64 {
    let mut p = (-lambda).exp();
    for i in 1..=k {
        p *= lambda / i as f64;
    }
    p
}

fn immigration_death_bounds_contain_poisson() -> usize {
    let mut checked = 0;
    let spec = parse_model("population N = 0\n25 ; N+=1\n2*N ; N-=1\nlyapunov = N^2\n").unwrap();
    for eps in [0.1, 0.01] {
        for all_columns in [false, true] {
            let cfg = SteadyConfig {
                epsilon: eps,
                all_columns,
                ..SteadyConfig::default()
            };
            let cert = certify(&spec, &cfg).unwrap();
            let mass: f64 = cert.window.iter().map(|x| poisson_pmf(x[0], 12.5)).sum();
            assert!(mass >= 1.0 - eps, "eps {eps}: window mass {mass}");
            for (k, x) in cert.window.iter().enumerate() {
                let p = poisson_pmf(x[0], 12.5);
                assert!(
                    cert.lower[k] <= p + 1e-9 && p <= cert.upper[k] + 1e-9,
                    "eps {eps} x {x:?}: {} <= {p} <= {}",
                    cert.lower[k],
                    cert.upper[k]
                );
                checked += 1;
            }
        }
    }
    checked
}

/// Stationary distribution of the protein model on `G ∈ {0,1}, P ≤ cap`.
fn protein_stationary(cap: usize) -> Vec<f64> {
    let idx = |g: usize, p: usize| g * (cap + 1) + p;
    let n = 2 * (cap + 1);
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut add = |i: usize, j: usize, r: f64| {
        q[(i, j)] += r;
        q[(i, i)] -= r;
    };
    for p in 0..=cap {
        add(idx(0, p), idx(1, p), 1.0);
        add(idx(1, p), idx(0, p), 5.0);
        if p < cap {
            add(idx(1, p), idx(1, p + 1), 1.0);
        }
        if p > 0 {
            add(idx(0, p), idx(0, p - 1), 0.02 * p as f64);
            add(idx(1, p), idx(1, p - 1), 0.02 * p as f64);
        }
    }
    let mut a = q.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

/// The window reaches far beyond the bulk of the mass, so almost no
/// probability leaves it and the bounds must still be tight.
fn nearly_closed_window_is_solved_accurately() -> f64 {
    let spec = parse_model(
        "population G = 0\npopulation P = 0\n1-G ; G+=1\n5*G ; G-=1\nG ; P+=1\n0.02*P ; P-=1\n",
    )
    .unwrap();
    let cert = certify(&spec, &SteadyConfig::default()).unwrap();
    assert!(cert.window.len() > 40_000);
    let cap = 150;
    let pi = protein_stationary(cap);
    let index = cert.index();
    let mut tail = (0.0, 0.0, 0.0);
    for g in 0..2 {
        for p in 0..=60 {
            let k = index[&vec![g as i64, p as i64]];
            let want = pi[g * (cap + 1) + p];
            assert!(
                cert.lower[k] <= want + 1e-12 && want <= cert.upper[k] + 1e-12,
                "({g},{p}): {} <= {want} <= {}",
                cert.lower[k],
                cert.upper[k]
            );
            if p > 20 {
                tail.0 += cert.lower[k];
                tail.1 += want;
                tail.2 += cert.upper[k];
            }
        }
    }
    let width = (tail.2 - tail.0) / tail.1;
    assert!(width < 1e-2, "{tail:?}");
    width
}

pub fn check() -> Outcome {
    let checked = immigration_death_bounds_contain_poisson();
    let width = nearly_closed_window_is_solved_accurately();
    Outcome::new(
        true,
        format!("{checked} window states enclose Poisson(12.5); protein tail relative width {width:.1e}"),
    )
}
