//! Re-derives the leak of every exploration loop on a truncation rebuilt
//! from scratch.

use mpmc_core::explore::LeakRecord;
use mpmc_core::mpm::ModelSpec;
use mpmc_core::transient::{reach_prob, transient_dist, TransientConfig};
use mpmc_core::trunc::Truncation;
use nalgebra::{DMatrix, DVector};

use crate::case_studies::Runs;
use crate::Outcome;

/// Forward and backward solves must agree this closely.
const AGREE_TOL: f64 = 1e-8;

/// Absorption probabilities into `target` by a dense solve over the states
/// that can reach it.
fn dense_reach(tr: &Truncation, target: &[bool]) -> Vec<f64> {
    let n = tr.len();
    let mut can = target.to_vec();
    loop {
        let mut changed = false;
        for i in tr.explored() {
            if !can[i] && tr.row(i).iter().any(|&(j, _)| can[j]) {
                can[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&i| can[i] && !target[i]).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in unknown.iter().enumerate() {
        pos[i] = k;
    }
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, &i) in unknown.iter().enumerate() {
        let exit: f64 = tr.row(i).iter().map(|e| e.1).sum();
        for &(j, r) in tr.row(i) {
            if target[j] {
                b[k] += r / exit;
            } else if pos[j] != usize::MAX {
                a[(k, pos[j])] -= r / exit;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("nonsingular");
    (0..n)
        .map(|i| if target[i] { 1.0 } else if pos[i] != usize::MAX { sol[pos[i]] } else { 0.0 })
        .collect()
}

fn recompute(spec: &ModelSpec, base: &Truncation, rec: &LeakRecord, cfg: &TransientConfig) -> Result<f64, String> {
    let mut fresh = Truncation::new();
    let order = &base.exploration_order()[..rec.explored];
    fresh
        .extend(spec, order.iter().map(|&i| base.state(i).to_vec()))
        .map_err(|e| e.to_string())?;
    let target: Vec<bool> = (0..fresh.len())
        .map(|i| !fresh.is_explored(i) && !rec.stop.holds(fresh.state(i)))
        .collect();
    if !target.contains(&true) {
        return Ok(0.0);
    }
    let sources: Vec<usize> = rec
        .sources
        .iter()
        .map(|&s| fresh.index_of(base.state(s)).expect("source explored"))
        .collect();
    let view = fresh.view();
    if rec.t.is_infinite() {
        let x = dense_reach(&fresh, &target);
        return Ok(sources.iter().map(|&s| x[s]).fold(0.0, f64::max));
    }
    let back = reach_prob(&view, &target, rec.t, cfg).map_err(|e| e.to_string())?;
    let (worst, leak) = sources
        .iter()
        .map(|&s| (s, back.values[s]))
        .fold((sources[0], f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let fwd = transient_dist(&view, worst, rec.t, cfg).map_err(|e| e.to_string())?;
    let mass: f64 = (0..fresh.len()).filter(|&i| target[i]).map(|i| fwd.values[i]).sum();
    if (mass - leak).abs() > AGREE_TOL + fwd.error + back.error {
        return Err(format!("forward {mass:e} and backward {leak:e} disagree"));
    }
    Ok(leak.max(mass) + back.error.max(fwd.error))
}

pub fn check(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut loops = 0;
    let mut failures = Vec::new();
    let mut margin: f64 = 0.0;
    for (label, spec, ex, cfg) in &runs.explorations {
        for rec in &ex.log {
            loops += 1;
            match recompute(spec, &ex.truncation, rec, &cfg.transient) {
                Ok(leak) if leak < cfg.epsilon => margin = margin.max(leak / cfg.epsilon),
                Ok(leak) => {
                    pass = false;
                    failures.push(format!("{label}: leak {leak:e} >= {:e}", cfg.epsilon));
                }
                Err(e) => {
                    pass = false;
                    failures.push(format!("{label}: {e}"));
                }
            }
        }
    }
    let mut detail = format!("{loops} exploration loops re-checked, worst leak/eps {margin:.3}");
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join("; ")));
    }
    Outcome::new(pass && loops > 0, detail)
}
