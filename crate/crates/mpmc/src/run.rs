//! One model-checking run: certify, truncate, check.

use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use mpmc_core::checker::{Checker, Warning};
use mpmc_core::explore::{auto_epsilon, truncate_with, ExploreConfig, Strategy};
use mpmc_core::mpm::ModelSpec;
use mpmc_core::steady::{certify, SteadyConfig};
use mpmc_core::transient::TransientConfig;

use crate::props::Property;
use crate::report::{RunReport, Timings};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub epsilon: f64,
    /// Derive `ε` from the probability bounds of each formula instead.
    pub auto_epsilon: bool,
    /// Defaults to `epsilon`.
    pub steady_epsilon: Option<f64>,
    pub strategy: Strategy,
    pub ap_shortcut: bool,
    pub max_states: usize,
    pub transient_delta: f64,
    pub drift_c: Option<f64>,
    pub all_columns: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        let e = ExploreConfig::default();
        RunOptions {
            epsilon: e.epsilon,
            auto_epsilon: false,
            steady_epsilon: None,
            strategy: e.strategy,
            ap_shortcut: e.ap_shortcut,
            max_states: e.max_states,
            transient_delta: e.transient.delta,
            drift_c: None,
            all_columns: false,
        }
    }
}

impl RunOptions {
    pub fn explore_config(&self, prop: &Property) -> ExploreConfig {
        let epsilon = if self.auto_epsilon {
            auto_epsilon(&prop.formula)
        } else {
            self.epsilon
        };
        ExploreConfig {
            epsilon,
            strategy: self.strategy,
            ap_shortcut: self.ap_shortcut,
            max_states: self.max_states,
            transient: TransientConfig {
                delta: self.transient_delta,
                ..TransientConfig::default()
            },
            steady: SteadyConfig {
                epsilon: self.steady_epsilon.unwrap_or(epsilon),
                drift_c: self.drift_c,
                all_columns: self.all_columns,
                max_states: self.max_states,
            },
            ..ExploreConfig::default()
        }
    }
}

/// Checks `prop` in the initial state of `spec`.
pub fn run(spec: &ModelSpec, prop: &Property, opts: &RunOptions) -> Result<RunReport> {
    let cfg = opts.explore_config(prop);
    let mut timings = Timings::default();

    let cert = if prop.formula.has_steady() {
        let t0 = Instant::now();
        let c = certify(spec, &cfg.steady).context("steady-state certificate")?;
        timings.steady = t0.elapsed().as_secs_f64();
        Some(c)
    } else {
        None
    };

    let t0 = Instant::now();
    let ex = truncate_with(spec, &prop.formula, &cfg, cert).context("exploration")?;
    timings.explore = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let tr = &ex.truncation;
    let s0 = tr
        .index_of(spec.init())
        .ok_or_else(|| anyhow!("initial state was not explored"))?;
    let checker = Checker::new(tr, ex.certificate.as_ref(), cfg.transient.clone());
    let eval = checker.eval(&prop.formula).context("checking")?;
    timings.check = t0.elapsed().as_secs_f64();

    let warnings = eval
        .warnings
        .iter()
        .map(|w| match w {
            Warning::DegenerateCondition => "degenerate condition: lower steady bound of the condition is 0".to_string(),
        })
        .collect();
    Ok(RunReport {
        formula: prop.text.clone(),
        bindings: prop.bindings.clone(),
        verdict: eval.values[s0],
        interval: eval.intervals.map(|iv| iv[s0]),
        states: tr.explored_len(),
        total_states: tr.len(),
        depth: tr.depth(spec.init())?,
        timings: Some(timings),
        epsilon: cfg.epsilon,
        steady_epsilon: prop.formula.has_steady().then_some(cfg.steady.epsilon),
        strategy: match cfg.strategy {
            Strategy::Advanced if cfg.ap_shortcut => "advanced+ap",
            Strategy::Advanced => "advanced",
            Strategy::Fsp => "fsp",
        }
        .to_string(),
        capped: ex.capped(),
        warnings,
    })
}
