use std::time::{Duration, Instant};

use mpmc_core::checker::{Checker, ProbInterval, Verdict};
use mpmc_core::csl::parse_formula;
use mpmc_core::explore::{truncate_for, ExploreConfig, Exploration, Strategy};
use mpmc_core::mpm::{parse_model, ModelSpec};
use mpmc_core::Ternary;

use crate::Outcome;

/// Relative tolerance on state counts.
const COUNT_TOL: f64 = 0.3;
/// Relative spread allowed for a saturated count.
const SATURATION_TOL: f64 = 0.01;
const PROTEIN_TIME_LIMIT: Duration = Duration::from_secs(600);
const MAX_WIDTH: f64 = 0.02;

const W: &str = "(M>5 & M<20 & P>5 & P<20)";

/// Everything the leak re-check needs, plus extra report lines.
#[derive(Default)]
pub struct Runs {
    pub explorations: Vec<(String, ModelSpec, Exploration, ExploreConfig)>,
    pub notes: Vec<String>,
    /// Checks that must hold even where the literal criterion cannot.
    pub regressions: Vec<String>,
}

pub fn load(name: &str) -> ModelSpec {
    let path = format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_model(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn near(n: usize, want: usize) -> bool {
    (n as f64 - want as f64).abs() <= COUNT_TOL * want as f64
}

fn check(spec: &ModelSpec, text: &str, cfg: &ExploreConfig) -> (Exploration, Verdict) {
    let phi = parse_formula(text, spec.names()).unwrap();
    let ex = truncate_for(spec, &phi, cfg).unwrap();
    let init = ex.truncation.index_of(spec.init()).unwrap();
    let v = Checker::new(&ex.truncation, ex.certificate.as_ref(), cfg.transient)
        .verdict(&phi, init)
        .unwrap();
    (ex, v)
}

fn interval(v: &Verdict) -> ProbInterval {
    v.interval.expect("probabilistic verdict")
}

pub fn protein(runs: &mut Runs) -> Outcome {
    let spec = load("protein.mpm");
    let cfg = ExploreConfig::default();
    let reference = [(10, 0.451350, 0.454779), (20, 0.813116, 0.817401), (60, 0.997642, 1.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut elapsed = Duration::ZERO;
    for (t, lo, hi) in reference {
        let started = Instant::now();
        let text = format!("S>0.5 [ P>0.9 [ F<={t} P<=20 ] | P>20 ]");
        let (ex, v) = check(&spec, &text, &cfg);
        elapsed += started.elapsed();
        let iv = interval(&v);
        let n = ex.truncation.explored_len();
        pass &= iv.overlaps(&ProbInterval::new(lo, hi)) && iv.width() <= MAX_WIDTH && near(n, 46431);
        parts.push(format!("t={t} {iv} n={n}"));
        runs.explorations.push((format!("protein t={t}"), spec.clone(), ex, cfg.clone()));
    }
    pass &= elapsed < PROTEIN_TIME_LIMIT;
    Outcome::new(pass, format!("protein {} in {:.0}s", parts.join(", "), elapsed.as_secs_f64()))
}

pub fn gene(runs: &mut Runs) -> Outcome {
    let spec = load("gene.mpm");
    let mut cfg = ExploreConfig {
        epsilon: 1e-2,
        ..ExploreConfig::default()
    };
    cfg.steady.epsilon = 1e-2;
    let reference = [(2, 0.015, 0.029), (4, 0.37, 0.40), (8, 0.97, 1.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, lo, hi) in reference {
        let text = format!("S>0.5 [ P>0.9 [ F<={t} !{W} ] | {W} ]");
        let (ex, v) = check(&spec, &text, &cfg);
        let iv = interval(&v);
        let n = ex.truncation.explored_len();
        pass &= iv.overlaps(&ProbInterval::new(lo, hi)) && near(n, 11736);
        parts.push(format!("t={t} {iv} n={n}"));
        runs.explorations.push((format!("gene t={t}"), spec.clone(), ex, cfg.clone()));
    }
    Outcome::new(pass, format!("gene {}", parts.join(", ")))
}

const TABLE: [[usize; 10]; 3] = [
    [1223, 1889, 2209, 2344, 2483, 2483, 2554, 2554, 2626, 2626],
    [803, 1257, 1460, 1557, 1610, 1647, 1674, 1690, 1707, 1720],
    [495, 838, 945, 971, 974, 974, 974, 974, 974, 974],
];

const STRATEGIES: [(Strategy, bool, &str); 3] = [
    (Strategy::Fsp, false, "fsp"),
    (Strategy::Advanced, false, "advanced"),
    (Strategy::Advanced, true, "advanced+ap"),
];

/// Counts per strategy for `P>0.9 [ F<=T goal ]`, T = 1..10, and whether
/// they match the table.
fn exploration_counts(spec: &ModelSpec, goal: &str, label: &str, runs: &mut Runs) -> (bool, [[usize; 10]; 3]) {
    let mut counts = [[0; 10]; 3];
    for t in 1..=10 {
        let text = format!("P>0.9 [ F<={t} {goal} ]");
        for (k, (strategy, ap_shortcut, name)) in STRATEGIES.into_iter().enumerate() {
            let cfg = ExploreConfig {
                strategy,
                ap_shortcut,
                ..ExploreConfig::default()
            };
            let (ex, _) = check(spec, &text, &cfg);
            counts[k][t - 1] = ex.truncation.explored_len();
            runs.explorations.push((format!("{label} {name} T={t}"), spec.clone(), ex, cfg));
        }
    }
    let ordered = (0..10).all(|i| counts[2][i] <= counts[1][i] && counts[1][i] <= counts[0][i]);
    let close = (0..3).all(|k| (0..10).all(|i| near(counts[k][i], TABLE[k][i])));
    let tail = &counts[2][4..];
    let (lo, hi) = (*tail.iter().min().unwrap(), *tail.iter().max().unwrap());
    let saturated = (hi - lo) as f64 <= SATURATION_TOL * lo as f64;
    (ordered && close && saturated, counts)
}

fn format_counts(counts: &[[usize; 10]; 3]) -> String {
    STRATEGIES
        .iter()
        .zip(counts)
        .map(|((_, _, name), row)| format!("{name} {row:?}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn exploration_table(runs: &mut Runs) -> Outcome {
    let spec = load("gene.mpm");
    let (pass, counts) = exploration_counts(&spec, &format!("!{W}"), "table !W", runs);
    let (w_pass, w_counts) = exploration_counts(&spec, W, "table W", runs);
    runs.notes.push(format!(
        "criterion 3 with goal W: {} {}",
        if w_pass { "PASS" } else { "FAIL" },
        format_counts(&w_counts)
    ));
    if !w_pass {
        runs.regressions.push("criterion 3 with goal W".into());
    }
    Outcome::new(pass, format!("goal !W {}", format_counts(&counts)))
}

fn unbounded_case(spec: &ModelSpec, goal: &str, label: &str, runs: &mut Runs) -> (bool, String) {
    let cfg = ExploreConfig::default();
    let (ex, v) = check(spec, &format!("P>0.9 [ F {goal} ]"), &cfg);
    let iv = interval(&v);
    let n = ex.truncation.explored_len();
    let pass = iv.lo >= 0.999 && near(n, 974) && v.value == Ternary::True;
    runs.explorations.push((label.into(), spec.clone(), ex, cfg));
    (pass, format!("{} {iv} n={n}", v.value))
}

pub fn unbounded(runs: &mut Runs) -> Outcome {
    let spec = load("gene.mpm");
    let (pass, detail) = unbounded_case(&spec, &format!("!{W}"), "unbounded !W", runs);
    let (w_pass, w_detail) = unbounded_case(&spec, W, "unbounded W", runs);
    runs.notes.push(format!(
        "criterion 4 with goal W: {} {w_detail}",
        if w_pass { "PASS" } else { "FAIL" }
    ));
    if !w_pass {
        runs.regressions.push("criterion 4 with goal W".into());
    }
    Outcome::new(pass, format!("goal !W {detail}"))
}

pub fn switch() -> Outcome {
    let spec = load("switch.mpm");
    let mut cfg = ExploreConfig {
        epsilon: 0.1,
        ..ExploreConfig::default()
    };
    cfg.steady.epsilon = 0.1;
    let start = "(P1-10)^2 + P2^2 <= 4";
    let end = "P1^2 + (P2-10)^2 <= 4";
    let started = Instant::now();
    let (ex, v) = check(&spec, &format!("S>0.5 [ P>0.9 [ F<=8000 {end} ] | {start} ]"), &cfg);
    let iv = interval(&v);
    Outcome::new(
        iv.overlaps(&ProbInterval::new(0.6, 1.0)),
        format!(
            "switch t=8000 {iv} n={} in {:.0}s",
            ex.truncation.explored_len(),
            started.elapsed().as_secs_f64()
        ),
    )
}
