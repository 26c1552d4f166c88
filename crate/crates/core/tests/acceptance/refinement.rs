//! Exploring more states only sharpens results: decided verdicts stay and
//! probability intervals shrink.

use std::collections::VecDeque;

use mpmc_core::checker::{Checker, Evaluation};
use mpmc_core::csl::parse_formula;
use mpmc_core::mpm::{ModelSpec, State, TransitionClass};
use mpmc_core::poly::parse_poly;
use mpmc_core::transient::TransientConfig;
use mpmc_core::trunc::Truncation;
use proptest::prelude::*;
use proptest::test_runner::{TestRng, TestRunner};

const CAP: i64 = 3;
const TOL: f64 = 1e-9;

fn names() -> Vec<String> {
    vec!["X".into(), "Y".into()]
}

/// Two populations bounded by `CAP`, with integer rate constants.
fn model(k: &[u32; 5], init: (i64, i64)) -> ModelSpec {
    let n = names();
    let class = |a: String, v: [i64; 2]| TransitionClass::new(parse_poly(&a, &n).unwrap(), v.to_vec()).unwrap();
    let classes = vec![
        class(format!("{}*({CAP}-X)", k[0]), [1, 0]),
        class(format!("{}*X", k[1]), [-1, 0]),
        class(format!("{}*({CAP}-Y)", k[2]), [0, 1]),
        class(format!("{}*Y", k[3]), [0, -1]),
        class(format!("{}*X*({CAP}-Y)", k[4]), [-1, 1]),
    ];
    ModelSpec::new(n, classes, vec![init.0, init.1]).unwrap()
}

fn bfs_order(spec: &ModelSpec) -> Vec<State> {
    let mut seen = vec![spec.init().to_vec()];
    let mut queue = VecDeque::from([spec.init().to_vec()]);
    while let Some(x) = queue.pop_front() {
        for (y, _) in spec.successors(&x).unwrap() {
            if !seen.contains(&y) {
                seen.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    seen
}

fn truncation(spec: &ModelSpec, order: &[State], k: usize) -> Truncation {
    let mut tr = Truncation::new();
    tr.extend(spec, order[..k].iter().cloned()).unwrap();
    tr
}

fn ap() -> impl Strategy<Value = String> {
    (prop_oneof![Just("X"), Just("Y"), Just("X+Y")], prop_oneof![Just(">="), Just("<="), Just("=")], 0..=CAP)
        .prop_map(|(v, op, c)| format!("{v}{op}{c}"))
}

fn prob_prefix() -> impl Strategy<Value = String> {
    (prop_oneof![Just(">"), Just(">="), Just("<"), Just("<=")], prop_oneof![Just(0.1234), Just(0.4321), Just(0.8765)])
        .prop_map(|(op, p)| format!("P{op}{p}"))
}

fn time() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("<=0.5"), Just("<=2"), Just("[0.5,1.5]"), Just("")]
}

fn formula() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![ap(), Just("true".to_string())];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| format!("!({f})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) & ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) | ({b})")),
            (prob_prefix(), time(), inner.clone()).prop_map(|(p, t, f)| format!("{p} [ F{t} {f} ]")),
            (prob_prefix(), inner.clone(), time(), inner.clone())
                .prop_map(|(p, a, t, b)| format!("{p} [ ({a}) U{t} ({b}) ]")),
            (prob_prefix(), prop_oneof![Just(""), Just("[0,1]"), Just("[0.5,2]")], inner)
                .prop_map(|(p, t, f)| format!("{p} [ X{t} {f} ]")),
        ]
    })
}

fn eval(tr: &Truncation, text: &str) -> Evaluation {
    let phi = parse_formula(text, &names()).unwrap();
    Checker::new(tr, None, TransientConfig::default()).eval(&phi).unwrap()
}

/// Runs the refinement property on 1000 random models, truncation pairs
/// and formulas; returns the number of cases.
pub fn check() -> u32 {
    let config = ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let input = (
        proptest::array::uniform5(0u32..=3),
        (0..=CAP, 0..=CAP),
        (0.0f64..1.0, 0.0f64..1.0),
        formula(),
    );
    runner
        .run(&input, |(k, init, cuts, text)| {
            let spec = model(&k, init);
            let order = bfs_order(&spec);
            let n = order.len();
            let a = 1 + (cuts.0 * n as f64) as usize % n;
            let b = a + ((cuts.1 * (n - a + 1) as f64) as usize).min(n - a);
            let trs = [truncation(&spec, &order, a), truncation(&spec, &order, b), truncation(&spec, &order, n)];
            let evs: Vec<Evaluation> = trs.iter().map(|tr| eval(tr, &text)).collect();
            for (coarse, fine) in [(0, 1), (1, 2)] {
                for i in trs[coarse].explored() {
                    let j = trs[fine].index_of(trs[coarse].state(i)).unwrap();
                    let (v, w) = (evs[coarse].values[i], evs[fine].values[j]);
                    prop_assert!(!v.is_decided() || v == w, "{text}: state {:?} {v} -> {w}", trs[coarse].state(i));
                    if let (Some(x), Some(y)) = (&evs[coarse].intervals, &evs[fine].intervals) {
                        let (x, y) = (x[i], y[j]);
                        prop_assert!(y.lo >= x.lo - TOL && y.hi <= x.hi + TOL, "{text}: {x} then {y}");
                    }
                }
            }
            // The full reachable set leaves nothing unknown.
            let full = &evs[2];
            for i in trs[2].explored() {
                prop_assert!(
                    full.values[i].is_decided() || full.intervals.as_ref().is_some_and(|iv| iv[i].width() < 1e-6),
                    "{text}: unknown with nothing left to explore"
                );
                if let Some(iv) = &full.intervals {
                    prop_assert!(iv[i].width() < 1e-6, "{text}: {}", iv[i]);
                }
            }
            Ok(())
        })
        .unwrap();
    runner.config().cases
}
