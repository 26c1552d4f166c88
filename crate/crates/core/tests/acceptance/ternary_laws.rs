use mpmc_core::ternary::{t_and, t_not, t_or};
use mpmc_core::Ternary::{self, False as F, True as T, Unknown as U};

use crate::Outcome;

const ALL: [Ternary; 3] = Ternary::ALL;

fn truth_tables() {
    let or = [[F, U, T], [U, U, T], [T, T, T]];
    let and = [[F, F, F], [F, U, U], [F, U, T]];
    let mut cases = 0;
    for (i, &a) in [F, U, T].iter().enumerate() {
        for (j, &b) in [F, U, T].iter().enumerate() {
            assert_eq!(t_or(a, b), or[i][j], "{a} or {b}");
            assert_eq!(t_and(a, b), and[i][j], "{a} and {b}");
            cases += 2;
        }
    }
    for (a, c) in [(F, T), (U, U), (T, F)] {
        assert_eq!(t_not(a), c);
        cases += 1;
    }
    assert_eq!(cases, 21);
}

fn lattice_laws_over_all_triples() {
    let mut triples = 0;
    for a in ALL {
        assert_eq!(t_not(t_not(a)), a);
        for b in ALL {
            assert_eq!(t_not(t_and(a, b)), t_or(t_not(a), t_not(b)));
            assert_eq!(t_not(t_or(a, b)), t_and(t_not(a), t_not(b)));
            assert_eq!(t_and(a, b), t_and(b, a));
            assert_eq!(t_and(a, b), a.min(b));
            assert_eq!(t_or(a, b), a.max(b));
            for c in ALL {
                assert_eq!(t_and(a, t_and(b, c)), t_and(t_and(a, b), c));
                assert_eq!(t_and(a, t_or(b, c)), t_or(t_and(a, b), t_and(a, c)));
                triples += 1;
            }
        }
    }
    assert_eq!(triples, 27);
}

/// Replacing unknown inputs by either decided value never changes a
/// decided output.
fn refinement_of_connectives() {
    let refinements = |x: Ternary| if x == U { vec![F, U, T] } else { vec![x] };
    for a in ALL {
        assert!(!t_not(a).is_decided() || refinements(a).iter().all(|&r| t_not(r) == t_not(a)));
        for b in ALL {
            for (op, name) in [(t_and as fn(_, _) -> _, "and"), (t_or, "or")] {
                let out = op(a, b);
                if !out.is_decided() {
                    continue;
                }
                for ra in refinements(a) {
                    for rb in refinements(b) {
                        assert_eq!(op(ra, rb), out, "{a} {name} {b} refined to {ra}, {rb}");
                    }
                }
            }
        }
    }
}

pub fn check() -> Outcome {
    truth_tables();
    lattice_laws_over_all_triples();
    refinement_of_connectives();
    let cases = crate::refinement::check();
    Outcome::new(
        true,
        format!("21 table entries, 27 triples, {cases} random truncation refinements"),
    )
}
